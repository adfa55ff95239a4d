"""Numerical checks for noncommutative concentration and curvature."""

__version__ = "0.1.0"
