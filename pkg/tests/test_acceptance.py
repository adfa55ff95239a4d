"""Acceptance matrix: one test per criterion, full sample sizes.

Each test prints a ``[PASS]``/``[FAIL]`` line (visible in ``pytest -v``
output), re-asserts the pinned tolerances on the reported details and
checks the runtime budget.
"""

import math

import pytest

from ncconc.acceptance import run_criterion

PSD_TOL = 1e-9
IDENTITY_TOL = 1e-12


@pytest.fixture
def criterion(capsys):
    def run(number):
        res = run_criterion(number, quick=False, seed=0)
        with capsys.disabled():
            print("\n" + res.line())
        assert res.passed, res.details
        assert res.elapsed <= res.budget, f"{res.elapsed:.1f} s over the {res.budget} s budget"
        return res.details

    return run


def test_c01_sharp_alpha_cyclic(criterion):
    d = criterion(1)
    assert d["max_abs_error"] <= 1e-9


def test_c02_free_group_gram(criterion):
    d = criterion(2)
    for key in ("F2_r2", "F3_r1"):
        assert d[key]["max_abs_residual"] <= IDENTITY_TOL
        assert d[key]["min_eig_KK_minus_K"] >= -PSD_TOL
    assert d["F2_r2"]["size"] == 17


def test_c03_cocycle_gram(criterion):
    assert criterion(3)["max_abs_residual"] <= IDENTITY_TOL


def test_c04_heisenberg(criterion):
    d = criterion(4)
    assert sorted(d["min_pencil_eig"]) == list(range(2, 9))
    for n, dec in d["decompositions"].items():
        assert dec["block_dims"] == [n * n] * n
        assert dec["total_dim"] == n**3
        assert dec["m0_commutative"] and dec["m1_full_matrix"]
        assert dec["m1_center_dim"] == 1
        assert dec["invariance_mass"] <= PSD_TOL


def test_c05_semigroup_axioms(criterion):
    d = criterion(5)
    assert len(d) == 6
    for defects in d.values():
        assert max(defects.values()) <= PSD_TOL


def test_c06_dual_route_gamma(criterion):
    d = criterion(6)
    assert d["elements"] == 100
    assert max(d["max_abs_difference"].values()) <= PSD_TOL


def test_c07_matrix_curvature(criterion):
    d = criterion(7)
    assert d["samples"] == 1000
    for n, row in d["models"].items():
        assert row["alpha"] == pytest.approx((n + 2) / (2 * n))
        assert row["min_curvature_eig"] >= -PSD_TOL
        assert row["min_decay_margin"] >= -PSD_TOL


def test_c08_walsh_gradient(criterion):
    d = criterion(8)
    assert d["functions"] == 50 and d["m"] == 5
    assert d["max_residual"] <= PSD_TOL


def test_c09_deviation_domination(criterion):
    d = criterion(9)
    assert any(k.startswith("walsh_sum_m14") for k in d)
    for row in d.values():
        assert row["violations"] == 0
        assert row["max_moment_ratio"] <= 1.0


def test_c10_exponential_moment(criterion):
    for row in criterion(10).values():
        assert row["min_rhs_over_lhs"] >= 1.0 - 1e-9


def test_c11_golden_thompson(criterion):
    d = criterion(11)
    assert sum(row["pairs"] for row in d.values()) == 10_000
    for row in d.values():
        assert row["min_relative_slack"] >= -1e-10
        assert row["commuting_max_rel_gap"] <= 1e-10


def test_c12_entropy_duality(criterion):
    d = criterion(12)
    assert d["gibbs_max_gap"] <= 1e-8
    assert d["monotone_cases"] == 200
    assert d["projection_max_error"] <= 1e-10


def test_c13_poincare(criterion):
    d = criterion(13)
    assert d["samples"] == 500
    for row in d["models"].values():
        assert row["max_ratio_sa"] <= 2 * math.sqrt(2)
        assert row["max_ratio_general"] <= 4 * math.sqrt(2)
        assert row["parseval_residual"] <= 1e-10


def test_c14_exponential_integrability(criterion):
    for row in criterion(14)["models"].values():
        assert row["min_log_margin_sa"] >= 0
        assert row["min_tail_margin"] >= 0


def test_c15_transport(criterion):
    d = criterion(15)
    for r, w in d["two_point_w1"].items():
        assert w == pytest.approx(abs(r), abs=1e-9)
    assert d["two_point_r1"]["lhs"] <= d["two_point_r1"]["rhs"]
    assert d["two_point_r1"]["rhs"] == pytest.approx(1.1774, abs=1e-4)
    for row in d["models"].values():
        assert row["densities"] == 50
        assert row["max_lhs_over_rhs"] <= 1.0


def test_c16_product_measure(criterion):
    d = criterion(16)
    assert d["gamma_sup"] == d["gamma_min"] == 2.0
    assert d["tail"][d["t"].index(2.0)] == 0.25


def test_c17_determinism(criterion):
    assert all(criterion(17)["identical"].values())
