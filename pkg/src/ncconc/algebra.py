"""Matrix *-algebras with Fourier-multiplier semigroups.

A :class:`StarAlgebra` is a concrete algebra of ``d x d`` matrices with
normalized trace ``tau = tr / d`` and an orthonormal basis of unitaries
``w_g``.  Elements are plain complex ``numpy`` arrays.  The Markov
semigroup acts diagonally in the basis,

    T_t x = sum_g exp(-t psi_g) xhat(g) w_g,    xhat(g) = tau(w_g^* x),

with generator ``A x = sum_g psi_g xhat(g) w_g``.  Three concrete models
are provided: left regular representations of finite groups (permutation
matrices), the Heisenberg-Weyl basis of M_n, and Walsh characters of
Z_n^m acting as diagonal matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .curvature import GromovForm, gromov_form
from .groups import (
    FiniteGroup,
    LengthFunction,
    build_cyclic,
    build_direct_product,
    build_heisenberg,
    check_cn_length,
    delta_length,
    heisenberg_length,
)

#: Fourier coefficients below this magnitude are dropped before multiplying.
COEFF_CUTOFF = 1e-13
#: Multipliers at or below this value count as fixed modes.
FIX_TOL = 1e-12
#: Largest dimension accepted by the Walsh model.
WALSH_CAP = 4096


def adjoint(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def herm(x: np.ndarray) -> np.ndarray:
    """Self-adjoint part ``(x + x^*)/2``."""
    return 0.5 * (x + adjoint(x))


def tau(x: np.ndarray) -> complex:
    """Normalized trace."""
    return np.trace(x, axis1=-2, axis2=-1) / x.shape[-1]


def is_hermitian(x: np.ndarray, atol: float = 1e-10) -> bool:
    scale = 1.0 + float(np.max(np.abs(x))) if x.size else 1.0
    return bool(np.allclose(x, adjoint(x), atol=atol * scale, rtol=0))


def is_diagonal(x: np.ndarray) -> bool:
    return x.ndim == 2 and np.count_nonzero(x) == np.count_nonzero(np.diagonal(x))


def matmul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix product with a shortcut for diagonal factors (commutative models)."""
    if is_diagonal(x) and is_diagonal(y):
        return np.diag(np.diagonal(x) * np.diagonal(y))
    return x @ y


def eigvalsh(x: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the self-adjoint part of ``x``."""
    if is_diagonal(x):
        return np.sort(np.diagonal(x).real)
    return np.linalg.eigvalsh(herm(x))


def singular_values(x: np.ndarray) -> np.ndarray:
    if is_diagonal(x):
        return np.sort(np.abs(np.diagonal(x)))[::-1]
    return np.linalg.svd(x, compute_uv=False)


def opnorm(x: np.ndarray) -> float:
    """Operator norm (largest singular value)."""
    return float(singular_values(x)[0]) if x.size else 0.0


class StarAlgebra:
    """Base class for the concrete models.

    Subclasses implement :meth:`fourier`, :meth:`synthesize`,
    :meth:`basis_element` and :meth:`extended_map`.

    Attributes
    ----------
    dim : int
        Matrix size ``d``.
    multipliers : (N,) array
        ``psi_g`` for each basis element.
    index_group : FiniteGroup
        Group indexing the basis such that ``w_g^* w_h`` is a multiple of
        ``w_{g^{-1} h}``; used for the closed Gromov-form route.
    label : str
        Model family (``group``, ``heisenberg-weyl`` or ``walsh``).
    params : dict
        Model parameters for reports.
    """

    label = "algebra"

    def __init__(self, dim: int, multipliers, index_group: FiniteGroup, params: dict):
        self.dim = int(dim)
        m = np.array(multipliers, dtype=float)
        m.setflags(write=False)
        self.multipliers = m
        self.index_group = index_group
        self.params = dict(params)
        if m.shape != (index_group.order,):
            raise ValueError("one multiplier per basis element is required")

    # -- subclass hooks ---------------------------------------------------
    def fourier(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def synthesize(self, c: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def basis_element(self, g: int) -> np.ndarray:
        raise NotImplementedError

    def extended_map(self, X: np.ndarray, t: float) -> np.ndarray:
        """Extension of ``T_t`` to all of ``M_d`` used for the Choi test."""
        raise NotImplementedError

    # -- shared -----------------------------------------------------------
    @property
    def size(self) -> int:
        return self.multipliers.shape[0]

    @property
    def identity_index(self) -> int:
        return self.index_group.identity

    def one(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    @cached_property
    def gromov(self) -> GromovForm:
        g = self.index_group
        return gromov_form(None, LengthFunction(self.multipliers), g)

    @cached_property
    def fixed_modes(self) -> np.ndarray:
        return self.multipliers <= FIX_TOL

    def multiplier_apply(self, x: np.ndarray, factors: np.ndarray) -> np.ndarray:
        c = self.fourier(x)
        c[np.abs(c) < COEFF_CUTOFF] = 0.0
        return self.synthesize(c * factors)

    def descriptor(self) -> dict:
        return {"model": self.name, "params": self.params, "multipliers": self.multipliers.tolist()}

    @property
    def name(self) -> str:
        return f"{self.label}:{self.index_group.name}"

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.dim}, N={self.size}, model={self.name!r})"


class GroupAlgebra(StarAlgebra):
    """Left regular representation ``lambda(g) delta_h = delta_{gh}``."""

    label = "group"

    def __init__(self, group: FiniteGroup, psi: LengthFunction, params: dict | None = None):
        super().__init__(group.order, psi.values, group, params or {"group": group.name})
        self._cols = np.broadcast_to(np.arange(group.order), (group.order, group.order))

    def fourier(self, x):
        # tau(lambda(g)^T x) = (1/d) sum_h x[gh, h]
        g = self.index_group
        return x[g.mul, self._cols].sum(axis=1) / self.dim

    def synthesize(self, c):
        g = self.index_group
        x = np.zeros((self.dim, self.dim), dtype=complex)
        x[g.mul, self._cols] = np.asarray(c)[:, None]
        return x

    def basis_element(self, g):
        x = np.zeros((self.dim, self.dim), dtype=complex)
        x[self.index_group.mul[g], np.arange(self.dim)] = 1.0
        return x

    @cached_property
    def _schur_exponent(self) -> np.ndarray:
        g = self.index_group
        # psi(k h^{-1}) at entry (k, h); lambda(g) sits on entries with k h^{-1} = g.
        return self.multipliers[g.mul[:, g.inv]]

    def extended_map(self, X, t):
        return np.exp(-t * self._schur_exponent) * X


class WeylAlgebra(StarAlgebra):
    """M_n with the Heisenberg-Weyl basis ``w_(b,c) = v_c u_b``."""

    label = "heisenberg-weyl"

    def __init__(self, n: int):
        zn = build_cyclic(n)
        group, psi = build_direct_product([zn, zn], [delta_length(zn), delta_length(zn)])
        super().__init__(n, psi.values, group, {"n": n})
        j = np.arange(n)
        omega = np.exp(2j * np.pi / n)
        self.u = [np.diag(omega ** (k * j)) for k in range(n)]
        self.v = [np.eye(n, dtype=complex)[:, (j + l) % n] for l in range(n)]
        W = np.array([self.v[c] @ self.u[b] for b in range(n) for c in range(n)])
        W.setflags(write=False)
        self.W = W

    def fourier(self, x):
        return np.einsum("gij,ij->g", self.W.conj(), x) / self.dim

    def synthesize(self, c):
        return np.einsum("g,gij->ij", np.asarray(c, dtype=complex), self.W)

    def basis_element(self, g):
        return self.W[g].copy()

    def extended_map(self, X, t):
        return self.multiplier_apply(X, np.exp(-t * self.multipliers))


class WalshAlgebra(StarAlgebra):
    """Characters of Z_n^m acting as diagonal matrices on ``n^m`` points.

    The basis element for ``x`` is ``diag(exp(2 pi i x.y / n))_y``; its
    multiplier counts the nonzero coordinates of ``x``.
    """

    label = "walsh"

    def __init__(self, n: int, m: int):
        if n < 2 or m < 1:
            raise ValueError("Walsh model needs n >= 2 and m >= 1")
        d = n**m
        if d > WALSH_CAP:
            raise ValueError(f"n^m = {d} exceeds the cap {WALSH_CAP}")
        zn = build_cyclic(n)
        group, psi = build_direct_product(
            [zn] * m, [delta_length(zn)] * m, max_order=WALSH_CAP
        )
        super().__init__(d, psi.values, group, {"n": n, "m": m})
        pts = np.stack(np.unravel_index(np.arange(d), (n,) * m), axis=1)
        self.points = pts
        phase = (pts @ pts.T) % n
        chars = np.exp(2j * np.pi * phase / n)
        if n == 2:
            chars = chars.real.astype(complex)
        chars.setflags(write=False)
        self.chars = chars  # chars[g, y]

    def fourier(self, x):
        return (self.chars.conj() @ np.diagonal(x)) / self.dim

    def synthesize(self, c):
        return np.diag(np.asarray(c, dtype=complex) @ self.chars)

    def basis_element(self, g):
        return np.diag(self.chars[g].copy())

    def extended_map(self, X, t):
        return self.multiplier_apply(np.diag(np.diag(X)), np.exp(-t * self.multipliers))


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def left_regular_algebra(group: FiniteGroup, psi: LengthFunction) -> GroupAlgebra:
    """Group algebra of ``group`` with the multiplier semigroup of ``psi``.

    Refuses length functions that are not conditionally negative, since
    the semigroup would then fail to be completely positive.
    """
    cert = check_cn_length(None, psi, group)
    if not cert.is_cn:
        raise ValueError(
            f"length function is not conditionally negative (min eig {cert.min_eig:.3e})"
        )
    return GroupAlgebra(group, psi)


def cyclic_algebra(n: int) -> GroupAlgebra:
    """Z_n with ``psi = 1 - delta``."""
    g = build_cyclic(n)
    return left_regular_algebra(g, delta_length(g))


def heisenberg_group_algebra(n: int) -> GroupAlgebra:
    """H_3(Z_n) with ``psi = 2 - delta_{b,0} - delta_{c,0}``."""
    return left_regular_algebra(build_heisenberg(n), heisenberg_length(n))


def heisenberg_weyl_algebra(n: int) -> WeylAlgebra:
    if n < 2:
        raise ValueError("Heisenberg-Weyl model needs n >= 2")
    return WeylAlgebra(n)


def walsh_algebra(n: int, m: int) -> WalshAlgebra:
    return WalshAlgebra(n, m)


def build_model(model: str, n: int = 2, m: int = 1) -> StarAlgebra:
    """Construct a model by short name: ``zn``, ``heisenberg``, ``mn`` or ``walsh``."""
    if model == "zn":
        return cyclic_algebra(n)
    if model == "heisenberg":
        return heisenberg_group_algebra(n)
    if model == "mn":
        return heisenberg_weyl_algebra(n)
    if model == "walsh":
        return walsh_algebra(n, m)
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Semigroup and gradient forms
# ---------------------------------------------------------------------------


def semigroup_apply(a: StarAlgebra, x: np.ndarray, t: float) -> np.ndarray:
    """``T_t x``."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    return a.multiplier_apply(x, np.exp(-t * a.multipliers))


def generator_apply(a: StarAlgebra, x: np.ndarray) -> np.ndarray:
    """``A x``."""
    return a.multiplier_apply(x, a.multipliers)


def fixed_point_project(a: StarAlgebra, x: np.ndarray) -> np.ndarray:
    """Conditional expectation onto the fixed-point algebra (``psi = 0`` modes)."""
    c = a.fourier(x)
    c[~a.fixed_modes] = 0.0
    return a.synthesize(c)


def carre_du_champ(A: Callable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``Gamma(x, y) = (A(x^*) y + x^* A(y) - A(x^* y)) / 2`` for a generator ``A``."""
    xs = adjoint(x)
    return 0.5 * (matmul(A(xs), y) + matmul(xs, A(y)) - A(matmul(xs, y)))


def gamma2_generic(A: Callable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``Gamma_2(x, y) = (Gamma(Ax, y) + Gamma(x, Ay) - A Gamma(x, y)) / 2``."""
    return 0.5 * (
        carre_du_champ(A, A(x), y) + carre_du_champ(A, x, A(y)) - A(carre_du_champ(A, x, y))
    )


def gamma(a: StarAlgebra, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    y = x if y is None else y
    return carre_du_champ(lambda z: generator_apply(a, z), x, y)


def gamma2(a: StarAlgebra, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    y = x if y is None else y
    return gamma2_generic(lambda z: generator_apply(a, z), x, y)


@dataclass(frozen=True)
class GammaPair:
    gamma: np.ndarray
    gamma2: np.ndarray


def gamma_forms(a: StarAlgebra, x: np.ndarray, y: np.ndarray | None = None) -> GammaPair:
    """Both gradient forms computed from the generator."""
    return GammaPair(gamma(a, x, y), gamma2(a, x, y))


def gamma_forms_gromov(a: StarAlgebra, x: np.ndarray, y: np.ndarray | None = None) -> GammaPair:
    """Closed-form route: ``sum conj(xhat_g) yhat_h K^p(g,h) w_g^* w_h`` for p = 1, 2.

    Independent of :func:`generator_apply`; it uses only the Fourier
    coefficients, the Gromov form of the multipliers and matrix products
    of basis elements.
    """
    y = x if y is None else y
    cx, cy = a.fourier(x), a.fourier(y)
    K = a.gromov.K
    outer = np.conj(cx)[:, None] * cy[None, :]
    out = []
    for Kp in (K, K * K):
        M = outer * Kp
        acc = np.zeros((a.dim, a.dim), dtype=complex)
        for g in np.flatnonzero(np.any(M != 0, axis=1)):
            acc += adjoint(a.basis_element(g)) @ a.synthesize(M[g])
        out.append(acc)
    return GammaPair(out[0], out[1])


# ---------------------------------------------------------------------------
# Spectral helpers
# ---------------------------------------------------------------------------


def func_calculus(x: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``f(x)`` for self-adjoint ``x`` through its eigendecomposition."""
    if is_diagonal(x):
        return np.diag(f(np.diagonal(x).real).astype(complex))
    w, V = np.linalg.eigh(herm(x))
    return (V * f(w)) @ adjoint(V)


def prob_tail(x: np.ndarray, t: float, rtol: float = 1e-12) -> float:
    """``tau(1_[t, inf)(x))``: fraction of eigenvalues at least ``t``.

    Eigenvalues within ``rtol * (1 + |t|)`` below ``t`` count as equal to it.
    """
    if not is_hermitian(x):
        raise ValueError("prob_tail needs a self-adjoint element")
    w = eigvalsh(x)
    return float(np.count_nonzero(w >= t - rtol * (1.0 + abs(t)))) / x.shape[-1]


def pnorm(x: np.ndarray, p: float) -> float:
    """``||x||_p = tau(|x|^p)^{1/p}`` from singular values; ``p = inf`` allowed."""
    if p < 1:
        raise ValueError("p must be at least 1")
    s = singular_values(x)
    if math.isinf(p):
        return float(s.max()) if s.size else 0.0
    return float(np.mean(s**p) ** (1.0 / p))


def random_element(
    a: StarAlgebra,
    rng: np.random.Generator,
    self_adjoint: bool = True,
    normalize: bool = True,
) -> np.ndarray:
    """Element with standard complex Gaussian Fourier coefficients.

    Self-adjoint samples are symmetrized as ``(x + x^*)/2``; ``normalize``
    rescales to unit operator norm.
    """
    c = (rng.standard_normal(a.size) + 1j * rng.standard_normal(a.size)) / math.sqrt(2.0)
    x = a.synthesize(c)
    if self_adjoint:
        x = herm(x)
    if normalize:
        nrm = opnorm(x)
        if nrm > 0:
            x = x / nrm
    return x


def random_density(a: StarAlgebra, rng: np.random.Generator) -> np.ndarray:
    """Normalized square ``y^* y / tau(y^* y)`` of a Gaussian element of the algebra."""
    y = random_element(a, rng, self_adjoint=False, normalize=False)
    rho = herm(matmul(adjoint(y), y))
    return rho / tau(rho).real


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChoiCheck:
    is_cp: bool
    min_choi_eig: float


def choi_matrix(T: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    """``sum_{ij} e_ij (x) T(e_ij)`` in the computational basis."""
    C = np.zeros((d * d, d * d), dtype=complex)
    E = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            E[i, j] = 1.0
            C[i * d:(i + 1) * d, j * d:(j + 1) * d] = T(E)
            E[i, j] = 0.0
    return C


def cp_choi_check(a: StarAlgebra, t: float, tol: float = 1e-9) -> ChoiCheck:
    """Complete positivity of ``T_t`` via the Choi matrix of its extension to M_d.

    Group models extend ``T_t`` as the Schur multiplier
    ``[X_kh] -> [exp(-t psi(k h^{-1})) X_kh]``; the commutative Walsh model
    composes with the diagonal conditional expectation; the
    Heisenberg-Weyl basis already spans M_n.
    """
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    C = choi_matrix(lambda X: a.extended_map(X, t), a.dim)
    m = float(np.linalg.eigvalsh(herm(C))[0])
    return ChoiCheck(m >= -tol, m)


@dataclass(frozen=True)
class DecayReport:
    min_margin: float
    margins: tuple


def semigroup_decay_check(a: StarAlgebra, alpha: float, x: np.ndarray, t_grid) -> DecayReport:
    """Smallest eigenvalue of ``e^{-2 alpha t} T_t Gamma(x,x) - Gamma(T_t x, T_t x)`` over ``t_grid``."""
    G = gamma(a, x)
    margins = []
    for t in t_grid:
        xt = semigroup_apply(a, x, t)
        D = math.exp(-2.0 * alpha * t) * semigroup_apply(a, G, t) - gamma(a, xt)
        margins.append(float(eigvalsh(D)[0]))
    return DecayReport(min(margins) if margins else 0.0, tuple(margins))


def walsh_gradient_check(
    m: int,
    samples: int = 50,
    seed: int = 0,
    functions: Sequence[np.ndarray] | None = None,
) -> dict:
    """Compare ``Gamma(f, f)`` with ``sum_j |d_j f|^2`` on {-1, 1}^m.

    ``d_j f(x) = (f(x) - f(x e_j)) / 2`` where ``x e_j`` flips coordinate j.
    Functions are arrays over the ``2^m`` points of the Walsh model.
    """
    if m > 12:
        raise ValueError("walsh_gradient_check supports m <= 12")
    a = walsh_algebra(2, m)
    d = a.dim
    if functions is None:
        rng = np.random.default_rng(seed)
        functions = [rng.standard_normal(d) for _ in range(samples)]
    idx = np.arange(d)
    worst = 0.0
    for f in functions:
        f = np.asarray(f, dtype=float)
        grad_sq = np.zeros(d)
        for j in range(m):
            flip = idx ^ (1 << (m - 1 - j))
            grad_sq += (0.5 * (f - f[flip])) ** 2
        G = gamma(a, np.diag(f.astype(complex)))
        worst = max(worst, float(np.max(np.abs(G - np.diag(grad_sq)))))
    return {"max_residual": worst, "m": m, "functions": len(functions)}


@dataclass(frozen=True)
class HeisenbergDecomposition:
    n: int
    block_dims: tuple
    m0_commutative: bool
    m1_full_matrix: bool
    m1_center_dim: int
    off_block_mass: float
    invariance_mass: float

    @property
    def total_dim(self) -> int:
        return int(sum(self.block_dims))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "block_dims": list(self.block_dims),
            "total_dim": self.total_dim,
            "m0_commutative": self.m0_commutative,
            "m1_full_matrix": self.m1_full_matrix,
            "m1_center_dim": self.m1_center_dim,
            "off_block_mass": self.off_block_mass,
            "invariance_mass": self.invariance_mass,
        }


def _span_basis(mats: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (as matrices) of the linear span of ``mats``."""
    flat = mats.reshape(mats.shape[0], -1)
    _, s, Vh = np.linalg.svd(flat, full_matrices=False)
    r = int(np.count_nonzero(s > tol * max(s[0], 1.0))) if s.size else 0
    return Vh[:r].reshape((r,) + mats.shape[1:])


def _center_dim(E: np.ndarray, tol: float = 1e-9) -> int:
    """Dimension of the center of the algebra spanned by ``E``."""
    r = E.shape[0]
    if r == 0:
        return 0
    # column i holds the stacked commutators [E_i, E_j] over j
    cols = [np.concatenate([(Ei @ Ej - Ej @ Ei).ravel() for Ej in E]) for Ei in E]
    C = np.stack(cols, axis=1)
    s = np.linalg.svd(C, compute_uv=False)
    return int(r - np.count_nonzero(s > tol * max(s[0] if s.size else 0.0, 1.0)))


def heisenberg_decompose(n: int, t: float = 1.0, seed: int = 0, tol: float = 1e-9) -> HeisenbergDecomposition:
    """Block structure of L(H_3(Z_n)) after a Fourier transform in the first coordinate.

    With ``F = DFT_n (x) I_{n^2}`` every ``F lambda(g) F^*`` is block
    diagonal with ``n`` blocks of size ``n^2``.  Block ``x = 0`` is the
    commutative algebra of functions on Z_n^2 and block ``x = 1`` is a
    full matrix algebra (trivial center, dimension ``n^2``).  Invariance
    of each block under ``T_t`` is tested by applying the semigroup to
    ``p_x y`` for a random ``y`` and the central projection ``p_x``.
    """
    if not 2 <= n <= 8:
        raise ValueError("heisenberg_decompose supports 2 <= n <= 8")
    a = heisenberg_group_algebra(n)
    N = a.dim
    B = n * n
    k = np.arange(n)
    Fn = np.exp(-2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)
    F = np.kron(Fn, np.eye(B))
    Fh = adjoint(F)

    mats = np.array([F @ a.basis_element(g) @ Fh for g in range(N)])
    mask = np.kron(np.eye(n), np.ones((B, B))).astype(bool)
    off = float(np.max(np.abs(mats[:, ~mask]))) if N else 0.0
    if off > tol:
        raise ArithmeticError(f"Fourier transform failed to block-diagonalize (mass {off:.3e})")

    blocks = [mats[:, x * B:(x + 1) * B, x * B:(x + 1) * B] for x in range(n)]
    spans = [_span_basis(b, tol) for b in blocks]
    dims = tuple(int(s.shape[0]) for s in spans)

    b0 = blocks[0]
    comm = np.einsum("aij,bjk->abik", b0, b0) - np.einsum("bij,ajk->abik", b0, b0)
    m0_comm = bool(np.max(np.abs(comm)) <= tol)
    center1 = _center_dim(spans[1], tol)
    m1_full = dims[1] == n * n and center1 == 1

    rng = np.random.default_rng(seed)
    y = random_element(a, rng, self_adjoint=False)
    worst = 0.0
    for x in range(n):
        q = np.zeros(N)
        q[x * B:(x + 1) * B] = 1.0
        p = Fh @ (q[:, None] * F)
        z = semigroup_apply(a, p @ y, t)
        Z = F @ z @ Fh
        outside = np.ones((N, N), dtype=bool)
        outside[x * B:(x + 1) * B, x * B:(x + 1) * B] = False
        worst = max(worst, float(np.max(np.abs(Z[outside]))))
    return HeisenbergDecomposition(n, dims, m0_comm, m1_full, center1, off, worst)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def element_to_json(x: np.ndarray) -> list:
    """Row-major list of ``[re, im]`` pairs."""
    x = np.asarray(x, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in x]


def element_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("expected rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def descriptor_json(a: StarAlgebra) -> str:
    return json.dumps(a.descriptor(), sort_keys=True)

