"""Gromov forms and the sharp Gamma_2 curvature constant.

For a length function ``psi`` on a group the Gromov form is

    K(g, h) = (psi(g) + psi(h) - psi(g^{-1} h)) / 2.

On a group algebra the curvature condition ``Gamma_2 >= alpha Gamma``
holds exactly when ``K o K - alpha K`` is positive semidefinite, where
``o`` is the entrywise (Schur) product.  This module builds ``K``, finds
the largest such ``alpha`` and produces explicit Gram certificates for
the free group and for cyclic groups.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

#: Relative rank tolerance used when restricting to the range of K.
RANK_RTOL = 1e-10
#: Cap on the size of a tensor-sum form.
TENSOR_CAP = 4096


class IndefiniteFormError(ValueError):
    """Raised when a Gromov form is not positive semidefinite."""


def psd_tolerance(K: np.ndarray) -> float:
    """Absolute PSD tolerance ``1e-9 * (1 + max|K|)``."""
    return 1e-9 * (1.0 + (float(np.max(np.abs(K))) if K.size else 0.0))


@dataclass(frozen=True, eq=False)
class GromovForm:
    """A Gromov form ``K`` on an ordered basis of group elements."""

    basis: tuple
    K: np.ndarray
    scale: float = 1.0
    labels: tuple = ()

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != len(self.basis):
            raise ValueError("K must be square with one row per basis element")
        if not np.allclose(K, K.T, atol=1e-12, rtol=0):
            raise ValueError("K must be symmetric")
        K = 0.5 * (K + K.T)
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "basis", tuple(self.basis))
        labels = tuple(self.labels) if len(self.labels) else tuple(str(b) for b in self.basis)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.K.shape[0]

    def schur_square(self) -> np.ndarray:
        return self.K * self.K

    def to_csv(self) -> str:
        """CSV text: header row of basis labels, then the rows of K."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.labels)
        for row in self.K:
            w.writerow([f"{v:.12g}" for v in row])
        return buf.getvalue()


def _psi_callable(psi) -> Callable:
    if callable(psi):
        return psi
    values = np.asarray(psi, dtype=float)
    return lambda g: float(values[g])


def gromov_form(basis, psi, group, scale: float | None = None) -> GromovForm:
    """Gromov form of ``psi`` on ``basis``.

    Parameters
    ----------
    basis : sequence of elements or None
        Elements indexing the form.  ``None`` means every element of a
        finite group.
    psi : LengthFunction, callable or array
        Length function evaluated on elements (and on ``g^{-1} h``).
    group : FiniteGroup or FreeWordArena
        Anything with an ``inv_mul(g, h)`` method.
    """
    if basis is None:
        basis = list(group.elements())
    basis = list(basis)
    if scale is None:
        scale = float(getattr(psi, "scale", 1.0))
    values = getattr(psi, "values", None)
    mul = getattr(group, "mul", None)
    if values is not None and mul is not None:
        # Finite group with tabulated psi: fully vectorized.
        b = np.asarray(basis, dtype=np.int64)
        pv = np.asarray(values, dtype=float)
        K = 0.5 * (pv[b][:, None] + pv[b][None, :] - pv[mul[group.inv[b]][:, b]])
    else:
        f = _psi_callable(psi)
        p = np.array([f(g) for g in basis], dtype=float)
        n = len(basis)
        K = np.empty((n, n))
        for i, g in enumerate(basis):
            for j in range(i, n):
                K[i, j] = K[j, i] = 0.5 * (p[i] + p[j] - f(group.inv_mul(g, basis[j])))
    label = getattr(group, "label", None)
    labels = tuple(str(label(g)) for g in basis) if label else ()
    return GromovForm(tuple(basis), K, scale, labels)


@dataclass(frozen=True, eq=False)
class AlphaCertificate:
    """Largest ``alpha`` with ``K o K - alpha K`` PSD, plus a witness.

    ``witness_vector`` satisfies ``v.K.v = 1`` and ``v.(K o K).v = alpha_star``,
    so it violates positivity for every ``alpha > alpha_star``.
    ``witness_min_eig`` is the smallest eigenvalue of ``K o K - alpha_star K``.
    """

    alpha_star: float
    rank_K: int
    witness_min_eig: float
    witness_vector: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        a = self.alpha_star
        return {
            "alpha_star": "inf" if math.isinf(a) else a,
            "rank": self.rank_K,
            "min_eig": self.witness_min_eig,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _as_matrix(K) -> np.ndarray:
    return K.K if isinstance(K, GromovForm) else np.asarray(K, dtype=float)


def sharp_alpha(K) -> AlphaCertificate:
    """Solve for the sharp curvature constant of a Gromov form.

    The pencil ``(K o K, K)`` is reduced to the range of ``K`` (eigenvalues
    above ``1e-10`` times the largest).  Directions in the kernel of ``K``
    do not enter the right-hand side but may lower ``x.(K o K).x``; they
    are eliminated exactly through the Schur complement of ``K o K`` on
    the kernel before the symmetric eigensolve
    ``L^{-1/2} S L^{-1/2}``.  When the kernel block of ``K o K`` vanishes
    (for instance Z_n, where only the identity row is zero) this is the
    plain ``K^{-1/2}(K o K)K^{-1/2}`` problem on the range.
    """
    K = _as_matrix(K)
    n = K.shape[0]
    tol = psd_tolerance(K)
    if n == 0:
        return AlphaCertificate(math.inf, 0, 0.0, np.zeros(0))
    w, U = np.linalg.eigh(K)
    if w[0] < -tol:
        raise IndefiniteFormError(f"Gromov form is indefinite (min eig {w[0]:.3e})")
    lam_max = w[-1]
    if lam_max <= tol:
        return AlphaCertificate(math.inf, 0, 0.0, np.zeros(n))
    keep = w > RANK_RTOL * lam_max
    Ur, Uk = U[:, keep], U[:, ~keep]
    L = w[keep]
    A = K * K
    S = Ur.T @ A @ Ur
    correction = np.zeros((Uk.shape[1], Ur.shape[1]))
    if Uk.shape[1]:
        Akk = Uk.T @ A @ Uk
        Akr = Uk.T @ A @ Ur
        ak, Vk = np.linalg.eigh(Akk)
        big = ak > RANK_RTOL * max(float(np.max(np.abs(A))), 1.0)
        if np.any(big):
            Vb = Vk[:, big]
            correction = Vb @ ((Vb.T @ Akr) / ak[big][:, None])
            S = S - Akr.T @ correction
    Linv = 1.0 / np.sqrt(L)
    M = Linv[:, None] * S * Linv[None, :]
    M = 0.5 * (M + M.T)
    mu, Y = np.linalg.eigh(M)
    alpha = float(mu[0])
    y = Linv * Y[:, 0]
    v = Ur @ y - Uk @ (correction @ y)
    v = v / math.sqrt(max(float(v @ K @ v), 1e-300))
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    min_eig = float(np.linalg.eigvalsh(A - alpha * K)[0])
    return AlphaCertificate(alpha, int(keep.sum()), min_eig, v)


@dataclass(frozen=True)
class CriterionCheck:
    holds: bool
    min_pencil_eig: float
    alpha: float


def gamma2_criterion_check(K, alpha: float) -> CriterionCheck:
    """Test ``K o K - alpha K >= 0`` up to :func:`psd_tolerance`."""
    K = _as_matrix(K)
    if K.size == 0:
        return CriterionCheck(True, 0.0, float(alpha))
    m = float(np.linalg.eigvalsh(K * K - alpha * K)[0])
    return CriterionCheck(m >= -psd_tolerance(K), m, float(alpha))


def tensor_sum_form(forms: Sequence[GromovForm], cap: int = TENSOR_CAP) -> GromovForm:
    """``sum_i 1 x ... x K_i x ... x 1`` with ``1`` the all-ones matrix.

    This is the Gromov form of the summed length function on a direct
    product, on the product basis ordered first-factor-major.
    """
    if not forms:
        raise ValueError("tensor_sum_form needs at least one form")
    if len(forms) == 1:
        return forms[0]
    sizes = [f.size for f in forms]
    total = int(np.prod(sizes))
    if total > cap:
        raise ValueError(f"tensor-sum size {total} exceeds the cap {cap}")
    K = np.zeros((total, total))
    for i, f in enumerate(forms):
        term = np.ones((1, 1))
        for j, g in enumerate(forms):
            term = np.kron(term, f.K if i == j else np.ones((g.size, g.size)))
        K += term
    idx = np.stack(np.unravel_index(np.arange(total), sizes), axis=1)
    basis = tuple(tuple(forms[i].basis[c] for i, c in enumerate(row)) for row in idx.tolist())
    labels = tuple(
        "(" + ",".join(forms[i].labels[c] for i, c in enumerate(row)) + ")" for row in idx.tolist()
    )
    return GromovForm(basis, K, forms[0].scale, labels)


# ---------------------------------------------------------------------------
# Gram certificates
# ---------------------------------------------------------------------------


def haagerup_vectors(basis: Sequence[tuple]) -> np.ndarray:
    """Rows ``V(g) = sum_{i=1}^{|g|} sqrt(2(i-1)) delta_{g_i}``.

    ``g_i`` is the length-``i`` prefix of the reduced word ``g``; the
    coordinates are indexed by ``basis`` (which must be prefix closed).
    """
    pos = {w: i for i, w in enumerate(basis)}
    V = np.zeros((len(basis), len(basis)))
    for row, g in enumerate(basis):
        for i in range(1, len(g) + 1):
            V[row, pos[tuple(g[:i])]] = math.sqrt(2.0 * (i - 1))
    return V


def haagerup_gram_certificate(arena, r: int | None = None) -> dict:
    """Check ``K o K - K = Gram(V)`` on ``ball(r)`` of a free group.

    ``K`` is built from word length through :func:`gromov_form`, so the
    residual compares two independent descriptions of the same matrix.
    """
    basis = arena.ball(r)
    form = gromov_form(basis, arena.length, arena)
    V = haagerup_vectors(basis)
    R = form.K * form.K - form.K - V @ V.T
    pencil = gamma2_criterion_check(form, 1.0)
    return {
        "max_abs_residual": float(np.max(np.abs(R))),
        "size": len(basis),
        "min_eig_KK_minus_K": pencil.min_pencil_eig,
    }


def cocycle_vectors(n: int) -> np.ndarray:
    """Rows ``b(k)`` in R^{2n} for k in Z_n.

    ``b(k) = n^{-1/2} sum_j (cos(2 pi k (j-1)/n) - 1, sin(2 pi k (j-1)/n)) x e_j``.
    """
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    ang = 2.0 * np.pi * k * j / n
    B = np.empty((n, 2 * n))
    B[:, 0::2] = np.cos(ang) - 1.0
    B[:, 1::2] = np.sin(ang)
    return B / math.sqrt(n)


def cocycle_zn_certificate(n: int) -> dict:
    """Compare ``<b(k), b(h)>`` with the Gromov form of ``2(1 - delta)`` on Z_n."""
    if n < 2:
        raise ValueError("cocycle certificate needs n >= 2")
    from .groups import build_cyclic, delta_length

    g = build_cyclic(n)
    form = gromov_form(None, delta_length(g, 2.0), g)
    B = cocycle_vectors(n)
    return {"max_abs_residual": float(np.max(np.abs(B @ B.T - form.K))), "n": n}
