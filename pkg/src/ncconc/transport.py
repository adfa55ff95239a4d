"""Entropy, Wasserstein lower bounds and functional inequality checks.

Densities are positive matrices with normalized trace one.  The
L1-Wasserstein distance is a supremum over the Lipschitz ball
``||Gamma(x, x)|| <= 1``; it is estimated from below by ascent on the
scale-invariant ratio ``tau((rho - E_Fix rho) x) / sqrt(||Gamma(x, x)||)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import (
    StarAlgebra,
    adjoint,
    eigvalsh,
    fixed_point_project,
    func_calculus,
    gamma,
    herm,
    is_hermitian,
    opnorm,
    pnorm,
    random_density,
    random_element,
    singular_values,
    tau,
)

#: Relative size below which ``Gamma(x, x)`` counts as zero.
GAMMA_ZERO_RTOL = 1e-14
#: Entries allowed in the precomputed ``K(g,h) w_g^* w_h`` tensor.
GAMMA_TENSOR_CAP = 1 << 22
#: Cap on the size of an enumerated product space.
PRODUCT_CAP = 1 << 20
#: Constants in the Poincare and exponential integrability inequalities.
POINCARE_C_SA = 2.0 * math.sqrt(2.0)
POINCARE_C_GENERAL = 4.0 * math.sqrt(2.0)
EXPINT_C_SA = 8.0 * math.e
EXPINT_C_GENERAL = 32.0 * math.e


def _xlogx(w: np.ndarray) -> np.ndarray:
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log(w[pos])
    return out


def check_density(rho: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    """Validate a density (PSD, ``tau(rho) = 1``) and return its Hermitian part."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        raise ValueError("density must be self-adjoint")
    rho = herm(rho)
    if np.linalg.eigvalsh(rho)[0] < -1e-12:
        raise ValueError("density must be positive semidefinite")
    if abs(tau(rho).real - 1.0) > atol:
        raise ValueError("density must have normalized trace 1")
    return rho


def entropy(rho: np.ndarray) -> float:
    """``Ent(rho) = tau(rho ln(rho / tau(rho)))`` with ``0 ln 0 = 0``."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        raise ValueError("entropy needs a self-adjoint argument")
    w = eigvalsh(rho)
    scale = max(float(np.abs(w).max()), 1.0)
    if w[0] < -1e-12 * scale:
        raise ValueError("entropy needs a positive semidefinite argument")
    w = np.clip(w, 0.0, None)
    m = w.mean()
    if m <= 0:
        raise ValueError("entropy of the zero matrix is undefined")
    return float(np.mean(_xlogx(w / m)) * m)


@dataclass(frozen=True)
class DualityCheck:
    lhs: float
    sup_estimate: float
    equality_gap: float
    max_random_value: float
    passed: bool


def gibbs_duality_check(
    sigma: np.ndarray, random_densities: int = 20, seed: int = 0, tol: float = 1e-9
) -> DualityCheck:
    """``ln tau(e^sigma) = sup_rho { tau(rho sigma) - tau(rho ln rho) }``.

    The Gibbs state ``e^sigma / tau(e^sigma)`` should attain the supremum;
    random densities must not exceed it.
    """
    sigma = np.asarray(sigma, dtype=complex)
    if not is_hermitian(sigma):
        raise ValueError("sigma must be self-adjoint")
    sigma = herm(sigma)
    d = sigma.shape[0]
    w = np.linalg.eigvalsh(sigma)
    top = w[-1]
    lhs = float(top + math.log(np.mean(np.exp(w - top))))

    def value(rho):
        return float(tau(rho @ sigma).real) - entropy(rho)

    gibbs = func_calculus(sigma, lambda v: np.exp(v - top))
    gibbs = gibbs / tau(gibbs).real
    at_gibbs = value(gibbs)
    gap = abs(lhs - at_gibbs)
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(random_densities):
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = G @ adjoint(G)
        rho = herm(rho) / tau(rho).real
        worst = max(worst, value(rho))
    ok = gap <= tol and worst <= lhs + tol
    return DualityCheck(lhs, at_gibbs, gap, worst, ok)


def block_expectation(rho: np.ndarray, partition: Sequence[Sequence[int]]) -> np.ndarray:
    """Replace each diagonal block by its normalized trace times the block identity."""
    d = rho.shape[0]
    seen = sorted(i for block in partition for i in block)
    if seen != list(range(d)) or any(len(b) == 0 for b in partition):
        raise ValueError("partition must split 0..d-1 into nonempty blocks")
    out = np.zeros_like(rho, dtype=complex)
    for block in partition:
        b = np.asarray(block)
        out[b, b] = np.trace(rho[np.ix_(b, b)]) / b.size
    return out


def entropy_monotonicity_check(rho: np.ndarray, partition: Sequence[Sequence[int]]) -> dict:
    """``Ent(E rho) <= Ent(rho)`` for a block conditional expectation ``E``."""
    before = entropy(rho)
    after = entropy(block_expectation(rho, partition))
    return {"ent_rho": before, "ent_E_rho": after, "holds": after <= before + 1e-10}


# ---------------------------------------------------------------------------
# Lipschitz ball and W1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzElement:
    x: np.ndarray
    gamma_norm: float


def gamma_norm(a: StarAlgebra, x: np.ndarray) -> float:
    """``||Gamma(x, x)||`` (largest eigenvalue of a positive element)."""
    return float(eigvalsh(gamma(a, x))[-1])


def lipschitz_normalize(a: StarAlgebra, x: np.ndarray) -> LipschitzElement:
    """Rescale ``x`` so that ``||Gamma(x, x)|| = 1``."""
    g = gamma_norm(a, x)
    if g <= GAMMA_ZERO_RTOL * (1.0 + opnorm(x) ** 2):
        raise ValueError("Gamma(x, x) = 0: x lies in the fixed-point algebra")
    y = x / math.sqrt(g)
    return LipschitzElement(y, gamma_norm(a, y))


class _RatioProblem:
    """Homogeneous ratio ``L(x) / sqrt(lambda_max(Gamma(x, x)))`` over self-adjoint x.

    ``x`` is parametrized by real and imaginary parts of its coefficients
    on the non-fixed basis elements, followed by symmetrization.  Gamma is
    evaluated through the precomputed tensor ``P[g, h] = K(g,h) w_g^* w_h``.
    """

    def __init__(self, a: StarAlgebra, sigma: np.ndarray | None = None):
        self.a = a
        free = np.flatnonzero(~a.fixed_modes)
        self.free = free
        N, d = a.size, a.dim
        if N * N * d * d > GAMMA_TENSOR_CAP:
            raise ValueError("model too large for the Lipschitz-ball ascent")
        K = a.gromov.K
        W = np.array([a.basis_element(g) for g in range(N)])
        self.P = np.einsum("gh,gji,hjk->ghik", K, W.conj(), W)
        # J maps real parameters to Fourier coefficients of the symmetrized element
        cols = []
        for part in (1.0, 1j):
            for g in free:
                c = np.zeros(N, dtype=complex)
                c[g] = part
                cols.append(a.fourier(herm(a.synthesize(c))))
        self.J = np.array(cols).T  # (N, 2 * len(free))
        self.sigma_hat = None
        if sigma is not None:
            # tau(sigma x) = sum_g xhat_g tau(sigma w_g)
            self.sigma_hat = np.array([tau(sigma @ W[g]) for g in range(N)])

    def coeffs(self, theta):
        return self.J @ theta

    def element(self, theta):
        return herm(self.a.synthesize(self.coeffs(theta)))

    def gamma_top(self, c):
        G = np.einsum("g,h,ghij->ij", np.conj(c), c, self.P)
        w, V = np.linalg.eigh(herm(G))
        return float(w[-1]), V[:, -1]

    def grad_gamma_top(self, c, v):
        Q = np.einsum("i,ghij,j->gh", np.conj(v), self.P, v)
        return 2.0 * np.real(self.J.conj().T @ (Q @ c))

    def linear(self, c):
        val = self.sigma_hat @ c
        return float(val.real), np.real(self.J.T @ self.sigma_hat)


def _ascend(prob: _RatioProblem, theta0: np.ndarray, maxiter: int) -> np.ndarray:
    def f(theta):
        c = prob.coeffs(theta)
        q, v = prob.gamma_top(c)
        if q <= 1e-300:
            return 0.0, np.zeros_like(theta)
        L, dL = prob.linear(c)
        dq = prob.grad_gamma_top(c, v)
        r = L / math.sqrt(q)
        grad = dL / math.sqrt(q) - 0.5 * L * dq / q**1.5
        return -r, -grad

    res = minimize(f, theta0, jac=True, method="L-BFGS-B", options={"maxiter": maxiter})
    return res.x


@dataclass(frozen=True)
class W1Estimate:
    w1_lb: float
    witness: LipschitzElement | None
    history: tuple


def w1_lower_bound(
    a: StarAlgebra,
    rho: np.ndarray,
    restarts: int = 32,
    seed: int = 0,
    maxiter: int = 200,
) -> W1Estimate:
    """Certified lower bound on ``W1(rho, E_Fix rho)``.

    Restart 0 starts from ``rho - E_Fix rho``; restart ``i > 0`` from a
    Gaussian direction drawn from ``SeedSequence([seed, i])``.  The value
    reported for a witness is recomputed from the generator-route Gamma
    after exact rescaling, and ``history[i]`` is the best value over the
    first ``i + 1`` restarts.
    """
    rho = check_density(rho)
    sigma = rho - fixed_point_project(a, rho)
    if opnorm(sigma) <= 1e-14:
        return W1Estimate(0.0, None, (0.0,) * max(restarts, 1))
    prob = _RatioProblem(a, sigma)
    n_par = prob.J.shape[1]
    best, witness, history = 0.0, None, []
    for i in range(max(restarts, 1)):
        if i == 0:
            target = a.fourier(sigma)
            A = np.vstack([prob.J.real, prob.J.imag])
            theta0 = np.linalg.lstsq(A, np.concatenate([target.real, target.imag]), rcond=None)[0]
        else:
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            theta0 = rng.standard_normal(n_par)
        theta = _ascend(prob, theta0, maxiter)
        x = prob.element(theta)
        try:
            lip = lipschitz_normalize(a, x)
        except ValueError:
            history.append(best)
            continue
        val = float(tau(sigma @ lip.x).real)
        if val < 0:
            lip = LipschitzElement(-lip.x, lip.gamma_norm)
            val = -val
        if val > best:
            best, witness = val, lip
        history.append(best)
    return W1Estimate(best, witness, tuple(history))


def w1_two_point_exact(r: float) -> float:
    """W1 between ``1 + r eps`` and ``1`` on the two-point space."""
    if abs(r) > 1:
        raise ValueError("1 + r eps is a density only for |r| <= 1")
    return abs(r)


@dataclass(frozen=True)
class SubGaussianEstimate:
    c_half: float
    c_full: float
    samples: int


def _log_tau_exp(y: np.ndarray, t: float) -> float:
    w = eigvalsh(y) * t
    top = w.max()
    return float(top + math.log(np.mean(np.exp(w - top))))


def subgaussian_c_estimate(
    a: StarAlgebra,
    samples: int = 200,
    t_grid: Sequence[float] = (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0),
    seed: int = 0,
    refine: bool = True,
) -> SubGaussianEstimate:
    """Lower estimate of the sub-Gaussian constant over the Lipschitz ball.

    ``c_half = sup 2 ln tau(exp(t (x - E_Fix x))) / t^2`` over sampled
    Lipschitz-normalized self-adjoint ``x`` and ``t`` in ``t_grid``, i.e.
    the constant in ``tau(e^{ty}) <= e^{c t^2 / 2}``; ``c_full = c_half / 2``
    is the constant in the ``e^{c t^2}`` convention.  With ``refine`` the
    sample set is augmented by ascent on ``||y||_2^2 / ||Gamma(y, y)||``,
    the small-``t`` limit of the same ratio.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if any(t <= 0 for t in t_grid):
        raise ValueError("t grid must be positive")
    rng = np.random.default_rng(seed)
    candidates = []
    for _ in range(samples):
        x = random_element(a, rng)
        candidates.append(x - fixed_point_project(a, x))
    if refine and a.size * a.size * a.dim * a.dim <= GAMMA_TENSOR_CAP and np.any(~a.fixed_modes):
        candidates.append(_variance_ascent(a, seed))
    best = 0.0
    for y in candidates:
        try:
            y = lipschitz_normalize(a, y).x
        except ValueError:
            continue
        y = herm(y)
        for t in t_grid:
            best = max(best, 2.0 * _log_tau_exp(y, t) / t**2)
    return SubGaussianEstimate(best, best / 2.0, len(candidates))


def _variance_ascent(a: StarAlgebra, seed: int, restarts: int = 4) -> np.ndarray:
    """Self-adjoint centered element maximizing ``||y||_2^2 / ||Gamma(y, y)||``."""
    prob = _RatioProblem(a)
    n_par = prob.J.shape[1]

    def f(theta):
        c = prob.coeffs(theta)
        q, v = prob.gamma_top(c)
        if q <= 1e-300:
            return 0.0, np.zeros_like(theta)
        s = float(np.vdot(c, c).real)
        ds = 2.0 * np.real(prob.J.conj().T @ c)
        dq = prob.grad_gamma_top(c, v)
        return -s / q, -(ds / q - s * dq / q**2)

    best, best_theta = -1.0, None
    for i in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1_000_003, i]))
        res = minimize(f, rng.standard_normal(n_par), jac=True, method="L-BFGS-B", options={"maxiter": 300})
        if -res.fun > best:
            best, best_theta = -res.fun, res.x
    return prob.element(best_theta)


@dataclass(frozen=True)
class TransportCheck:
    lhs: float
    rhs: float
    entropy: float
    passed: bool


def transport_check(
    a: StarAlgebra, rho: np.ndarray, c_half: float, restarts: int = 32, seed: int = 0
) -> TransportCheck:
    """``W1(rho, E_Fix rho) <= sqrt(2 c_half Ent(rho))`` using the W1 lower bound."""
    lb = w1_lower_bound(a, rho, restarts=restarts, seed=seed).w1_lb
    ent = entropy(rho)
    rhs = math.sqrt(2.0 * c_half * max(ent, 0.0))
    return TransportCheck(lb, rhs, ent, lb <= rhs + 1e-9)


# ---------------------------------------------------------------------------
# Poincare and exponential integrability
# ---------------------------------------------------------------------------


def _gamma_sup(a: StarAlgebra, x: np.ndarray) -> float:
    """``max(||Gamma(x, x)||, ||Gamma(x^*, x^*)||)``."""
    g1 = gamma_norm(a, x)
    g2 = g1 if is_hermitian(x) else gamma_norm(a, adjoint(x))
    return max(g1, g2, 0.0)


@dataclass(frozen=True)
class PoincareScan:
    max_ratio_sa: float
    max_ratio_general: float
    pcr2_fitted: float
    parseval_residual: float
    alpha: float
    p_list: tuple
    samples: int

    @property
    def passed(self) -> bool:
        return (
            self.max_ratio_sa <= POINCARE_C_SA
            and self.max_ratio_general <= POINCARE_C_GENERAL
            and self.parseval_residual <= 1e-10
        )


def poincare_ratio_scan(
    a: StarAlgebra, alpha: float, p_list: Sequence[float], samples: int, seed: int = 0
) -> PoincareScan:
    """Sampled ratios for the Poincare-type inequality.

    ``ratio = ||x - E_Fix x||_p / (sqrt(p / alpha) max(||Gamma(x,x)||, ||Gamma(x^*,x^*)||)^{1/2})``
    must stay below ``2 sqrt 2`` for self-adjoint and ``4 sqrt 2`` for
    general ``x``.  The second form, with ``p alpha^{-1/2}`` and the
    ``p``-norm of ``Gamma^{1/2}``, has no explicit constant; its largest
    sampled ratio is reported as ``pcr2_fitted``.
    """
    rng = np.random.default_rng(seed)
    worst = {True: 0.0, False: 0.0}
    pcr2 = 0.0
    parseval = 0.0
    for _ in range(samples):
        for sa in (True, False):
            x = random_element(a, rng, self_adjoint=sa)
            y = x - fixed_point_project(a, x)
            G = gamma(a, x)
            Gs = G if sa else gamma(a, adjoint(x))
            gsup = max(float(eigvalsh(G)[-1]), float(eigvalsh(Gs)[-1]))
            c = a.fourier(x)
            energy = float(np.sum(np.abs(c[~a.fixed_modes]) ** 2))
            parseval = max(parseval, abs(pnorm(y, 2) ** 2 - energy))
            if gsup <= GAMMA_ZERO_RTOL:
                continue
            for p in p_list:
                r = pnorm(y, p) / (math.sqrt(p / alpha) * math.sqrt(gsup))
                worst[sa] = max(worst[sa], r)
                sqrtG = func_calculus(G, lambda w: np.sqrt(np.clip(w, 0, None)))
                sqrtGs = sqrtG if sa else func_calculus(Gs, lambda w: np.sqrt(np.clip(w, 0, None)))
                denom = p / math.sqrt(alpha) * max(pnorm(sqrtG, p), pnorm(sqrtGs, p))
                if denom > 0:
                    pcr2 = max(pcr2, pnorm(y, p) / denom)
    return PoincareScan(worst[True], worst[False], pcr2, parseval, float(alpha), tuple(p_list), samples)


@dataclass(frozen=True)
class ExpIntegrabilityReport:
    min_margin_sa: float
    min_margin_general: float
    min_tail_margin: float
    alpha: float
    samples: int

    @property
    def passed(self) -> bool:
        return min(self.min_margin_sa, self.min_margin_general, self.min_tail_margin) >= 0


def exp_integrability_check(
    a: StarAlgebra,
    alpha: float,
    samples: int,
    seed: int = 0,
    t_grid: Sequence[float] = (0.25, 0.5, 1.0, 2.0, 4.0),
) -> ExpIntegrabilityReport:
    """Exponential integrability and the two-sided tail.

    For sampled ``x`` with ``y = x - E_Fix x`` and
    ``g = max(||Gamma(x,x)||, ||Gamma(x^*,x^*)||)``:
    ``tau(e^{|y|}) <= 2 exp(C g / alpha)`` with ``C = 8e`` (self-adjoint)
    or ``32e`` (general), and ``Prob(|y| >= t) <= 2 exp(-alpha t^2 / (4 C g))``.
    Margins are computed on a log scale (``ln rhs - ln lhs``) because the
    right-hand sides overflow quickly.
    """
    rng = np.random.default_rng(seed)
    margins = {True: math.inf, False: math.inf}
    tail_margin = math.inf
    for _ in range(samples):
        for sa in (True, False):
            C = EXPINT_C_SA if sa else EXPINT_C_GENERAL
            x = random_element(a, rng, self_adjoint=sa)
            y = x - fixed_point_project(a, x)
            g = _gamma_sup(a, x)
            s = singular_values(y)
            top = s.max()
            log_lhs = top + math.log(np.mean(np.exp(s - top)))
            log_rhs = math.log(2.0) + C * g / alpha
            margins[sa] = min(margins[sa], log_rhs - log_lhs)
            for t in t_grid:
                tail = float(np.mean(s >= t))
                if g <= 0:
                    bound = 0.0 if t > 0 else 2.0
                else:
                    bound = 2.0 * math.exp(-alpha * t * t / (4.0 * C * g))
                tail_margin = min(tail_margin, bound - tail)
    return ExpIntegrabilityReport(margins[True], margins[False], tail_margin, float(alpha), samples)


# ---------------------------------------------------------------------------
# Product measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductMeasureReport:
    gamma_sum: np.ndarray
    gamma_sup: float
    t_grid: tuple
    tails: tuple
    c_hat: tuple

    def to_dict(self) -> dict:
        return {
            "gamma_sup": self.gamma_sup,
            "gamma_min": float(self.gamma_sum.min()),
            "t": list(self.t_grid),
            "tail": list(self.tails),
            "c_hat": [None if c is None else c for c in self.c_hat],
        }


def product_measure_report(
    spaces: Sequence[tuple[Sequence[float], Sequence[float]]],
    f: Callable[..., float],
    t_grid: Sequence[float] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
) -> ProductMeasureReport:
    """Coordinatewise gradient and exact tails of ``f`` on a finite product space.

    ``spaces`` lists ``(values, probabilities)`` per coordinate.  For each
    coordinate ``i`` with ``E_i`` integrating it out,
    ``Gamma_i(f,f) = (|f - E_i f|^2 + E_i|f|^2 - |E_i f|^2) / 2``.  The
    implied constant ``c(t) = -ln P(f - Ef >= t) ||sum Gamma_i|| / t^2``
    is reported (``None`` where the tail vanishes).
    """
    sizes = [len(v) for v, _ in spaces]
    total = int(np.prod(sizes))
    if total > PRODUCT_CAP:
        raise ValueError(f"product space has {total} points, above the cap {PRODUCT_CAP}")
    probs = [np.asarray(p, dtype=float) for _, p in spaces]
    for p in probs:
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("each coordinate needs a probability vector")
    F = np.empty(sizes)
    for idx in product(*(range(s) for s in sizes)):
        F[idx] = f(*(spaces[i][0][j] for i, j in enumerate(idx)))
    weight = np.ones(sizes)
    for i, p in enumerate(probs):
        shape = [1] * len(sizes)
        shape[i] = sizes[i]
        weight = weight * p.reshape(shape)
    G = np.zeros(sizes)
    for i, p in enumerate(probs):
        shape = [1] * len(sizes)
        shape[i] = sizes[i]
        pi = p.reshape(shape)
        Ef = (F * pi).sum(axis=i, keepdims=True)
        Ef2 = (np.abs(F) ** 2 * pi).sum(axis=i, keepdims=True)
        G += 0.5 * (np.abs(F - Ef) ** 2 + Ef2 - np.abs(Ef) ** 2)
    mean = float((F * weight).sum())
    gsup = float(G.max())
    tails, chat = [], []
    for t in t_grid:
        tail = float(weight[F - mean >= t - 1e-12 * (1 + abs(t))].sum())
        tails.append(tail)
        chat.append(-math.log(tail) * gsup / t**2 if tail > 0 and t > 0 else None)
    return ProductMeasureReport(G, gsup, tuple(float(t) for t in t_grid), tuple(tails), tuple(chat))
