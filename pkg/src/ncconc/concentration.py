"""Matrix martingales, Freedman-type tail bounds and Golden-Thompson checks.

Two finite martingale families are provided:

* Rademacher matrix series ``x = sum_k eps_k A_k`` with i.i.d. signs,
* Doob martingales ``d_k = E_k f - E_{k-1} f`` of a real function on the
  cube {-1, 1}^m, filtered by revealing one coordinate at a time.

For both, the exact tail ``tau(1_[t, inf)(x))`` averaged over the sample
space is computed by enumeration and compared with the closed-form bounds
:func:`fman_bound` and :func:`pmom_bound`.
"""

from __future__ import annotations

import csv
import io
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

#: Enumeration caps for exact paths.
MAX_ENUM_STEPS = 20
MAX_ENUM_DIM = 8
#: Default grid of epsilon values (32 log-spaced points in [0.01, 1]).
EPS_GRID = tuple(np.logspace(-2, 0, 32).tolist())
#: Monte Carlo trials per independent random stream.
MC_BLOCK = 1024
#: Eigenvalues within this relative distance below t count as >= t.
TAIL_RTOL = 1e-12


class NotEnumerableError(ValueError):
    """Raised when an exact computation is requested on a large model."""


def _tail_from_eigs(eigs: np.ndarray, weights: np.ndarray, t: float) -> float:
    """``sum_w w * (1/d) #{eig >= t}`` for eigenvalues of shape (outcomes, d)."""
    hits = (eigs >= t - TAIL_RTOL * (1.0 + abs(t))).mean(axis=1)
    return float(math.fsum((weights * hits).tolist()))


@dataclass(frozen=True)
class QuadraticCharacteristics:
    """``D2 = ||sum_k E_{k-1}(d_k^2)||`` (worst history) and ``M = sup_k ||d_k||``."""

    D2: float
    M: float
    exact: bool = True
    trials: int | None = None


class MartingaleModel(ABC):
    """A finite self-adjoint matrix martingale ``x_n = sum_k d_k`` with ``x_0 = 0``."""

    name = "martingale"

    def __init__(self, steps: int, dim: int):
        self.steps = int(steps)
        self.dim = int(dim)

    @property
    def enumerable(self) -> bool:
        return self.steps <= MAX_ENUM_STEPS and self.dim <= MAX_ENUM_DIM

    @abstractmethod
    def outcomes(self) -> tuple[np.ndarray, np.ndarray]:
        """``(weights, eigenvalues of x_n)`` over the whole sample space."""

    @abstractmethod
    def sample_final(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Eigenvalues of ``x_n`` for ``n`` independent draws, shape (n, d)."""

    @abstractmethod
    def characteristics(self) -> QuadraticCharacteristics:
        ...

    @abstractmethod
    def martingale_residual(self) -> float:
        """``max |E_{k-1} d_k|`` over all steps and histories."""

    @abstractmethod
    def descriptor(self) -> dict:
        ...

    def _require_enumerable(self):
        if not self.enumerable:
            raise NotEnumerableError(
                f"{self.name}: 2^{self.steps} outcomes with d={self.dim} exceed the enumeration budget"
            )

    def final_spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        self._require_enumerable()
        cache = getattr(self, "_spectrum", None)
        if cache is None:
            cache = self.outcomes()
            self._spectrum = cache
        return cache


class RademacherMatrixModel(MartingaleModel):
    """``x_n = sum_k eps_k A_k`` with Hermitian coefficients."""

    name = "rademacher"

    def __init__(self, As: Sequence[np.ndarray]):
        As = [np.atleast_2d(np.asarray(A, dtype=complex)) for A in As]
        if not As:
            raise ValueError("at least one coefficient matrix is required")
        d = As[0].shape[0]
        for A in As:
            if A.shape != (d, d):
                raise ValueError("coefficients must be square of a common size")
            if not np.allclose(A, A.conj().T, atol=1e-12 * (1 + np.abs(A).max()), rtol=0):
                raise ValueError("coefficients must be Hermitian")
        self.As = np.array([0.5 * (A + A.conj().T) for A in As])
        self.As.setflags(write=False)
        super().__init__(len(As), d)

    def outcomes(self):
        K, d = self.steps, self.dim
        total = 1 << K
        flat = self.As.reshape(K, d * d)
        real = np.allclose(flat.imag, 0)
        if real:
            flat = flat.real
        eigs = np.empty((total, d))
        chunk = 1 << 14
        bits = np.arange(K)
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total))
            signs = 1.0 - 2.0 * ((idx[:, None] >> bits[None, :]) & 1)
            X = (signs @ flat).reshape(-1, d, d)
            eigs[start:start + idx.size] = np.linalg.eigvalsh(X)
        return np.full(total, 1.0 / total), eigs

    def sample_final(self, rng, n):
        signs = rng.choice([-1.0, 1.0], size=(n, self.steps))
        X = np.einsum("nk,kij->nij", signs, self.As)
        return np.linalg.eigvalsh(X)

    def characteristics(self):
        sq = np.einsum("kij,kjl->il", self.As, self.As)
        D2 = float(np.linalg.eigvalsh(sq)[-1]) if self.steps else 0.0
        M = max(float(np.abs(np.linalg.eigvalsh(A)).max()) for A in self.As)
        return QuadraticCharacteristics(max(D2, 0.0), M)

    def martingale_residual(self):
        return 0.0

    def descriptor(self):
        return {"model": self.name, "K": self.steps, "d": self.dim}


def rademacher_matrix_model(As: Sequence[np.ndarray]) -> RademacherMatrixModel:
    return RademacherMatrixModel(As)


def random_rademacher_model(K: int, d: int, rng: np.random.Generator, scale: float | None = None):
    """Gaussian Hermitian coefficients normalized so that ``D2 = 1`` (unless ``scale``)."""
    G = rng.standard_normal((K, d, d)) + 1j * rng.standard_normal((K, d, d))
    As = 0.5 * (G + np.conj(np.swapaxes(G, 1, 2)))
    if scale is None:
        D2 = np.linalg.eigvalsh(np.einsum("kij,kjl->il", As, As))[-1]
        As = As / math.sqrt(D2)
    else:
        As = As * scale
    return RademacherMatrixModel(list(As))


class WalshDoobModel(MartingaleModel):
    """Doob martingale of ``f`` on {-1, 1}^m revealing coordinates in order.

    ``f`` is stored as a tensor of shape ``(2,) * m``; index 0 stands for
    the coordinate value +1 and index 1 for -1.
    """

    name = "walsh"

    def __init__(self, f: np.ndarray):
        f = np.asarray(f, dtype=float)
        m = f.ndim
        if m < 1 or f.shape != (2,) * m:
            raise ValueError("f must be a tensor of shape (2,)*m")
        self.f = f
        super().__init__(m, 1)
        # cond[k] = E_k f, constant in coordinates k+1..m (broadcast shape)
        self._cond = [f.mean(axis=tuple(range(k, m)), keepdims=True) for k in range(m + 1)]

    @property
    def enumerable(self) -> bool:
        return self.steps <= MAX_ENUM_STEPS

    def differences(self) -> list[np.ndarray]:
        return [np.broadcast_to(self._cond[k] - self._cond[k - 1], self.f.shape) for k in range(1, self.steps + 1)]

    def outcomes(self):
        x = (self.f - self._cond[0]).ravel()
        return np.full(x.size, 1.0 / x.size), x[:, None]

    def sample_final(self, rng, n):
        idx = rng.integers(0, 2, size=(n, self.steps))
        vals = self.f[tuple(idx.T)] - self._cond[0].item()
        return vals[:, None]

    def characteristics(self):
        m = self.steps
        total = np.zeros((1,) * m)
        M = 0.0
        for k in range(1, m + 1):
            dk = self._cond[k] - self._cond[k - 1]
            M = max(M, float(np.abs(dk).max()))
            # E_{k-1}(d_k^2): average over coordinate k (axis k-1)
            total = total + np.mean(dk**2, axis=k - 1, keepdims=True)
        return QuadraticCharacteristics(float(np.max(total)), M)

    def martingale_residual(self):
        worst = 0.0
        for k in range(1, self.steps + 1):
            dk = self._cond[k] - self._cond[k - 1]
            worst = max(worst, float(np.abs(dk.mean(axis=k - 1)).max()))
        return worst

    def descriptor(self):
        return {"model": self.name, "K": self.steps, "d": 1}


def cube_points(m: int) -> np.ndarray:
    """All points of {-1, 1}^m, row ``i`` has coordinate j = ``(-1)^{bit}``, first coordinate most significant."""
    idx = np.arange(1 << m)
    bits = (idx[:, None] >> np.arange(m - 1, -1, -1)[None, :]) & 1
    return 1.0 - 2.0 * bits


def walsh_function_model(f, m: int | None = None) -> WalshDoobModel:
    """Doob martingale of a function on the cube.

    ``f`` may be a callable on an ``(2^m, m)`` array of points (``m`` then
    required), a flat array over the points of :func:`cube_points`, or a
    ``(2,) * m`` tensor.
    """
    if callable(f):
        if m is None:
            raise ValueError("m is required for callable f")
        if m > MAX_ENUM_STEPS:
            raise NotEnumerableError(f"m = {m} exceeds the cap {MAX_ENUM_STEPS}")
        vals = np.asarray(f(cube_points(m)), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
        if m is None:
            m = vals.ndim if vals.ndim > 1 else int(round(math.log2(vals.size)))
    if m > MAX_ENUM_STEPS:
        raise NotEnumerableError(f"m = {m} exceeds the cap {MAX_ENUM_STEPS}")
    if vals.size != 1 << m:
        raise ValueError("f must have 2^m values")
    return WalshDoobModel(vals.reshape((2,) * m))


def quadratic_characteristics(model: MartingaleModel) -> QuadraticCharacteristics:
    return model.characteristics()


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def fman_bound(t: float, D2: float, M: float, eps: float) -> float:
    """Freedman-type tail bound for a self-adjoint martingale.

    ``exp(-t^2/(4(1+e)D2 + 2(1+e)tM/sqrt(e)) - sqrt(e) M t^3 / (2(1+e)(2 sqrt(e) D2 + M t)^2))``
    for ``0 < e <= 1``; with ``M = 0`` the Gaussian limit
    ``exp(-t^2/(4(1+e)D2))`` is returned.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if D2 < 0 or M < 0:
        raise ValueError("D2 and M must be nonnegative")
    if t == 0:
        return 1.0
    if M == 0:
        return math.exp(-t * t / (4 * (1 + eps) * D2)) if D2 > 0 else 0.0
    se = math.sqrt(eps)
    first = t * t / (4 * (1 + eps) * D2 + 2 * (1 + eps) * t * M / se)
    second = se * M * t**3 / (2 * (1 + eps) * (2 * se * D2 + M * t) ** 2)
    return math.exp(-first - second)


def best_over_eps(t: float, D2: float, M: float, eps_grid: Sequence[float] = EPS_GRID) -> tuple[float, float]:
    """``(bound, eps)`` minimizing :func:`fman_bound` over ``eps_grid``."""
    vals = [(fman_bound(t, D2, M, e), e) for e in eps_grid]
    return min(vals)


def pmom_bound(p: float, D2: float, M: float, eps: float) -> float:
    """``2^{3/2}(1+e)^{1/2} sqrt(p) D + 2^{5/2}((1+e)/sqrt(e)) p M`` with ``D = sqrt(D2)``."""
    if p < 2:
        raise ValueError("p must be at least 2")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    D = math.sqrt(D2)
    return 2**1.5 * math.sqrt(1 + eps) * math.sqrt(p) * D + 2**2.5 * ((1 + eps) / math.sqrt(eps)) * p * M


def lambda_max(M: float, eps: float) -> float:
    """Upper end ``sqrt(e)/(M(1+e))`` of the admissible range for :func:`expin_check`."""
    return math.inf if M == 0 else math.sqrt(eps) / (M * (1 + eps))


@dataclass(frozen=True)
class ExpinCheck:
    lhs: float
    rhs: float
    passed: bool


def expin_check(model: MartingaleModel, lam: float, eps: float) -> ExpinCheck:
    """Exact ``tau(e^{lam x_n})`` against ``exp((1+e) lam^2 D2)``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    ch = model.characteristics()
    top = lambda_max(ch.M, eps)
    if not 0 <= lam <= top * (1 + 1e-12):
        raise ValueError(f"lambda = {lam} outside the admissible range [0, {top}]")
    w, eigs = model.final_spectrum()
    lhs = float(math.fsum((w * np.exp(lam * eigs).mean(axis=1)).tolist()))
    rhs = math.exp((1 + eps) * lam * lam * ch.D2)
    return ExpinCheck(lhs, rhs, lhs <= rhs * (1 + 1e-9))


def exact_tail(model: MartingaleModel, t: float) -> float:
    w, eigs = model.final_spectrum()
    return _tail_from_eigs(eigs, w, t)


def exact_moment(model: MartingaleModel, p: float) -> float:
    """``||x_n||_p = (E tau |x_n|^p)^{1/p}``."""
    w, eigs = model.final_spectrum()
    return float(math.fsum((w * (np.abs(eigs) ** p).mean(axis=1)).tolist()) ** (1.0 / p))


@dataclass(frozen=True)
class MonteCarloTail:
    estimate: float
    std_err: float
    trials: int


def mc_tail(model: MartingaleModel, t: float, trials: int, seed: int) -> MonteCarloTail:
    """Sampled tail with standard error.

    Trials are grouped in blocks of :data:`MC_BLOCK`; block ``b`` draws
    from the stream ``SeedSequence([seed, b])``, so every trial's draw is a
    function of ``(seed, trial index)`` only.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    vals = np.empty(trials)
    for b, start in enumerate(range(0, trials, MC_BLOCK)):
        n = min(MC_BLOCK, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        eigs = model.sample_final(rng, n)
        vals[start:start + n] = (eigs >= t - TAIL_RTOL * (1.0 + abs(t))).mean(axis=1)
    est = math.fsum(vals.tolist()) / trials
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return MonteCarloTail(est, se, trials)


@dataclass(frozen=True)
class GoldenThompsonCheck:
    lhs: float
    rhs: float
    passed: bool


def _hexp(a: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(a)
    return (V * np.exp(w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def golden_thompson_check(a: np.ndarray, b: np.ndarray) -> GoldenThompsonCheck:
    """``tau(e^{a+b}) <= tau(e^a e^b)`` for Hermitian ``a`` and ``b``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    for z in (a, b):
        if z.ndim != 2 or not np.allclose(z, z.conj().T, atol=1e-12 * (1 + np.abs(z).max()), rtol=0):
            raise ValueError("Golden-Thompson check needs Hermitian matrices")
    d = a.shape[0]
    lhs = float(np.sum(np.exp(np.linalg.eigvalsh(a + b)))) / d
    r = np.trace(_hexp(a) @ _hexp(b)) / d
    if abs(r.imag) > 1e-12 * max(1.0, abs(r.real)):
        raise ArithmeticError(f"tau(e^a e^b) has imaginary part {r.imag:.3e}")
    rhs = float(r.real)
    return GoldenThompsonCheck(lhs, rhs, lhs <= rhs * (1 + 1e-10))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class DeviationReport:
    rows: list
    summary: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "eps", "bound", "tail", "std_err", "slack"])
        for r in self.rows:
            w.writerow([f"{v:.12g}" for v in r])
        return buf.getvalue()

    @property
    def passed(self) -> bool:
        return self.summary["pass"]


def deviation_report(
    model: MartingaleModel,
    t_grid: Sequence[float],
    eps_grid: Sequence[float] = EPS_GRID,
    trials: int = 20000,
    seed: int = 0,
) -> DeviationReport:
    """Tail bound versus exact (or sampled) tails on a ``(t, eps)`` grid.

    Passes when every slack ``bound - tail`` is nonnegative for enumerable
    models and at least ``-3 std_err`` for sampled ones.
    """
    ch = model.characteristics()
    rows = []
    ok = True
    for t in t_grid:
        if model.enumerable:
            tail, se = exact_tail(model, t), 0.0
        else:
            mc = mc_tail(model, t, trials, seed)
            tail, se = mc.estimate, mc.std_err
        for e in eps_grid:
            bound = fman_bound(t, ch.D2, ch.M, e)
            slack = bound - tail
            ok &= slack >= -3.0 * se
            rows.append((float(t), float(e), bound, tail, se, slack))
    summary = {
        **model.descriptor(),
        "D2": ch.D2,
        "M": ch.M,
        "min_slack": min((r[5] for r in rows), default=0.0),
        "exact": model.enumerable,
        "pass": bool(ok),
    }
    return DeviationReport(rows, summary)
