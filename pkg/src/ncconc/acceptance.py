"""Acceptance matrix shared by the test suite and ``ncconc suite``.

Each criterion is a function ``(quick, seed) -> CriterionResult``.  The
``details`` of a result are deterministic for a given ``(quick, seed)``;
elapsed time is kept separately so reports stay byte-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import algebra as alg
from . import concentration as conc
from . import transport as tr
from .curvature import (
    cocycle_zn_certificate,
    gamma2_criterion_check,
    gromov_form,
    haagerup_gram_certificate,
    sharp_alpha,
)
from .groups import build_cyclic, build_heisenberg, delta_length, free_ball, heisenberg_length


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict
    budget: float
    elapsed: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "pass": bool(self.passed), "details": self.details}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.elapsed:.2f} s, budget {self.budget:g} s)"


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    budget: float
    fn: Callable


CRITERIA: dict[int, Criterion] = {}


def criterion(number: int, title: str, budget: float):
    def wrap(fn):
        CRITERIA[number] = Criterion(number, title, budget, fn)
        return fn

    return wrap


def run_criterion(number: int, quick: bool = False, seed: int = 0) -> CriterionResult:
    c = CRITERIA[number]
    start = time.perf_counter()
    passed, details = c.fn(quick=quick, seed=seed)
    elapsed = time.perf_counter() - start
    return CriterionResult(number, c.title, bool(passed), details, c.budget, elapsed)


def run_all(quick: bool = False, seed: int = 0, numbers=None) -> list[CriterionResult]:
    return [run_criterion(n, quick, seed) for n in sorted(numbers or CRITERIA)]


def alpha_n(n: int) -> float:
    return (n + 2) / (2 * n)


def certified_alpha(a: alg.StarAlgebra) -> float:
    """Sharp curvature constant of the model's multipliers."""
    return sharp_alpha(a.gromov).alpha_star


# ---------------------------------------------------------------------------
# 1-4: curvature
# ---------------------------------------------------------------------------


@criterion(1, "sharp alpha of Z_n equals (n+2)/(2n), n = 2..12", 1.0)
def _c1(quick, seed):
    errs = {}
    for n in range(2, 13):
        g = build_cyclic(n)
        errs[n] = abs(sharp_alpha(gromov_form(None, delta_length(g), g)).alpha_star - alpha_n(n))
    worst = max(errs.values())
    return worst <= 1e-9, {"max_abs_error": worst}


@criterion(2, "Haagerup Gram identity on free-group balls", 5.0)
def _c2(quick, seed):
    out, ok = {}, True
    for k, r in ((2, 2), (3, 1)):
        cert = haagerup_gram_certificate(free_ball(k, r), r)
        out[f"F{k}_r{r}"] = cert
        ok &= cert["max_abs_residual"] <= 1e-12 and cert["min_eig_KK_minus_K"] >= -1e-9
    return ok, out


@criterion(3, "cocycle Gram identity on Z_n, n = 2..10", 1.0)
def _c3(quick, seed):
    worst = max(cocycle_zn_certificate(n)["max_abs_residual"] for n in range(2, 11))
    return worst <= 1e-12, {"max_abs_residual": worst}


@criterion(4, "Heisenberg curvature and block decomposition", 30.0)
def _c4(quick, seed):
    ok = True
    pencil = {}
    for n in range(2, 9):
        form = gromov_form(None, heisenberg_length(n), build_heisenberg(n))
        chk = gamma2_criterion_check(form, alpha_n(n))
        pencil[n] = chk.min_pencil_eig
        ok &= chk.holds
    blocks = {}
    for n in (2, 3, 4):
        dec = alg.heisenberg_decompose(n, seed=seed)
        good = (
            all(dim == n * n for dim in dec.block_dims)
            and dec.total_dim == n**3
            and dec.m0_commutative
            and dec.m1_full_matrix
            and dec.invariance_mass <= 1e-9
        )
        ok &= good
        blocks[n] = dec.to_dict()
    return ok, {"min_pencil_eig": pencil, "decompositions": blocks}


# ---------------------------------------------------------------------------
# 5-8: semigroups and gradient forms
# ---------------------------------------------------------------------------

T_GRID = (0.0, 0.1, 0.5, 1.0, 2.0)


def _axiom_models():
    return [
        alg.cyclic_algebra(5),
        alg.heisenberg_group_algebra(2),
        alg.heisenberg_group_algebra(3),
        alg.heisenberg_weyl_algebra(3),
        alg.walsh_algebra(2, 3),
        alg.walsh_algebra(3, 2),
    ]


def semigroup_axiom_defects(a: alg.StarAlgebra, rng: np.random.Generator, elements: int = 4) -> dict:
    """Largest defect of each semigroup axiom over ``T_GRID`` and random elements."""
    T = alg.semigroup_apply
    one = a.one()
    xs = [alg.random_element(a, rng, self_adjoint=False) for _ in range(elements)]
    ys = [alg.random_element(a, rng, self_adjoint=False) for _ in range(elements)]
    d = dict.fromkeys(["law", "unital", "trace", "symmetric", "contraction", "choi"], 0.0)
    for t in T_GRID:
        d["unital"] = max(d["unital"], float(np.abs(T(a, one, t) - one).max()))
        for x, y in zip(xs, ys):
            tx = T(a, x, t)
            for s in T_GRID:
                d["law"] = max(d["law"], float(np.abs(T(a, tx, s) - T(a, x, s + t)).max()))
            d["trace"] = max(d["trace"], abs(alg.tau(tx) - alg.tau(x)))
            lhs = alg.tau(tx @ y)
            rhs = alg.tau(x @ T(a, y, t))
            d["symmetric"] = max(d["symmetric"], abs(lhs - rhs))
            h = alg.herm(x)
            d["contraction"] = max(d["contraction"], alg.opnorm(T(a, h, t)) - alg.opnorm(h))
            d["contraction"] = max(d["contraction"], alg.opnorm(tx) - alg.opnorm(x))
        d["choi"] = max(d["choi"], -alg.cp_choi_check(a, t).min_choi_eig)
    return {k: float(v) for k, v in d.items()}


@criterion(5, "semigroup axioms and complete positivity", 30.0)
def _c5(quick, seed):
    rng = np.random.default_rng(seed)
    out, ok = {}, True
    for a in _axiom_models():
        defects = semigroup_axiom_defects(a, rng, 2 if quick else 4)
        out[a.name] = defects
        ok &= max(defects.values()) <= 1e-9
    return ok, out


def _group_models():
    return [
        alg.cyclic_algebra(4),
        alg.cyclic_algebra(7),
        alg.heisenberg_group_algebra(2),
        alg.heisenberg_weyl_algebra(3),
        alg.heisenberg_weyl_algebra(4),
        alg.walsh_algebra(2, 3),
        alg.walsh_algebra(3, 2),
    ]


@criterion(6, "generator and Gromov routes for Gamma and Gamma_2 agree", 10.0)
def _c6(quick, seed):
    rng = np.random.default_rng(seed)
    count = 20 if quick else 100
    out = {}
    for a in _group_models():
        worst = 0.0
        for _ in range(count):
            x = alg.random_element(a, rng, self_adjoint=False, normalize=False)
            y = alg.random_element(a, rng, self_adjoint=False, normalize=False)
            p, q = alg.gamma_forms(a, x, y), alg.gamma_forms_gromov(a, x, y)
            worst = max(worst, float(np.abs(p.gamma - q.gamma).max()), float(np.abs(p.gamma2 - q.gamma2).max()))
        out[a.name] = worst
    return max(out.values()) <= 1e-9, {"max_abs_difference": out, "elements": count}


DECAY_GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 3.0)


@criterion(7, "Gamma_2 >= alpha Gamma and semigroup decay on M_n, n = 2..6", 60.0)
def _c7(quick, seed):
    rng = np.random.default_rng(seed)
    count = 100 if quick else 1000
    out, ok = {}, True
    for n in range(2, 7):
        a = alg.heisenberg_weyl_algebra(n)
        al = alpha_n(n)
        worst_c, worst_d = math.inf, math.inf
        for _ in range(count):
            x = alg.random_element(a, rng)
            D = alg.gamma2(a, x) - al * alg.gamma(a, x)
            worst_c = min(worst_c, float(alg.eigvalsh(D)[0]))
            worst_d = min(worst_d, alg.semigroup_decay_check(a, al, x, DECAY_GRID).min_margin)
        out[n] = {"alpha": al, "min_curvature_eig": worst_c, "min_decay_margin": worst_d}
        ok &= worst_c >= -1e-9 and worst_d >= -1e-9
    return ok, {"models": out, "samples": count}


@criterion(8, "Walsh gradient identity Gamma(f,f) = |grad f|^2, m = 5", 5.0)
def _c8(quick, seed):
    res = alg.walsh_gradient_check(5, samples=50, seed=seed)
    return res["max_residual"] <= 1e-9, res


# ---------------------------------------------------------------------------
# 9-11: martingale bounds
# ---------------------------------------------------------------------------


def martingale_battery(quick: bool, seed: int) -> list[tuple[str, conc.MartingaleModel]]:
    """Enumerable Rademacher-matrix and Walsh Doob models."""
    rng = np.random.default_rng(seed)
    models = [("rademacher_scalar_K4", conc.rademacher_matrix_model([np.array([[0.5]])] * 4))]
    models.append(("rademacher_diag_K4", conc.rademacher_matrix_model([0.5 * np.diag([1.0, -1.0])] * 4)))
    shapes = [(4, 2), (8, 4), (12, 4)] if quick else [(4, 1), (4, 2), (6, 4), (8, 2), (10, 4), (12, 1), (12, 2), (12, 4)]
    for K, d in shapes:
        models.append((f"rademacher_K{K}_d{d}", conc.random_rademacher_model(K, d, rng)))
    ms = (4, 9) if quick else (4, 9, 14)
    for m in ms:
        models.append((f"walsh_sum_m{m}", conc.walsh_function_model(lambda x: x.sum(axis=1) / math.sqrt(x.shape[1]), m=m)))
        f = rng.standard_normal(1 << m)
        models.append((f"walsh_gauss_m{m}", conc.walsh_function_model(f / np.abs(f).max(), m=m)))
        models.append((f"walsh_majority_m{m}", conc.walsh_function_model(lambda x: np.sign(x.sum(axis=1) + 0.5), m=m)))
    models.append(("walsh_product_m2", conc.walsh_function_model(lambda x: x[:, 0] * x[:, 1], m=2)))
    return models


@criterion(9, "exact tails below the Freedman bound; moments below the p-moment bound", 300.0)
def _c9(quick, seed):
    out, ok = {}, True
    eps_grid = conc.EPS_GRID
    for name, model in martingale_battery(quick, seed):
        ch = model.characteristics()
        D = math.sqrt(ch.D2)
        violations, min_slack = 0, math.inf
        for t in np.arange(0, 3.0001, 0.25) * D:
            tail = conc.exact_tail(model, float(t))
            for e in eps_grid:
                slack = conc.fman_bound(float(t), ch.D2, ch.M, e) - tail
                min_slack = min(min_slack, slack)
                violations += slack < 0
        mom_ratio = 0.0
        for p in (2, 4, 6, 8):
            norm = conc.exact_moment(model, p)
            bound = min(conc.pmom_bound(p, ch.D2, ch.M, e) for e in eps_grid)
            mom_ratio = max(mom_ratio, norm / bound)
        out[name] = {"D2": ch.D2, "M": ch.M, "violations": int(violations), "min_slack": min_slack, "max_moment_ratio": mom_ratio}
        ok &= violations == 0 and mom_ratio <= 1.0
    return ok, out


@criterion(10, "exponential moment bound on the martingale battery", 60.0)
def _c10(quick, seed):
    out, ok = {}, True
    for name, model in martingale_battery(quick, seed):
        ch = model.characteristics()
        worst = math.inf
        for e in (0.25, 1.0):
            top = conc.lambda_max(ch.M, e)
            for lam in np.linspace(top / 8, top, 8):
                chk = conc.expin_check(model, float(lam), e)
                ok &= chk.passed
                worst = min(worst, chk.rhs / chk.lhs)
        out[name] = {"min_rhs_over_lhs": worst}
    return ok, out


def _gue(rng, d, n):
    G = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    return 0.5 * (G + np.conj(np.swapaxes(G, 1, 2))) / math.sqrt(d)


@criterion(11, "Golden-Thompson inequality on random Hermitian pairs", 60.0)
def _c11(quick, seed):
    rng = np.random.default_rng(seed)
    per_dim = 250 if quick else 2500
    out, ok = {}, True
    for d in (2, 4, 8, 16):
        A, B = _gue(rng, d, per_dim), _gue(rng, d, per_dim)
        worst = math.inf
        for a, b in zip(A, B):
            chk = conc.golden_thompson_check(a, b)
            worst = min(worst, (chk.rhs - chk.lhs) / chk.rhs)
            ok &= chk.passed
        # commuting pairs: common eigenbasis
        eq = 0.0
        for _ in range(max(per_dim // 25, 10)):
            Q, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            a = Q @ np.diag(rng.standard_normal(d)) @ Q.conj().T
            b = Q @ np.diag(rng.standard_normal(d)) @ Q.conj().T
            chk = conc.golden_thompson_check(alg.herm(a), alg.herm(b))
            eq = max(eq, abs(chk.rhs - chk.lhs) / chk.rhs)
        ok &= worst >= -1e-10 and eq <= 1e-10
        out[d] = {"min_relative_slack": worst, "commuting_max_rel_gap": eq, "pairs": per_dim}
    return ok, out


# ---------------------------------------------------------------------------
# 12-16: entropy and functional inequalities
# ---------------------------------------------------------------------------


def _random_density(rng, d):
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = G @ G.conj().T
    return alg.herm(rho) / alg.tau(rho).real


def _random_partition(rng, d):
    labels = rng.integers(0, rng.integers(1, d + 1), size=d)
    return [np.flatnonzero(labels == v).tolist() for v in np.unique(labels)]


@criterion(12, "entropy duality, monotonicity and projection entropy", 30.0)
def _c12(quick, seed):
    rng = np.random.default_rng(seed)
    gap, worst_val = 0.0, -math.inf
    for i in range(100):
        d = int(rng.integers(1, 9))
        s = _gue(rng, d, 1)[0] * 2.0
        chk = tr.gibbs_duality_check(s, random_densities=5, seed=seed * 1000 + i)
        gap = max(gap, chk.equality_gap)
        worst_val = max(worst_val, chk.max_random_value - chk.lhs)
    mono = 0
    for _ in range(200):
        d = int(rng.integers(1, 9))
        mono += tr.entropy_monotonicity_check(_random_density(rng, d), _random_partition(rng, d))["holds"]
    proj = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 9))
        k = int(rng.integers(1, d + 1))
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
        e = Q[:, :k] @ Q[:, :k].conj().T
        te = alg.tau(e).real
        proj = max(proj, abs(tr.entropy(e / te) + math.log(te)))
    ok = gap <= 1e-8 and worst_val <= 1e-9 and mono == 200 and proj <= 1e-10
    return ok, {
        "gibbs_max_gap": gap,
        "max_random_minus_lhs": worst_val,
        "monotone_cases": mono,
        "projection_max_error": proj,
    }


def functional_battery():
    """Models and certified curvature constants for the Poincare checks."""
    models = [alg.heisenberg_weyl_algebra(n) for n in (3, 4, 5)]
    models += [alg.walsh_algebra(2, m) for m in (2, 4, 8)]
    models += [alg.cyclic_algebra(n) for n in (3, 5, 8)]
    return [(a, certified_alpha(a)) for a in models]


@criterion(13, "Poincare constants 2 sqrt 2 (self-adjoint) and 4 sqrt 2 (general)", 120.0)
def _c13(quick, seed):
    samples = 50 if quick else 500
    out, ok = {}, True
    for a, al in functional_battery():
        scan = tr.poincare_ratio_scan(a, al, (2, 4, 8), samples, seed)
        out[a.name] = {
            "alpha": al,
            "max_ratio_sa": scan.max_ratio_sa,
            "max_ratio_general": scan.max_ratio_general,
            "pcr2_fitted": scan.pcr2_fitted,
            "parseval_residual": scan.parseval_residual,
        }
        ok &= scan.passed
    return ok, {"models": out, "samples": samples}


@criterion(14, "exponential integrability and two-sided tails", 120.0)
def _c14(quick, seed):
    samples = 50 if quick else 500
    out, ok = {}, True
    for a, al in functional_battery():
        rep = tr.exp_integrability_check(a, al, samples, seed)
        out[a.name] = {
            "alpha": al,
            "min_log_margin_sa": float(rep.min_margin_sa),
            "min_log_margin_general": float(rep.min_margin_general),
            "min_tail_margin": float(rep.min_tail_margin),
        }
        ok &= rep.passed
    return ok, {"models": out, "samples": samples}


@criterion(15, "transportation inequality: two-point exact, sampled models", 120.0)
def _c15(quick, seed):
    two = alg.walsh_algebra(2, 1)
    eps = np.diag([1.0, -1.0]).astype(complex)
    exact = {}
    ok = True
    for r in (-1.0, -0.5, 0.0, 0.25, 0.5, 1.0):
        lb = tr.w1_lower_bound(two, np.eye(2) + r * eps, restarts=4, seed=seed).w1_lb
        exact[r] = lb
        ok &= abs(lb - tr.w1_two_point_exact(r)) <= 1e-9
    chk = tr.transport_check(two, np.eye(2) + eps, 1.0, restarts=4, seed=seed)
    ok &= chk.passed and abs(chk.rhs - math.sqrt(2 * math.log(2))) <= 1e-12
    densities = 10 if quick else 50
    restarts = 8 if quick else 32
    sampled = {}
    for a in (alg.heisenberg_weyl_algebra(2), alg.heisenberg_weyl_algebra(3), alg.cyclic_algebra(4), alg.walsh_algebra(2, 3)):
        c = tr.subgaussian_c_estimate(a, samples=200, seed=seed)
        rng = np.random.default_rng(np.random.SeedSequence([seed, a.size]))
        worst = 0.0
        passes = 0
        for i in range(densities):
            rho = alg.random_density(a, rng)
            t = tr.transport_check(a, rho, 1.2 * c.c_half, restarts=restarts, seed=seed + i)
            passes += t.passed
            worst = max(worst, t.lhs / t.rhs if t.rhs > 0 else 0.0)
        ok &= passes == densities
        sampled[a.name] = {"c_half": c.c_half, "c_full": c.c_full, "max_lhs_over_rhs": worst, "densities": densities}
    return ok, {"two_point_w1": exact, "two_point_r1": {"lhs": chk.lhs, "rhs": chk.rhs}, "models": sampled}


@criterion(16, "product-measure example f = x + y on {-1,1}^2", 1.0)
def _c16(quick, seed):
    coin = ([-1.0, 1.0], [0.5, 0.5])
    rep = tr.product_measure_report([coin, coin], lambda x, y: x + y, t_grid=(1.0, 2.0))
    ok = bool(np.all(rep.gamma_sum == 2.0)) and rep.tails[1] == 0.25
    return ok, rep.to_dict()


@criterion(17, "determinism: identical config and seed give identical files", 60.0)
def _c17(quick, seed):
    import tempfile
    from pathlib import Path

    from .cli import main

    commands = [
        ["curvature", "--group", "zn", "--n", "6"],
        ["deviation", "--model", "rademacher", "--k", "8", "--d", "2"],
        ["poincare", "--model", "mn", "--n", "3", "--samples", "20"],
        ["transport", "--model", "mn", "--n", "2", "--densities", "3", "--restarts", "4", "--samples", "20"],
        ["decompose", "--n", "2"],
    ]
    same = {}
    with tempfile.TemporaryDirectory() as tmp:
        for cmd in commands:
            blobs = []
            for rep in range(2):
                out = Path(tmp) / f"{cmd[0]}-{rep}"
                main(cmd + ["--seed", str(seed), "--out-dir", str(out)], stdout=None)
                blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            same[cmd[0]] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    return all(same.values()), {"identical": same}
