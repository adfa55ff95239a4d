import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ncconc import concentration as conc


def coin_model(K=4, a=0.5):
    return conc.rademacher_matrix_model([np.array([[a]])] * K)


def brute_force_tail(As, t):
    """Independent enumeration over sign patterns with dense eigensolves."""
    total = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=len(As)):
        X = sum(s * A for s, A in zip(signs, As))
        total += np.mean(np.linalg.eigvalsh(X) >= t - 1e-12)
    return total / 2 ** len(As)


class TestCharacteristics:
    def test_coin(self):
        ch = coin_model().characteristics()
        assert ch.D2 == pytest.approx(1.0)
        assert ch.M == pytest.approx(0.5)
        assert ch.exact

    def test_random_model_normalized(self):
        m = conc.random_rademacher_model(6, 3, np.random.default_rng(0))
        assert m.characteristics().D2 == pytest.approx(1.0)

    def test_walsh_sum(self):
        # f = sum x_j / 3 on {-1,1}^9: D2 = 9/9 = 1, M = 1/3
        m = conc.walsh_function_model(lambda x: x.sum(axis=1) / 3.0, m=9)
        ch = m.characteristics()
        assert ch.D2 == pytest.approx(1.0)
        assert ch.M == pytest.approx(1 / 3)

    @pytest.mark.parametrize("m", [2, 5])
    def test_walsh_martingale_property(self, m):
        rng = np.random.default_rng(m)
        model = conc.walsh_function_model(rng.standard_normal(1 << m), m=m)
        assert model.martingale_residual() <= 1e-12

    def test_walsh_differences_sum_to_centered_f(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal(8)
        model = conc.walsh_function_model(f, m=3)
        total = sum(d.reshape(-1) for d in model.differences())
        assert np.allclose(total, f - f.mean())

    def test_enumeration_limits(self):
        with pytest.raises(conc.NotEnumerableError):
            conc.rademacher_matrix_model([np.eye(2)] * 21).final_spectrum()


class TestExact:
    def test_coin_tail(self):
        # P(sum of 4 signs / 2 >= 1) = P(at least 3 heads) = 5/16
        assert conc.exact_tail(coin_model(), 1.0) == pytest.approx(5 / 16, abs=1e-15)

    def test_tail_matches_brute_force(self):
        rng = np.random.default_rng(3)
        model = conc.random_rademacher_model(5, 3, rng)
        for t in (0.0, 0.5, 1.0, 1.7):
            assert conc.exact_tail(model, t) == pytest.approx(brute_force_tail(model.As, t), abs=1e-12)

    def test_moment(self):
        # ||x||_2 = sqrt(D2) for a scalar Rademacher sum
        assert conc.exact_moment(coin_model(), 2) == pytest.approx(1.0)

    def test_expin_value(self):
        chk = conc.expin_check(coin_model(), 1.0, 1.0)
        assert chk.lhs == pytest.approx(math.cosh(0.5) ** 4, rel=1e-12)
        assert chk.rhs == pytest.approx(math.exp(2.0))
        assert chk.passed

    def test_expin_range(self):
        with pytest.raises(ValueError):
            conc.expin_check(coin_model(), 1.5, 1.0)


class TestBounds:
    def test_fman_gaussian_limit(self):
        # M = 0, t = sqrt(3), D2 = 1, eps = 1: exp(-3/8)
        assert conc.fman_bound(math.sqrt(3), 1.0, 0.0, 1.0) == pytest.approx(math.exp(-0.375))

    def test_fman_value(self):
        # t = 1, D2 = 1, M = 1, eps = 1: first term 1/12, second 1/36
        assert conc.fman_bound(1.0, 1.0, 1.0, 1.0) == pytest.approx(math.exp(-1 / 12 - 1 / 36))

    def test_fman_at_zero(self):
        assert conc.fman_bound(0.0, 1.0, 0.5, 0.3) == 1.0

    @pytest.mark.parametrize("eps", [0.0, 1.5])
    def test_eps_domain(self, eps):
        with pytest.raises(ValueError):
            conc.fman_bound(1.0, 1.0, 1.0, eps)

    @pytest.mark.parametrize(
        "M,expected",
        [(0.0, 4 * math.sqrt(2)), (1.0, 4 * math.sqrt(2) + 16 * math.sqrt(2))],
    )
    def test_pmom(self, M, expected):
        # p = 2, D2 = 1, eps = 1
        assert conc.pmom_bound(2, 1.0, M, 1.0) == pytest.approx(expected)

    def test_best_over_eps(self):
        b, e = conc.best_over_eps(2.0, 1.0, 0.5)
        assert b == min(conc.fman_bound(2.0, 1.0, 0.5, x) for x in conc.EPS_GRID)
        assert e in conc.EPS_GRID

    def test_lambda_max(self):
        assert conc.lambda_max(0.5, 1.0) == pytest.approx(1.0)
        assert math.isinf(conc.lambda_max(0.0, 1.0))


class TestMonteCarlo:
    def test_agrees_with_exact(self):
        model = coin_model()
        mc = conc.mc_tail(model, 1.0, 20000, seed=1)
        assert abs(mc.estimate - 5 / 16) <= 4 * mc.std_err

    def test_deterministic(self):
        model = conc.random_rademacher_model(6, 2, np.random.default_rng(0))
        a = conc.mc_tail(model, 0.5, 3000, seed=9)
        b = conc.mc_tail(model, 0.5, 3000, seed=9)
        assert a == b

    def test_prefix_stable(self):
        # the first block does not depend on the total trial count
        model = coin_model()
        small = conc.mc_tail(model, 1.0, conc.MC_BLOCK, seed=4)
        big = conc.mc_tail(model, 1.0, 2 * conc.MC_BLOCK, seed=4)
        rng = np.random.default_rng(np.random.SeedSequence([4, 0]))
        first = (model.sample_final(rng, conc.MC_BLOCK) >= 1.0 - 1e-12).mean()
        assert small.estimate == pytest.approx(first)
        assert big.trials == 2 * conc.MC_BLOCK


class TestGoldenThompson:
    def test_commuting_equality(self):
        a, b = np.diag([0.1, -0.4, 2.0]), np.diag([1.0, 0.3, -1.0])
        chk = conc.golden_thompson_check(a, b)
        assert chk.lhs == pytest.approx(chk.rhs, rel=1e-12)

    def test_against_expm(self):
        rng = np.random.default_rng(0)
        G = rng.standard_normal((2, 4, 4)) + 1j * rng.standard_normal((2, 4, 4))
        a, b = [0.5 * (g + g.conj().T) for g in G]
        chk = conc.golden_thompson_check(a, b)
        assert chk.lhs == pytest.approx(np.trace(expm(a + b)).real / 4)
        assert chk.rhs == pytest.approx(np.trace(expm(a) @ expm(b)).real / 4)
        assert chk.passed

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            conc.golden_thompson_check(np.array([[0, 1], [0, 0]]), np.eye(2))


class TestDeviationReport:
    def test_rademacher_example(self):
        model = conc.random_rademacher_model(10, 4, np.random.default_rng(7))
        rep = conc.deviation_report(model, [0.0, 0.5, 1.0, 2.0, 3.0])
        assert rep.passed
        assert rep.summary["min_slack"] >= 0
        lines = rep.to_csv().splitlines()
        assert lines[0] == "t,eps,bound,tail,std_err,slack"
        assert len(lines) == 1 + 5 * len(conc.EPS_GRID)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 5), st.floats(0.01, 3), st.floats(0.0, 2), st.floats(0.01, 1.0))
def test_fman_decreasing_in_t(t, D2, M, eps):
    assert conc.fman_bound(t * 1.1, D2, M, eps) <= conc.fman_bound(t, D2, M, eps) + 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(1, 3), st.integers(0, 2**31), st.floats(0.0, 3.0))
def test_tail_dominated(K, d, seed, t):
    model = conc.random_rademacher_model(K, d, np.random.default_rng(seed))
    ch = model.characteristics()
    tail = conc.exact_tail(model, t)
    assert tail <= conc.best_over_eps(t, ch.D2, ch.M)[0] + 1e-12
