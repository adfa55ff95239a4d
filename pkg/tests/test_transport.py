import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import entropy as shannon

from ncconc import algebra as alg
from ncconc import transport as tr
from ncconc.curvature import sharp_alpha

EPS = np.diag([1.0, -1.0]).astype(complex)


def two_point():
    return alg.walsh_algebra(2, 1)


class TestEntropy:
    def test_diagonal_value(self):
        # tau(rho ln rho) for diag(1.5, 0.5)
        expected = 0.5 * (1.5 * math.log(1.5) + 0.5 * math.log(0.5))
        assert tr.entropy(np.diag([1.5, 0.5])) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.13081, abs=1e-5)

    def test_projection(self):
        # rho = 2e with e a rank-one projection in M_2
        assert tr.entropy(np.diag([2.0, 0.0])) == pytest.approx(math.log(2))

    def test_against_shannon(self):
        # Ent(d p) = ln d - H(p) for a probability vector p
        p = np.array([0.1, 0.2, 0.3, 0.4])
        assert tr.entropy(np.diag(4 * p)) == pytest.approx(math.log(4) - shannon(p))

    def test_unitary_invariance(self):
        rng = np.random.default_rng(0)
        rho = np.diag([0.2, 1.3, 1.5])
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        assert tr.entropy(Q @ rho @ Q.conj().T) == pytest.approx(tr.entropy(rho), abs=1e-12)

    def test_rejects_non_density(self):
        with pytest.raises(ValueError):
            tr.check_density(np.diag([1.0, -0.5]))


class TestDuality:
    @pytest.mark.parametrize("d", [1, 2, 5, 8])
    def test_gibbs_attains_sup(self, d):
        rng = np.random.default_rng(d)
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        chk = tr.gibbs_duality_check(0.5 * (G + G.conj().T), seed=d)
        assert chk.passed
        assert chk.equality_gap <= 1e-8
        assert chk.max_random_value <= chk.lhs + 1e-12

    def test_lhs_closed_form(self):
        sigma = np.diag([0.0, math.log(3.0)])
        assert tr.gibbs_duality_check(sigma).lhs == pytest.approx(math.log(2.0))

    def test_monotonicity(self):
        rho = np.diag([1.8, 0.2, 1.0, 1.0])
        res = tr.entropy_monotonicity_check(rho, [[0, 1], [2, 3]])
        assert res["holds"]
        assert res["ent_E_rho"] == pytest.approx(0.0, abs=1e-15)

    def test_bad_partition(self):
        with pytest.raises(ValueError):
            tr.block_expectation(np.eye(3), [[0, 1]])


class TestWasserstein:
    @pytest.mark.parametrize("r", [-1.0, -0.3, 0.0, 0.5, 1.0])
    def test_two_point_exact(self, r):
        est = tr.w1_lower_bound(two_point(), np.eye(2) + r * EPS, restarts=4)
        assert est.w1_lb == pytest.approx(tr.w1_two_point_exact(r), abs=1e-9)

    def test_witness_is_lipschitz(self):
        est = tr.w1_lower_bound(two_point(), np.eye(2) + 0.5 * EPS, restarts=4)
        assert est.witness.gamma_norm == pytest.approx(1.0)
        assert list(est.history) == sorted(est.history)

    def test_fixed_density(self):
        assert tr.w1_lower_bound(alg.cyclic_algebra(3), np.eye(3)).w1_lb == 0.0

    def test_two_point_domain(self):
        with pytest.raises(ValueError):
            tr.w1_two_point_exact(1.5)

    def test_transport_r1(self):
        # 1 <= sqrt(2 ln 2) with c_half = 1
        chk = tr.transport_check(two_point(), np.eye(2) + EPS, 1.0, restarts=4)
        assert chk.lhs == pytest.approx(1.0, abs=1e-9)
        assert chk.rhs == pytest.approx(math.sqrt(2 * math.log(2)))
        assert chk.passed

    def test_c_half_two_point(self):
        # the sub-Gaussian constant of a fair sign is 1 (cosh t <= e^{t^2/2})
        c = tr.subgaussian_c_estimate(two_point(), samples=20)
        assert c.c_half == pytest.approx(1.0, abs=1e-2)
        assert c.c_half <= 1.0 + 1e-12
        assert c.c_full == pytest.approx(c.c_half / 2)

    def test_lipschitz_normalize(self):
        a = alg.cyclic_algebra(4)
        x = alg.random_element(a, np.random.default_rng(0))
        assert tr.lipschitz_normalize(a, 3.0 * x).gamma_norm == pytest.approx(1.0)
        with pytest.raises(ValueError):
            tr.lipschitz_normalize(a, a.one())


class TestPoincare:
    @pytest.mark.parametrize("params", [("mn", 3, 1), ("zn", 5, 1), ("walsh", 2, 4)])
    def test_scan(self, params):
        a = alg.build_model(*params)
        scan = tr.poincare_ratio_scan(a, sharp_alpha(a.gromov).alpha_star, (2, 4, 8), 20)
        assert scan.passed
        assert scan.max_ratio_sa <= tr.POINCARE_C_SA
        assert scan.parseval_residual <= 1e-10

    def test_exp_integrability(self):
        a = alg.heisenberg_weyl_algebra(3)
        rep = tr.exp_integrability_check(a, 5 / 6, 20)
        assert rep.passed

    def test_constants(self):
        assert tr.POINCARE_C_SA == pytest.approx(2 * math.sqrt(2))
        assert tr.EXPINT_C_SA == pytest.approx(8 * math.e)


class TestProductMeasure:
    def test_sum_of_signs(self):
        coin = ([-1.0, 1.0], [0.5, 0.5])
        rep = tr.product_measure_report([coin, coin], lambda x, y: x + y, t_grid=(2.0,))
        assert np.all(rep.gamma_sum == 2.0)
        assert rep.tails == (0.25,)
        # implied constant -ln(1/4) * 2 / 4
        assert rep.c_hat[0] == pytest.approx(math.log(4) / 2)

    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            tr.product_measure_report([([0.0, 1.0], [0.6, 0.6])], lambda x: x)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_entropy_nonnegative_and_bounded(d, seed):
    # 0 <= Ent(rho) <= ln d for tau(rho) = 1
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = G @ G.conj().T
    rho = d * rho / np.trace(rho).real
    e = tr.entropy(rho)
    assert -1e-12 <= e <= math.log(d) + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_two_point_transport_inequality(r):
    # |r| <= sqrt(2 Ent(1 + r eps)) with c_half = 1
    ent = tr.entropy(np.eye(2) + r * EPS)
    assert abs(r) <= math.sqrt(2 * ent) + 1e-12
