import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from ncconc import algebra as alg

MODELS = [
    ("zn", 5, 1),
    ("heisenberg", 2, 1),
    ("mn", 3, 1),
    ("walsh", 2, 3),
    ("walsh", 3, 2),
]


@pytest.fixture(params=MODELS, ids=lambda p: f"{p[0]}-{p[1]}-{p[2]}")
def model(request):
    return alg.build_model(*request.param)


class TestModels:
    def test_fourier_roundtrip(self, model):
        rng = np.random.default_rng(0)
        x = alg.random_element(model, rng, self_adjoint=False)
        assert np.allclose(model.synthesize(model.fourier(x)), x, atol=1e-12)

    def test_basis_orthonormal(self, model):
        W = [model.basis_element(g) for g in range(model.size)]
        G = np.array([[alg.tau(a.conj().T @ b) for b in W] for a in W])
        assert np.allclose(G, np.eye(model.size), atol=1e-12)

    def test_identity_mode(self, model):
        assert model.multipliers[model.identity_index] == 0.0
        assert np.allclose(model.basis_element(model.identity_index), model.one())

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            alg.build_model("sphere")


class TestWeyl:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_commutation(self, n):
        a = alg.heisenberg_weyl_algebra(n)
        w = np.exp(2j * np.pi / n)
        for k in range(n):
            for l in range(n):
                uk, vl = a.u[k], a.v[l]
                assert np.allclose(uk @ vl, w ** (k * l) * vl @ uk)

    def test_spans_full_matrix_algebra(self):
        a = alg.heisenberg_weyl_algebra(3)
        M = np.array([a.basis_element(g).ravel() for g in range(9)])
        assert np.linalg.matrix_rank(M) == 9


class TestCyclicFourier:
    def test_matches_numpy_fft(self):
        # lambda(k) on Z_n is the shift; its eigenvalues are the n-th roots
        n = 6
        a = alg.cyclic_algebra(n)
        S = a.basis_element(1)
        ev = np.sort(np.angle(np.linalg.eigvals(S)) % (2 * np.pi))
        expected = np.sort(np.angle(np.fft.fft(np.eye(n)[1])) % (2 * np.pi))
        assert np.allclose(ev, expected, atol=1e-9)


class TestSemigroup:
    def test_semigroup_is_exponential_of_generator(self, model):
        # independent route: matrix exponential of the generator in Fourier space
        rng = np.random.default_rng(1)
        x = alg.random_element(model, rng, self_adjoint=False)
        t = 0.7
        c = model.fourier(x)
        L = -np.diag(model.multipliers)
        expected = model.synthesize(expm(t * L) @ c)
        assert np.allclose(alg.semigroup_apply(model, x, t), expected, atol=1e-12)

    def test_negative_time(self, model):
        with pytest.raises(ValueError):
            alg.semigroup_apply(model, model.one(), -0.1)

    def test_generator_derivative(self, model):
        rng = np.random.default_rng(2)
        x = alg.random_element(model, rng, self_adjoint=False)
        h = 1e-6
        fd = (alg.semigroup_apply(model, x, h) - x) / h
        assert np.allclose(fd, -alg.generator_apply(model, x), atol=1e-5)

    def test_fixed_point_projection(self, model):
        rng = np.random.default_rng(3)
        x = alg.random_element(model, rng, self_adjoint=False)
        p = alg.fixed_point_project(model, x)
        assert np.allclose(alg.semigroup_apply(model, p, 5.0), p, atol=1e-12)
        assert np.allclose(alg.fixed_point_project(model, p), p)

    @pytest.mark.parametrize("t", [0.0, 0.1, 1.0])
    def test_choi(self, model, t):
        assert alg.cp_choi_check(model, t).is_cp

    def test_choi_detects_transpose(self):
        C = alg.choi_matrix(lambda X: X.T, 2)
        assert np.linalg.eigvalsh(C)[0] < -0.5


class TestGamma:
    def test_carre_du_champ_definition(self, model):
        # 2 Gamma(x, y) = A(x*) y + x* A(y) - A(x* y)
        rng = np.random.default_rng(4)
        x = alg.random_element(model, rng, self_adjoint=False)
        y = alg.random_element(model, rng, self_adjoint=False)
        A = lambda z: alg.generator_apply(model, z)  # noqa: E731
        xs = x.conj().T
        expected = 0.5 * (A(xs) @ y + xs @ A(y) - A(xs @ y))
        assert np.allclose(alg.gamma(model, x, y), expected, atol=1e-12)

    def test_routes_agree(self, model):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = alg.random_element(model, rng, self_adjoint=False, normalize=False)
            y = alg.random_element(model, rng, self_adjoint=False, normalize=False)
            p, q = alg.gamma_forms(model, x, y), alg.gamma_forms_gromov(model, x, y)
            assert np.allclose(p.gamma, q.gamma, atol=1e-9)
            assert np.allclose(p.gamma2, q.gamma2, atol=1e-9)

    def test_gamma_positive(self, model):
        rng = np.random.default_rng(6)
        x = alg.random_element(model, rng, self_adjoint=False)
        assert alg.eigvalsh(alg.gamma(model, x))[0] >= -1e-12

    def test_gamma_vanishes_on_fixed_points(self, model):
        assert np.allclose(alg.gamma(model, model.one()), 0)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_mn_curvature(self, n):
        a = alg.heisenberg_weyl_algebra(n)
        rng = np.random.default_rng(n)
        al = (n + 2) / (2 * n)
        for _ in range(30):
            x = alg.random_element(a, rng)
            D = alg.gamma2(a, x) - al * alg.gamma(a, x)
            assert alg.eigvalsh(D)[0] >= -1e-9
            assert alg.semigroup_decay_check(a, al, x, (0.1, 1.0)).min_margin >= -1e-9

    def test_walsh_gradient(self):
        assert alg.walsh_gradient_check(5, samples=20)["max_residual"] <= 1e-9

    def test_walsh_single_coordinate(self):
        # f = x_1 has |grad f|^2 = 1 everywhere
        pts = np.array([[1 - 2 * ((i >> 2) & 1)] for i in range(8)], dtype=float)
        res = alg.walsh_gradient_check(3, functions=[pts[:, 0]])
        assert res["max_residual"] <= 1e-12
        a = alg.walsh_algebra(2, 3)
        assert np.allclose(alg.gamma(a, np.diag(pts[:, 0]).astype(complex)), np.eye(8))


class TestSpectral:
    def test_prob_tail(self):
        x = np.diag([0.5, 1.0, 2.0, 2.0])
        assert alg.prob_tail(x, 1.0) == 0.75
        assert alg.prob_tail(x, 2.0) == 0.5
        assert alg.prob_tail(x, 2.5) == 0.0

    def test_prob_tail_rejects_non_selfadjoint(self):
        with pytest.raises(ValueError):
            alg.prob_tail(np.array([[0, 1], [0, 0]], dtype=complex), 0.5)

    def test_layer_cake(self):
        # ||x||_p^p = int_0^inf p t^(p-1) Prob(|x| >= t) dt
        x = np.diag([0.5, 1.0, 2.0])
        p = 3
        val, _ = quad(lambda t: p * t ** (p - 1) * alg.prob_tail(x, t), 0, 3, points=[0.5, 1.0, 2.0])
        assert val == pytest.approx(alg.pnorm(x, p) ** p, rel=1e-8)
        assert alg.pnorm(x, p) ** p == pytest.approx((0.125 + 1 + 8) / 3)

    def test_func_calculus(self):
        rng = np.random.default_rng(0)
        G = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = alg.herm(G)
        assert np.allclose(alg.func_calculus(h, np.exp), expm(h))

    def test_random_density(self, model):
        rho = alg.random_density(model, np.random.default_rng(0))
        assert alg.tau(rho).real == pytest.approx(1.0)
        assert alg.eigvalsh(rho)[0] >= -1e-12


class TestDecompose:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_blocks(self, n):
        dec = alg.heisenberg_decompose(n)
        assert dec.block_dims == (n * n,) * n
        assert dec.total_dim == n**3
        assert dec.m0_commutative
        assert dec.m1_full_matrix
        assert dec.m1_center_dim == 1
        assert dec.invariance_mass <= 1e-9

    def test_range(self):
        with pytest.raises(ValueError):
            alg.heisenberg_decompose(1)


class TestSerialization:
    def test_element_roundtrip(self):
        x = np.array([[1 + 2j, 0], [3, -1j]])
        assert np.array_equal(alg.element_from_json(alg.element_to_json(x)), x)

    def test_descriptor(self):
        import json

        d = json.loads(alg.descriptor_json(alg.cyclic_algebra(3)))
        assert d["multipliers"] == [0.0, 1.0, 1.0]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(MODELS), st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.integers(0, 2**31))
def test_semigroup_law(params, s, t, seed):
    a = alg.build_model(*params)
    x = alg.random_element(a, np.random.default_rng(seed), self_adjoint=False)
    lhs = alg.semigroup_apply(a, alg.semigroup_apply(a, x, s), t)
    assert np.allclose(lhs, alg.semigroup_apply(a, x, s + t), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(MODELS), st.floats(0.0, 3.0), st.integers(0, 2**31))
def test_semigroup_contracts_norms(params, t, seed):
    a = alg.build_model(*params)
    x = alg.random_element(a, np.random.default_rng(seed), self_adjoint=False)
    tx = alg.semigroup_apply(a, x, t)
    for p in (1, 2, 4, math.inf):
        assert alg.pnorm(tx, p) <= alg.pnorm(x, p) + 1e-12
