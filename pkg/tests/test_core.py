"""Geometry layer: points, feasible sets, divergences, prox maps, conjugates."""

import numpy as np
import pytest

from extragrad import (
    Point, Box, Simplex, Everywhere, ProductSet, DomainError,
    ConjugateOracle, grad_conjugate, ScaledEuclidean, NegativeEntropy,
    ConjugateRegularizer, ProductRegularizer, divergence, prox, make_rng,
)


class TestPoint:
    def test_arithmetic(self):
        a = Point([1.0, 2.0], [3.0])
        b = Point([0.5, 0.5], [1.0])
        s = a + b
        assert np.allclose(s.x, [1.5, 2.5]) and np.allclose(s.y, [4.0])
        d = a - b
        assert np.allclose(d.x, [0.5, 1.5]) and np.allclose(d.y, [2.0])
        assert np.allclose((2.0 * a).x, [2.0, 4.0])
        assert a.dot(b) == pytest.approx(0.5 + 1.0 + 3.0)

    def test_empty_dual_block(self):
        p = Point([1.0, 2.0])
        assert p.m == 0 and p.n == 2
        assert p.dot(p) == pytest.approx(5.0)

    def test_finite_detection(self):
        assert Point([1.0], [2.0]).finite()
        assert not Point([np.inf], [0.0]).finite()
        assert not Point([0.0], [np.nan]).finite()


class TestFeasibleSets:
    def test_box_membership_and_projection(self):
        box = Box([-1.0, -1.0], [1.0, 1.0])
        assert box.contains(np.array([0.5, -0.5]))
        assert not box.contains(np.array([1.5, 0.0]))
        assert np.allclose(box.project(np.array([3.0, -2.0])), [1.0, -1.0])

    def test_box_requires_ordered_bounds(self):
        with pytest.raises(ValueError):
            Box([1.0], [0.0])

    def test_simplex_membership(self):
        s = Simplex(3)
        assert s.contains(np.array([0.2, 0.3, 0.5]))
        assert not s.contains(np.array([0.5, 0.6, 0.5]))
        assert not s.contains(np.array([-0.1, 0.6, 0.5]))

    def test_simplex_renormalize(self):
        s = Simplex(3)
        v = s.renormalize(np.array([1.0, 1.0, 2.0]))
        assert v.sum() == pytest.approx(1.0)
        with pytest.raises(DomainError):
            s.renormalize(np.zeros(3))

    def test_simplex_sample_margin(self):
        s = Simplex(4)
        rng = make_rng(0)
        for _ in range(100):
            p = s.sample(rng, margin=1e-3)
            assert s.contains(p)
            assert np.all(p >= 1e-3 / 4 - 1e-15)

    def test_product_sample(self):
        dom = ProductSet(Box(-np.ones(2), np.ones(2)), Simplex(3))
        rng = make_rng(1)
        z = dom.sample(rng, 0.01)
        assert dom.contains(z)


class TestDivergence:
    def test_scaled_euclidean_value(self):
        # half squared distance between (0,0) and (3,4)
        reg = ScaledEuclidean(1.0)
        assert divergence(reg, np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(12.5)

    def test_entropy_kl_to_uniform(self):
        reg = NegativeEntropy(1.0, dim=2)
        val = divergence(reg, np.array([0.5, 0.5]), np.array([1.0, 0.0]))
        assert val == pytest.approx(np.log(2.0), abs=1e-12)

    def test_dual_divergence_identity(self):
        # f(x) = 1/2 * 2 x^2; V^{f*}_{f'(1)}(f'(3)) equals V^f_3(1) = 4
        oracle = ConjugateOracle(np.array([2.0]))
        reg = ConjugateRegularizer(oracle)
        lhs = divergence(reg, np.array([2.0]), np.array([6.0]))
        x1, x3 = np.array([1.0]), np.array([3.0])
        rhs = oracle.f(x1) - oracle.f(x3) - float(oracle.grad_f(x3) @ (x1 - x3))
        assert lhs == pytest.approx(4.0, abs=1e-12)
        assert rhs == pytest.approx(4.0, abs=1e-12)

    def test_entropy_rejects_zero_base(self):
        reg = NegativeEntropy(1.0, dim=2)
        with pytest.raises(DomainError):
            reg.grad(np.array([0.0, 1.0]))
        with pytest.raises(DomainError):
            divergence(reg, np.array([0.0, 1.0]), np.array([0.5, 0.5]))

    def test_nonfinite_input_rejected(self):
        reg = ScaledEuclidean(1.0)
        with pytest.raises(DomainError):
            divergence(reg, np.array([np.nan]), np.array([0.0]))

    def test_product_sums_blockwise(self):
        reg = ProductRegularizer(ScaledEuclidean(2.0), ScaledEuclidean(1.0))
        a = Point([0.0], [0.0])
        b = Point([1.0], [2.0])
        assert divergence(reg, a, b) == pytest.approx(1.0 + 2.0)

    def test_nonnegativity_sampled(self):
        rng = make_rng(7)
        oracle = ConjugateOracle(np.exp(rng.uniform(0, 2, size=5)))
        regs = [ScaledEuclidean(0.7), ConjugateRegularizer(oracle)]
        for reg in regs:
            for _ in range(200):
                a = rng.standard_normal(5)
                b = rng.standard_normal(5)
                assert divergence(reg, a, b) >= -1e-9

    def test_convexity_in_second_argument_sampled(self):
        reg = NegativeEntropy(1.3, dim=4)
        rng = make_rng(8)
        s = Simplex(4)
        for _ in range(200):
            a = s.sample(rng, 1e-3)
            b = s.sample(rng, 1e-3)
            c = s.sample(rng, 1e-3)
            mid = 0.5 * (b + c)
            assert (reg.divergence(a, mid)
                    <= 0.5 * reg.divergence(a, b) + 0.5 * reg.divergence(a, c) + 1e-9)


class TestProx:
    def test_euclidean_prox(self):
        reg = ScaledEuclidean(1.0)
        out = prox(reg, np.array([1.0, 2.0]), np.array([1.0, 0.0]))
        assert np.allclose(out, [0.0, 2.0])

    def test_entropy_prox_closed_form(self):
        reg = NegativeEntropy(1.0, dim=2)
        out = prox(reg, np.array([0.5, 0.5]), np.array([0.0, np.log(2.0)]))
        assert np.allclose(out, [2.0 / 3.0, 1.0 / 3.0])

    def test_zero_gradient_returns_base(self):
        rng = make_rng(3)
        z = rng.standard_normal(4)
        assert np.allclose(prox(ScaledEuclidean(2.5), z, np.zeros(4)), z)
        s = Simplex(4).sample(rng, 1e-2)
        assert np.allclose(prox(NegativeEntropy(3.0, dim=4), s, np.zeros(4)), s)

    def test_box_constrained_prox(self):
        reg = ScaledEuclidean(1.0, feasible_set=Box([-1.0], [1.0]))
        assert prox(reg, np.array([0.5]), np.array([-3.0]))[0] == pytest.approx(1.0)

    def test_prox_optimality_sampled(self):
        # <g + grad r(w) - grad r(z), u - w> >= 0 for feasible u
        reg = NegativeEntropy(1.0, dim=3)
        rng = make_rng(4)
        s = Simplex(3)
        for _ in range(100):
            z = s.sample(rng, 1e-3)
            g = rng.standard_normal(3)
            w = prox(reg, z, g)
            u = s.sample(rng, 1e-3)
            lhs = float((g + reg.grad(w) - reg.grad(z)) @ (u - w))
            assert lhs >= -1e-9


class TestConjugateOracle:
    def test_identity_quadratic(self):
        oracle = ConjugateOracle(np.eye(2))
        assert np.allclose(grad_conjugate(oracle, np.array([5.0, -1.0])), [5.0, -1.0])

    def test_diagonal_inverse(self):
        oracle = ConjugateOracle(np.array([2.0, 4.0]))
        assert np.allclose(grad_conjugate(oracle, np.array([2.0, 4.0])), [1.0, 1.0])

    def test_gradients_are_inverse_maps(self):
        rng = make_rng(11)
        B = rng.standard_normal((5, 5))
        M = B @ B.T + 5 * np.eye(5)
        oracle = ConjugateOracle(M, rng.standard_normal(5))
        for _ in range(20):
            x = rng.standard_normal(5)
            back = oracle.grad_fstar(oracle.grad_f(x))
            assert np.linalg.norm(back - x) <= 1e-10 * max(1.0, np.linalg.norm(x))

    def test_rejects_indefinite_matrix(self):
        with pytest.raises(ValueError):
            ConjugateOracle(np.array([[1.0, 0.0], [0.0, -1.0]]))
        with pytest.raises(ValueError):
            ConjugateOracle(np.array([1.0, 0.0]))

    def test_fenchel_young_equality(self):
        oracle = ConjugateOracle(np.array([3.0, 7.0]), np.array([1.0, -2.0]))
        rng = make_rng(12)
        for _ in range(50):
            x = rng.standard_normal(2)
            y = oracle.grad_f(x)
            assert oracle.f(x) + oracle.fstar(y) == pytest.approx(float(x @ y), abs=1e-10)


class TestThreePointIdentity:
    @pytest.mark.parametrize("reg,sampler_margin", [
        (ScaledEuclidean(1.7), None),
        (NegativeEntropy(2.0, dim=4), 1e-3),
    ])
    def test_three_point_equality(self, reg, sampler_margin):
        rng = make_rng(21)
        s = Simplex(4)
        for _ in range(200):
            if sampler_margin is None:
                a, b, c = (rng.standard_normal(4) for _ in range(3))
            else:
                a, b, c = (s.sample(rng, sampler_margin) for _ in range(3))
            lhs = float((reg.grad(a) - reg.grad(b)) @ (b - c))
            rhs = reg.divergence(a, c) - reg.divergence(b, c) - reg.divergence(a, b)
            assert lhs == pytest.approx(rhs, abs=1e-9)
