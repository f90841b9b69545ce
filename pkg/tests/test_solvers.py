"""Deterministic solver family: fixed points, hand-simulated steps, certificates."""

import numpy as np
import pytest

from extragrad import (
    Point, ScaledEuclidean, ProductRegularizer, make_rng,
    mirror_prox, dual_extrapolation, mirror_prox_sm, baseline_unaccelerated,
    eg_accel, general_norm_accel, EuclideanOmega, gen_quadratic, gen_minimax,
    lambda_minimax, NonFiniteIterateError,
)

EUCLID_PAIR = ProductRegularizer(ScaledEuclidean(1.0), ScaledEuclidean(1.0))


def rotation_game(z):
    """g(x, y) = (y, -x): the canonical 1-Lipschitz bilinear operator."""
    return Point(z.y, -z.x)


class TestMirrorProx:
    def test_zero_operator_fixed_point(self):
        z0 = Point([1.0, -2.0], [0.5])
        trace = mirror_prox(lambda z: 0.0 * z, EUCLID_PAIR, z0, 1.0, 5)
        for w in trace.iterates:
            assert np.allclose(w.x, z0.x) and np.allclose(w.y, z0.y)

    def test_hand_simulated_rotation_step(self):
        z0 = Point([1.0], [1.0])
        trace = mirror_prox(rotation_game, EUCLID_PAIR, z0, 1.0, 1)
        w0 = trace.iterates[0]
        z1 = trace.summary["final"]
        assert np.allclose(w0.x, [0.0]) and np.allclose(w0.y, [2.0])
        assert np.allclose(z1.x, [-1.0]) and np.allclose(z1.y, [1.0])

    def test_regret_certificate_bilinear(self):
        rng = make_rng(0)
        for _ in range(10):
            C = rng.standard_normal((2, 2))
            lam = float(np.linalg.svd(C, compute_uv=False)[0])

            def g(z, C=C):
                return Point(C @ z.y, -C.T @ z.x)

            z0 = Point(rng.standard_normal(2), rng.standard_normal(2))
            u = Point(np.zeros(2), np.zeros(2))  # equilibrium of the pure bilinear game
            T = 50
            trace = mirror_prox(g, EUCLID_PAIR, z0, lam, T, u=u)
            assert trace.cum_regret() <= trace.summary["regret_bound"] + T * 1e-9

    def test_telescoping_slack_nonnegative(self):
        z0 = Point([1.0, 0.3], [-0.4, 0.2])
        u = Point(np.zeros(2), np.zeros(2))
        trace = mirror_prox(rotation_game, EUCLID_PAIR, z0, 1.0, 40, u=u)
        assert min(trace.telescope_slack) >= -1e-9

    def test_nonfinite_iterate_aborts(self):
        def blowup(z):
            return Point([np.nan], [np.nan])

        with pytest.raises(NonFiniteIterateError):
            mirror_prox(blowup, EUCLID_PAIR, Point([1.0], [1.0]), 1.0, 3)


class TestDualExtrapolation:
    def test_zero_operator_stays_at_base(self):
        z_bar = Point([0.7], [-0.1])
        trace = dual_extrapolation(lambda z: 0.0 * z, EUCLID_PAIR, z_bar, 1.0, 5)
        for w in trace.iterates:
            assert np.allclose(w.x, z_bar.x) and np.allclose(w.y, z_bar.y)

    def test_potential_nonincreasing(self):
        rng = make_rng(1)
        z_bar = Point(rng.standard_normal(3), rng.standard_normal(3))
        trace = dual_extrapolation(rotation_game, EUCLID_PAIR, z_bar, 1.0, 100,
                                   u=Point(np.zeros(3), np.zeros(3)))
        pots = np.array(trace.potentials)
        assert np.all(np.diff(pots) <= 1e-9)
        assert trace.cum_regret() <= trace.summary["regret_bound"] + 100 * 1e-9


class TestStronglyMonotone:
    def test_identity_operator_halves(self):
        # g(z) = z, m = lam = 1: w0 = z0/2... the second step is the blended prox
        r = ScaledEuclidean(1.0)
        z0 = np.array([1.0])
        trace = mirror_prox_sm(lambda z: z, r, z0, 1.0, 1.0, 1, z_star=np.zeros(1))
        # z1 = (z0 + w0 - g(w0)) / 2 with w0 = z0 - z0 = 0
        assert np.allclose(trace.summary["final"], [0.5])

    def test_solution_is_fixed_point(self):
        inst = gen_minimax(4, 3, 1.0, 1.0, 2.0, seed=2)
        r = ProductRegularizer(ScaledEuclidean(1.0), ScaledEuclidean(1.0))
        z_star = inst.saddle_point()
        lam = lambda_minimax(inst.profile)
        trace = mirror_prox_sm(inst.operator, r, z_star, lam, 1.0, 10, z_star=z_star)
        assert trace.divs_to_opt[-1] < 1e-20

    def test_contraction_on_minimax(self):
        inst = gen_minimax(5, 4, 1.0, 2.0, 3.0, seed=3)
        r = ProductRegularizer(ScaledEuclidean(1.0), ScaledEuclidean(2.0))
        lam = lambda_minimax(inst.profile)
        z0 = Point(np.ones(5), np.ones(4))
        T = 60
        trace = mirror_prox_sm(inst.operator, r, z0, lam, 1.0, T,
                               z_star=inst.saddle_point())
        rate = 1.0 / (1.0 + 1.0 / lam)
        divs = trace.divs_to_opt
        for t in range(T):
            assert divs[t + 1] <= rate * divs[t] * (1 + 1e-9) + 1e-15

    def test_requires_blended_prox(self):
        class NoBlend:
            def prox(self, z, g):
                return z

            def divergence(self, a, b):
                return 0.0

        with pytest.raises(TypeError):
            mirror_prox_sm(lambda z: z, NoBlend(), np.zeros(1), 1.0, 1.0, 1)


class TestBaseline:
    def test_starts_at_optimum(self):
        prob = gen_quadratic(5, 1.0, 4.0, diag=True, seed=4)
        trace = baseline_unaccelerated(prob, prob.x_star.copy(), 10)
        assert max(trace.f_errors) < 1e-20

    def test_scalar_bound(self):
        prob = gen_quadratic(1, 1.0, 1.0, diag=True, seed=0)
        prob.b[:] = 0.0
        prob.x_star = np.zeros(1)
        prob.f_star = 0.0
        trace = baseline_unaccelerated(prob, np.ones(1), 10)
        assert trace.summary["f_err"] <= 1.0 / 20.0 + 1e-9

    def test_bound_holds_random_quadratic(self):
        prob = gen_quadratic(20, 1.0, 50.0, diag=False, seed=5)
        for T in (1, 10, 100):
            trace = baseline_unaccelerated(prob, np.zeros(20), T)
            assert trace.summary["f_err"] <= trace.summary["bound"] + 1e-9


class TestEgAccel:
    def test_starts_at_optimum(self):
        prob = gen_quadratic(5, 1.0, 9.0, diag=True, seed=6)
        x = eg_accel(prob, prob.x_star.copy(), 1e-10, eps0=1.0)
        assert np.allclose(x, prob.x_star, atol=1e-9)

    def test_scalar_quadratic(self):
        prob = gen_quadratic(1, 1.0, 1.0, diag=True, seed=0)
        prob.b[:] = 0.0
        prob.x_star = np.zeros(1)
        prob.f_star = 0.0
        x = eg_accel(prob, np.ones(1), 1e-6, eps0=0.5)
        assert abs(x[0]) <= 1e-3

    def test_phase_halving(self):
        prob = gen_quadratic(30, 1.0, 100.0, diag=False, seed=7)
        errs = []
        eg_accel(prob, np.zeros(30), 1e-8,
                 eps0=prob.error(np.zeros(30)),
                 collect=lambda k, x: errs.append(prob.error(x)))
        prev = prob.error(np.zeros(30))
        for e in errs:
            assert e <= 0.5 * prev * (1 + 1e-9) + 1e-12
            prev = e

    def test_default_eps0_is_honest(self):
        prob = gen_quadratic(10, 1.0, 30.0, diag=True, seed=8)
        x = eg_accel(prob, np.zeros(10), 1e-9)
        assert prob.error(x) <= 1e-9


class TestGeneralNorm:
    def test_starts_at_optimum(self):
        prob = gen_quadratic(6, 1.0, 25.0, diag=True, seed=9)
        x = general_norm_accel(prob, EuclideanOmega(), prob.x_star.copy(), 1e-8)
        assert prob.error(x) <= 1e-8

    def test_reaches_target_within_theorem_iterations(self):
        prob = gen_quadratic(12, 1.0, 25.0, diag=False, seed=10)
        eps = 1e-6
        L, mu = prob.profile.L, prob.profile.mu
        err0 = prob.error(np.zeros(12))
        T = int(np.ceil(4 * np.sqrt(L / mu) * np.log(2 * L / mu * err0 / eps)))
        x = general_norm_accel(prob, EuclideanOmega(), np.zeros(12), eps, T=T)
        assert prob.error(x) <= eps

    def test_matches_euclidean_path_rate(self):
        prob = gen_quadratic(8, 1.0, 16.0, diag=True, seed=11)
        x = general_norm_accel(prob, EuclideanOmega(), np.zeros(8), 1e-10)
        assert prob.error(x) <= 1e-10
