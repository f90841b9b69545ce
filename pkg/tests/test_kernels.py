"""Jitted kernels against their pure-numpy fallbacks."""

import numpy as np
import pytest
import scipy.sparse as sp

from extragrad import (
    Point, make_rng, gen_box_simplex, gen_quadratic, solve_box_simplex,
    eg_accel, ShermanRegularizer, AlternatingProxConfig,
)
from extragrad import _kernels


class TestCsrMatvec:
    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        A = sp.random(40, 30, density=0.2, random_state=1, format="csr")
        v = rng.standard_normal(30)
        out = _kernels.csr_matvec(A.indptr, A.indices, A.data, v)
        assert np.allclose(out, A @ v, atol=1e-14)

    def test_empty_rows(self):
        A = sp.csr_matrix((3, 2))
        out = _kernels.csr_matvec(A.indptr, A.indices, A.data, np.ones(2))
        assert np.array_equal(out, np.zeros(3))


class TestShermanAlternating:
    def test_matches_numpy_fallback(self):
        inst = gen_box_simplex(7, 6, 0.6, seed=2)
        reg = ShermanRegularizer(inst)
        rng = make_rng(3)
        z = Point(rng.uniform(-0.9, 0.9, 6),
                  np.full(7, 1.0 / 7.0))
        g = Point(0.3 * rng.standard_normal(6), 0.3 * rng.standard_normal(7))
        tol = AlternatingProxConfig().resolve_tol(inst.op_norm)
        kx, ky, k_rounds, _, k_gamma = _kernels.sherman_alternating(
            inst.abs_A.indptr, inst.abs_A.indices, inst.abs_A.data,
            reg._at_indptr, reg._at_indices, reg._at_data,
            g.x, g.y, z.x, z.y, reg.alpha, 32, tol)
        px, py, p_rounds, _, p_gamma = reg._prox_numpy(z, g, tol)
        assert np.allclose(kx, px, atol=1e-12)
        assert np.allclose(ky, py, atol=1e-12)
        assert k_rounds == p_rounds
        assert k_gamma == pytest.approx(p_gamma, rel=1e-10)


class TestSolverParity:
    def test_box_simplex_paths_agree(self, monkeypatch):
        inst = gen_box_simplex(10, 8, 0.5, seed=4)
        eps = 0.05 * inst.op_norm
        fx, fy, fgap, ftrace = solve_box_simplex(inst, eps, certify=True)
        monkeypatch.setattr(_kernels, "USING_NUMBA", False)
        sx, sy, sgap, strace = solve_box_simplex(inst, eps, certify=True)
        assert np.allclose(fx, sx, atol=1e-9)
        assert np.allclose(fy, sy, atol=1e-9)
        assert fgap == pytest.approx(sgap, rel=1e-8, abs=1e-12)
        assert (ftrace.summary["stability_ok"] == strace.summary["stability_ok"])
        assert (ftrace.summary["local_rl_ok"] == strace.summary["local_rl_ok"])
        assert ftrace.summary["iterations"] == strace.summary["iterations"]

    def test_accel_phase_paths_agree(self, monkeypatch):
        prob = gen_quadratic(40, 1.0, 100.0, diag=True, seed=5)
        x0 = np.zeros(40)
        x_fast = eg_accel(prob, x0, 1e-8, eps0=1.0)
        monkeypatch.setattr(_kernels, "USING_NUMBA", False)
        x_slow = eg_accel(prob, x0, 1e-8, eps0=1.0)
        scale = max(1.0, float(np.abs(x_slow).max()))
        assert np.allclose(x_fast, x_slow, atol=1e-10 * scale)

    def test_flag_reflects_environment(self):
        import os
        expect = os.environ.get("EXTRAGRAD_DISABLE_NUMBA", "") == ""
        assert _kernels.USING_NUMBA == expect


class TestAccelPhaseKernel:
    def test_averaged_half_iterate_definition(self):
        # replay the kernel's recurrence in plain python and compare
        rng = make_rng(6)
        M = rng.uniform(1.0, 5.0, 8)
        b = rng.standard_normal(8)
        x0 = rng.standard_normal(8)
        mu, lam, T = 1.0, 3.0, 25
        out = _kernels.accel_phase_diag(M, b, x0, mu, lam, T)
        x, v = x0.copy(), x0.copy()
        v_sum = np.zeros(8)
        for _ in range(T):
            gv = M * v + b
            xh = x - gv / (mu * lam)
            vh = v + (x - v) / lam
            v_sum += vh
            gvh = M * vh + b
            x = x - gvh / (mu * lam)
            v = v + (xh - vh) / lam
        assert np.allclose(out, v_sum / T, atol=1e-14)
