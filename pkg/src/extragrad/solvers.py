"""The extragradient algorithm family.

Deterministic methods: mirror prox, dual extrapolation, the strongly-monotone
variant, an unaccelerated smooth-minimization baseline, the accelerated
primal-dual method and its general-norm cousin.  Randomized: coordinate
acceleration with implicit O(1) iterate maintenance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import Point, TAU_NUM, vdot
from .operators import make_rng, AliasTable


@dataclass
class SolverConfig:
    """Shared solver knobs; per-algorithm defaults are filled by callers."""

    lam: float = 1.0
    m: float = 0.0
    T: int = 100
    K: int = 1
    eps: float = 1e-6
    eps0: float | None = None
    seed: int = 0
    verbose: bool = False


@dataclass
class SolverTrace:
    """Per-iteration records of a single solver run."""

    iterates: list = field(default_factory=list)
    regrets: list = field(default_factory=list)       # <g(w_t), w_t - u>
    divs_to_opt: list = field(default_factory=list)   # V^r_{z_t}(z*) when known
    potentials: list = field(default_factory=list)    # dual-extrapolation Phi_t
    telescope_slack: list = field(default_factory=list)
    f_errors: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.iterates)

    def cum_regret(self):
        return float(np.sum(self.regrets)) if self.regrets else 0.0


class NonFiniteIterateError(RuntimeError):
    pass


def _check_finite(z, t):
    ok = z.finite() if isinstance(z, Point) else bool(np.all(np.isfinite(z)))
    if not ok:
        raise NonFiniteIterateError(f"non-finite iterate at t={t}")


# ---------------------------------------------------------------------------
# Mirror prox and dual extrapolation
# ---------------------------------------------------------------------------


def mirror_prox(g, r, z0, lam, T, u=None, callback=None):
    """Mirror prox: w_t = Prox_{z_t}(g(z_t)/lam), z_{t+1} = Prox_{z_t}(g(w_t)/lam).

    With a comparator u supplied the trace records the instantaneous regret
    <g(w_t), w_t - u> and the telescoping slack
    V_{z_t}(u) - V_{z_{t+1}}(u) - <g(w_t), w_t - u>/lam, which is nonnegative
    up to rounding whenever (g, r) is lam-relatively Lipschitz.
    """
    trace = SolverTrace()
    z = z0
    start = time.perf_counter()
    for t in range(T):
        gz = g(z)
        w = r.prox(z, (1.0 / lam) * gz)
        gw = g(w)
        z_next = r.prox(z, (1.0 / lam) * gw)
        _check_finite(w, t)
        _check_finite(z_next, t)
        trace.iterates.append(w)
        if u is not None:
            regret = vdot(gw, w - u)
            slack = r.divergence(z, u) - r.divergence(z_next, u) - regret / lam
            trace.regrets.append(regret)
            trace.telescope_slack.append(slack)
        if callback is not None:
            callback(t, z, w, z_next)
        trace.wall_ms.append((time.perf_counter() - start) * 1e3)
        z = z_next
    trace.summary = {"algorithm": "mirror-prox", "iterations": T, "lam": lam,
                     "final": z}
    if u is not None:
        trace.summary["regret_bound"] = lam * r.divergence(z0, u)
        trace.summary["cum_regret"] = trace.cum_regret()
    return trace


def dual_extrapolation(g, r, z_bar, lam, T, u=None):
    """Dual extrapolation: lazy mirror prox driven by the dual state s_t.

    The trace records the potential
    Phi_t = (1/lam) sum_{k<t} <g(w_k), w_k - zbar> - <s_t, z_t - zbar> - V_{zbar}(z_t),
    which is nonincreasing in t under relative Lipschitzness.
    """
    trace = SolverTrace()
    s = 0.0 * g(z_bar)  # zero dual state with matching shape
    z = r.prox(z_bar, s)
    regret_vs_base = 0.0
    start = time.perf_counter()
    for t in range(T):
        z = r.prox(z_bar, s)
        gz = g(z)
        w = r.prox(z, (1.0 / lam) * gz)
        gw = g(w)
        _check_finite(w, t)
        s = s + (1.0 / lam) * gw
        z_next = r.prox(z_bar, s)
        phi = (regret_vs_base + vdot(gw, w - z_bar) / lam
               - vdot(s, z_next - z_bar) - r.divergence(z_bar, z_next))
        regret_vs_base += vdot(gw, w - z_bar) / lam
        trace.iterates.append(w)
        trace.potentials.append(phi)
        if u is not None:
            trace.regrets.append(vdot(gw, w - u))
        trace.wall_ms.append((time.perf_counter() - start) * 1e3)
    trace.summary = {"algorithm": "dual-ex", "iterations": T, "lam": lam,
                     "final": z}
    if u is not None:
        trace.summary["regret_bound"] = lam * r.divergence(z_bar, u)
        trace.summary["cum_regret"] = trace.cum_regret()
    return trace


def mirror_prox_sm(g, r, z0, lam, m, T, z_star=None):
    """Strongly-monotone mirror prox with the blended second prox step.

    z_{t+1} minimizes <g(w_t)/lam, z> + V_{z_t}(z) + (m/lam) V_{w_t}(z); the
    regularizer must supply this blended prox in closed form.  When the VI
    solution z* is given, the trace records V_{z_t}(z*), which contracts by
    (1 + m/lam)^{-1} per iteration.
    """
    if not hasattr(r, "blended_prox"):
        raise TypeError("regularizer lacks a closed-form blended prox")
    trace = SolverTrace()
    z = z0
    if z_star is not None:
        trace.divs_to_opt.append(r.divergence(z, z_star))
    start = time.perf_counter()
    for t in range(T):
        w = r.prox(z, (1.0 / lam) * g(z))
        z_next = r.blended_prox(z, w, g(w), lam, m)
        _check_finite(z_next, t)
        trace.iterates.append(w)
        if z_star is not None:
            trace.divs_to_opt.append(r.divergence(z_next, z_star))
        trace.wall_ms.append((time.perf_counter() - start) * 1e3)
        z = z_next
    trace.summary = {"algorithm": "mp-strong", "iterations": T, "lam": lam,
                     "m": m, "final": z}
    if z_star is not None:
        trace.summary["contraction_bound"] = (
            (1.0 + m / lam) ** (-T) * trace.divs_to_opt[0])
        trace.summary["final_div"] = trace.divs_to_opt[-1]
    return trace


# ---------------------------------------------------------------------------
# Smooth minimization
# ---------------------------------------------------------------------------


def baseline_unaccelerated(problem, x0, T):
    """Mirror prox on g = grad f with r = 1/2 ||x0 - .||^2 (1/T rate).

    Mean iterate satisfies f(mean) - f* <= L ||x0 - x*||^2 / (2T).
    """
    L = problem.profile.L
    x0 = np.asarray(x0, dtype=float)
    trace = SolverTrace()
    z = x0.copy()
    acc = np.zeros_like(x0)
    start = time.perf_counter()
    for t in range(T):
        w = z - problem.grad(z) / L
        z = z - problem.grad(w) / L
        _check_finite(z, t)
        acc += w
        trace.iterates.append(w)
        trace.f_errors.append(problem.error(acc / (t + 1)))
        trace.wall_ms.append((time.perf_counter() - start) * 1e3)
    mean = acc / T
    trace.summary = {"algorithm": "baseline", "iterations": T, "final": mean,
                     "f_err": problem.error(mean),
                     "bound": L * float(np.dot(x0 - problem.x_star, x0 - problem.x_star)) / (2 * T)}
    return trace


def eg_accel(problem, x0, eps, eps0=None, collect=None):
    """Accelerated smooth minimization via mirror prox on the Fenchel game.

    Runs K = ceil(log2(eps0/eps)) phases of T = 4*ceil(lam) inner iterations
    with lam = 1 + sqrt(L/mu); each phase halves the function error of the
    averaged half-iterate.  Only gradient queries are issued.
    """
    L, mu = problem.profile.L, problem.profile.mu
    lam = 1.0 + np.sqrt(L / mu)
    T = 4 * int(np.ceil(lam))
    x0 = np.asarray(x0, dtype=float)
    if eps0 is None:
        # one prox-gradient step gives a lower bound on f
        x1 = x0 - problem.grad(x0) / L
        lower = problem.f(x1) - 0.5 / L * float(np.dot(problem.grad(x1), problem.grad(x1)))
        eps0 = max(problem.f(x0) - lower, eps)
    K = max(int(np.ceil(np.log2(eps0 / eps))), 0)
    fast_path = _kernels.USING_NUMBA and getattr(problem, "diag", False)
    x_phase = x0.copy()
    for k in range(K):
        if fast_path:
            x_phase = _kernels.accel_phase_diag(
                problem.M, problem.b, x_phase, mu, lam, T)
        else:
            x = x_phase.copy()
            v = x_phase.copy()
            v_sum = np.zeros_like(x)
            for t in range(T):
                gv = problem.grad(v)
                x_half = x - gv / (mu * lam)
                v_half = v + (x - v) / lam
                v_sum += v_half
                gvh = problem.grad(v_half)
                x = x - gvh / (mu * lam)
                v = v + (x_half - v_half) / lam
            x_phase = v_sum / T
        _check_finite(x_phase, k)
        if collect is not None:
            collect(k, x_phase)
    return x_phase


def general_norm_accel(problem, omega, x0, eps, T=None):
    """Accelerated minimization in a general norm via strongly-monotone mirror prox.

    Solves min_x mu*omega(x) + max_y <y,x> - h*(y) with h = f - mu*omega, using
    r(x, y) = mu*omega(x) + h*(y), m = 1, lam = 1 + sqrt(L/mu).  The dual block
    is maintained implicitly as grad h(v), so only grad h = grad f - mu*grad
    omega queries occur.  omega must supply prox and blended-prox closed forms.
    """
    L, mu = problem.profile.L, problem.profile.mu
    lam = 1.0 + np.sqrt(L / mu)
    m = 1.0
    x0 = np.asarray(x0, dtype=float)
    if T is None:
        err0 = max(problem.error(x0), eps)
        T = int(np.ceil(4 * np.sqrt(L / mu) * np.log(max(2 * L / mu * err0 / eps, np.e))))

    def grad_h(v):
        return problem.grad(v) - mu * omega.grad(v)

    x, v = x0.copy(), x0.copy()
    for t in range(T):
        # w_t = Prox_{z_t}(g(z_t)/lam); y-block prox reduces to a v-space mix
        gx = grad_h(v) + mu * omega.grad(x)
        x_half = omega.prox_scaled(x, gx / lam, mu)
        v_half = (1.0 - 1.0 / lam) * v + x / lam
        # blended second step against w_t
        gx_w = grad_h(v_half) + mu * omega.grad(x_half)
        gy_w = v_half - x_half
        x = omega.blended_prox_scaled(x, x_half, gx_w, lam, m, mu)
        v = (v + (m / lam) * v_half - gy_w / lam) / (1.0 + m / lam)
        _check_finite(x, t)
    return x


class EuclideanOmega:
    """omega(x) = 1/2 ||x||_2^2, the Euclidean instantiation of the general-norm path."""

    def value(self, x):
        return 0.5 * float(np.dot(x, x))

    def grad(self, x):
        return x

    def prox_scaled(self, base, g, mu):
        # argmin_x <g, x> + mu * V^omega_base(x)
        return base - g / mu

    def blended_prox_scaled(self, zt, wt, g, lam, m, mu):
        return (zt + (m / lam) * wt - g / (mu * lam)) / (1.0 + m / lam)


# ---------------------------------------------------------------------------
# Coordinate acceleration with implicit iterates
# ---------------------------------------------------------------------------


@dataclass
class ImplicitIterate:
    """(x_t | v_t) = (p_t | q_t) B_t with B_t a 2x2 matrix.

    One-sparse dual updates then cost O(1): only p_i, q_i move.  B_t is
    refactored to the identity (materializing x, v) when its determinant
    underflows.
    """

    B: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def coord(self, i):
        pi, qi = self.p[i], self.q[i]
        x_i = self.B[0, 0] * pi + self.B[1, 0] * qi
        v_i = self.B[0, 1] * pi + self.B[1, 1] * qi
        return x_i, v_i

    def reconstruct(self):
        x = self.B[0, 0] * self.p + self.B[1, 0] * self.q
        v = self.B[0, 1] * self.p + self.B[1, 1] * self.q
        return x, v

    def refactor(self):
        x, v = self.reconstruct()
        self.p, self.q = x, v
        self.B = np.eye(2)


def eg_coord_accel(problem, x0, eps, eps0=None, seed=0, average_phases=False,
                   shadow=False, det_floor=1e-250):
    """Coordinate-accelerated smooth minimization with shared-randomness estimators.

    Samples coordinate i with p_i ~ sqrt(L_i), takes 1-sparse extragradient
    steps maintained implicitly as (p, q, B), and uses two generalized partial
    derivative queries per inner iteration.  By default each phase runs a
    uniformly random number tau of iterations and restarts from v_tau; with
    ``average_phases`` each phase runs all T iterations and restarts from the
    average of the half-iterates (O(d) extra per step), which is the form the
    halving guarantee is stated for.

    Returns (x, info) with the query count and, in shadow mode, the worst
    relative disagreement between implicit and explicit iterates.
    """
    prof = problem.profile
    if prof.L_i is None:
        raise ValueError("per-coordinate smoothnesses required")
    mu = prof.mu
    lam = 1.0 + prof.s_half / np.sqrt(mu)
    kappa = lam  # the iterate matrix uses the same constant as the step size
    T = 4 * int(np.ceil(lam))
    x0 = np.asarray(x0, dtype=float)
    if eps0 is None:
        eps0 = max(problem.error(x0), eps)
    K = max(int(np.ceil(np.log2(eps0 / eps))), 1)
    p_dist = prof.coord_probabilities()
    alias = AliasTable(p_dist)
    rng = make_rng(seed)
    A = np.array([
        [1.0, 1.0 / kappa - 1.0 / kappa**2],
        [0.0, 1.0 - 1.0 / kappa + 1.0 / kappa**2],
    ])
    state = ImplicitIterate(np.eye(2), x0.copy(), x0.copy())
    queries = 0
    inner_iters = 0
    worst_shadow_err = 0.0
    sx = x0.copy()
    sv = x0.copy()

    for k in range(K):
        tau = int(rng.integers(T)) if not average_phases else T
        v_sum = np.zeros_like(x0) if average_phases else None
        for t in range(tau):
            if average_phases:
                xs, vs = state.reconstruct()
                v_sum += (1.0 - 1.0 / lam) * vs + xs / lam
            i = alias.draw(rng)
            p_i = p_dist[i]
            x_i, v_i = state.coord(i)
            vh_i = (1.0 - 1.0 / lam) * v_i + x_i / lam
            g_v = problem.partial_at(i, v_i)
            g_vh = problem.partial_at(i, vh_i)
            queries += 2
            inner_iters += 1
            s1 = g_vh / (mu * lam * p_i)
            s2 = g_v / (mu * lam**2 * p_i**2)
            B_next = state.B @ A
            det = B_next[0, 0] * B_next[1, 1] - B_next[0, 1] * B_next[1, 0]
            Binv = np.array([
                [B_next[1, 1], -B_next[0, 1]],
                [-B_next[1, 0], B_next[0, 0]],
            ]) / det
            state.B = B_next
            state.p[i] -= s1 * Binv[0, 0] + s2 * Binv[1, 0]
            state.q[i] -= s1 * Binv[0, 1] + s2 * Binv[1, 1]
            if abs(det) < det_floor:
                state.refactor()
            if shadow:
                # explicit simulation of the same step
                svh = (1.0 - 1.0 / lam) * sv + sx / lam
                sx_new = sx.copy()
                sx_new[i] -= g_vh / (mu * lam * p_i)
                sv_new = (1.0 - 1.0 / lam + 1.0 / lam**2) * sv \
                    + (1.0 / lam - 1.0 / lam**2) * sx
                sv_new[i] -= g_v / (mu * lam**2 * p_i**2)
                sx, sv = sx_new, sv_new
                xs, vs = state.reconstruct()
                scale = max(1.0, float(np.max(np.abs(sx))), float(np.max(np.abs(sv))))
                err = max(float(np.max(np.abs(xs - sx))), float(np.max(np.abs(vs - sv)))) / scale
                worst_shadow_err = max(worst_shadow_err, err)
        if average_phases:
            x_next = v_sum / T
        else:
            _, x_next = state.reconstruct()
        state = ImplicitIterate(np.eye(2), x_next.copy(), x_next.copy())
        sx, sv = x_next.copy(), x_next.copy()

    x_final = state.p
    info = {
        "queries": queries,
        "inner_iterations": inner_iters,
        "phases": K,
        "lam": lam,
        "T": T,
        "shadow_err": worst_shadow_err,
    }
    return x_final, info
