"""Numerical certification of the defining inequalities.

Sampling can only falsify a constant or accumulate evidence for it, so every
report labels a pass as "no violation in N samples".  Reports are
deterministic under a fixed (seed, N).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import Point, TAU_NUM
from .operators import make_rng

TAU_REL_RATIO = 1e-6  # relative slack on ratio comparisons
SIMPLEX_MARGIN = 1e-3  # keep entropy gradients finite


@dataclass
class TripleSampler:
    """Draws feasible points (with interior margin) for inequality checks."""

    domain: object  # any FeasibleSet, including ProductSet
    count: int = 1000
    seed: int = 0
    margin: float = SIMPLEX_MARGIN

    def points(self, per_draw=3):
        rng = make_rng(self.seed)
        for _ in range(self.count):
            yield tuple(self.domain.sample(rng, self.margin) for _ in range(per_draw))


@dataclass
class CertificateReport:
    inequality: str
    constant: float
    n_tested: int
    worst: float            # worst ratio (or violation margin)
    witness: tuple = ()
    passed: bool = False
    n_skipped: int = 0
    details: dict = field(default_factory=dict)

    def save(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(f"inequality={self.inequality}\n")
            fh.write(f"constant={float(self.constant)!r}\n")
            fh.write(f"n_tested={self.n_tested}\n")
            fh.write(f"n_skipped={self.n_skipped}\n")
            fh.write(f"worst={float(self.worst)!r}\n")
            fh.write(f"passed={int(self.passed)}\n")
            for k, v in self.details.items():
                fh.write(f"{k}={v}\n")
        with open(path + ".witness.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["role", "block", "values"])
            for role, pt in zip(("z", "w", "u"), self.witness):
                if isinstance(pt, Point):
                    writer.writerow([role, "x"] + [repr(v) for v in pt.x])
                    writer.writerow([role, "y"] + [repr(v) for v in pt.y])
                else:
                    writer.writerow([role, "x"] + [repr(v) for v in np.atleast_1d(pt)])


def _sub(a, b):
    return a - b


def _dot(a, b):
    if isinstance(a, Point):
        return a.dot(b)
    return float(np.dot(a, b))


def check_relative_lipschitzness(g, r, lam, sampler: TripleSampler) -> CertificateReport:
    """Worst sampled ratio of <g(w)-g(z), w-u> to V_z(w) + V_w(u).

    Passes when no triple exceeds lam up to relative slack.  Triples with a
    vanishing denominator are skipped unless the numerator is itself
    non-negligible, which counts as an outright violation.
    """
    worst = -np.inf
    witness = ()
    skipped = 0
    violated = False
    n = 0
    for z, w, u in sampler.points():
        n += 1
        num = _dot(_sub(g(w), g(z)), _sub(w, u))
        den = r.divergence(z, w) + r.divergence(w, u)
        if den < TAU_NUM:
            if num > TAU_NUM:
                violated = True
                worst = np.inf
                witness = (z, w, u)
                break
            skipped += 1
            continue
        ratio = num / den
        if ratio > worst:
            worst = ratio
            witness = (z, w, u)
    passed = (not violated) and worst <= lam * (1.0 + TAU_REL_RATIO) + TAU_NUM
    return CertificateReport(
        inequality="relative-lipschitzness", constant=lam, n_tested=n,
        worst=worst, witness=witness, passed=passed, n_skipped=skipped,
        details={"semantics": "no violation in N samples" if passed else "violation found"})


def check_relative_smoothness_implies(g, r, L, sampler: TripleSampler) -> CertificateReport:
    """Gradient of an L-relatively-smooth f is L-relatively Lipschitz wrt r."""
    rep = check_relative_lipschitzness(g, r, L, sampler)
    rep.inequality = "relative-smoothness-implies-relative-lipschitzness"
    return rep


def check_strong_monotonicity(g, r, m, sampler: TripleSampler) -> CertificateReport:
    """Worst sampled ratio of <g(w)-g(z), w-z> to V_w(z) + V_z(w), compared to m."""
    worst = np.inf
    witness = ()
    skipped = 0
    n = 0
    for z, w, _ in sampler.points():
        n += 1
        num = _dot(_sub(g(w), g(z)), _sub(w, z))
        den = r.divergence(w, z) + r.divergence(z, w)
        if den < TAU_NUM:
            skipped += 1
            continue
        ratio = num / den
        if ratio < worst:
            worst = ratio
            witness = (z, w)
    passed = worst >= m * (1.0 - TAU_REL_RATIO) - TAU_NUM
    return CertificateReport(
        inequality="strong-monotonicity", constant=m, n_tested=n,
        worst=worst, witness=witness, passed=passed, n_skipped=skipped)


def check_regret_certificate(trace, g, r, lam, z0, u):
    """Sum of <g(w_t), w_t - u> against lam * V_{z0}(u); returns (passed, margin)."""
    if not trace.iterates:
        return True, lam * r.divergence(z0, u)
    lhs = 0.0
    for w in trace.iterates:
        lhs += _dot(g(w), _sub(w, u))
    rhs = lam * r.divergence(z0, u)
    T = len(trace.iterates)
    margin = rhs - lhs
    return lhs <= rhs + T * TAU_NUM, margin


def finite_diff_gradient(f, x, h, grad_oracle=None):
    """Central-difference gradient; optionally reports max deviation from an oracle."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    if grad_oracle is None:
        return out, None
    return out, float(np.max(np.abs(out - grad_oracle(x))))


# ---------------------------------------------------------------------------
# Coordinate estimator conditions, by exhaustive enumeration
# ---------------------------------------------------------------------------


def _fenchel_div(problem, z1, z2):
    """V^r for r(x, y) = mu/2 |x|^2 + f*(y) between implicit points (x, v)."""
    mu = problem.profile.mu
    (x1, v1), (x2, v2) = z1, z2
    dx = x2 - x1
    # V^{f*}_{grad f(v1)}(grad f(v2)) = V^f_{v2}(v1)
    dual = problem.f(v1) - problem.f(v2) - float(np.dot(problem.grad(v2), v1 - v2))
    return 0.5 * mu * float(np.dot(dx, dx)) + dual


def coord_iteration_outcomes(problem, x_t, v_t, lam, p):
    """All per-coordinate outcomes of one shared-randomness iteration.

    For each i returns (w_i = (x_half, v_half), z_next_i = (x_next, v_next),
    delta_i); v_half is the same deterministic point for every i.
    """
    mu = problem.profile.mu
    d = x_t.size
    v_half = (1.0 - 1.0 / lam) * v_t + x_t / lam
    g_v = problem.grad(v_t)
    g_vh = problem.grad(v_half)
    outcomes = []
    for i in range(d):
        x_half = x_t.copy()
        x_half[i] -= g_v[i] / (mu * lam * p[i])
        x_next = x_t.copy()
        x_next[i] -= g_vh[i] / (mu * lam * p[i])
        v_next = (1.0 - 1.0 / lam + 1.0 / lam**2) * v_t \
            + (1.0 / lam - 1.0 / lam**2) * x_t
        v_next[i] -= g_v[i] / (mu * lam**2 * p[i]**2)
        outcomes.append(((x_half, v_half), (x_next, v_next)))
    return outcomes, v_half, g_v, g_vh


def coord_trajectory(problem, x0, steps, seed=0, lam=None, p=None):
    """Explicit randomized-coordinate trajectory; returns the visited (x, v) states."""
    prof = problem.profile
    if lam is None:
        lam = 1.0 + prof.s_half / np.sqrt(prof.mu)
    if p is None:
        p = prof.coord_probabilities()
    mu = prof.mu
    rng = make_rng(seed)
    x = np.asarray(x0, dtype=float).copy()
    v = x.copy()
    states = [(x.copy(), v.copy())]
    for _ in range(steps - 1):
        i = int(rng.choice(p.size, p=p))
        v_half = (1.0 - 1.0 / lam) * v + x / lam
        g_v = problem.grad(v)
        g_vh = problem.grad(v_half)
        x_new = x.copy()
        x_new[i] -= g_vh[i] / (mu * lam * p[i])
        v_new = (1.0 - 1.0 / lam + 1.0 / lam**2) * v + (1.0 / lam - 1.0 / lam**2) * x
        v_new[i] -= g_v[i] / (mu * lam**2 * p[i]**2)
        x, v = x_new, v_new
        states.append((x.copy(), v.copy()))
    return states


def check_estimator_conditions(problem, states, u, lam=None, p=None) -> CertificateReport:
    """Verify both randomized-operator conditions exactly at recorded iterates.

    ``states`` is a sequence of (x_t, v_t) pairs; ``u`` an (x, v) comparator.
    Enumerates every coordinate outcome (d <= 16; exactness is the point, so
    larger d is refused):

    * the expectation over i of <g_i(w^(i)), w^(i) - u> equals the regret of
      the merged point (x_t + sum_i delta_i, grad f(v_half)), and
    * the expected relative Lipschitzness inequality at
      lam = 1 + sum_i sqrt(L_i) / sqrt(mu) with p_i ~ sqrt(L_i).
    """
    states = list(states)
    prof = problem.profile
    d = prof.L_i.size
    if d > 16:
        raise ValueError("exhaustive enumeration limited to d <= 16")
    if p is None:
        p = prof.coord_probabilities()
    if lam is None:
        lam = 1.0 + prof.s_half / np.sqrt(prof.mu)
    ux, uv = u
    gf_u = problem.grad(uv)
    worst_identity = 0.0
    worst_ineq = -np.inf
    witness = ()
    for x_t, v_t in states:
        outcomes, v_half, g_v, g_vh = coord_iteration_outcomes(problem, x_t, v_t, lam, p)
        gf_vh = problem.grad(v_half)
        # condition 1: expectation identity against the merged point
        lhs = 0.0
        x_bar = x_t.copy()
        for i, ((x_half, _), _) in enumerate(outcomes):
            delta = x_half - x_t
            x_bar += delta
            shifted = x_t + delta / p[i]
            est_x = gf_vh[i] / p[i] * (x_half[i] - ux[i])
            est_y = float(np.dot(v_half - shifted, gf_vh - gf_u))
            lhs += p[i] * (est_x + est_y)
        rhs = float(np.dot(gf_vh, x_bar - ux)) + float(np.dot(v_half - x_bar, gf_vh - gf_u))
        worst_identity = max(worst_identity, abs(lhs - rhs))
        # condition 2: expected relative Lipschitzness of the estimator pair
        num = 0.0
        den = 0.0
        for i, (w_i, z_next_i) in enumerate(outcomes):
            (x_half, _), (x_next, v_next) = w_i, z_next_i
            gf_vn = problem.grad(v_next)
            # <g_i(w) - g_i(z), w - z_next> expanded blockwise
            term_x = (gf_vh[i] - g_v[i]) / p[i] * (x_half[i] - x_next[i])
            delta = x_half[i] - x_t[i]
            shifted_i = x_t.copy()
            shifted_i[i] += delta / p[i]
            wy_minus_zy = gf_vh - gf_vn  # y-blocks are grad f at v points
            gy_w = v_half - shifted_i
            gy_z = v_t - x_t
            term_y = float(np.dot(gy_w - gy_z, wy_minus_zy))
            num += p[i] * (term_x + term_y)
            den += p[i] * (_fenchel_div(problem, (x_t, v_t), w_i)
                           + _fenchel_div(problem, w_i, (x_next, v_next)))
        if den > 0 and num / den > worst_ineq:
            worst_ineq = num / den
            witness = ((x_t, v_t),)
    passed = worst_identity < 1e-10 and worst_ineq <= lam * (1.0 + TAU_REL_RATIO) + TAU_NUM
    return CertificateReport(
        inequality="coordinate-estimator-conditions", constant=lam,
        n_tested=len(states), worst=worst_ineq, witness=witness, passed=passed,
        details={"worst_identity_error": worst_identity})
