"""Box-simplex bilinear games end to end.

Preprocessing, the coupled box-entropy regularizer with its alternating
minimization prox, mirror prox at lam = 3, the duality-gap oracle, and the
reduction from box-constrained ell_inf regression.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Point, Box, Simplex, ProductSet
from .operators import BoxSimplexInstance
from .solvers import SolverTrace

LAMBDA_BOX_SIMPLEX = 3.0
ENTROPY_SCALE_FACTOR = 10.0

Y_FLOOR = 1e-300  # multiplicative updates cannot hit exact zero, underflow can


@dataclass
class AlternatingProxConfig:
    """Knobs of the alternating block-minimization prox solver."""

    max_rounds: int = 32
    tol: float | None = None  # defaults to 1e-10 * op_norm

    def resolve_tol(self, op_norm):
        return 1e-10 * max(op_norm, 1.0) if self.tol is None else self.tol


class ShermanRegularizer:
    """r(x, y) = y^T |A| (x^2) + 10 ||A|| sum_i y_i log y_i over [-1,1]^n x simplex."""

    def __init__(self, inst: BoxSimplexInstance, cfg: AlternatingProxConfig | None = None):
        self.inst = inst
        self.alpha = ENTROPY_SCALE_FACTOR * inst.op_norm
        self.cfg = cfg or AlternatingProxConfig()
        self.feasible_set = ProductSet(
            Box(-np.ones(inst.n), np.ones(inst.n)), Simplex(inst.m))
        self.last_rounds = 0
        self.last_residual = 0.0
        self.last_gamma_inf = 0.0

    def value(self, p: Point):
        y = np.maximum(p.y, Y_FLOOR)
        ent = float(np.sum(np.where(p.y > 0, y * np.log(y), 0.0)))
        return float(p.y @ (self.inst.abs_A @ (p.x**2))) + self.alpha * ent

    def grad(self, p: Point):
        y = np.maximum(p.y, Y_FLOOR)
        gx = 2.0 * (self.inst.abs_A.T @ p.y) * p.x
        gy = self.inst.abs_A @ (p.x**2) + self.alpha * (1.0 + np.log(y))
        return Point(gx, gy)

    def divergence(self, a: Point, b: Point):
        ga = self.grad(a)
        diff = b - a
        return self.value(b) - self.value(a) - ga.dot(diff)

    def prox(self, z: Point, g: Point):
        """Alternating exact block minimization until the iterate stalls."""
        inst = self.inst
        tol = self.cfg.resolve_tol(inst.op_norm)
        if _kernels.USING_NUMBA:
            x, y, rounds, change, gamma_max = _kernels.sherman_alternating(
                inst.abs_A.indptr, inst.abs_A.indices, inst.abs_A.data,
                self._at_indptr, self._at_indices, self._at_data,
                g.x, g.y, z.x, np.maximum(z.y, Y_FLOOR), self.alpha,
                self.cfg.max_rounds, tol)
        else:
            x, y, rounds, change, gamma_max = self._prox_numpy(z, g, tol)
        self.last_rounds = rounds
        self.last_residual = change
        self.last_gamma_inf = gamma_max
        if change >= tol:
            warnings.warn(
                f"alternating prox stopped at residual {change:.3e} "
                f"after {rounds} rounds (tol {tol:.3e})", RuntimeWarning)
        return Point(x, y)

    @property
    def _at_indptr(self):
        return self.inst.abs_A_csc.indptr

    @property
    def _at_indices(self):
        return self.inst.abs_A_csc.indices

    @property
    def _at_data(self):
        return self.inst.abs_A_csc.data

    def _prox_numpy(self, z: Point, g: Point, tol):
        inst = self.inst
        zy = np.maximum(z.y, Y_FLOOR)
        atz_y = inst.abs_A.T @ zy
        az_x2 = inst.abs_A @ (z.x**2)
        log_zy = np.log(zy)
        lin_x = g.x - 2.0 * atz_y * z.x
        x, y = z.x.copy(), zy.copy()
        gamma_max = 0.0
        rounds = 0
        change = np.inf
        for r in range(self.cfg.max_rounds):
            rounds = r + 1
            a_coef = inst.abs_A.T @ y
            with np.errstate(divide="ignore", invalid="ignore"):
                x_new = np.where(a_coef > 1e-300,
                                 -lin_x / (2.0 * a_coef),
                                 -np.sign(lin_x))
            x_new = np.clip(np.nan_to_num(x_new), -1.0, 1.0)
            gamma = g.y + inst.abs_A @ (x_new**2) - az_x2
            gamma_max = max(gamma_max, float(np.abs(gamma).max()))
            logw = log_zy - gamma / self.alpha
            logw -= logw.max()
            y_new = np.exp(logw)
            y_new /= y_new.sum()
            change = max(float(np.abs(x_new - x).max()),
                         float(np.abs(y_new - y).max()))
            x, y = x_new, y_new
            if change < tol:
                break
        return x, y, rounds, change, gamma_max


def sherman_prox(reg: ShermanRegularizer, z: Point, g: Point,
                 cfg: AlternatingProxConfig | None = None) -> Point:
    if cfg is not None:
        reg = ShermanRegularizer(reg.inst, cfg)
    return reg.prox(z, g)


# ---------------------------------------------------------------------------
# Preprocessing and the regression reduction
# ---------------------------------------------------------------------------


def preprocess(inst: BoxSimplexInstance) -> BoxSimplexInstance:
    """Drop dominated rows and shift b so its minimum is 0.

    Rows with b_i >= min b + 2 ||A|| never hold the best simplex response, so
    removing them (and shifting, which is value-neutral on the simplex)
    leaves the game value unchanged while placing b in [0, 2 ||A||].
    """
    b = inst.b
    shift = float(b.min()) if b.size else 0.0
    keep = np.flatnonzero(b < shift + 2.0 * inst.op_norm)
    out = BoxSimplexInstance(inst.A[keep], b[keep] - shift, inst.c)
    out.shift = shift
    out.kept_rows = keep
    return out


def linf_regression_reduction(A, b) -> BoxSimplexInstance:
    """Box-simplex game whose value is min_{x in [-1,1]^n} ||Ax - b||_inf.

    Stacks A, b with negated copies; c = 0.  The instance carries the
    preprocessing shift applied afterwards (attribute ``shift``) so game
    values can be mapped back.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    stacked = BoxSimplexInstance(
        np.vstack([A, -A]), np.concatenate([b, -b]), np.zeros(A.shape[1]))
    return preprocess(stacked)


def duality_gap(inst: BoxSimplexInstance, x, y) -> float:
    """max_{y'} f(x, y') - min_{x'} f(x', y), both best responses in closed form."""
    best_y = float(np.max(inst.A @ x - inst.b)) + float(inst.c @ x)
    aty_c = inst.A.T @ y + inst.c
    best_x = -float(np.abs(aty_c).sum()) - float(inst.b @ y)
    return best_y - best_x


# ---------------------------------------------------------------------------
# The lam = 3 mirror prox solve
# ---------------------------------------------------------------------------


def iteration_budget(inst: BoxSimplexInstance, eps: float, constant: float = 50.0) -> int:
    """Budget C * ||A|| log m / eps; the constant absorbs prox inexactness."""
    return int(np.ceil(constant * inst.op_norm * np.log(max(inst.m, 2)) / eps))


def solve_box_simplex(inst: BoxSimplexInstance, eps: float,
                      cfg: AlternatingProxConfig | None = None,
                      max_iters: int | None = None,
                      certify: bool = False,
                      budget_constant: float = 50.0):
    """Mirror prox with lam = 3 in the coupled regularizer from z0 = (0, uniform).

    Returns (x, y, gap, trace) for the averaged iterate.  With ``certify`` the
    trace records, per iteration: the worst entrywise ratio of successive
    simplex iterates (multiplicative stability), the local relative
    Lipschitzness margin at lam = 3, and the sup-norm of the entropic
    subproblem's linear term.
    """
    lam = LAMBDA_BOX_SIMPLEX
    reg = ShermanRegularizer(inst, cfg)
    budget = iteration_budget(inst, eps, budget_constant) if max_iters is None else max_iters
    tol_rl = 1e-8 * max(1.0, inst.op_norm)
    if _kernels.USING_NUMBA:
        prox_cfg = cfg or AlternatingProxConfig()
        (xb, yb, gap, gaps, t, stab_lo, stab_hi, worst_rl, gamma_max,
         margins) = _kernels.box_simplex_run(
            inst.A.indptr, inst.A.indices, inst.A.data,
            inst.A_csc.indptr, inst.A_csc.indices, inst.A_csc.data,
            inst.abs_A.indptr, inst.abs_A.indices, inst.abs_A.data,
            inst.abs_A_csc.indptr, inst.abs_A_csc.indices, inst.abs_A_csc.data,
            inst.b, inst.c, reg.alpha, lam, eps, budget,
            prox_cfg.max_rounds, prox_cfg.resolve_tol(inst.op_norm), certify)
        trace = SolverTrace()
        trace.gaps = list(gaps)
        trace.summary = {
            "algorithm": "box-simplex", "iterations": int(t), "lam": lam,
            "gap": float(gap), "budget": budget,
            "stability_ok": bool(stab_lo >= 0.5 and stab_hi <= 2.0),
            "local_rl_ok": bool(worst_rl <= tol_rl),
            "gamma_inf_max": float(gamma_max),
            "stability_lo": float(stab_lo), "stability_hi": float(stab_hi),
            "initial_divergence_bound": lam * reg.divergence(
                Point(np.zeros(inst.n), np.full(inst.m, 1.0 / inst.m)),
                Point(xb, yb)),
        }
        if certify:
            trace.regrets = list(margins)
        if gap > eps:
            warnings.warn(
                f"box-simplex budget of {budget} iterations exhausted; "
                f"best gap {gap:.3e} > eps {eps:.3e}", RuntimeWarning)
        return xb, yb, float(gap), trace
    z = Point(np.zeros(inst.n), np.full(inst.m, 1.0 / inst.m))
    z0 = z
    x_acc = np.zeros(inst.n)
    y_acc = np.zeros(inst.m)
    trace = SolverTrace()
    trace.summary["stability_ok"] = True
    trace.summary["local_rl_ok"] = True
    trace.summary["gamma_inf_max"] = 0.0
    trace.summary["stability_lo"] = 1.0
    trace.summary["stability_hi"] = 1.0
    best = None
    start = time.perf_counter()
    t = 0
    gap = np.inf
    while t < budget:
        gz = inst.operator(z)
        w = reg.prox(z, (1.0 / lam) * gz)
        gamma_inf = reg.last_gamma_inf
        gw = inst.operator(w)
        z_next = reg.prox(z, (1.0 / lam) * gw)
        gamma_inf = max(gamma_inf, reg.last_gamma_inf)
        if certify:
            base = np.maximum(z.y, Y_FLOOR)
            ratio_hi = max(float(np.max(w.y / base)), float(np.max(z_next.y / base)))
            ratio_lo = min(float(np.min(w.y / base)), float(np.min(z_next.y / base)))
            trace.summary["stability_lo"] = min(trace.summary["stability_lo"], ratio_lo)
            trace.summary["stability_hi"] = max(trace.summary["stability_hi"], ratio_hi)
            if ratio_hi > 2.0 or ratio_lo < 0.5:
                trace.summary["stability_ok"] = False
            lhs = (gw - gz).dot(w - z_next)
            rhs = lam * (reg.divergence(z, w) + reg.divergence(w, z_next))
            if lhs > rhs + tol_rl:
                trace.summary["local_rl_ok"] = False
            trace.regrets.append(lhs - rhs)
            trace.summary["gamma_inf_max"] = max(trace.summary["gamma_inf_max"], gamma_inf)
        x_acc += w.x
        y_acc += w.y
        t += 1
        xb, yb = x_acc / t, y_acc / t
        gap = duality_gap(inst, xb, yb)
        trace.gaps.append(gap)
        trace.wall_ms.append((time.perf_counter() - start) * 1e3)
        if best is None or gap < best[2]:
            best = (xb, yb, gap)
        if gap <= eps:
            break
        z = z_next
    else:
        warnings.warn(
            f"box-simplex budget of {budget} iterations exhausted; "
            f"best gap {best[2]:.3e} > eps {eps:.3e}", RuntimeWarning)
    xb, yb, gap = best
    trace.summary.update({
        "algorithm": "box-simplex", "iterations": t, "lam": lam,
        "gap": gap, "budget": budget,
        "initial_divergence_bound": lam * reg.divergence(z0, Point(xb, yb)),
    })
    return xb, yb, gap, trace
