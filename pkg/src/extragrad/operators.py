"""Monotone operator constructions and coordinate-wise randomized estimators.

The randomness contract for everything in this package: seeds feed a Philox
counter-based 64-bit generator (`numpy.random.Philox`), so identical seeds
produce identical traces on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import Point


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# Smoothness metadata
# ---------------------------------------------------------------------------


@dataclass
class SmoothnessProfile:
    """Smoothness/strong-convexity constants of an objective.

    L_i holds per-coordinate smoothnesses when available; s_half caches
    sum_i sqrt(L_i), the normalization of the sampling distribution used by
    the coordinate method.
    """

    L: float
    mu: float
    L_i: np.ndarray | None = None

    def __post_init__(self):
        if not (0 < self.mu <= self.L):
            raise ValueError("need 0 < mu <= L")
        if self.L_i is not None:
            self.L_i = np.asarray(self.L_i, dtype=float)
            if np.any(self.L_i <= 0):
                raise ValueError("coordinate smoothnesses must be positive")

    @property
    def s_half(self) -> float:
        if self.L_i is None:
            raise ValueError("no per-coordinate smoothnesses available")
        return float(np.sum(np.sqrt(self.L_i)))

    def coord_probabilities(self) -> np.ndarray:
        return np.sqrt(self.L_i) / self.s_half


def lambda_fenchel(profile: SmoothnessProfile) -> float:
    """Relative Lipschitzness constant of the primal-dual smooth game."""
    if profile.mu <= 0:
        raise ValueError("mu must be positive")
    return 1.0 + np.sqrt(profile.L / profile.mu)


def lambda_coord(profile: SmoothnessProfile) -> float:
    """Expected relative Lipschitzness constant for coordinate sampling."""
    return 1.0 + profile.s_half / np.sqrt(profile.mu)


# ---------------------------------------------------------------------------
# Fenchel game operator
# ---------------------------------------------------------------------------


class FenchelGameOperator:
    """Gradient operator of min_x max_y <y, x> - f*(y).

    Explicitly, g(x, y) = (y, grad f*(y) - x).  Points are carried in the
    implicit form z = (x, v) with y = grad f(v), so each evaluation costs one
    gradient query and the explicit dual block is never materialized.
    """

    def __init__(self, grad_f, profile: SmoothnessProfile):
        self.grad_f = grad_f
        self.profile = profile

    def __call__(self, z: Point) -> Point:
        x, v = z.x, z.y
        if x.shape != v.shape:
            raise ValueError("x and v blocks must have equal dimension")
        return Point(self.grad_f(v), v - x)


def eval_fenchel_game(op: FenchelGameOperator, z: Point) -> Point:
    return op(z)


# ---------------------------------------------------------------------------
# Box-simplex game
# ---------------------------------------------------------------------------


class BoxSimplexInstance:
    """Bilinear game min_{x in [-1,1]^n} max_{y in simplex} y^T A x - b^T y + c^T x.

    A is stored in both compressed-row and compressed-column form since both
    A x and A^T y appear in every operator evaluation.
    """

    def __init__(self, A, b, c):
        A = sp.csr_matrix(A, dtype=float)
        self.A = A
        self.A_csc = A.tocsc()
        self.abs_A = sp.csr_matrix(abs(A))
        self.abs_A_csc = self.abs_A.tocsc()
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.m, self.n = A.shape
        if self.b.size != self.m or self.c.size != self.n:
            raise ValueError("b, c dimensions must match A")
        # ell_inf -> ell_inf operator norm: max row ell_1 norm
        row_l1 = np.asarray(abs(A).sum(axis=1)).ravel()
        self.op_norm = float(row_l1.max()) if self.m else 0.0

    def value(self, x, y) -> float:
        return float(y @ (self.A @ x) - self.b @ y + self.c @ x)

    def operator(self, z: Point) -> Point:
        return Point(self.A.T @ z.y + self.c, self.b - self.A @ z.x)


def eval_box_simplex(inst: BoxSimplexInstance, z: Point) -> Point:
    return inst.operator(z)


# ---------------------------------------------------------------------------
# Coupled-quadratic minimax family
# ---------------------------------------------------------------------------


@dataclass
class MinimaxProfile:
    """Blockwise Hessian operator-norm bounds and strong convexity moduli."""

    L_xx: float
    L_xy: float
    L_yy: float
    mu_x: float
    mu_y: float

    def __post_init__(self):
        if self.mu_x <= 0 or self.mu_y <= 0:
            raise ValueError("strong convexity moduli must be positive")


def lambda_minimax(profile: MinimaxProfile) -> float:
    """Relative Lipschitzness of the blockwise minimax operator."""
    p = profile
    return p.L_xx / p.mu_x + np.sqrt(p.L_xy**2 / (p.mu_x * p.mu_y)) + p.L_yy / p.mu_y


class MinimaxInstance:
    """Built-in test family f(x,y) = mu_x/2 |x|^2 + x^T C y - mu_y/2 |y|^2 + q^T x - r^T y.

    Quadratic coupling keeps the blockwise bounds exact: L_xy is the top
    singular value of C, and L_xx, L_yy equal the diagonal moduli.
    """

    def __init__(self, mu_x, mu_y, C, q=None, r=None):
        self.C = np.asarray(C, dtype=float)
        n, m = self.C.shape
        self.mu_x = float(mu_x)
        self.mu_y = float(mu_y)
        self.q = np.zeros(n) if q is None else np.asarray(q, dtype=float)
        self.r = np.zeros(m) if r is None else np.asarray(r, dtype=float)
        sigma = float(np.linalg.svd(self.C, compute_uv=False)[0]) if self.C.size else 0.0
        self.profile = MinimaxProfile(self.mu_x, sigma, self.mu_y, self.mu_x, self.mu_y)

    def f(self, x, y) -> float:
        return float(
            0.5 * self.mu_x * x @ x + x @ (self.C @ y) - 0.5 * self.mu_y * y @ y
            + self.q @ x - self.r @ y
        )

    def operator(self, z: Point) -> Point:
        gx = self.mu_x * z.x + self.C @ z.y + self.q
        gy = self.mu_y * z.y - self.C.T @ z.x + self.r
        return Point(gx, gy)

    def saddle_point(self) -> Point:
        # stationarity: mu_x x + C y = -q,  -C^T x + mu_y y = -r
        n, m = self.C.shape
        K = np.block([
            [self.mu_x * np.eye(n), self.C],
            [-self.C.T, self.mu_y * np.eye(m)],
        ])
        sol = np.linalg.solve(K, np.concatenate([-self.q, -self.r]))
        return Point(sol[:n], sol[n:])


def eval_minimax(inst: MinimaxInstance, z: Point) -> Point:
    return inst.operator(z)


# ---------------------------------------------------------------------------
# Shared-randomness coordinate estimators
# ---------------------------------------------------------------------------


class AliasTable:
    """O(1) sampling from a fixed discrete distribution (Vose's method)."""

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
            raise ValueError("probabilities must be nonnegative and sum to 1")
        d = p.size
        scaled = p * d
        self.prob = np.zeros(d)
        self.alias = np.zeros(d, dtype=np.int64)
        small = [i for i in range(d) if scaled[i] < 1.0]
        large = [i for i in range(d) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s, l = small.pop(), large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] = scaled[l] + scaled[s] - 1.0
            (small if scaled[l] < 1.0 else large).append(l)
        for i in large + small:
            self.prob[i] = 1.0

    def draw(self, rng: np.random.Generator) -> int:
        i = int(rng.integers(self.prob.size))
        return i if rng.random() < self.prob[i] else int(self.alias[i])


@dataclass
class CoordinateEstimatorState:
    """One iteration of the shared-randomness coordinate estimator pair.

    Carries the current iterate (x_t, v_t with the dual block implicit as
    grad f(v_t)), the sampled coordinate, its probability, and the 1-sparse
    half-step displacement delta = x_half - x_t once the first estimator has
    been consumed.  The same sampled coordinate feeds both estimators.
    """

    problem: object  # needs partial_i(i, a, u, b, w) and grad(v)
    x_t: np.ndarray
    v_t: np.ndarray
    i: int
    p_i: float
    lam: float
    mu: float
    delta_i: float | None = None
    v_half: np.ndarray | None = None
    oracle_queries: int = 0

    def estimate_at_z(self) -> Point:
        """g_i(z_t) = ((1/p_i) grad_i f(v_t) e_i, v_t - x_t)."""
        if self.p_i <= 0:
            raise ValueError("sampled coordinate has zero probability")
        gi = self.problem.partial_i(self.i, 1.0, self.v_t, 0.0, self.v_t)
        self.oracle_queries += 1
        gx = np.zeros_like(self.x_t)
        gx[self.i] = gi / self.p_i
        # record the half-step displacement induced by the prox in
        # r(x, y) = mu/2 |x|^2 + f*(y)
        self.delta_i = -gi / (self.mu * self.lam * self.p_i)
        self.v_half = (1.0 - 1.0 / self.lam) * self.v_t + (1.0 / self.lam) * self.x_t
        return Point(gx, self.v_t - self.x_t)

    def estimate_at_w(self) -> Point:
        """g_i(w_t^{(i)}) evaluated with the same sampled coordinate."""
        if self.delta_i is None:
            raise RuntimeError("estimate_at_z must run first with the same coordinate")
        gi = self.problem.partial_i(
            self.i, 1.0 - 1.0 / self.lam, self.v_t, 1.0 / self.lam, self.x_t
        )
        self.oracle_queries += 1
        gx = np.zeros_like(self.x_t)
        gx[self.i] = gi / self.p_i
        shifted = self.x_t.copy()
        shifted[self.i] += self.delta_i / self.p_i
        return Point(gx, self.v_half - shifted)


def coord_estimate_at_z(state: CoordinateEstimatorState) -> Point:
    return state.estimate_at_z()


def coord_estimate_at_w(state: CoordinateEstimatorState) -> Point:
    return state.estimate_at_w()
