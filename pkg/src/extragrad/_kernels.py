"""JIT-compiled hot loops with a pure-numpy fallback.

Set EXTRAGRAD_DISABLE_NUMBA=1 to force the numpy path (also taken when numba
is not importable).  Callers check USING_NUMBA and dispatch; the kernels here
operate on raw CSR arrays so they stay jittable.
"""

from __future__ import annotations

import os

import numpy as np

_disable = os.environ.get("EXTRAGRAD_DISABLE_NUMBA", "") not in ("", "0")

try:
    if _disable:
        raise ImportError("numba disabled by env flag")
    from numba import njit

    USING_NUMBA = True
except ImportError:
    USING_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


@njit(cache=True)
def csr_matvec(indptr, indices, data, v):
    m = indptr.size - 1
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * v[indices[k]]
        out[i] = acc
    return out


@njit(cache=True)
def sherman_alternating(a_indptr, a_indices, a_data,
                        at_indptr, at_indices, at_data,
                        gx, gy, zx, zy, alpha,
                        max_rounds, tol):
    """Alternating exact block minimization for the box-simplex prox.

    a_* is CSR of |A| (m rows), at_* is CSR of |A|^T (n rows).  Returns
    (x, y, rounds_used, last_change, gamma_inf_max) where gamma is the linear
    term of the entropic y-subproblem, whose sup-norm drives multiplicative
    stability.
    """
    n = zx.size
    m = zy.size
    # quantities fixed across rounds
    atz_y = csr_matvec(at_indptr, at_indices, at_data, zy)
    az_x2 = csr_matvec(a_indptr, a_indices, a_data, zx * zx)
    log_zy = np.empty(m)
    for i in range(m):
        yi = zy[i]
        if yi < 1e-300:
            yi = 1e-300
        log_zy[i] = np.log(yi)
    lin_x = np.empty(n)
    for j in range(n):
        lin_x[j] = gx[j] - 2.0 * atz_y[j] * zx[j]

    x = zx.copy()
    y = zy.copy()
    rounds = 0
    change = np.inf
    gamma_max = 0.0
    for r in range(max_rounds):
        rounds = r + 1
        # x-step: per-coordinate quadratic a_j x^2 + lin_x[j] x over [-1, 1]
        a_coef = csr_matvec(at_indptr, at_indices, at_data, y)
        x_new = np.empty(n)
        for j in range(n):
            if a_coef[j] > 1e-300:
                t = -lin_x[j] / (2.0 * a_coef[j])
            elif lin_x[j] > 0.0:
                t = -1.0
            elif lin_x[j] < 0.0:
                t = 1.0
            else:
                t = 0.0
            if t > 1.0:
                t = 1.0
            elif t < -1.0:
                t = -1.0
            x_new[j] = t
        # y-step: entropic closed form
        ax2 = csr_matvec(a_indptr, a_indices, a_data, x_new * x_new)
        logw = np.empty(m)
        biggest = -np.inf
        for i in range(m):
            gamma_i = gy[i] + ax2[i] - az_x2[i]
            if abs(gamma_i) > gamma_max:
                gamma_max = abs(gamma_i)
            logw[i] = log_zy[i] - gamma_i / alpha
            if logw[i] > biggest:
                biggest = logw[i]
        total = 0.0
        for i in range(m):
            logw[i] = np.exp(logw[i] - biggest)
            total += logw[i]
        change = 0.0
        for j in range(n):
            d = abs(x_new[j] - x[j])
            if d > change:
                change = d
        for i in range(m):
            yi = logw[i] / total
            d = abs(yi - y[i])
            if d > change:
                change = d
            y[i] = yi
        x = x_new
        if change < tol:
            break
    return x, y, rounds, change, gamma_max


@njit(cache=True)
def _sherman_value(a_indptr, a_indices, a_data, alpha, x, y):
    ax2 = csr_matvec(a_indptr, a_indices, a_data, x * x)
    val = 0.0
    for i in range(y.size):
        val += y[i] * ax2[i]
        yi = y[i]
        if yi > 1e-300:
            val += alpha * yi * np.log(yi)
    return val


@njit(cache=True)
def _sherman_div(a_indptr, a_indices, a_data, at_indptr, at_indices, at_data,
                 alpha, ax, ay, bx, by):
    """Bregman divergence of the coupled box-entropy regularizer from a to b."""
    val = _sherman_value(a_indptr, a_indices, a_data, alpha, bx, by) \
        - _sherman_value(a_indptr, a_indices, a_data, alpha, ax, ay)
    at_y = csr_matvec(at_indptr, at_indices, at_data, ay)
    ax2 = csr_matvec(a_indptr, a_indices, a_data, ax * ax)
    for j in range(ax.size):
        val -= 2.0 * at_y[j] * ax[j] * (bx[j] - ax[j])
    for i in range(ay.size):
        yi = ay[i]
        if yi < 1e-300:
            yi = 1e-300
        val -= (ax2[i] + alpha * (1.0 + np.log(yi))) * (by[i] - ay[i])
    return val


@njit(cache=True)
def box_simplex_run(a_indptr, a_indices, a_data,
                    at_indptr, at_indices, at_data,
                    absa_indptr, absa_indices, absa_data,
                    absat_indptr, absat_indices, absat_data,
                    b, c, alpha, lam, eps, budget, max_rounds, tol, certify):
    """Full lam-scaled mirror prox loop for a box-simplex game.

    Runs up to ``budget`` iterations from z0 = (0, uniform), averaging the
    first prox points and stopping once the averaged duality gap reaches eps.
    With ``certify`` it tracks, per iteration, multiplicative stability of the
    simplex block, the local relative-Lipschitzness margin at lam, and the
    sup-norm of the entropic subproblem's linear term.

    Returns (x_best, y_best, gap_best, gaps[:t], t, stability_lo, stability_hi,
    worst_rl_margin, gamma_inf_max, rl_margins[:t]).
    """
    m = b.size
    n = c.size
    zx = np.zeros(n)
    zy = np.full(m, 1.0 / m)
    x_acc = np.zeros(n)
    y_acc = np.zeros(m)
    best_gap = np.inf
    best_x = np.zeros(n)
    best_y = np.full(m, 1.0 / m)
    gaps = np.empty(budget)
    rl_margins = np.empty(budget)
    stab_lo = 1.0
    stab_hi = 1.0
    worst_rl = -np.inf
    gamma_inf_max = 0.0
    t = 0
    while t < budget:
        # g(z) = (A^T zy + c, b - A zx)
        gzx = csr_matvec(at_indptr, at_indices, at_data, zy)
        for j in range(n):
            gzx[j] += c[j]
        azx = csr_matvec(a_indptr, a_indices, a_data, zx)
        gzy = np.empty(m)
        for i in range(m):
            gzy[i] = b[i] - azx[i]
        wx, wy, _, _, gmax1 = sherman_alternating(
            absa_indptr, absa_indices, absa_data,
            absat_indptr, absat_indices, absat_data,
            gzx / lam, gzy / lam, zx, zy, alpha, max_rounds, tol)
        gwx = csr_matvec(at_indptr, at_indices, at_data, wy)
        for j in range(n):
            gwx[j] += c[j]
        awx = csr_matvec(a_indptr, a_indices, a_data, wx)
        gwy = np.empty(m)
        for i in range(m):
            gwy[i] = b[i] - awx[i]
        zx_n, zy_n, _, _, gmax2 = sherman_alternating(
            absa_indptr, absa_indices, absa_data,
            absat_indptr, absat_indices, absat_data,
            gwx / lam, gwy / lam, zx, zy, alpha, max_rounds, tol)
        if certify:
            if gmax1 > gamma_inf_max:
                gamma_inf_max = gmax1
            if gmax2 > gamma_inf_max:
                gamma_inf_max = gmax2
            for i in range(m):
                base = zy[i]
                if base < 1e-300:
                    base = 1e-300
                r1 = wy[i] / base
                r2 = zy_n[i] / base
                lo = r1 if r1 < r2 else r2
                hi = r1 if r1 > r2 else r2
                if lo < stab_lo:
                    stab_lo = lo
                if hi > stab_hi:
                    stab_hi = hi
            # local relative Lipschitzness: <g(w)-g(z), w - z_next>
            lhs = 0.0
            for j in range(n):
                lhs += (gwx[j] - gzx[j]) * (wx[j] - zx_n[j])
            for i in range(m):
                lhs += (gwy[i] - gzy[i]) * (wy[i] - zy_n[i])
            rhs = lam * (_sherman_div(absa_indptr, absa_indices, absa_data,
                                      absat_indptr, absat_indices, absat_data,
                                      alpha, zx, zy, wx, wy)
                         + _sherman_div(absa_indptr, absa_indices, absa_data,
                                        absat_indptr, absat_indices, absat_data,
                                        alpha, wx, wy, zx_n, zy_n))
            margin = lhs - rhs
            rl_margins[t] = margin
            if margin > worst_rl:
                worst_rl = margin
        else:
            rl_margins[t] = 0.0
        for j in range(n):
            x_acc[j] += wx[j]
        for i in range(m):
            y_acc[i] += wy[i]
        t += 1
        xb = x_acc / t
        yb = y_acc / t
        # duality gap of the averaged iterate
        axb = csr_matvec(a_indptr, a_indices, a_data, xb)
        best_resp_y = -np.inf
        by_dot = 0.0
        for i in range(m):
            if axb[i] - b[i] > best_resp_y:
                best_resp_y = axb[i] - b[i]
            by_dot += b[i] * yb[i]
        cx = 0.0
        for j in range(n):
            cx += c[j] * xb[j]
        aty = csr_matvec(at_indptr, at_indices, at_data, yb)
        l1 = 0.0
        for j in range(n):
            l1 += abs(aty[j] + c[j])
        gap = best_resp_y + cx + l1 + by_dot
        gaps[t - 1] = gap
        if gap < best_gap:
            best_gap = gap
            best_x = xb.copy()
            best_y = yb.copy()
        if gap <= eps:
            break
        zx, zy = zx_n, zy_n
    return (best_x, best_y, best_gap, gaps[:t], t,
            stab_lo, stab_hi, worst_rl, gamma_inf_max, rl_margins[:t])


@njit(cache=True)
def accel_phase_diag(Mdiag, b, x0, mu, lam, T):
    """One accelerated phase for a diagonal quadratic; returns the averaged half-iterate."""
    d = x0.size
    x = x0.copy()
    v = x0.copy()
    v_sum = np.zeros(d)
    inv = 1.0 / (mu * lam)
    for t in range(T):
        for j in range(d):
            gv = Mdiag[j] * v[j] + b[j]
            xh = x[j] - inv * gv
            vh = v[j] + (x[j] - v[j]) / lam
            v_sum[j] += vh
            gvh = Mdiag[j] * vh + b[j]
            x[j] = x[j] - inv * gvh
            v[j] = v[j] + (xh - vh) / lam
    return v_sum / T
