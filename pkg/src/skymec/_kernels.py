"""Compiled inner loops of the placement solver."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _dot_clip(base, w, t):
    s = 0.0
    for i in range(base.size):
        # zero weights are skipped so an infinite t cannot make 0 * inf
        v = base[i] - t * w[i] if w[i] > 0.0 else base[i]
        if v > 1.0:
            v = 1.0
        elif v < 0.0:
            v = 0.0
        s += w[i] * v
    return s


@njit(cache=True)
def multiplier(base, w, limit):
    """Smallest t >= 0 with w . clip(base - t w, 0, 1) <= limit (w >= 0, limit >= 0).

    The left side is piecewise linear and nonincreasing in t; its kinks are
    where a coordinate leaves 1 or reaches 0, so the root is exact.
    """
    g0 = _dot_clip(base, w, 0.0)
    if g0 <= limit:
        return 0.0
    knots = np.empty(2 * base.size)
    k = 0
    for i in range(base.size):
        if w[i] > 0.0:
            for t in ((base[i] - 1.0) / w[i], base[i] / w[i]):
                if t > 0.0:
                    knots[k] = t
                    k += 1
    knots = np.sort(knots[:k])
    t_lo, g_lo = 0.0, g0
    for j in range(k):
        t_hi = knots[j]
        g_hi = _dot_clip(base, w, t_hi)
        if g_hi <= limit:
            if g_lo == g_hi or not np.isfinite(t_hi):
                return t_hi
            return t_lo + (g_lo - limit) * (t_hi - t_lo) / (g_lo - g_hi)
        t_lo, g_lo = t_hi, g_hi
    return t_lo


@njit(cache=True)
def _clip_comb(y, a, mu, e, nu):
    x = np.empty(y.size)
    for i in range(y.size):
        v = y[i]
        if a[i] > 0.0:
            v -= mu * a[i]
        if e[i] > 0.0:
            v -= nu * e[i]
        x[i] = 1.0 if v > 1.0 else (0.0 if v < 0.0 else v)
    return x


@njit(cache=True)
def project(y, a, b, e, c, tol):
    """Projection onto {0 <= x <= 1, a.x <= b, e.x <= c}; budgets must be >= 0."""
    zero = np.zeros(y.size)
    x = _clip_comb(y, a, 0.0, zero, 0.0)
    e_on = np.isfinite(c) and np.any(e > 0.0)
    a_ok = a @ x <= b
    e_ok = (not e_on) or e @ x <= c
    if a_ok and e_ok:
        return x
    mu = multiplier(y, a, b)
    x = _clip_comb(y, a, mu, zero, 0.0)
    if not e_on or e @ x <= c:
        return x
    nu = multiplier(y, e, c)
    x = _clip_comb(y, e, nu, zero, 0.0)
    if a @ x <= b:
        return x
    # both active: bisect mu, solving nu exactly for each trial value.  nu >= 0
    # only shrinks a.x, so the capacity-only multiplier brackets the answer
    # whatever the scale of the weights.
    hi = mu
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        nu = multiplier(y - mid * a, e, c)
        if a @ _clip_comb(y, a, mid, e, nu) <= b:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi) or hi - lo < tol * 1e-3:
            break
    nu = multiplier(y - hi * a, e, c)
    return _clip_comb(y, a, hi, e, nu)


@njit(cache=True)
def block_sweeps(X, rows, offsets, cols, cap_w, en_w, cap_lim, en_lim, shift, tol, max_sweeps, proj_tol):
    """Gauss-Seidel over single-column sets until no entry moves more than ``tol``.

    Set ``i`` owns ``X[rows[o:p], cols[i]]`` with ``o, p = offsets[i:i+2]``;
    ``shift`` holds (cost + lambda) / rho for those entries.
    """
    rowsum = X.sum(axis=1)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        change = 0.0
        for i in range(cols.size):
            o, p = offsets[i], offsets[i + 1]
            if p == o:
                continue
            r = rows[o:p]
            col = cols[i]
            y = np.empty(p - o)
            for j in range(p - o):
                y[j] = 1.0 - (rowsum[r[j]] - X[r[j], col]) - shift[o + j]
            new = project(y, cap_w[o:p], cap_lim[i], en_w[o:p], en_lim[i], proj_tol)
            for j in range(p - o):
                d = new[j] - X[r[j], col]
                X[r[j], col] = new[j]
                rowsum[r[j]] += d
                if abs(d) > change:
                    change = abs(d)
        if change <= tol:
            break
    return sweeps
