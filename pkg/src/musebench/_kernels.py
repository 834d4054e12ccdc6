"""Hot numeric kernels with two interchangeable backends.

Each kernel exists twice: a loop-style version that numba can compile
(``*_py``) and a vectorized numpy twin (``*_np``).  At import time one
backend is selected for the public names:

* default: the ``*_py`` versions compiled with ``numba.njit`` when numba
  imports cleanly;
* ``MUSEBENCH_NO_NUMBA=1`` in the environment (or numba missing): the
  pure-numpy twins.

Both backends implement identical selection semantics (strict
comparisons, first-occurrence argmin/argmax), so results match across
backends; ``benchmarks/kernel_bench.py`` times one against the other.

Kernels: the entering/ratio/pivot primitives of the bounded-variable
simplex, the Kendall pair-count sum, and the k-means assignment step.

Variable status codes used by the simplex kernels: 0 = nonbasic at lower
bound, 1 = nonbasic at upper bound, 2 = basic.
"""

from __future__ import annotations

import os

import numpy as np

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2


def _numba_wanted() -> bool:
    return os.environ.get("MUSEBENCH_NO_NUMBA", "").strip() in ("", "0")


# ---------------------------------------------------------------------------
# loop-style implementations (numba-compilable)
# ---------------------------------------------------------------------------


def _entering_dantzig_py(d, status, lb, ub, tol):
    """Most-violated reduced cost; ties go to the lowest column index.

    Returns -1 when no nonbasic column is eligible (phase optimal).
    Columns fixed by equal bounds can never move and are skipped.
    """
    best = -1
    best_v = tol
    for j in range(d.shape[0]):
        s = status[j]
        if s == BASIC:
            continue
        if ub[j] - lb[j] <= 0.0:
            continue
        if s == AT_LOWER:
            v = -d[j]
        else:
            v = d[j]
        if v > best_v:
            best_v = v
            best = j
    return best


def _entering_dantzig_np(d, status, lb, ub, tol):
    viol = np.where(status == AT_LOWER, -d, np.where(status == AT_UPPER, d, -np.inf))
    viol = np.where(ub - lb <= 0.0, -np.inf, viol)
    j = int(np.argmax(viol))
    return j if viol[j] > tol else -1


def _entering_bland_py(d, status, lb, ub, tol):
    """Lowest-index eligible column (anti-cycling rule)."""
    for j in range(d.shape[0]):
        s = status[j]
        if s == BASIC:
            continue
        if ub[j] - lb[j] <= 0.0:
            continue
        if s == AT_LOWER:
            if d[j] < -tol:
                return j
        elif d[j] > tol:
            return j
    return -1


def _entering_bland_np(d, status, lb, ub, tol):
    elig = ((status == AT_LOWER) & (d < -tol)) | ((status == AT_UPPER) & (d > tol))
    elig &= ub - lb > 0.0
    idx = np.nonzero(elig)[0]
    return int(idx[0]) if idx.size else -1


def _ratio_test_py(col, x_b, basis, lb, ub, dirn, range_e, tol, bland):
    """Step length for an entering column moving with direction ``dirn``.

    Returns ``(t, row, side)``: ``row == -1`` means the entering variable
    reaches its opposite bound first (bound flip), otherwise ``row`` is
    the leaving basic row and ``side`` records which of its bounds it
    hit (1 = lower, 2 = upper).  ``t`` is ``inf`` when nothing limits
    the move (unbounded direction).  Under ``bland`` the tie-break among
    equal minimal ratios is the lowest basic-variable index, otherwise
    the lowest row index wins.
    """
    m = col.shape[0]
    t_best = range_e
    row = -1
    side = 0
    for i in range(m):
        a = dirn * col[i]
        bi = basis[i]
        if a > tol:
            lim = (x_b[i] - lb[bi]) / a
            s = 1
        elif a < -tol:
            u = ub[bi]
            if np.isinf(u):
                continue
            lim = (u - x_b[i]) / (-a)
            s = 2
        else:
            continue
        if lim < 0.0:
            lim = 0.0
        if lim < t_best:
            t_best = lim
            row = i
            side = s
        elif bland and row >= 0 and lim == t_best and basis[i] < basis[row]:
            row = i
            side = s
    return t_best, row, side


def _ratio_test_np(col, x_b, basis, lb, ub, dirn, range_e, tol, bland):
    a = dirn * col
    lb_b = lb[basis]
    ub_b = ub[basis]
    lim = np.full(a.shape[0], np.inf)
    pos = a > tol
    neg = (a < -tol) & np.isfinite(ub_b)
    if pos.any():
        lim[pos] = (x_b[pos] - lb_b[pos]) / a[pos]
    if neg.any():
        lim[neg] = (ub_b[neg] - x_b[neg]) / (-a[neg])
    np.maximum(lim, 0.0, out=lim)
    t_rows = lim.min() if lim.size else np.inf
    if t_rows >= range_e:
        return range_e, -1, 0
    if bland:
        ties = np.nonzero(lim == t_rows)[0]
        row = int(ties[np.argmin(basis[ties])])
    else:
        row = int(np.argmin(lim))
    side = 1 if a[row] > 0.0 else 2
    return t_rows, row, side


def _pivot_update_py(T, d, x_b, r, e, dirn, t, enter_val):
    """In-place pivot at (r, e): update basics, eliminate column e.

    ``x_b`` is adjusted with the pre-pivot column, row ``r`` is scaled by
    the pivot element, every other row and the reduced-cost row are
    eliminated against it.
    """
    m, ncols = T.shape
    if t != 0.0:
        step = dirn * t
        for i in range(m):
            if i != r:
                x_b[i] -= step * T[i, e]
    x_b[r] = enter_val
    piv = T[r, e]
    for jj in range(ncols):
        T[r, jj] /= piv
    T[r, e] = 1.0
    for i in range(m):
        if i == r:
            continue
        f = T[i, e]
        if f != 0.0:
            for jj in range(ncols):
                T[i, jj] -= f * T[r, jj]
            T[i, e] = 0.0
    de = d[e]
    if de != 0.0:
        for jj in range(ncols):
            d[jj] -= de * T[r, jj]
        d[e] = 0.0


def _pivot_update_np(T, d, x_b, r, e, dirn, t, enter_val):
    col = T[:, e].copy()
    if t != 0.0:
        x_b -= (dirn * t) * col
    x_b[r] = enter_val
    T[r] /= col[r]
    T[r, e] = 1.0
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, e] = 0.0
    T[r, e] = 1.0
    de = d[e]
    if de != 0.0:
        d -= de * T[r]
        d[e] = 0.0


# ---------------------------------------------------------------------------
# Kendall pair counting
# ---------------------------------------------------------------------------


def _kendall_s_py(x, y):
    """Sum over pairs i<j of sign(x_j-x_i)*sign(y_j-y_i)."""
    n = x.shape[0]
    s = 0
    for i in range(n - 1):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = x[j] - xi
            dy = y[j] - yi
            if dx > 0.0:
                if dy > 0.0:
                    s += 1
                elif dy < 0.0:
                    s -= 1
            elif dx < 0.0:
                if dy > 0.0:
                    s -= 1
                elif dy < 0.0:
                    s += 1
    return s


def _kendall_s_np(x, y):
    n = x.shape[0]
    s = 0
    for i in range(n - 1):
        dx = np.sign(x[i + 1 :] - x[i])
        dy = np.sign(y[i + 1 :] - y[i])
        s += int(np.sum(dx * dy))
    return s


# ---------------------------------------------------------------------------
# k-means assignment
# ---------------------------------------------------------------------------


def _assign_points_py(X, C):
    """Nearest centroid per row by squared distance; ties to lowest index."""
    n, nf = X.shape
    k = C.shape[0]
    labels = np.empty(n, np.int64)
    dists = np.empty(n, np.float64)
    for i in range(n):
        best = 0
        best_d = np.inf
        for c in range(k):
            acc = 0.0
            for f in range(nf):
                diff = X[i, f] - C[c, f]
                acc += diff * diff
            if acc < best_d:
                best_d = acc
                best = c
        labels[i] = best
        dists[i] = best_d
    return labels, dists


def _assign_points_np(X, C):
    n = X.shape[0]
    labels = np.empty(n, np.int64)
    dists = np.empty(n, np.float64)
    if n == 0:
        return labels, dists
    per_row = max(1, C.shape[0] * max(1, X.shape[1]))
    step = max(1, 4_000_000 // per_row)
    for s in range(0, n, step):
        blk = X[s : s + step]
        d2 = ((blk[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        lab = np.argmin(d2, axis=1)
        labels[s : s + step] = lab
        dists[s : s + step] = d2[np.arange(blk.shape[0]), lab]
    return labels, dists


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

BACKEND = "numpy"
if _numba_wanted():
    try:
        from numba import njit

        BACKEND = "numba"
    except ImportError:
        pass

if BACKEND == "numba":
    _jit = njit(cache=True, fastmath=False)
    entering_dantzig = _jit(_entering_dantzig_py)
    entering_bland = _jit(_entering_bland_py)
    ratio_test = _jit(_ratio_test_py)
    pivot_update = _jit(_pivot_update_py)
    kendall_s = _jit(_kendall_s_py)
    assign_points = _jit(_assign_points_py)
else:
    entering_dantzig = _entering_dantzig_np
    entering_bland = _entering_bland_np
    ratio_test = _ratio_test_np
    pivot_update = _pivot_update_np
    kendall_s = _kendall_s_np
    assign_points = _assign_points_np
