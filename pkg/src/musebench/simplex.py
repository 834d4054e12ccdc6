"""Bounded-variable primal simplex for dense inequality-form LPs.

Solves

    min  c @ x    s.t.  A @ x <= b,   lb <= x <= ub

with a two-phase full-tableau method.  Nonbasic variables sit at one of
their bounds, the entering rule is Dantzig's (most violated reduced
cost, ties to the lowest index) with an automatic switch to Bland's
rule after a run of degenerate pivots, which makes cycling impossible.
Bound flips (the entering variable reaching its opposite bound before
any basic variable leaves) are handled without a basis change.

The hot primitives (entering choice, ratio test, pivot elimination)
live in :mod:`musebench._kernels` and are numba-compiled unless the
``MUSEBENCH_NO_NUMBA`` flag selects the numpy twins.

All tie-breaks are index-deterministic, so a fixed input yields the
same pivot sequence, and the same result, on every run.

References
----------
Dantzig's bounded-variable extension is textbook material; see e.g.
Chvatal, "Linear Programming", ch. 8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import SolverError

_FEAS_TOL = 1e-7
_BLAND_AFTER = 40


@dataclass(frozen=True)
class LpResult:
    """Outcome of a bounded LP solve.

    status is one of "optimal", "infeasible", "unbounded" or
    "iteration_limit"; x and objective are meaningful only for
    "optimal".
    """

    status: str
    objective: float
    x: np.ndarray
    iterations: int


def _run_phase(T, d, x_b, basis, status, lb, ub, tol, max_iters, iters_used):
    """Pivot until no eligible entering column remains.

    Returns (code, iterations) with code 0 = phase optimal,
    1 = unbounded direction, 2 = iteration limit.
    """
    iters = iters_used
    degen_run = 0
    bland = False
    while True:
        if iters >= max_iters:
            return 2, iters
        if bland:
            e = K.entering_bland(d, status, lb, ub, tol)
        else:
            e = K.entering_dantzig(d, status, lb, ub, tol)
        if e < 0:
            return 0, iters
        dirn = 1.0 if status[e] == K.AT_LOWER else -1.0
        col = np.ascontiguousarray(T[:, e])
        range_e = ub[e] - lb[e]
        t, row, side = K.ratio_test(col, x_b, basis, lb, ub, dirn, range_e, tol, bland)
        if np.isinf(t):
            return 1, iters
        if row < 0:
            # bound flip: the entering variable crosses to its other bound
            x_b -= (dirn * t) * col
            status[e] = K.AT_UPPER if dirn > 0 else K.AT_LOWER
        else:
            if dirn > 0:
                enter_val = lb[e] + t
            else:
                enter_val = ub[e] - t
            leave = basis[row]
            K.pivot_update(T, d, x_b, row, e, dirn, t, enter_val)
            basis[row] = e
            status[e] = K.BASIC
            status[leave] = K.AT_LOWER if side == 1 else K.AT_UPPER
        iters += 1
        if t <= tol:
            degen_run += 1
            if degen_run >= _BLAND_AFTER:
                bland = True
        else:
            degen_run = 0
            bland = False


def _values(ntot, status, lb, ub, x_b, basis):
    vals = np.where(status == K.AT_UPPER, ub, lb)[:ntot]
    vals[basis] = x_b
    return vals


def solve_bounded_lp(c, A, b, lb, ub, *, tol=1e-9, max_iters=None) -> LpResult:
    """Minimize c @ x over A @ x <= b, lb <= x <= ub.

    Lower bounds must be finite (upper bounds may be +inf), which is all
    the assembled instances here ever need.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lb = np.asarray(lb, dtype=np.float64)
    ub = np.asarray(ub, dtype=np.float64)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,) or lb.shape != (n,) or ub.shape != (n,):
        raise SolverError("inconsistent LP dimensions")
    if not np.all(np.isfinite(lb)):
        raise SolverError("lower bounds must be finite")
    if np.any(lb > ub):
        return LpResult("infeasible", np.nan, np.empty(0), 0)
    if max_iters is None:
        max_iters = 200 * (m + n) + 2000

    # Slack form: [A | I] x_full = b with slack bounds [0, inf).  Rows whose
    # slack would start negative are negated and given an artificial column,
    # so the initial basis matrix is the identity.
    resid = b - A @ lb
    art_rows = np.nonzero(resid < 0)[0]
    n_art = art_rows.size
    ncols = n + m + n_art

    T = np.zeros((m, ncols))
    T[:, :n] = A
    T[np.arange(m), n + np.arange(m)] = 1.0
    if n_art:
        T[art_rows] = -T[art_rows]
        T[art_rows, n + m + np.arange(n_art)] = 1.0

    lb_full = np.concatenate([lb, np.zeros(m + n_art)])
    ub_full = np.concatenate([ub, np.full(m + n_art, np.inf)])

    status = np.full(ncols, K.AT_LOWER, dtype=np.int64)
    basis = np.empty(m, dtype=np.int64)
    basis[:] = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(n_art)
    status[basis] = K.BASIC
    x_b = np.abs(resid)

    iters = 0
    if n_art:
        c1 = np.zeros(ncols)
        c1[n + m :] = 1.0
        d = c1 - c1[basis] @ T
        code, iters = _run_phase(T, d, x_b, basis, status, lb_full, ub_full, tol, max_iters, iters)
        if code == 2:
            return LpResult("iteration_limit", np.nan, np.empty(0), iters)
        if code == 1:
            raise SolverError("phase-1 objective unbounded; numerical breakdown")
        vals = _values(ncols, status, lb_full, ub_full, x_b, basis)
        if float(vals[n + m :].sum()) > _FEAS_TOL:
            return LpResult("infeasible", np.nan, np.empty(0), iters)
        # Degenerate artificials still in the basis: pivot them onto any
        # usable real column, or pin the (redundant) row if none exists.
        for r in range(m):
            if basis[r] < n + m or abs(x_b[r]) > tol:
                continue
            e = -1
            for j in range(n + m):
                if status[j] != K.BASIC and abs(T[r, j]) > 1e-7:
                    e = j
                    break
            if e >= 0:
                leave = basis[r]
                dirn = 1.0 if status[e] == K.AT_LOWER else -1.0
                enter_val = lb_full[e] if dirn > 0 else ub_full[e]
                K.pivot_update(T, np.zeros(ncols), x_b, r, e, dirn, 0.0, enter_val)
                basis[r] = e
                status[e] = K.BASIC
                status[leave] = K.AT_LOWER
        ub_full[n + m :] = 0.0

    c2 = np.zeros(ncols)
    c2[:n] = c
    d = c2 - c2[basis] @ T
    code, iters = _run_phase(T, d, x_b, basis, status, lb_full, ub_full, tol, max_iters, iters)
    if code == 2:
        return LpResult("iteration_limit", np.nan, np.empty(0), iters)
    if code == 1:
        return LpResult("unbounded", -np.inf, np.empty(0), iters)

    vals = _values(ncols, status, lb_full, ub_full, x_b, basis)
    x = np.clip(vals[:n], lb, ub)
    return LpResult("optimal", float(c @ x), x, iters)
