"""MILP formulation and branch-and-bound for the shaping objective.

The L1 deviation is linearized with one auxiliary z >= 0 per category:

    min  sum(z)
    s.t. sum(x)          <= N        (rows 0 and 1: equality as two
         -sum(x)         <= -N        opposing inequalities)
         B^m x - z_m     <= N*D_m    (one block per dimension)
         -B^m x - z_m    <= -N*D_m
         x binary, z >= 0

so A has 2 + 2*sum(H_m) rows and K + sum(H_m) columns, with the
positive blocks for every dimension stacked before the negative ones.

solve_milp runs best-first branch-and-bound on the LP relaxation with a
greedy warm start: nodes are ordered by their LP bound, branching picks
the most fractional binary (ties to the lowest index), and the budget
counts LP solves rather than wall-clock, so runs are reproducible.
Incumbent bookkeeping happens in the exact integer objective from
:mod:`musebench.shaping`; with an exhausted budget the result downgrades
to a bound-gap certificate, and a zero budget skips the tree entirely
and returns the greedy selection as a plain heuristic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleProblem, SolverError, ValidationFailure
from .shaping import (
    Selection,
    ShapingProblem,
    _counts,
    _int_objective,
    evaluate_objective,
    greedy_shape,
)
from .simplex import solve_bounded_lp

_INT_TOL = 1e-6


@dataclass(frozen=True)
class MilpInstance:
    """Assembled min c@v s.t. A@v <= b with v = [x, z].

    binary_vars / continuous_vars index into the columns.  The shaping
    problem the instance was assembled from rides along: the solver
    needs it for the greedy warm start and exact objective bookkeeping.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    binary_vars: np.ndarray
    continuous_vars: np.ndarray
    problem: ShapingProblem


@dataclass(frozen=True)
class RelaxationResult:
    x: np.ndarray  # full variable vector [x, z]
    objective: float
    status: str


def assemble_milp(problem: ShapingProblem) -> MilpInstance:
    mem, targets = problem.memberships, problem.targets
    k = mem.n_samples
    n = targets.n_select
    h_total = mem.total_rows
    ncols = k + h_total
    nrows = 2 + 2 * h_total

    A = np.zeros((nrows, ncols))
    b = np.zeros(nrows)
    c = np.zeros(ncols)
    c[k:] = 1.0

    A[0, :k] = 1.0
    b[0] = float(n)
    A[1, :k] = -1.0
    b[1] = -float(n)

    row = 2
    zcol = k
    # positive blocks for all dimensions, then the negative blocks
    offsets = []
    for d, num, den in zip(mem.dims, targets.nums, targets.dens):
        h = d.matrix.shape[0]
        nd = np.array([n * int(v) / den for v in num.tolist()])
        A[row : row + h, :k] = d.matrix
        A[row : row + h, zcol : zcol + h] = -np.eye(h)
        b[row : row + h] = nd
        offsets.append((row, zcol, h, nd))
        row += h
        zcol += h
    for d, (prow, pz, h, nd) in zip(mem.dims, offsets):
        A[row : row + h, :k] = -d.matrix
        A[row : row + h, pz : pz + h] = -np.eye(h)
        b[row : row + h] = -nd
        row += h

    return MilpInstance(
        c=c,
        A=A,
        b=b,
        binary_vars=np.arange(k, dtype=np.int64),
        continuous_vars=np.arange(k, ncols, dtype=np.int64),
        problem=problem,
    )


def _node_bounds(inst: MilpInstance, fix0, fix1):
    k = inst.binary_vars.size
    ncols = inst.c.size
    lb = np.zeros(ncols)
    ub = np.full(ncols, np.inf)
    ub[:k] = 1.0
    if fix0:
        ub[np.fromiter(fix0, dtype=np.int64)] = 0.0
    if fix1:
        lb[np.fromiter(fix1, dtype=np.int64)] = 1.0
    return lb, ub


def solve_lp_relaxation(inst: MilpInstance, *, fix0=(), fix1=()) -> RelaxationResult:
    """LP relaxation (binaries relaxed to [0,1]), optionally with some
    binaries fixed.  The objective of an optimal result lower-bounds
    every integral completion of those fixes."""
    lb, ub = _node_bounds(inst, fix0, fix1)
    res = solve_bounded_lp(inst.c, inst.A, inst.b, lb, ub)
    if res.status == "iteration_limit":
        raise SolverError("simplex iteration limit on a relaxation")
    if res.status == "unbounded":
        raise SolverError("relaxation unbounded; assembled instance is malformed")
    if res.status != "optimal":
        return RelaxationResult(np.empty(0), np.nan, res.status)
    return RelaxationResult(res.x, res.objective, "optimal")


def _integral_candidate(xbin, n):
    """Chosen index tuple when the binary part is integral, else None."""
    frac = np.minimum(xbin, 1.0 - xbin)
    if np.all(frac <= _INT_TOL):
        chosen = np.nonzero(xbin > 0.5)[0]
        if chosen.size == n:
            return chosen
    return None


def solve_milp(inst: MilpInstance, *, budget_nodes: int = 1_000_000) -> Selection:
    """Best-first branch-and-bound; returns the incumbent selection.

    proof_kind is "optimal" when the tree is exhausted, "bound_gap" when
    the node budget ran out first and "heuristic" when budget_nodes is 0
    (pure greedy warm start).
    """
    problem = inst.problem
    targets = problem.targets
    n = targets.n_select
    k = inst.binary_vars.size
    if n > k:
        raise InfeasibleProblem(f"cannot choose {n} of {k} samples")
    q = targets.common_denominator
    # one integer step of the scaled objective is 1/q, so this margin can
    # never prune a strictly better subtree (LP noise is far below it)
    prune_eps = min(1e-6, max(1e-9, 0.25 / q))

    warm = greedy_shape(problem)
    inc_chosen = warm.chosen
    inc_int = _int_objective(_counts(problem.memberships, np.asarray(inc_chosen)), targets)
    if budget_nodes <= 0:
        return Selection(inc_chosen, inc_int / q, "heuristic")

    nodes_used = 0
    seq = 0
    heap: list = []
    open_bounds: dict[int, float] = {}
    budget_hit = False

    def lp_bound(fix0, fix1):
        nonlocal nodes_used
        nodes_used += 1
        rel = solve_lp_relaxation(inst, fix0=fix0, fix1=fix1)
        return rel

    def maybe_update_incumbent(chosen):
        nonlocal inc_chosen, inc_int
        cand = _int_objective(_counts(problem.memberships, chosen), targets)
        if cand < inc_int:
            inc_int = cand
            inc_chosen = tuple(int(i) for i in chosen)

    root = lp_bound((), ())
    if root.status != "optimal":
        raise InfeasibleProblem("root relaxation infeasible")
    cand = _integral_candidate(root.x[:k], n)
    if cand is not None:
        maybe_update_incumbent(cand)
    elif root.objective < inc_int / q - prune_eps:
        heapq.heappush(heap, (root.objective, seq, frozenset(), frozenset(), root.x[:k].copy()))
        open_bounds[seq] = root.objective
        seq += 1

    while heap and not budget_hit:
        bound, node_id, f0, f1, xbin = heapq.heappop(heap)
        del open_bounds[node_id]
        if bound >= inc_int / q - prune_eps:
            continue
        frac = np.minimum(xbin, 1.0 - xbin)
        j = int(np.argmax(frac))
        if frac[j] <= _INT_TOL:
            # numerically integral after all; no variable left to branch on
            cand = _integral_candidate(xbin, n)
            if cand is not None:
                maybe_update_incumbent(cand)
            continue
        for child_f0, child_f1 in (
            (f0 | {j}, f1),
            (f0, f1 | {j}),
        ):
            if len(child_f1) > n or k - len(child_f0) < n:
                continue
            if nodes_used >= budget_nodes:
                budget_hit = True
                # unexpanded children are covered by the parent bound
                open_bounds[seq] = bound
                seq += 1
                break
            rel = lp_bound(child_f0, child_f1)
            if rel.status != "optimal":
                continue
            if rel.objective >= inc_int / q - prune_eps:
                continue
            cand = _integral_candidate(rel.x[:k], n)
            if cand is not None:
                maybe_update_incumbent(cand)
                continue
            heapq.heappush(heap, (rel.objective, seq, child_f0, child_f1, rel.x[:k].copy()))
            open_bounds[seq] = rel.objective
            seq += 1

    if budget_hit or heap:
        best_bound = min(open_bounds.values()) if open_bounds else inc_int / q
        gap = max(0.0, inc_int / q - best_bound)
        return Selection(inc_chosen, inc_int / q, "bound_gap", gap)
    return Selection(inc_chosen, inc_int / q, "optimal")


def random_subset_objectives(
    problem: ShapingProblem, n_subsets: int, seed: int
) -> np.ndarray:
    """Objectives of uniformly drawn N-subsets; the no-effort baseline."""
    rng = np.random.default_rng(seed)
    k = problem.memberships.n_samples
    n = problem.targets.n_select
    out = np.empty(n_subsets)
    for i in range(n_subsets):
        chosen = rng.choice(k, size=n, replace=False)
        out[i] = evaluate_objective(problem, chosen)
    return out
