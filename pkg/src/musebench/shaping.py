"""Selecting a fixed-size subset whose category counts track target ratios.

A corpus of K samples carries one binary membership matrix per grouping
dimension (rows = categories, columns = samples; multi-label rows are
fine).  Choosing a subset of size N induces per-category counts, and the
quality of a subset is the L1 deviation of those counts from N times the
target ratios, summed over dimensions:

    objective(S) = sum_m || B^m x_S - N * D_m ||_1

Targets are stored as exact rationals (integer numerators over a common
per-dimension denominator).  Every candidate comparison - the greedy
deltas, the exhaustive oracle's minimum, the branch-and-bound incumbent
in :mod:`musebench.milp` - happens in scaled integer arithmetic, and the
float objective is a single division by the common denominator.  Exact
ties therefore never get split by float summation order, and two solvers
that agree on the integer objective report byte-equal floats.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationFailure

# int64 headroom guard for the vectorized objective paths
_I64_SAFE = 2**62


@dataclass(frozen=True)
class Dimension:
    """One grouping dimension: a binary categories-by-samples matrix."""

    name: str
    matrix: np.ndarray  # shape (H, K), entries 0/1
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2:
            raise ValidationFailure(f"dimension {self.name!r}: matrix must be 2-D")
        if m.size and not np.isin(m, (0, 1)).all():
            raise ValidationFailure(f"dimension {self.name!r}: entries must be 0/1")
        object.__setattr__(self, "matrix", m.astype(np.int64))
        if self.categories and len(self.categories) != m.shape[0]:
            raise ValidationFailure(
                f"dimension {self.name!r}: {len(self.categories)} category names "
                f"for {m.shape[0]} rows"
            )


@dataclass(frozen=True)
class MembershipMatrices:
    """All grouping dimensions over one corpus of n_samples columns."""

    dims: tuple[Dimension, ...]
    n_samples: int

    def __post_init__(self):
        for d in self.dims:
            if d.matrix.shape[1] != self.n_samples:
                raise ValidationFailure(
                    f"dimension {d.name!r} has {d.matrix.shape[1]} columns, "
                    f"corpus has {self.n_samples}"
                )

    @property
    def total_rows(self) -> int:
        return sum(d.matrix.shape[0] for d in self.dims)

    def restrict(self, columns: np.ndarray) -> "MembershipMatrices":
        """New corpus keeping only the given columns (in the given order)."""
        cols = np.asarray(columns, dtype=np.int64)
        dims = tuple(
            Dimension(d.name, d.matrix[:, cols], d.categories) for d in self.dims
        )
        return MembershipMatrices(dims, int(cols.size))


@dataclass(frozen=True)
class TargetDistribution:
    """Per-dimension target ratios plus the selection size N.

    ``ratios[m]`` holds floats for display; ``nums[m]`` / ``dens[m]`` is
    the exact rational form actually used for arithmetic
    (ratios[m][i] == nums[m][i] / dens[m]).
    """

    ratios: tuple[np.ndarray, ...]
    n_select: int
    nums: tuple[np.ndarray, ...]
    dens: tuple[int, ...]

    @classmethod
    def from_ratios(cls, ratios: Sequence[Sequence[float]], n_select: int):
        """Exactify arbitrary float ratios via their binary representation."""
        rr, nn, dd = [], [], []
        for vec in ratios:
            fracs = [Fraction(float(v)) for v in vec]
            den = 1
            for f in fracs:
                den = den * f.denominator // math.gcd(den, f.denominator)
            nums = np.array([int(f * den) for f in fracs], dtype=object)
            rr.append(np.asarray(vec, dtype=np.float64))
            nn.append(nums)
            dd.append(den)
        return cls(tuple(rr), int(n_select), tuple(nn), tuple(dd))

    @property
    def common_denominator(self) -> int:
        return math.lcm(*self.dens) if self.dens else 1


@dataclass(frozen=True)
class Selection:
    """A chosen subset with its objective and what the value is backed by.

    proof_kind is "optimal", "bound_gap" (gap carries the incumbent
    minus the best remaining lower bound) or "heuristic".
    """

    chosen: tuple[int, ...]
    objective: float
    proof_kind: str
    gap: float | None = None

    def to_json_dict(self) -> dict:
        proof: dict = {"kind": self.proof_kind}
        if self.gap is not None:
            proof["gap"] = self.gap
        return {"chosen": list(self.chosen), "objective": self.objective, "proof": proof}


@dataclass(frozen=True)
class ShapingProblem:
    """A membership corpus together with its target distribution."""

    memberships: MembershipMatrices
    targets: TargetDistribution

    def __post_init__(self):
        if len(self.targets.ratios) != len(self.memberships.dims):
            raise ValidationFailure("targets and memberships disagree on dimensions")
        for d, r in zip(self.memberships.dims, self.targets.ratios):
            if r.shape[0] != d.matrix.shape[0]:
                raise ValidationFailure(
                    f"dimension {d.name!r}: {r.shape[0]} targets for "
                    f"{d.matrix.shape[0]} categories"
                )

    def to_json_dict(self) -> dict:
        dims = []
        for d in self.memberships.dims:
            members = [np.nonzero(d.matrix[i])[0].tolist() for i in range(d.matrix.shape[0])]
            entry = {"name": d.name, "members": members}
            if d.categories:
                entry["categories"] = list(d.categories)
            dims.append(entry)
        return {
            "n_samples": self.memberships.n_samples,
            "n_select": self.targets.n_select,
            "dimensions": dims,
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "ShapingProblem":
        try:
            k = int(obj["n_samples"])
            n = int(obj["n_select"])
            dim_objs = obj["dimensions"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationFailure(f"bad shaping problem JSON: {exc}") from exc
        dims = []
        for dobj in dim_objs:
            members = dobj["members"]
            mat = np.zeros((len(members), k), dtype=np.int64)
            for i, idxs in enumerate(members):
                for s in idxs:
                    if not 0 <= int(s) < k:
                        raise ValidationFailure(
                            f"dimension {dobj.get('name')!r}: sample index {s} out of range"
                        )
                    mat[i, int(s)] = 1
            dims.append(
                Dimension(str(dobj.get("name", f"dim{len(dims)}")), mat,
                          tuple(dobj.get("categories", ())))
            )
        memberships = MembershipMatrices(tuple(dims), k)
        return cls(memberships, build_targets(memberships, n))

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    @classmethod
    def load_json(cls, text: str) -> "ShapingProblem":
        return cls.from_json_dict(json.loads(text))


def build_targets(memberships: MembershipMatrices, n_select: int) -> TargetDistribution:
    """Uniform within-dimension targets: each entry of D_m is
    (labels in dimension m / K) / H_m, exactly.

    A dimension with no labels at all gets an all-zero target.
    """
    k = memberships.n_samples
    if not 0 < n_select <= k:
        raise ValidationFailure(f"n_select must be in 1..{k}, got {n_select}")
    ratios, nums, dens = [], [], []
    for d in memberships.dims:
        h = d.matrix.shape[0]
        if h == 0:
            raise ValidationFailure(f"dimension {d.name!r} has no categories")
        labels = int(d.matrix.sum())
        den = k * h
        g = math.gcd(labels, den)
        num, den = labels // g, den // g
        ratios.append(np.full(h, labels / (k * h)))
        nums.append(np.full(h, num, dtype=object))
        dens.append(den)
    return TargetDistribution(tuple(ratios), int(n_select), tuple(nums), tuple(dens))


# ---------------------------------------------------------------------------
# exact objective machinery
# ---------------------------------------------------------------------------


def _weights(targets: TargetDistribution) -> tuple[int, tuple[int, ...]]:
    q = targets.common_denominator
    return q, tuple(q // d for d in targets.dens)


def _int_objective(counts_per_dim, targets: TargetDistribution) -> int:
    """Scaled integer objective: Q * sum_m ||counts_m - N*D_m||_1."""
    q, w = _weights(targets)
    n = targets.n_select
    total = 0
    for cm, num, den, wm in zip(counts_per_dim, targets.nums, targets.dens, w):
        s = 0
        for ci, pi in zip(cm.tolist(), num.tolist()):
            s += abs(int(ci) * den - n * int(pi))
        total += s * wm
    return total


def _counts(memberships: MembershipMatrices, chosen: np.ndarray):
    return [d.matrix[:, chosen].sum(axis=1) for d in memberships.dims]


def evaluate_objective(problem: ShapingProblem, chosen: Sequence[int]) -> float:
    """Exact L1 deviation of the chosen subset from the targets.

    The subset must have exactly N distinct in-range indices.
    """
    ch = np.asarray(sorted(chosen), dtype=np.int64)
    n = problem.targets.n_select
    k = problem.memberships.n_samples
    if ch.size != n:
        raise ValidationFailure(f"selection has {ch.size} samples, expected {n}")
    if ch.size != np.unique(ch).size:
        raise ValidationFailure("selection contains duplicate indices")
    if ch.size and (ch[0] < 0 or ch[-1] >= k):
        raise ValidationFailure("selection index out of range")
    q = problem.targets.common_denominator
    return _int_objective(_counts(problem.memberships, ch), problem.targets) / q


def _int64_targets(targets: TargetDistribution, n_samples: int | None = None):
    """(nums, dens, weights, Q) as int64 arrays when every intermediate of
    the vectorized objective provably fits in int64, else None."""
    q, w = _weights(targets)
    if q >= _I64_SAFE:
        return None
    n = targets.n_select
    k = n_samples if n_samples is not None else n
    worst = 0
    for num, den, wm in zip(targets.nums, targets.dens, w):
        num_max = max((int(v) for v in num.tolist()), default=0)
        worst += len(num) * max(k * den, n * num_max + k * den) * wm
    if worst >= _I64_SAFE:
        return None
    return (
        [np.asarray([int(v) for v in num.tolist()], dtype=np.int64) for num in targets.nums],
        targets.dens,
        w,
        q,
    )


def _delta_vectors(counts_per_dim, tb, n_select):
    """Per-dimension integer cost change of bumping each category by one."""
    nums, dens, w, _ = tb
    out = []
    for cm, num, den, wm in zip(counts_per_dim, nums, dens, w):
        cur = np.abs(cm * den - n_select * num)
        up = np.abs((cm + 1) * den - n_select * num)
        out.append((up - cur) * wm)
    return out


# ---------------------------------------------------------------------------
# greedy warm start
# ---------------------------------------------------------------------------


def greedy_shape(problem: ShapingProblem) -> Selection:
    """N insertions, each minimizing the objective increase, then 1-swap
    local search to a local optimum.  All ties break to the lowest index,
    so the result is deterministic.
    """
    mem, targets = problem.memberships, problem.targets
    k, n = mem.n_samples, targets.n_select
    tb = _int64_targets(targets, k)
    if tb is None:
        raise ValidationFailure(
            "targets too large for the integer fast path; rebuild via build_targets"
        )
    mats = [d.matrix for d in mem.dims]
    counts = [np.zeros(m.shape[0], dtype=np.int64) for m in mats]
    chosen_mask = np.zeros(k, dtype=bool)
    chosen: list[int] = []

    big = np.iinfo(np.int64).max
    for _ in range(n):
        delta = np.zeros(k, dtype=np.int64)
        for m, dv in zip(mats, _delta_vectors(counts, tb, n)):
            delta += m.T @ dv
        delta[chosen_mask] = big
        j = int(np.argmin(delta))
        chosen.append(j)
        chosen_mask[j] = True
        for cm, m in zip(counts, mats):
            cm += m[:, j]

    # 1-swap local search on the exact integer objective
    obj = _int_objective(counts, targets)
    while True:
        best_gain = 0
        best_pair = None
        for a in sorted(chosen):
            counts_wo = [cm - m[:, a] for cm, m in zip(counts, mats)]
            dec = _int_objective(counts_wo, targets) - obj
            add = np.zeros(k, dtype=np.int64)
            for m, dv in zip(mats, _delta_vectors(counts_wo, tb, n)):
                add += m.T @ dv
            add[chosen_mask] = big
            b = int(np.argmin(add))
            gain = dec + int(add[b])
            if gain < best_gain:
                best_gain = gain
                best_pair = (a, b)
        if best_pair is None:
            break
        a, b = best_pair
        chosen.remove(a)
        chosen.append(b)
        chosen_mask[a] = False
        chosen_mask[b] = True
        for cm, m in zip(counts, mats):
            cm += m[:, b] - m[:, a]
        obj += best_gain

    q = targets.common_denominator
    return Selection(tuple(sorted(chosen)), obj / q, "heuristic")


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


def exhaustive_oracle(problem: ShapingProblem, *, cap: int = 2_000_000) -> Selection:
    """Enumerate every N-subset and return the true optimum.

    Ties resolve to the lexicographically smallest index tuple.  Refuses
    corpora with more than ``cap`` subsets.
    """
    mem, targets = problem.memberships, problem.targets
    k, n = mem.n_samples, targets.n_select
    total = math.comb(k, n)
    if total > cap:
        raise ValidationFailure(
            f"{total} subsets exceed the enumeration cap of {cap}"
        )
    tb = _int64_targets(targets, k)
    q = targets.common_denominator

    best_int = None
    best_subset = None
    batch = 16384
    it = itertools.combinations(range(k), n)
    while True:
        block = list(itertools.islice(it, batch))
        if not block:
            break
        idx = np.asarray(block, dtype=np.int64)
        if tb is not None:
            nums, dens, w, _ = tb
            vals = np.zeros(idx.shape[0], dtype=np.int64)
            for d, num, den, wm in zip(mem.dims, nums, dens, w):
                cnt = d.matrix[:, idx].sum(axis=2)  # (H, nb)
                vals += np.abs(cnt * den - n * num[:, None]).sum(axis=0) * wm
            pos = int(np.argmin(vals))
            cand = int(vals[pos])
        else:
            cand, pos = None, None
            for p, sub in enumerate(block):
                v = _int_objective(_counts(mem, np.asarray(sub)), targets)
                if cand is None or v < cand:
                    cand, pos = v, p
        if best_int is None or cand < best_int:
            best_int = cand
            best_subset = block[pos]
    if best_subset is None:
        raise ValidationFailure("empty enumeration")
    return Selection(tuple(best_subset), best_int / q, "optimal")


# ---------------------------------------------------------------------------
# variance-ranked pre-selection
# ---------------------------------------------------------------------------


def variance_ranked_select(
    variances: Mapping[str, float],
    prompt_ids: Sequence[str],
    memberships: MembershipMatrices,
    *,
    top_k: int,
    final_n: int,
    budget_nodes: int = 1_000_000,
) -> tuple[Selection, list[str]]:
    """Keep the top_k highest-variance prompts, then solve the shaping
    problem over that restricted corpus with N = final_n.

    ``prompt_ids`` names the corpus columns in order; ``variances`` maps
    prompt id to its score-variance measure.  Ranking ties break by
    prompt id.  Returns the selection re-expressed in original column
    indices plus the retained ids (in column order).
    """
    from .milp import assemble_milp, solve_milp

    if len(prompt_ids) != memberships.n_samples:
        raise ValidationFailure("prompt_ids length does not match the corpus")
    missing = [p for p in prompt_ids if p not in variances]
    if missing:
        raise ValidationFailure(f"no variance for prompt {missing[0]!r}")
    if not 0 < final_n <= top_k:
        raise ValidationFailure("need 0 < final_n <= top_k")
    if top_k > len(prompt_ids):
        raise ValidationFailure("top_k exceeds the corpus size")

    order = sorted(range(len(prompt_ids)),
                   key=lambda i: (-float(variances[prompt_ids[i]]), prompt_ids[i]))
    keep = np.asarray(sorted(order[:top_k]), dtype=np.int64)
    sub = memberships.restrict(keep)
    problem = ShapingProblem(sub, build_targets(sub, final_n))
    sel = solve_milp(assemble_milp(problem), budget_nodes=budget_nodes)
    mapped = tuple(int(keep[j]) for j in sel.chosen)
    return (
        Selection(mapped, sel.objective, sel.proof_kind, sel.gap),
        [prompt_ids[i] for i in keep],
    )


def memberships_from_prompts(
    prompts: Sequence,
    *,
    dims: Sequence[str] | None = None,
    registry: Mapping[str, tuple[str, ...] | None] | None = None,
) -> tuple[MembershipMatrices, list[str]]:
    """Binary membership matrices over a list of prompt records.

    ``prompts`` is anything with ``prompt_id`` and ``categories``
    attributes.  Closed dimensions take their category order from the
    registry; open dimensions (cluster labels) use the sorted observed
    labels.  ``dims`` restricts and orders the dimensions; by default
    every registry dimension that appears on at least one prompt is
    used, in registry order.  Returns the matrices plus prompt ids in
    column order.
    """
    from .vocab import DEFAULT_DIMENSIONS

    reg = DEFAULT_DIMENSIONS if registry is None else registry
    present: dict[str, set[str]] = {}
    for p in prompts:
        for dim, cats in p.categories.items():
            present.setdefault(dim, set()).update(cats)
    if dims is None:
        names = [d for d in reg if d in present]
    else:
        names = list(dims)
    if not names:
        raise ValidationFailure("no grouping dimensions to shape on")

    dim_objs = []
    for name in names:
        if name not in reg:
            raise ValidationFailure(f"unknown grouping dimension {name!r}")
        cats = reg[name]
        if cats is None:
            cats = tuple(sorted(present.get(name, ())))
        if not cats:
            raise ValidationFailure(f"dimension {name!r} has no observed labels")
        index = {c: i for i, c in enumerate(cats)}
        mat = np.zeros((len(cats), len(prompts)), dtype=np.int64)
        for j, p in enumerate(prompts):
            for c in p.categories.get(name, ()):
                if c not in index:
                    raise ValidationFailure(
                        f"prompt {p.prompt_id!r}: label {c!r} not in dimension {name!r}"
                    )
                mat[index[c], j] = 1
        dim_objs.append(Dimension(name, mat, tuple(cats)))
    ids = [p.prompt_id for p in prompts]
    return MembershipMatrices(tuple(dim_objs), len(prompts)), ids
