"""Aggregating raw annotations into per-pair truth and per-prompt spread.

A pair's overall score is the arithmetic mean of its 3-6 Likert scores;
element truth is the mean of the non-null 0/1 votes.  A score range of
two or more flags the pair for re-annotation.  Pairs discarded as nsfw
keep their record but drop out of every downstream statistic.

prompt_sigma measures how much a prompt's images disagree: the
population standard deviation of the per-image overall scores (switch
to the true variance with use_variance).  The training-loss helpers
weight a sample by exp(sigma) and combine the three loss terms as

    exp(sigma) * (l_overall + lam*l_element + eta*l_mask)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationFailure
from .records import AggregatedPair, AnnotationRecord, ImagePair
from .vocab import element_category


def aggregate_pair(record: AnnotationRecord) -> AggregatedPair:
    scores = record.alignment_scores
    overall = sum(scores) / len(scores)
    truth = {}
    skipped = []
    for key in sorted(record.element_votes):
        votes = [v for v in record.element_votes[key] if v is not None]
        if not votes:
            skipped.append(key)
            continue
        truth[key] = sum(votes) / len(votes)
    return AggregatedPair(
        pair_id=record.pair_id,
        overall=overall,
        element_truth=truth,
        needs_reannotation=(max(scores) - min(scores)) >= 2,
        discarded=record.nsfw_discard,
        skipped_elements=tuple(skipped),
    )


def aggregate_records(records: Iterable[AnnotationRecord]) -> list[AggregatedPair]:
    seen = set()
    out = []
    for rec in records:
        if rec.pair_id in seen:
            raise ValidationFailure(f"duplicate annotation for pair {rec.pair_id!r}")
        seen.add(rec.pair_id)
        out.append(aggregate_pair(rec))
    return out


def group_scores_by_prompt(
    aggregated: Sequence[AggregatedPair], pairs: Sequence[ImagePair]
) -> dict[str, list[float]]:
    """Per-prompt list of overall scores, discarded pairs excluded.

    Order within a prompt follows sorted pair ids, so the grouping is
    reproducible regardless of input order.
    """
    prompt_of = {p.pair_id: p.prompt_id for p in pairs}
    per_prompt: dict[str, list[tuple[str, float]]] = {}
    for agg in aggregated:
        if agg.discarded:
            continue
        if agg.pair_id not in prompt_of:
            raise ValidationFailure(f"pair {agg.pair_id!r} missing from the pairs file")
        per_prompt.setdefault(prompt_of[agg.pair_id], []).append((agg.pair_id, agg.overall))
    return {
        pid: [s for _, s in sorted(rows)] for pid, rows in sorted(per_prompt.items())
    }


def prompt_sigma(scores: Sequence[float], *, use_variance: bool = False) -> float:
    """Population spread of one prompt's per-image overall scores."""
    if not scores:
        raise ValidationFailure("prompt has no usable scores")
    arr = np.asarray(scores, dtype=np.float64)
    var = float(np.mean((arr - arr.mean()) ** 2))
    return var if use_variance else math.sqrt(var)


def loss_weight(sigma: float) -> float:
    """exp(sigma); 1 at sigma == 0, grows with annotator disagreement."""
    if sigma < 0:
        raise ValidationFailure("sigma must be non-negative")
    return math.exp(sigma)


def combine_losses(
    l_overall: float,
    l_element: float,
    l_mask: float,
    *,
    sigma: float,
    lam: float = 0.1,
    eta: float = 0.1,
) -> float:
    for name, v in (("l_overall", l_overall), ("l_element", l_element), ("l_mask", l_mask)):
        if v < 0:
            raise ValidationFailure(f"{name} must be non-negative")
    return loss_weight(sigma) * (l_overall + (lam * l_element + eta * l_mask))


@dataclass(frozen=True)
class StatsReport:
    """Corpus-level statistics over the non-discarded pairs."""

    n_pairs: int
    n_discarded: int
    n_flagged: int
    score_bins: tuple[float, ...]  # bin edges over [1, 5]
    score_hist: tuple[int, ...]
    range_values: tuple[int, ...]  # observed max-min score differences
    range_hist: tuple[int, ...]
    category_counts: Mapping[str, int] = field(default_factory=dict)
    category_mean_truth: Mapping[str, float] = field(default_factory=dict)

    def fraction_range_below(self, cutoff: int) -> float:
        total = sum(self.range_hist)
        if total == 0:
            raise ValidationFailure("no pairs to summarize")
        got = sum(c for v, c in zip(self.range_values, self.range_hist) if v < cutoff)
        return got / total

    def to_json_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_discarded": self.n_discarded,
            "n_flagged": self.n_flagged,
            "score_bins": list(self.score_bins),
            "score_hist": list(self.score_hist),
            "range_values": list(self.range_values),
            "range_hist": list(self.range_hist),
            "category_counts": dict(self.category_counts),
            "category_mean_truth": dict(self.category_mean_truth),
        }

    def to_csv(self) -> str:
        lines = ["table,key,value,extra"]
        lines.append(f"summary,n_pairs,{self.n_pairs},")
        lines.append(f"summary,n_discarded,{self.n_discarded},")
        lines.append(f"summary,n_flagged,{self.n_flagged},")
        for left, right, count in zip(self.score_bins, self.score_bins[1:], self.score_hist):
            lines.append(f"score_hist,{left:g}..{right:g},{count},")
        for value, count in zip(self.range_values, self.range_hist):
            lines.append(f"range_hist,{value},{count},")
        for cat in self.category_counts:
            lines.append(
                f"category,{cat},{self.category_counts[cat]},"
                f"{self.category_mean_truth[cat]:.6f}"
            )
        return "\n".join(lines) + "\n"


def dataset_stats(records: Sequence[AnnotationRecord], *, bins: int = 8) -> StatsReport:
    """Histogram the overall scores and score ranges, and summarize the
    element pool per category; discarded pairs are excluded throughout."""
    if bins < 1:
        raise ValidationFailure("bins must be positive")
    kept = [r for r in records if not r.nsfw_discard]
    n_discarded = len(records) - len(kept)
    overalls = []
    ranges = []
    cat_counts: dict[str, int] = {}
    cat_sum: dict[str, float] = {}
    flagged = 0
    for rec in kept:
        agg = aggregate_pair(rec)
        overalls.append(agg.overall)
        ranges.append(max(rec.alignment_scores) - min(rec.alignment_scores))
        if agg.needs_reannotation:
            flagged += 1
        for key, truth in agg.element_truth.items():
            cat = element_category(key)
            cat_counts[cat] = cat_counts.get(cat, 0) + 1
            cat_sum[cat] = cat_sum.get(cat, 0.0) + truth
    edges = np.linspace(1.0, 5.0, bins + 1)
    hist, _ = np.histogram(np.asarray(overalls, dtype=np.float64), bins=edges)
    rng_values = sorted(set(ranges))
    rng_hist = [ranges.count(v) for v in rng_values]
    cats = sorted(cat_counts)
    return StatsReport(
        n_pairs=len(kept),
        n_discarded=n_discarded,
        n_flagged=flagged,
        score_bins=tuple(float(e) for e in edges),
        score_hist=tuple(int(h) for h in hist),
        range_values=tuple(rng_values),
        range_hist=tuple(rng_hist),
        category_counts={c: cat_counts[c] for c in cats},
        category_mean_truth={c: cat_sum[c] / cat_counts[c] for c in cats},
    )
