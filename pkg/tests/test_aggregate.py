"""Annotation aggregation: re-annotation flag, per-prompt spread, loss
weighting, and the corpus stats report."""

import math
import random

import numpy as np
import pytest

from musebench.aggregate import (
    aggregate_pair,
    aggregate_records,
    combine_losses,
    dataset_stats,
    group_scores_by_prompt,
    loss_weight,
    prompt_sigma,
)
from musebench.errors import ValidationFailure
from musebench.records import AnnotationRecord, ImagePair


def random_record(rng, pair_id):
    n_ann = rng.randint(3, 6)
    if rng.random() < 0.5:
        # annotators who mostly agree, so ranges 0-1 show up in bulk
        base = rng.randint(1, 4)
        scores = tuple(base + rng.randint(0, 1) for _ in range(n_ann))
    else:
        scores = tuple(rng.randint(1, 5) for _ in range(n_ann))
    votes = {}
    for i in range(rng.randint(0, 4)):
        votes[f"thing-{i} (object)"] = tuple(
            rng.choice([0, 1, 1, None]) for _ in range(n_ann)
        )
    return AnnotationRecord(
        pair_id=pair_id,
        alignment_scores=scores,
        element_votes=votes,
        nsfw_discard=rng.random() < 0.05,
    )


class TestAggregatePair:
    def test_reannotation_iff_range_two(self):
        rng = random.Random(2025)
        flagged = clean = 0
        for i in range(1000):
            rec = random_record(rng, f"pr-{i:04d}")
            agg = aggregate_pair(rec)
            spread = max(rec.alignment_scores) - min(rec.alignment_scores)
            assert agg.needs_reannotation == (spread >= 2)
            if agg.needs_reannotation:
                flagged += 1
            else:
                clean += 1
        # the generator must exercise both outcomes for this to mean anything
        assert flagged > 100 and clean > 100

    def test_overall_is_plain_mean(self):
        agg = aggregate_pair(AnnotationRecord("pr-1", (2, 3, 4)))
        assert agg.overall == 3.0
        assert agg.needs_reannotation

    def test_element_truth_skips_none_votes(self):
        rec = AnnotationRecord(
            "pr-1",
            (3, 3, 3),
            element_votes={
                "cat (animal)": (1, 0, None),
                "ghost (other)": (None, None, None),
            },
        )
        agg = aggregate_pair(rec)
        assert agg.element_truth == {"cat (animal)": 0.5}
        assert agg.skipped_elements == ("ghost (other)",)

    def test_discard_flag_carried(self):
        rec = AnnotationRecord("pr-1", (3, 3, 3), nsfw_discard=True)
        assert aggregate_pair(rec).discarded

    def test_duplicate_pair_rejected(self):
        recs = [
            AnnotationRecord("pr-1", (3, 3, 3)),
            AnnotationRecord("pr-1", (4, 4, 4)),
        ]
        with pytest.raises(ValidationFailure, match="duplicate"):
            aggregate_records(recs)


class TestPromptSigma:
    def test_constant_scores_have_zero_spread(self):
        assert prompt_sigma([3.0, 3.0, 3.0, 3.0]) == 0.0

    def test_two_four_split(self):
        assert prompt_sigma([2.0, 4.0]) == 1.0
        assert prompt_sigma([2.0, 4.0], use_variance=True) == 1.0

    def test_population_not_sample(self):
        scores = [1.0, 2.0, 3.0, 4.0]
        want = math.sqrt(np.mean((np.array(scores) - 2.5) ** 2))
        assert prompt_sigma(scores) == want
        # ddof=1 would give a strictly larger value
        assert prompt_sigma(scores) < float(np.std(scores, ddof=1))

    def test_empty_rejected(self):
        with pytest.raises(ValidationFailure):
            prompt_sigma([])


class TestLossWeight:
    def test_zero_sigma_is_identity(self):
        assert loss_weight(0.0) == 1.0

    def test_monotone_in_sigma(self):
        grid = [i * 0.1 for i in range(30)]
        weights = [loss_weight(s) for s in grid]
        assert all(b > a for a, b in zip(weights, weights[1:]))

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValidationFailure):
            loss_weight(-0.01)


class TestCombineLosses:
    def test_unit_case(self):
        got = combine_losses(1.0, 1.0, 1.0, sigma=0.0, lam=0.1, eta=0.1)
        assert got == 1.2

    def test_weights_scale_their_terms(self):
        base = combine_losses(2.0, 3.0, 5.0, sigma=0.0, lam=0.0, eta=0.0)
        assert base == 2.0
        got = combine_losses(2.0, 3.0, 5.0, sigma=0.0, lam=0.5, eta=0.2)
        assert got == pytest.approx(2.0 + 1.5 + 1.0)

    def test_sigma_multiplies_everything(self):
        flat = combine_losses(1.0, 2.0, 3.0, sigma=0.0)
        hard = combine_losses(1.0, 2.0, 3.0, sigma=0.7)
        assert hard == pytest.approx(math.exp(0.7) * flat)

    def test_negative_loss_rejected(self):
        with pytest.raises(ValidationFailure, match="l_mask"):
            combine_losses(1.0, 1.0, -1.0, sigma=0.0)


class TestGroupByPrompt:
    PAIRS = [
        ImagePair("pr-b", "p-1", "m1", "b.png"),
        ImagePair("pr-a", "p-1", "m2", "a.png"),
        ImagePair("pr-c", "p-2", "m1", "c.png"),
    ]

    def test_grouping_and_order(self):
        aggs = aggregate_records(
            [
                AnnotationRecord("pr-c", (5, 5, 5)),
                AnnotationRecord("pr-b", (1, 1, 1)),
                AnnotationRecord("pr-a", (3, 3, 3)),
            ]
        )
        groups = group_scores_by_prompt(aggs, self.PAIRS)
        assert groups == {"p-1": [3.0, 1.0], "p-2": [5.0]}
        assert list(groups) == ["p-1", "p-2"]

    def test_discarded_pairs_dropped(self):
        aggs = aggregate_records(
            [
                AnnotationRecord("pr-a", (3, 3, 3)),
                AnnotationRecord("pr-b", (1, 1, 1), nsfw_discard=True),
            ]
        )
        groups = group_scores_by_prompt(aggs, self.PAIRS)
        assert groups == {"p-1": [3.0]}

    def test_unknown_pair_rejected(self):
        aggs = aggregate_records([AnnotationRecord("pr-z", (3, 3, 3))])
        with pytest.raises(ValidationFailure, match="pairs file"):
            group_scores_by_prompt(aggs, self.PAIRS)


class TestDatasetStats:
    def build(self, rng, n=400):
        return [random_record(rng, f"pr-{i:04d}") for i in range(n)]

    def test_counts_add_up(self):
        rng = random.Random(77)
        recs = self.build(rng)
        rep = dataset_stats(recs)
        assert rep.n_pairs + rep.n_discarded == len(recs)
        assert sum(rep.score_hist) == rep.n_pairs
        assert sum(rep.range_hist) == rep.n_pairs
        assert rep.n_flagged == sum(
            1
            for r in recs
            if not r.nsfw_discard
            and max(r.alignment_scores) - min(r.alignment_scores) >= 2
        )

    def test_flag_fraction_consistency(self):
        rng = random.Random(78)
        rep = dataset_stats(self.build(rng))
        assert rep.fraction_range_below(2) == pytest.approx(
            1.0 - rep.n_flagged / rep.n_pairs
        )

    def test_bin_edges_span_likert(self):
        rng = random.Random(79)
        rep = dataset_stats(self.build(rng), bins=4)
        assert rep.score_bins == (1.0, 2.0, 3.0, 4.0, 5.0)

    def test_category_means_in_unit_interval(self):
        rng = random.Random(80)
        rep = dataset_stats(self.build(rng))
        for cat, mean in rep.category_mean_truth.items():
            assert 0.0 <= mean <= 1.0
            assert rep.category_counts[cat] > 0

    def test_csv_and_json_shapes(self):
        rng = random.Random(81)
        rep = dataset_stats(self.build(rng, n=50))
        d = rep.to_json_dict()
        assert d["n_pairs"] == rep.n_pairs
        csv = rep.to_csv()
        assert csv.startswith("table,key,value,extra\n")
        assert f"summary,n_pairs,{rep.n_pairs}," in csv

    def test_bad_bins(self):
        with pytest.raises(ValidationFailure):
            dataset_stats([AnnotationRecord("pr-1", (3, 3, 3))], bins=0)
