"""Probability identities for VQA answer scoring and the pair/element
joins that turn logit files into score sets."""

import math
import random

import pytest

from musebench.errors import ValidationFailure
from musebench.records import GeneratedQuestion, ImagePair, VqaLogits
from musebench.vqa import (
    binarize_elements,
    binarize_truth,
    combine_os_es,
    es_avg,
    expected_answer_score,
    pn_fuse,
    score_pairs_expected,
    score_pairs_pn,
    to_prediction,
    yes_probability,
)


class TestYesProbability:
    def test_equal_logits_give_exactly_half(self):
        rng = random.Random(41)
        for _ in range(10_000):
            v = rng.uniform(-700, 700)
            assert yes_probability(v, v) == 0.5

    def test_shift_invariance(self):
        rng = random.Random(42)
        for _ in range(10_000):
            a = rng.uniform(-30, 30)
            b = rng.uniform(-30, 30)
            c = rng.uniform(-500, 500)
            assert abs(yes_probability(a + c, b + c) - yes_probability(a, b)) < 1e-12

    def test_extreme_gap_saturates_without_overflow(self):
        assert yes_probability(1000.0, -1000.0) == 1.0
        assert yes_probability(-1000.0, 1000.0) == 0.0

    def test_complement(self):
        rng = random.Random(43)
        for _ in range(1000):
            a, b = rng.uniform(-20, 20), rng.uniform(-20, 20)
            assert abs(yes_probability(a, b) + yes_probability(b, a) - 1.0) < 1e-15

    def test_matches_softmax(self):
        assert math.isclose(
            yes_probability(1.0, 0.0), math.exp(1) / (math.exp(1) + 1), rel_tol=1e-15
        )

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationFailure):
            yes_probability(float("nan"), 0.0)
        with pytest.raises(ValidationFailure):
            yes_probability(0.0, float("inf"))


class TestPnFuse:
    def test_identities(self):
        rng = random.Random(44)
        for _ in range(10_000):
            p = rng.random()
            assert pn_fuse(p, p) == 0.5
        assert pn_fuse(1.0, 0.0) == 1.0
        assert pn_fuse(0.0, 1.0) == 0.0

    def test_complement_symmetry(self):
        rng = random.Random(45)
        for _ in range(10_000):
            p, q = rng.random(), rng.random()
            assert pn_fuse(p, q) + pn_fuse(q, p) == 1.0

    def test_range_and_bad_input(self):
        rng = random.Random(46)
        for _ in range(1000):
            assert 0.0 <= pn_fuse(rng.random(), rng.random()) <= 1.0
        with pytest.raises(ValidationFailure):
            pn_fuse(1.2, 0.5)
        with pytest.raises(ValidationFailure):
            pn_fuse(0.5, -0.1)


class TestExpectedAnswerScore:
    def test_yes_and_no(self):
        assert expected_answer_score(0.7, "yes") == 0.7
        assert expected_answer_score(0.7, "no") == pytest.approx(0.3)

    def test_bad_answer(self):
        with pytest.raises(ValidationFailure):
            expected_answer_score(0.5, "maybe")

    def test_bad_probability(self):
        with pytest.raises(ValidationFailure):
            expected_answer_score(1.5, "yes")


class TestAverages:
    def test_es_avg(self):
        assert es_avg({"a": 1.0, "b": 0.0}) == 0.5
        with pytest.raises(ValidationFailure):
            es_avg({})

    def test_combine(self):
        assert combine_os_es(1.0, 0.0, 0.25) == 0.25
        assert combine_os_es(0.8, 0.4) == pytest.approx(0.6)
        with pytest.raises(ValidationFailure):
            combine_os_es(0.5, 0.5, 2.0)

    def test_binarize(self):
        assert binarize_elements({"a": 0.5, "b": 0.51}, 0.5) == {"a": 0, "b": 1}
        # an exact 50/50 human split is not aligned
        assert binarize_truth({"a": 0.5, "b": 2 / 3}) == {"a": 0, "b": 1}


def logit_row(pair, element, variant, ly, ln):
    return VqaLogits(
        pair_id=pair, element=element, variant=variant, logit_yes=ly, logit_no=ln
    )


class TestScorePairsPn:
    def test_two_pairs(self):
        rows = [
            logit_row("pr-2", "dog (animal)", "positive", 2.0, 0.0),
            logit_row("pr-2", "dog (animal)", "negative", -1.0, 1.0),
            logit_row("pr-1", "hat (object)", "positive", 0.0, 0.0),
            logit_row("pr-1", "hat (object)", "negative", 0.0, 0.0),
        ]
        out = score_pairs_pn(rows)
        assert [s.pair_id for s in out] == ["pr-1", "pr-2"]
        assert out[0].scores["hat (object)"] == 0.5
        want = pn_fuse(yes_probability(2.0, 0.0), yes_probability(-1.0, 1.0))
        assert out[1].scores["dog (animal)"] == want
        assert out[1].source == "pn_vqa"

    def test_missing_variant_names_the_spot(self):
        rows = [logit_row("pr-1", "hat (object)", "positive", 1.0, 0.0)]
        with pytest.raises(ValidationFailure, match="negative"):
            score_pairs_pn(rows)

    def test_duplicate_variant_rejected(self):
        rows = [
            logit_row("pr-1", "hat (object)", "positive", 1.0, 0.0),
            logit_row("pr-1", "hat (object)", "positive", 2.0, 0.0),
        ]
        with pytest.raises(ValidationFailure, match="duplicate"):
            score_pairs_pn(rows)

    def test_source_label_passthrough(self):
        rows = [
            logit_row("pr-1", "hat (object)", "positive", 1.0, 0.0),
            logit_row("pr-1", "hat (object)", "negative", 0.0, 1.0),
        ]
        out = score_pairs_pn(rows, source="pn_vqa_no_prompt")
        assert out[0].source == "pn_vqa_no_prompt"


def question(prompt, element, answer):
    return GeneratedQuestion(
        prompt_id=prompt,
        element=element,
        question=f"is there a {element}?",
        answer=answer,
    )


PAIRS = [
    ImagePair(pair_id="pr-1", prompt_id="p-1", model_name="m", image_uri="a.png"),
    ImagePair(pair_id="pr-2", prompt_id="p-2", model_name="m", image_uri="b.png"),
]


class TestScorePairsExpected:
    def test_join_and_expected_no(self):
        rows = [
            logit_row("pr-1", "hat (object)", "plain", 1.0, 0.0),
            logit_row("pr-2", "dog (animal)", "plain", 1.0, 0.0),
        ]
        qs = [
            question("p-1", "hat (object)", "yes"),
            question("p-2", "dog (animal)", "no"),
        ]
        out = score_pairs_expected(rows, qs, PAIRS)
        p = yes_probability(1.0, 0.0)
        assert out[0].scores["hat (object)"] == p
        assert out[1].scores["dog (animal)"] == 1.0 - p
        assert out[0].source == "tifa_vqa"

    def test_unparsed_question_is_invisible(self):
        rows = [logit_row("pr-1", "hat (object)", "plain", 1.0, 0.0)]
        qs = [
            GeneratedQuestion(
                prompt_id="p-1", element="hat (object)", question=None, answer=None
            )
        ]
        with pytest.raises(ValidationFailure, match="expected answer"):
            score_pairs_expected(rows, qs, PAIRS)

    def test_unknown_pair(self):
        rows = [logit_row("pr-9", "hat (object)", "plain", 1.0, 0.0)]
        with pytest.raises(ValidationFailure, match="pairs file"):
            score_pairs_expected(rows, [question("p-1", "hat (object)", "yes")], PAIRS)

    def test_plain_variant_required(self):
        rows = [logit_row("pr-1", "hat (object)", "positive", 1.0, 0.0)]
        with pytest.raises(ValidationFailure, match="plain"):
            score_pairs_expected(rows, [question("p-1", "hat (object)", "yes")], PAIRS)


class TestToPrediction:
    def test_lift(self):
        sets = score_pairs_pn(
            [
                logit_row("pr-1", "a (object)", "positive", 3.0, 0.0),
                logit_row("pr-1", "a (object)", "negative", 0.0, 3.0),
                logit_row("pr-1", "b (color)", "positive", 0.0, 0.0),
                logit_row("pr-1", "b (color)", "negative", 0.0, 0.0),
            ]
        )
        pred = to_prediction(sets[0])
        assert pred.pair_id == "pr-1"
        assert pred.source == "pn_vqa"
        assert pred.overall_score == es_avg(sets[0].scores)
        assert pred.element_scores == sets[0].scores
