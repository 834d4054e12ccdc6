"""Turning yes/no logits into element and image scores.

yes_probability is the two-way softmax over the yes/no answer logits
(max-shifted for stability).  An element asked through a paired
positive/negative question fuses as

    score = (P_true + (1 - P_false)) / 2

implemented as 0.5 + (P_true - P_false)/2, which is the same value with
an exactly symmetric complement: fuse(a, b) + fuse(b, a) == 1.0 in
floats, not just within rounding.  The single-question alternative
scores an element as the probability assigned to its expected answer.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

from .errors import ValidationFailure
from .records import (
    ElementScoreSet,
    GeneratedQuestion,
    ImagePair,
    PredictionRecord,
    VqaLogits,
)


def yes_probability(logit_yes: float, logit_no: float) -> float:
    """Softmax probability of the yes answer."""
    if not (math.isfinite(logit_yes) and math.isfinite(logit_no)):
        raise ValidationFailure("logits must be finite")
    m = max(logit_yes, logit_no)
    ey = math.exp(logit_yes - m)
    en = math.exp(logit_no - m)
    return ey / (ey + en)


def pn_fuse(p_true: float, p_false: float) -> float:
    """Fuse the yes-probabilities of the positive and negative question."""
    for v in (p_true, p_false):
        if not (0.0 <= v <= 1.0):
            raise ValidationFailure(f"probability {v!r} outside [0,1]")
    return 0.5 + (p_true - p_false) / 2.0


def expected_answer_score(p_yes: float, expected: str) -> float:
    """Probability the model assigns to the expected answer."""
    if not 0.0 <= p_yes <= 1.0:
        raise ValidationFailure(f"probability {p_yes!r} outside [0,1]")
    if expected == "yes":
        return p_yes
    if expected == "no":
        return 1.0 - p_yes
    raise ValidationFailure(f"expected answer must be 'yes' or 'no', got {expected!r}")


def es_avg(scores: Mapping[str, float]) -> float:
    """Image-level element score: plain mean over the element scores."""
    if not scores:
        raise ValidationFailure("cannot average an empty score set")
    return float(sum(scores.values()) / len(scores))


def combine_os_es(overall: float, element_avg: float, weight: float = 0.5) -> float:
    """Blend the overall and element-average scores: w*os + (1-w)*es."""
    if not 0.0 <= weight <= 1.0:
        raise ValidationFailure("weight must lie in [0,1]")
    return weight * overall + (1.0 - weight) * element_avg


def binarize_elements(scores: Mapping[str, float], threshold: float) -> dict[str, int]:
    """1 where the score strictly exceeds the threshold, else 0."""
    return {k: (1 if v > threshold else 0) for k, v in scores.items()}


def binarize_truth(truth: Mapping[str, float]) -> dict[str, int]:
    """Majority vote on human element truth: aligned only above 0.5
    (an exact 0.5 split counts as not aligned)."""
    return {k: (1 if v > 0.5 else 0) for k, v in truth.items()}


def _group(records: Iterable[VqaLogits]):
    grouped: dict[str, dict[str, dict[str, VqaLogits]]] = defaultdict(lambda: defaultdict(dict))
    for rec in records:
        slot = grouped[rec.pair_id][rec.element]
        if rec.variant in slot:
            raise ValidationFailure(
                f"duplicate {rec.variant} record for pair {rec.pair_id!r} "
                f"element {rec.element!r}"
            )
        slot[rec.variant] = rec
    return grouped


def score_pairs_pn(records: Iterable[VqaLogits], *, source: str = "pn_vqa") -> list[ElementScoreSet]:
    """Element scores from paired positive/negative questions.

    Every element needs both variants; a missing one is an error naming
    the spot.  Output is sorted by pair id, element keys by name.
    """
    grouped = _group(records)
    out = []
    for pair_id in sorted(grouped):
        scores = {}
        for element in sorted(grouped[pair_id]):
            slot = grouped[pair_id][element]
            for want in ("positive", "negative"):
                if want not in slot:
                    raise ValidationFailure(
                        f"pair {pair_id!r} element {element!r} lacks the {want} variant"
                    )
            p_t = yes_probability(slot["positive"].logit_yes, slot["positive"].logit_no)
            p_f = yes_probability(slot["negative"].logit_yes, slot["negative"].logit_no)
            scores[element] = pn_fuse(p_t, p_f)
        out.append(ElementScoreSet(pair_id, scores, source))
    return out


def score_pairs_expected(
    records: Iterable[VqaLogits],
    questions: Sequence[GeneratedQuestion],
    pairs: Sequence[ImagePair],
    *,
    source: str = "tifa_vqa",
) -> list[ElementScoreSet]:
    """Element scores from single questions with known expected answers.

    Uses the plain variant; the expected answer comes from the question
    file, joined through the pair -> prompt mapping.
    """
    pair_prompt = {p.pair_id: p.prompt_id for p in pairs}
    expected: dict[tuple[str, str], str] = {}
    for q in questions:
        if q.question is None:
            continue
        expected[(q.prompt_id, q.element)] = q.answer
    grouped = _group(records)
    out = []
    for pair_id in sorted(grouped):
        if pair_id not in pair_prompt:
            raise ValidationFailure(f"pair {pair_id!r} missing from the pairs file")
        prompt_id = pair_prompt[pair_id]
        scores = {}
        for element in sorted(grouped[pair_id]):
            slot = grouped[pair_id][element]
            if "plain" not in slot:
                raise ValidationFailure(
                    f"pair {pair_id!r} element {element!r} lacks the plain variant"
                )
            key = (prompt_id, element)
            if key not in expected:
                raise ValidationFailure(
                    f"no question with an expected answer for prompt {prompt_id!r} "
                    f"element {element!r}"
                )
            p_yes = yes_probability(slot["plain"].logit_yes, slot["plain"].logit_no)
            scores[element] = expected_answer_score(p_yes, expected[key])
        out.append(ElementScoreSet(pair_id, scores, source))
    return out


def to_prediction(scores: ElementScoreSet) -> PredictionRecord:
    """Lift an element score set into a prediction record whose overall
    score is the element average."""
    return PredictionRecord(
        pair_id=scores.pair_id,
        source=scores.source,
        overall_score=es_avg(scores.scores),
        element_scores=dict(scores.scores),
    )
