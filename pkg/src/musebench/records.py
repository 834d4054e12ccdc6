"""Record types for every JSONL file the pipeline reads or writes.

Each record is a frozen dataclass with ``to_json_dict`` /
``from_json_dict``; the JSONL layer in :mod:`musebench.jsonl` adds line
numbers to validation errors and applies optional field-name mappings
for externally produced files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .errors import SchemaError
from .vocab import check_dimension_categories, check_structure_tag, parse_element_key

_VARIANTS = ("positive", "negative", "plain")


def _need(obj: Mapping, key: str):
    if key not in obj:
        raise SchemaError("missing field", field=key)
    return obj[key]


def _need_str(obj: Mapping, key: str) -> str:
    v = _need(obj, key)
    if not isinstance(v, str) or not v:
        raise SchemaError("expected a non-empty string", field=key)
    return v


def _need_float(obj: Mapping, key: str) -> float:
    v = _need(obj, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError("expected a number", field=key)
    return float(v)


def _opt_bool(obj: Mapping, key: str, default: bool) -> bool:
    v = obj.get(key, default)
    if not isinstance(v, bool):
        raise SchemaError("expected a boolean", field=key)
    return v


@dataclass(frozen=True)
class Prompt:
    prompt_id: str
    text: str
    origin: str  # "real" or a synthetic generator tag
    categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    embedding: tuple[float, ...] | None = None
    meaningless: bool = False

    def to_json_dict(self) -> dict:
        out: dict = {
            "prompt_id": self.prompt_id,
            "text": self.text,
            "origin": self.origin,
            "categories": {k: list(v) for k, v in self.categories.items()},
        }
        if self.embedding is not None:
            out["embedding"] = list(self.embedding)
        if self.meaningless:
            out["meaningless"] = True
        return out

    @classmethod
    def from_json_dict(cls, obj: Mapping, registry=None) -> "Prompt":
        cats_raw = obj.get("categories", {})
        if not isinstance(cats_raw, Mapping):
            raise SchemaError("expected an object", field="categories")
        cats = {}
        for dim, vals in cats_raw.items():
            if not isinstance(vals, (list, tuple)) or not all(isinstance(x, str) for x in vals):
                raise SchemaError("expected a list of strings", field=f"categories.{dim}")
            cats[str(dim)] = tuple(vals)
        check_dimension_categories(cats, registry)
        emb = obj.get("embedding")
        if emb is not None:
            if not isinstance(emb, (list, tuple)) or not emb:
                raise SchemaError("expected a non-empty list of numbers", field="embedding")
            try:
                emb = tuple(float(x) for x in emb)
            except (TypeError, ValueError):
                raise SchemaError("expected numbers", field="embedding") from None
        return cls(
            prompt_id=_need_str(obj, "prompt_id"),
            text=_need_str(obj, "text"),
            origin=_need_str(obj, "origin"),
            categories=cats,
            embedding=emb,
            meaningless=_opt_bool(obj, "meaningless", False),
        )


@dataclass(frozen=True)
class ImagePair:
    pair_id: str
    prompt_id: str
    model_name: str
    image_uri: str

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "prompt_id": self.prompt_id,
            "model_name": self.model_name,
            "image_uri": self.image_uri,
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "ImagePair":
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            prompt_id=_need_str(obj, "prompt_id"),
            model_name=_need_str(obj, "model_name"),
            image_uri=_need_str(obj, "image_uri"),
        )


@dataclass(frozen=True)
class AnnotationRecord:
    """Raw human annotation for one (prompt, image) pair.

    alignment_scores holds 3-6 Likert scores in 1..5 (more than three
    when the pair went through re-annotation).  Every element's vote
    list is aligned with alignment_scores; a None vote marks an
    annotator who skipped that element.
    """

    pair_id: str
    alignment_scores: tuple[int, ...]
    element_votes: Mapping[str, tuple[int | None, ...]] = field(default_factory=dict)
    structure_labels: tuple[str, ...] = ()
    split_confident: bool = True
    nsfw_discard: bool = False

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "alignment_scores": list(self.alignment_scores),
            "element_votes": {k: list(v) for k, v in self.element_votes.items()},
            "structure_labels": list(self.structure_labels),
            "split_confident": self.split_confident,
            "nsfw_discard": self.nsfw_discard,
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "AnnotationRecord":
        scores_raw = _need(obj, "alignment_scores")
        if not isinstance(scores_raw, (list, tuple)):
            raise SchemaError("expected a list", field="alignment_scores")
        if not 3 <= len(scores_raw) <= 6:
            raise SchemaError(
                f"need 3..6 scores, got {len(scores_raw)}", field="alignment_scores"
            )
        scores = []
        for s in scores_raw:
            if isinstance(s, bool) or not isinstance(s, int) or not 1 <= s <= 5:
                raise SchemaError(f"score {s!r} not an integer in 1..5",
                                  field="alignment_scores")
            scores.append(s)
        votes_raw = obj.get("element_votes", {})
        if not isinstance(votes_raw, Mapping):
            raise SchemaError("expected an object", field="element_votes")
        votes = {}
        for key, vlist in votes_raw.items():
            parse_element_key(key)  # grammar + category check
            if not isinstance(vlist, (list, tuple)) or len(vlist) != len(scores):
                raise SchemaError(
                    f"vote list must match the {len(scores)} scores",
                    field=f"element_votes.{key}",
                )
            clean = []
            for v in vlist:
                if v is None:
                    clean.append(None)
                elif isinstance(v, bool) or v not in (0, 1):
                    raise SchemaError("votes are 0, 1 or null",
                                      field=f"element_votes.{key}")
                else:
                    clean.append(int(v))
            votes[key] = tuple(clean)
        labels_raw = obj.get("structure_labels", [])
        if not isinstance(labels_raw, (list, tuple)):
            raise SchemaError("expected a list", field="structure_labels")
        labels = tuple(check_structure_tag(str(t)) for t in labels_raw)
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            alignment_scores=tuple(scores),
            element_votes=votes,
            structure_labels=labels,
            split_confident=_opt_bool(obj, "split_confident", True),
            nsfw_discard=_opt_bool(obj, "nsfw_discard", False),
        )


@dataclass(frozen=True)
class AggregatedPair:
    pair_id: str
    overall: float
    element_truth: Mapping[str, float] = field(default_factory=dict)
    needs_reannotation: bool = False
    discarded: bool = False
    skipped_elements: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "overall": self.overall,
            "element_truth": dict(self.element_truth),
            "needs_reannotation": self.needs_reannotation,
            "discarded": self.discarded,
            "skipped_elements": list(self.skipped_elements),
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "AggregatedPair":
        truth_raw = obj.get("element_truth", {})
        if not isinstance(truth_raw, Mapping):
            raise SchemaError("expected an object", field="element_truth")
        truth = {}
        for k, v in truth_raw.items():
            parse_element_key(k)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 <= v <= 1:
                raise SchemaError("truth values lie in [0,1]", field=f"element_truth.{k}")
            truth[k] = float(v)
        overall = _need_float(obj, "overall")
        if not 1 <= overall <= 5:
            raise SchemaError("overall lies in [1,5]", field="overall")
        skipped = obj.get("skipped_elements", [])
        if not isinstance(skipped, (list, tuple)):
            raise SchemaError("expected a list", field="skipped_elements")
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            overall=overall,
            element_truth=truth,
            needs_reannotation=_opt_bool(obj, "needs_reannotation", False),
            discarded=_opt_bool(obj, "discarded", False),
            skipped_elements=tuple(str(s) for s in skipped),
        )


@dataclass(frozen=True)
class PredictionRecord:
    pair_id: str
    source: str
    overall_score: float | None = None
    element_scores: Mapping[str, float] | None = None

    def to_json_dict(self) -> dict:
        out: dict = {"pair_id": self.pair_id, "source": self.source}
        if self.overall_score is not None:
            out["overall_score"] = self.overall_score
        if self.element_scores is not None:
            out["element_scores"] = dict(self.element_scores)
        return out

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "PredictionRecord":
        overall = obj.get("overall_score")
        if overall is not None:
            if isinstance(overall, bool) or not isinstance(overall, (int, float)):
                raise SchemaError("expected a number", field="overall_score")
            overall = float(overall)
        es = obj.get("element_scores")
        if es is not None:
            if not isinstance(es, Mapping):
                raise SchemaError("expected an object", field="element_scores")
            clean = {}
            for k, v in es.items():
                parse_element_key(k)
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise SchemaError("expected a number", field=f"element_scores.{k}")
                clean[k] = float(v)
            es = clean
        if overall is None and es is None:
            raise SchemaError("need overall_score or element_scores", field="overall_score")
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            source=_need_str(obj, "source"),
            overall_score=overall,
            element_scores=es,
        )


@dataclass(frozen=True)
class VqaLogits:
    """Raw yes/no logits for one (pair, element, question-variant)."""

    pair_id: str
    element: str
    variant: str  # positive | negative | plain
    logit_yes: float
    logit_no: float
    token_yes: str = "Yes"
    token_no: str = "No"

    def to_json_dict(self) -> dict:
        out = {
            "pair_id": self.pair_id,
            "element": self.element,
            "variant": self.variant,
            "logit_yes": self.logit_yes,
            "logit_no": self.logit_no,
        }
        if (self.token_yes, self.token_no) != ("Yes", "No"):
            out["token_yes"] = self.token_yes
            out["token_no"] = self.token_no
        return out

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "VqaLogits":
        variant = _need_str(obj, "variant")
        if variant not in _VARIANTS:
            raise SchemaError(f"variant must be one of {_VARIANTS}", field="variant")
        element = _need_str(obj, "element")
        parse_element_key(element)
        ly = _need_float(obj, "logit_yes")
        ln = _need_float(obj, "logit_no")
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            element=element,
            variant=variant,
            logit_yes=ly,
            logit_no=ln,
            token_yes=str(obj.get("token_yes", "Yes")),
            token_no=str(obj.get("token_no", "No")),
        )


@dataclass(frozen=True)
class ElementScoreSet:
    pair_id: str
    scores: Mapping[str, float]
    source: str

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "scores": dict(self.scores),
            "source": self.source,
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "ElementScoreSet":
        raw = _need(obj, "scores")
        if not isinstance(raw, Mapping):
            raise SchemaError("expected an object", field="scores")
        scores = {}
        for k, v in raw.items():
            parse_element_key(k)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 <= v <= 1:
                raise SchemaError("scores lie in [0,1]", field=f"scores.{k}")
            scores[k] = float(v)
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            scores=scores,
            source=_need_str(obj, "source"),
        )


@dataclass(frozen=True)
class GeneratedQuestion:
    """A yes/no verification question for one element of a prompt.

    question None means generation failed after retries and the element
    stays questionless.
    """

    prompt_id: str
    element: str
    question: str | None
    answer: str | None
    choices: tuple[str, ...] = ("yes", "no")

    def to_json_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "element": self.element,
            "question": self.question,
            "answer": self.answer,
            "choices": list(self.choices),
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "GeneratedQuestion":
        element = _need_str(obj, "element")
        parse_element_key(element)
        q = obj.get("question")
        a = obj.get("answer")
        if q is not None and (not isinstance(q, str) or not q):
            raise SchemaError("expected a non-empty string or null", field="question")
        if q is not None:
            if a not in ("yes", "no"):
                raise SchemaError("answer must be 'yes' or 'no'", field="answer")
        choices = obj.get("choices", ["yes", "no"])
        if not isinstance(choices, (list, tuple)) or not all(isinstance(x, str) for x in choices):
            raise SchemaError("expected a list of strings", field="choices")
        return cls(
            prompt_id=_need_str(obj, "prompt_id"),
            element=element,
            question=q,
            answer=a if q is not None else None,
            choices=tuple(choices),
        )


@dataclass(frozen=True)
class PromptVariance:
    prompt_id: str
    sigma: float
    n_images: int

    def to_json_dict(self) -> dict:
        return {"prompt_id": self.prompt_id, "sigma": self.sigma, "n_images": self.n_images}

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "PromptVariance":
        sigma = _need_float(obj, "sigma")
        if sigma < 0:
            raise SchemaError("sigma is non-negative", field="sigma")
        n = _need(obj, "n_images")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise SchemaError("expected a positive integer", field="n_images")
        return cls(prompt_id=_need_str(obj, "prompt_id"), sigma=sigma, n_images=n)


@dataclass(frozen=True)
class EmbeddingRecord:
    prompt_id: str
    vector: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {"prompt_id": self.prompt_id, "vector": list(self.vector)}

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "EmbeddingRecord":
        vec = _need(obj, "vector")
        if not isinstance(vec, (list, tuple)) or not vec:
            raise SchemaError("expected a non-empty list", field="vector")
        try:
            vec = tuple(float(x) for x in vec)
        except (TypeError, ValueError):
            raise SchemaError("expected numbers", field="vector") from None
        return cls(prompt_id=_need_str(obj, "prompt_id"), vector=vec)


@dataclass(frozen=True)
class StructuralPrediction:
    """Model probability that a pair shows the given structural problem."""

    pair_id: str
    tag: str
    prob_yes: float

    def to_json_dict(self) -> dict:
        return {"pair_id": self.pair_id, "tag": self.tag, "prob_yes": self.prob_yes}

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "StructuralPrediction":
        p = _need_float(obj, "prob_yes")
        if not 0 <= p <= 1:
            raise SchemaError("prob_yes lies in [0,1]", field="prob_yes")
        return cls(
            pair_id=_need_str(obj, "pair_id"),
            tag=check_structure_tag(_need_str(obj, "tag")),
            prob_yes=p,
        )


SCHEMAS = {
    "prompt": Prompt,
    "image_pair": ImagePair,
    "annotation": AnnotationRecord,
    "aggregated": AggregatedPair,
    "prediction": PredictionRecord,
    "vqa_logits": VqaLogits,
    "element_scores": ElementScoreSet,
    "question": GeneratedQuestion,
    "prompt_variance": PromptVariance,
    "embedding": EmbeddingRecord,
    "structural_prediction": StructuralPrediction,
}
