"""Instruction builders and response parsers for the LLM-assisted steps.

Three request families live here: splitting a prompt into scored
elements, generating one yes/no question per element, and labeling a
prompt's subject/logic/style categories. The builders produce
``LlmRequest`` values; the parsers turn raw response text back into
validated structures and raise ``ResponseFormatError`` (or its
``UnknownCategoryError`` subclass) when the text does not fit, which
the dispatch layer translates into a regeneration.

Also here: the positive/negative question renderer used by the
fine-grained VQA scorer, and the fixed question set for probing
structural problems in generated images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .errors import ResponseFormatError, UnknownCategoryError, ValidationFailure
from .llm import LlmRequest
from .records import GeneratedQuestion
from .vocab import (
    ELEMENT_CATEGORIES,
    LOGIC_CATEGORIES,
    STRUCTURE_TAGS,
    STYLE_CATEGORIES,
    SUBJECT_CATEGORIES,
    check_structure_tag,
)

_ELEMENT_SPLIT_TEMPLATE = (
    "Given an aigc prompt, extract the elements that are important for generating images.\n"
    "Classify each element into a type (" + ", ".join(ELEMENT_CATEGORIES) + ").\n"
    "Examples are as follows, where Elements is in json format.\n"
    "\n"
    "Prompt:A man posing for a selfie in a jacket and bow tie.\n"
    'Elements:["man (human)", "selfie (activity)", "jacket (object)", "bow tie (object)", "posing (activity)"]\n'
    "\n"
    "Prompt:A horse and several cows feed on hay.\n"
    'Elements:["horse (animal)", "cows (animal)", "hay (object)", "feed on (activity)", "several (counting)"]\n'
    "\n"
    "Prompt: {prompt}\n"
    "Elements:"
)

_QUESTION_TEMPLATE = (
    "Given a prompt for image generation and one of its related elements, "
    "generate one easy Yes/No question to verify whether the element is "
    "represented in the image generated by the prompt.\n"
    "\n"
    "Description: A man posing for a selfie in a jacket and bow tie.\n"
    "Element: man (human):\n"
    "Q: Is this a man?\n"
    "Choices: yes, no\n"
    "A: yes\n"
    "\n"
    "Description: Several Face mask and 0 nun\n"
    "Element: 0 (counting):\n"
    "Q: Are there any nuns in the photo?\n"
    "Choices: yes, no\n"
    "A: no\n"
    "\n"
    "Description: {caption}\n"
    "Element: {element}:"
)

_LABEL_TEMPLATE = (
    "Label the following image-generation prompt along three dimensions.\n"
    "subject: " + ", ".join(SUBJECT_CATEGORIES) + "\n"
    "logic: " + ", ".join(LOGIC_CATEGORIES) + "\n"
    "style: " + ", ".join(STYLE_CATEGORIES) + "\n"
    "A prompt may carry several labels in one dimension, or none. Answer with a "
    'JSON object of the form {"subject": [...], "logic": [...], "style": [...]} '
    "using only the listed labels.\n"
    "\n"
    "Prompt: {prompt}"
)

PN_QUESTION_TEMPLATE = (
    "This image is generated from {prompt}. "
    "Is the answer to {question} in this image {a}?"
)

STRUCTURAL_TEMPLATE = (
    "Does this generated image have any structural problems? "
    "Specifically, {cls}? Please answer yes or no only."
)

# one probe phrase per structure tag; coarse tags ask about the class as
# a whole, fine human-body tags target a specific failure mode
_STRUCTURE_PROBES = {
    "animal": (
        "do the limbs, bodies, and faces of the animals in the image not "
        "conform to the laws of reality in terms of structure"
    ),
    "object": (
        "do the objects in the image not conform to the laws of reality "
        "physically, including but not limited to the position and shape of "
        "the objects"
    ),
    "human-body": (
        "do the limbs, bodies, and faces of the people in the image not "
        "conform to the laws of reality in terms of structure"
    ),
    "human-body/face-missing-extra-feature": (
        "does the person in the image have any missing or redundant features on the face"
    ),
    "human-body/face-distorted-exaggerated": (
        "does the person in the image have distorted features or exaggerated proportions on the face"
    ),
    "human-body/limb-missing-extra-limbs": (
        "does the person in the image have extra or fewer limbs"
    ),
    "human-body/limb-distorted-deformed": (
        "does the person in the image have any limb distortion or deformity"
    ),
    "human-body/limb-disproportionate": (
        "does the person in the image have disproportionate limbs"
    ),
    "human-body/palm-shapeless": (
        "does the person in the image have a shapeless palm"
    ),
    "human-body/palm-missing-extra-finger": (
        "does the person in the image have extra or fewer fingers on the hand"
    ),
    "human-body/palm-deformed": (
        "does the person in the image have deformed fingers on the hand"
    ),
    "human-body/palm-overlapping": (
        "does the person in the image have multiple hands overlapping and confusing"
    ),
}

assert set(_STRUCTURE_PROBES) == set(STRUCTURE_TAGS)


@dataclass(frozen=True)
class ElementList:
    """Ordered split of one prompt into canonical element keys."""

    prompt_id: str
    elements: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {"prompt_id": self.prompt_id, "elements": list(self.elements)}

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "ElementList":
        from .vocab import parse_element_key

        pid = obj.get("prompt_id")
        if not isinstance(pid, str) or not pid:
            raise ValidationFailure("prompt_id must be a non-empty string")
        raw = obj.get("elements")
        if not isinstance(raw, (list, tuple)):
            raise ValidationFailure("elements must be a list")
        for key in raw:
            parse_element_key(key)
        return cls(prompt_id=pid, elements=tuple(raw))


def build_element_split_request(prompt: str, *, model: str = "gpt-4") -> LlmRequest:
    """Few-shot request asking the model to split ``prompt`` into elements."""
    if not prompt or not prompt.strip():
        raise ValidationFailure("prompt must be non-empty")
    return LlmRequest(
        instruction=_ELEMENT_SPLIT_TEMPLATE.replace("{prompt}", prompt),
        model=model,
    )


def parse_element_response(text: str, *, prompt_id: str = "") -> ElementList:
    """Parse a JSON array of ``"name (category)"`` strings.

    Leading or trailing chatter around the array is tolerated; a missing
    array, a non-string item, or a malformed key is a
    ResponseFormatError, and a category outside the 13-way vocabulary is
    an UnknownCategoryError. Duplicate keys collapse to their first
    occurrence so downstream per-element maps stay well defined.
    """
    stripped = text.strip()
    try:
        items = json.loads(stripped)
    except ValueError:
        start, end = stripped.find("["), stripped.rfind("]")
        if start == -1 or end <= start:
            raise ResponseFormatError("no JSON array in element response") from None
        try:
            items = json.loads(stripped[start : end + 1])
        except ValueError:
            raise ResponseFormatError("element response is not valid JSON") from None
    if not isinstance(items, list):
        raise ResponseFormatError("element response must be a JSON array")
    keys: list[str] = []
    seen = set()
    for item in items:
        if not isinstance(item, str) or not item.endswith(")"):
            raise ResponseFormatError(f"malformed element entry {item!r}")
        name, sep, rest = item[:-1].rpartition(" (")
        name = name.strip()
        if not sep or not name:
            raise ResponseFormatError(f"malformed element entry {item!r}")
        category = rest.strip().lower()
        if category not in ELEMENT_CATEGORIES:
            raise UnknownCategoryError(
                f"element category {category!r} is outside the vocabulary"
            )
        key = f"{name} ({category})"
        if key not in seen:
            seen.add(key)
            keys.append(key)
    return ElementList(prompt_id=prompt_id, elements=tuple(keys))


def build_question_request(prompt: str, element: str, *, model: str = "gpt-4") -> LlmRequest:
    """Few-shot request for one yes/no question about ``element``."""
    if not prompt or not prompt.strip():
        raise ValidationFailure("prompt must be non-empty")
    from .vocab import parse_element_key

    parse_element_key(element)
    instruction = _QUESTION_TEMPLATE.replace("{caption}", prompt).replace("{element}", element)
    return LlmRequest(instruction=instruction, model=model)


def _line_value(lines: list[str], prefix: str) -> str | None:
    for line in lines:
        if line.lower().startswith(prefix):
            return line[len(prefix):].strip()
    return None


def parse_question_response(text: str, *, prompt_id: str, element: str) -> GeneratedQuestion:
    """Extract the Q/Choices/A lines of a question response.

    The answer normalizes to lowercase yes/no (a trailing period is
    forgiven). A missing Choices line falls back to the fixed yes/no
    pair; a missing Q or A line, or an answer outside the choices, is a
    ResponseFormatError that triggers regeneration.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    question = _line_value(lines, "q:")
    answer = _line_value(lines, "a:")
    if not question:
        raise ResponseFormatError("question response has no Q line")
    if not answer:
        raise ResponseFormatError("question response has no A line")
    answer = answer.rstrip(".").strip().lower()
    raw_choices = _line_value(lines, "choices:")
    if raw_choices:
        choices = tuple(c.strip().lower() for c in raw_choices.split(",") if c.strip())
    else:
        choices = ("yes", "no")
    if answer not in choices:
        raise ResponseFormatError(f"answer {answer!r} not among choices {choices}")
    if answer not in ("yes", "no"):
        raise ResponseFormatError(f"answer must be yes or no, got {answer!r}")
    return GeneratedQuestion(
        prompt_id=prompt_id,
        element=element,
        question=question,
        answer=answer,
        choices=choices,
    )


def build_label_request(prompt: str, *, model: str = "gpt-4") -> LlmRequest:
    """Request subject/logic/style labels for one prompt."""
    if not prompt or not prompt.strip():
        raise ValidationFailure("prompt must be non-empty")
    return LlmRequest(instruction=_LABEL_TEMPLATE.replace("{prompt}", prompt), model=model)


_LABEL_VOCAB = {
    "subject": frozenset(SUBJECT_CATEGORIES),
    "logic": frozenset(LOGIC_CATEGORIES),
    "style": frozenset(STYLE_CATEGORIES),
}


def parse_label_response(text: str) -> dict[str, tuple[str, ...]]:
    """Parse the JSON label object; values validate against the closed
    per-dimension vocabularies. Missing dimensions come back empty."""
    stripped = text.strip()
    try:
        obj = json.loads(stripped)
    except ValueError:
        start, end = stripped.find("{"), stripped.rfind("}")
        if start == -1 or end <= start:
            raise ResponseFormatError("no JSON object in label response") from None
        try:
            obj = json.loads(stripped[start : end + 1])
        except ValueError:
            raise ResponseFormatError("label response is not valid JSON") from None
    if not isinstance(obj, dict):
        raise ResponseFormatError("label response must be a JSON object")
    out: dict[str, tuple[str, ...]] = {}
    for dim, vocab in _LABEL_VOCAB.items():
        vals = obj.get(dim, [])
        if not isinstance(vals, list) or not all(isinstance(v, str) for v in vals):
            raise ResponseFormatError(f"labels for {dim!r} must be a list of strings")
        labels = []
        for v in vals:
            slug = v.strip().lower()
            if slug not in vocab:
                raise UnknownCategoryError(f"label {v!r} is not a {dim} category")
            if slug not in labels:
                labels.append(slug)
        out[dim] = tuple(labels)
    return out


def render_pn_questions(
    prompt: str,
    question: str,
    correct_answer: str,
    *,
    include_prompt: bool = True,
) -> tuple[str, str]:
    """Render the positive and negative VQA questions for one element.

    The positive variant substitutes the correct answer, the negative
    variant the opposite one, so the two strings differ only in the
    final answer token. ``include_prompt=False`` drops the leading
    provenance sentence for the ablation run.
    """
    if correct_answer not in ("yes", "no"):
        raise ValidationFailure(f"correct_answer must be yes or no, got {correct_answer!r}")
    wrong = "no" if correct_answer == "yes" else "yes"
    prefix = f"This image is generated from {prompt}. " if include_prompt else ""
    positive = f"{prefix}Is the answer to {question} in this image {correct_answer}?"
    negative = f"{prefix}Is the answer to {question} in this image {wrong}?"
    return positive, negative


def structural_question(tag: str) -> str:
    """The yes/no probe asking whether an image shows the tagged problem."""
    check_structure_tag(tag)
    return STRUCTURAL_TEMPLATE.replace("{cls}", _STRUCTURE_PROBES[tag])


def structural_question_set(*, fine: bool = False) -> dict[str, str]:
    """Probes for every coarse tag, optionally the fine ones as well
    (accuracy scoring uses the three coarse probes, recall all twelve)."""
    tags = STRUCTURE_TAGS if fine else STRUCTURE_TAGS[:3]
    return {tag: structural_question(tag) for tag in tags}
