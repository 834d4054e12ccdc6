"""Synthetic prompt generation from keyword tables.

Six prompt classes exist. Two render locally from drawn keywords
(object counting, text-on-a-blackboard); the other four are phrased as
instructions for an external LLM that fills a rigid format with the
drawn keywords. All draws run through a seeded generator so a corpus
plus a seed always reproduces the same prompt or request.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationFailure
from .llm import LlmRequest

OBJECT_CLASSES = (
    "animal",
    "human",
    "object-household",
    "object-electronic",
    "object-cloth",
    "object-others",
    "object-vehicle",
    "food",
)

QUANTITY_TOKENS = ("0", "1", "2", "3", "4", "5", "6", "some", "several")

SYNTH_CATEGORIES = (
    "color_material",
    "location_weather_time",
    "activity_perspective",
    "spatial_composition",
)

_SYNTH_TEMPLATES = {
    "color_material": (
        "Generate a natural and reasonable prompt following the format "
        "[color] [adj-material][noun] and [color][adj-material][noun], "
        "given noun {nouns} and color {colors}."
    ),
    "location_weather_time": (
        "Generate a prompt following the format "
        "A/an [noun][adp] [location], [style], [weather], [time], "
        "given noun {noun}, location {location} and style {style}."
    ),
    "activity_perspective": (
        "Generate a natural and reasonable prompt following the format "
        "[nounA] [verb][nounB], given nounA {noun}."
    ),
    "spatial_composition": (
        "Generate a natural and reasonable prompt following the format "
        "[nounA] [position] [noun B] and the [noun A] [adj] the [noun B], "
        "given noun {nouns}. [position] denotes the positional relationship "
        "between objects and [adj] denotes the contrasting relationship "
        "between objects."
    ),
}

_SYNTH_SLOTS = {
    "color_material": ("nouns", "colors"),
    "location_weather_time": ("noun", "location", "style"),
    "activity_perspective": ("noun",),
    "spatial_composition": ("nouns",),
}

_PAIR_SLOTS = ("nouns", "colors")

_IRREGULAR_PLURALS = {
    "man": "men",
    "woman": "women",
    "person": "people",
    "child": "children",
    "foot": "feet",
    "tooth": "teeth",
    "goose": "geese",
    "mouse": "mice",
    "sheep": "sheep",
    "fish": "fish",
}


@dataclass(frozen=True)
class KeywordCorpus:
    """The keyword tables every generator draws from.

    ``objects`` maps the eight object classes to name lists; the other
    fields are flat lists. Lists may be empty as long as no generator
    that needs them runs.
    """

    objects: Mapping[str, tuple[str, ...]]
    colors: tuple[str, ...] = ()
    locations: tuple[str, ...] = ()
    styles: tuple[str, ...] = ()
    perspectives: tuple[str, ...] = ()
    spatial: tuple[str, ...] = ()
    attributes: tuple[str, ...] = ()
    words_symbols: tuple[str, ...] = ()
    word_styles: tuple[str, ...] = ()

    def object_pool(self, classes: Sequence[str] | None = None) -> tuple[str, ...]:
        """All object names, concatenated in fixed class order."""
        use = OBJECT_CLASSES if classes is None else tuple(classes)
        pool: list[str] = []
        for cls_name in use:
            if cls_name not in self.objects:
                if classes is not None:
                    raise ValidationFailure(f"unknown object class {cls_name!r}")
                continue
            pool.extend(self.objects[cls_name])
        return tuple(pool)

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "KeywordCorpus":
        raw_objects = obj.get("objects", {})
        if not isinstance(raw_objects, Mapping):
            raise ValidationFailure("objects must map class -> name list")
        objects = {}
        for key, names in raw_objects.items():
            if key not in OBJECT_CLASSES:
                raise ValidationFailure(f"unknown object class {key!r}")
            if not isinstance(names, (list, tuple)) or not all(isinstance(n, str) for n in names):
                raise ValidationFailure(f"object class {key!r} must hold a list of strings")
            objects[key] = tuple(names)
        kwargs = {}
        for field_name in (
            "colors",
            "locations",
            "styles",
            "perspectives",
            "spatial",
            "attributes",
            "words_symbols",
            "word_styles",
        ):
            vals = obj.get(field_name, [])
            if not isinstance(vals, (list, tuple)) or not all(isinstance(v, str) for v in vals):
                raise ValidationFailure(f"{field_name} must be a list of strings")
            kwargs[field_name] = tuple(vals)
        return cls(objects=objects, **kwargs)

    @classmethod
    def from_file(cls, path) -> "KeywordCorpus":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def load_default_corpus() -> KeywordCorpus:
    """The keyword tables bundled with the package."""
    text = resources.files("musebench").joinpath("data/keywords.json").read_text("utf-8")
    return KeywordCorpus.from_json_dict(json.loads(text))


def pluralize(noun: str) -> str:
    """English plural of a (possibly multi-word) object name."""
    head, _, last = noun.rpartition(" ")
    if last.lower() in _IRREGULAR_PLURALS:
        plural = _IRREGULAR_PLURALS[last.lower()]
        if last[:1].isupper():
            plural = plural.capitalize()
    elif last.endswith(("s", "x", "z", "ch", "sh")):
        plural = last + "es"
    elif last.endswith("y") and len(last) > 1 and last[-2].lower() not in "aeiou":
        plural = last[:-1] + "ies"
    else:
        plural = last + "s"
    return f"{head} {plural}" if head else plural


def _pick(rng: np.random.Generator, seq: Sequence[str], what: str) -> str:
    if not seq:
        raise ValidationFailure(f"keyword corpus has no {what}")
    return seq[int(rng.integers(len(seq)))]


def _counted(quantity: str, noun: str) -> str:
    if quantity == "1":
        return f"1 {noun}"
    return f"{quantity} {pluralize(noun)}"


def gen_count_prompt(corpus: KeywordCorpus, rng_seed: int) -> str:
    """Two quantities and two objects, e.g. ``1 cat and some dogs``.

    Quantities come from 0-6 plus some/several; any quantity other than
    exactly 1 takes the plural.
    """
    rng = np.random.default_rng(rng_seed)
    pool = corpus.object_pool()
    if not pool:
        raise ValidationFailure("keyword corpus has no objects")
    q1 = QUANTITY_TOKENS[int(rng.integers(len(QUANTITY_TOKENS)))]
    q2 = QUANTITY_TOKENS[int(rng.integers(len(QUANTITY_TOKENS)))]
    obj1 = pool[int(rng.integers(len(pool)))]
    obj2 = pool[int(rng.integers(len(pool)))]
    return f"{_counted(q1, obj1)} and {_counted(q2, obj2)}"


def gen_writing_prompt(corpus: KeywordCorpus, rng_seed: int) -> str:
    """A blackboard prompt: drawn word in quotes plus a writing style."""
    rng = np.random.default_rng(rng_seed)
    word = _pick(rng, corpus.words_symbols, "words_symbols")
    style = _pick(rng, corpus.word_styles, "word_styles")
    return f"a blackboard with text '{word}' on it, {style}"


def build_synth_request(category: str, slots: Mapping[str, object], *, model: str = "gpt-4") -> LlmRequest:
    """Instruction for one of the four LLM-mediated prompt classes.

    ``slots`` carries the drawn keywords; pair slots (nouns, colors)
    take a two-element sequence, the rest single strings. A missing or
    ill-shaped slot fails naming the slot.
    """
    if category not in _SYNTH_TEMPLATES:
        raise ValidationFailure(f"unknown synth category {category!r}")
    instruction = _SYNTH_TEMPLATES[category]
    for slot in _SYNTH_SLOTS[category]:
        if slot not in slots:
            raise ValidationFailure(f"synth category {category!r} needs slot {slot!r}")
        value = slots[slot]
        if slot in _PAIR_SLOTS:
            if not isinstance(value, (list, tuple)) or len(value) != 2 or not all(
                isinstance(v, str) and v for v in value
            ):
                raise ValidationFailure(f"slot {slot!r} must hold two non-empty strings")
            rendered = f"{value[0]} and {value[1]}"
        else:
            if not isinstance(value, str) or not value:
                raise ValidationFailure(f"slot {slot!r} must be a non-empty string")
            rendered = value
        instruction = instruction.replace("{" + slot + "}", rendered)
    return LlmRequest(instruction=instruction, model=model)


def draw_synth_request(corpus: KeywordCorpus, category: str, rng_seed: int, *, model: str = "gpt-4") -> LlmRequest:
    """Draw the keyword slots for ``category`` and build its request."""
    rng = np.random.default_rng(rng_seed)
    if category == "color_material":
        pool = corpus.object_pool()
        slots = {
            "nouns": (_pick(rng, pool, "objects"), _pick(rng, pool, "objects")),
            "colors": (_pick(rng, corpus.colors, "colors"), _pick(rng, corpus.colors, "colors")),
        }
    elif category == "location_weather_time":
        slots = {
            "noun": _pick(rng, corpus.object_pool(), "objects"),
            "location": _pick(rng, corpus.locations, "locations"),
            "style": _pick(rng, corpus.styles, "styles"),
        }
    elif category == "activity_perspective":
        # the activity class draws its subject from the animate pools only
        pool = corpus.object_pool(("animal", "human"))
        slots = {"noun": _pick(rng, pool, "animal or human objects")}
    elif category == "spatial_composition":
        pool = corpus.object_pool()
        slots = {"nouns": (_pick(rng, pool, "objects"), _pick(rng, pool, "objects"))}
    else:
        raise ValidationFailure(f"unknown synth category {category!r}")
    return build_synth_request(category, slots, model=model)


def append_perspective(phrase: str, keyword: str) -> str:
    """Attach a perspective keyword to a generated activity phrase,
    e.g. ``miner digs ore`` -> ``miner digs ore, panorama``."""
    if not phrase or not keyword:
        raise ValidationFailure("phrase and keyword must be non-empty")
    return f"{phrase}, {keyword}"


def draw_perspective(corpus: KeywordCorpus, rng_seed: int) -> str:
    rng = np.random.default_rng(rng_seed)
    return _pick(rng, corpus.perspectives, "perspectives")
