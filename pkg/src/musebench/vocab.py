"""Canonical vocabularies: element categories, grouping dimensions,
structure-problem tags, and the ``<name> (<category>)`` element key
grammar used everywhere an element is identified.
"""

from __future__ import annotations

from .errors import ValidationFailure

# the 13 element types fine-grained scoring knows about
ELEMENT_CATEGORIES = (
    "object",
    "human",
    "animal",
    "food",
    "activity",
    "attribute",
    "counting",
    "color",
    "material",
    "spatial",
    "location",
    "shape",
    "other",
)
_ELEMENT_SET = frozenset(ELEMENT_CATEGORIES)

# default grouping dimensions for shaping; the embedding dimension is
# dynamic (one category per cluster) and therefore open here
SUBJECT_CATEGORIES = (
    "artifacts",
    "world-knowledge",
    "people",
    "outdoor-scenes",
    "illustrations",
    "vehicles",
    "food-beverage",
    "arts",
    "abstract",
    "produce-plants",
    "indoor-scenes",
    "animals",
    "idioms",
)
LOGIC_CATEGORIES = (
    "position-relationship",
    "number",
    "color",
    "writing-symbols",
    "perspective",
    "anti-reality",
)
STYLE_CATEGORIES = (
    "material",
    "genre",
    "design",
    "photography-cinema",
    "artist-works",
)

# dimension name -> allowed categories, or None for an open vocabulary
DEFAULT_DIMENSIONS: dict[str, tuple[str, ...] | None] = {
    "subject": SUBJECT_CATEGORIES,
    "logic": LOGIC_CATEGORIES,
    "style": STYLE_CATEGORIES,
    "embedding": None,
}

# structure-problem tags: three coarse classes, plus the fine-grained
# human-body breakdown used for recall reporting
STRUCTURE_COARSE = ("animal", "object", "human-body")
STRUCTURE_FINE = (
    "human-body/face-missing-extra-feature",
    "human-body/face-distorted-exaggerated",
    "human-body/limb-missing-extra-limbs",
    "human-body/limb-distorted-deformed",
    "human-body/limb-disproportionate",
    "human-body/palm-shapeless",
    "human-body/palm-missing-extra-finger",
    "human-body/palm-deformed",
    "human-body/palm-overlapping",
)
STRUCTURE_TAGS = STRUCTURE_COARSE + STRUCTURE_FINE
_STRUCTURE_SET = frozenset(STRUCTURE_TAGS)


def format_element_key(name: str, category: str) -> str:
    """Render the canonical element key ``<name> (<category>)``."""
    name = name.strip()
    if not name:
        raise ValidationFailure("element name must be non-empty")
    if category not in _ELEMENT_SET:
        raise ValidationFailure(f"unknown element category {category!r}")
    return f"{name} ({category})"


def parse_element_key(key: str) -> tuple[str, str]:
    """Split an element key into (name, category).

    The category is the parenthesized suffix; the name may itself
    contain parentheses, so only the last group counts.
    """
    if not isinstance(key, str) or not key.endswith(")"):
        raise ValidationFailure(f"malformed element key {key!r}")
    name, sep, rest = key[:-1].rpartition(" (")
    if not sep or not name.strip():
        raise ValidationFailure(f"malformed element key {key!r}")
    category = rest.strip().lower()
    if category not in _ELEMENT_SET:
        raise ValidationFailure(f"unknown element category {category!r} in key {key!r}")
    return name.strip(), category


def element_category(key: str) -> str:
    return parse_element_key(key)[1]


def check_structure_tag(tag: str) -> str:
    if tag not in _STRUCTURE_SET:
        raise ValidationFailure(f"unknown structure tag {tag!r}")
    return tag


def check_dimension_categories(
    categories: dict,
    registry: dict[str, tuple[str, ...] | None] | None = None,
) -> None:
    """Validate a prompt's dimension -> categories mapping against the
    registry (unknown dimension, or a category a closed dimension does
    not declare, is an error)."""
    reg = DEFAULT_DIMENSIONS if registry is None else registry
    for dim, cats in categories.items():
        if dim not in reg:
            raise ValidationFailure(f"unknown grouping dimension {dim!r}")
        allowed = reg[dim]
        if allowed is None:
            continue
        for c in cats:
            if c not in allowed:
                raise ValidationFailure(
                    f"category {c!r} is not declared by dimension {dim!r}"
                )
