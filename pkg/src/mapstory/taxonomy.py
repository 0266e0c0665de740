"""Caption categories, class vocabularies and the where/what/when/why aspects.

Everything here is immutable after load and safe to share across threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml


class TaxonomyError(ValueError):
    pass


class UnknownMapType(TaxonomyError):
    pass


class CaptionCategory(str, Enum):
    """The six classification axes, in report-column order."""

    MAP_TYPE = "map_type"
    LOCATION_TOPO = "location_topo"
    STYLE = "style"
    CENTURY = "century"
    LOCATION_PICT = "location_pict"
    TOPIC = "topic"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def from_id(cls, value: str) -> "CaptionCategory":
        try:
            return cls(value)
        except ValueError:
            raise TaxonomyError(f"unknown caption category: {value!r}") from None


_DISPLAY_NAMES = {
    CaptionCategory.MAP_TYPE: "Map Type",
    CaptionCategory.LOCATION_TOPO: "Location (topo.)",
    CaptionCategory.STYLE: "Style",
    CaptionCategory.CENTURY: "Century",
    CaptionCategory.LOCATION_PICT: "Location (pict.)",
    CaptionCategory.TOPIC: "Topic",
}


class Aspect(str, Enum):
    WHERE = "where"
    WHAT = "what"
    WHEN = "when"
    WHY = "why"


# why is generated, never classified, so it has no category.
_ASPECT_OF = {
    CaptionCategory.MAP_TYPE: Aspect.WHAT,
    CaptionCategory.STYLE: Aspect.WHAT,
    CaptionCategory.TOPIC: Aspect.WHAT,
    CaptionCategory.LOCATION_TOPO: Aspect.WHERE,
    CaptionCategory.LOCATION_PICT: Aspect.WHERE,
    CaptionCategory.CENTURY: Aspect.WHEN,
}


def aspect_of(category: CaptionCategory) -> Aspect:
    """Map a caption category to the story question it answers."""
    return _ASPECT_OF[category]


PICTORIAL = "pictorial map"
TOPOGRAPHIC = "topographic map"

# Root vocabulary order is fixed: ties in classification break toward the
# earlier label.
MAP_TYPE_LABELS = (PICTORIAL, TOPOGRAPHIC)

_BRANCH_CATEGORIES = {
    TOPOGRAPHIC: (
        CaptionCategory.LOCATION_TOPO,
        CaptionCategory.STYLE,
        CaptionCategory.CENTURY,
    ),
    PICTORIAL: (CaptionCategory.LOCATION_PICT, CaptionCategory.TOPIC),
}


def categories_for(map_type_label: str) -> list[CaptionCategory]:
    """Branch-relevant child categories for a map-type label, in fixed order."""
    label = normalize_label(map_type_label)
    try:
        return list(_BRANCH_CATEGORIES[label])
    except KeyError:
        raise UnknownMapType(f"not a known map type: {map_type_label!r}") from None


_WS_RE = re.compile(r"\s+")


def normalize_label(label: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return _WS_RE.sub(" ", label.strip().lower())


@dataclass(frozen=True)
class ClassVocabulary:
    """Closed, ordered label set for one caption category."""

    category: CaptionCategory
    labels: tuple[str, ...]
    source: str = "builtin"  # builtin | derived_from_manifest

    def __post_init__(self):
        normalized = tuple(normalize_label(l) for l in self.labels)
        if not normalized or any(not l for l in normalized):
            raise TaxonomyError(f"{self.category.value}: labels must be non-empty")
        if len(set(normalized)) != len(normalized):
            raise TaxonomyError(f"{self.category.value}: duplicate labels after normalization")
        object.__setattr__(self, "labels", normalized)

    def __contains__(self, label: str) -> bool:
        return normalize_label(label) in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(normalize_label(label))


MAP_TYPE_VOCABULARY = ClassVocabulary(CaptionCategory.MAP_TYPE, MAP_TYPE_LABELS)


@dataclass(frozen=True)
class KeywordCaption:
    """One predicted class label used as a story building block."""

    category: CaptionCategory
    label: str
    confidence: float = field(default=1.0)

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise TaxonomyError(f"confidence out of [0,1]: {self.confidence}")


def load_vocabularies(path: str | Path) -> dict[CaptionCategory, ClassVocabulary]:
    """Read a vocabulary config file: a list of {category, labels} entries."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise TaxonomyError(f"{path}: expected a list of {{category, labels}} entries")
    vocabularies: dict[CaptionCategory, ClassVocabulary] = {}
    for entry in raw:
        if set(entry) != {"category", "labels"}:
            raise TaxonomyError(f"{path}: entry keys must be exactly 'category' and 'labels'")
        category = CaptionCategory.from_id(entry["category"])
        if category in vocabularies:
            raise TaxonomyError(f"{path}: duplicate category {category.value}")
        vocabularies[category] = ClassVocabulary(category, tuple(entry["labels"]))
    return vocabularies


def save_vocabularies(
    vocabularies: dict[CaptionCategory, ClassVocabulary], path: str | Path
) -> None:
    entries = [
        {"category": vocab.category.value, "labels": list(vocab.labels)}
        for vocab in vocabularies.values()
    ]
    Path(path).write_text(yaml.safe_dump(entries, sort_keys=False), encoding="utf-8")
