"""Decision-tree inference: map type at the root, then only the
branch-relevant category classifiers."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .taxonomy import (
    MAP_TYPE_VOCABULARY,
    PICTORIAL,
    TOPOGRAPHIC,
    CaptionCategory,
    ClassVocabulary,
    KeywordCaption,
    TaxonomyError,
    categories_for,
    normalize_label,
)


class TreeError(Exception):
    pass


class InvalidTree(TreeError):
    pass


class MissingClassifier(TreeError):
    pass


@dataclass(frozen=True)
class DecisionTreeSpec:
    root_category: CaptionCategory
    branches: dict[str, tuple[CaptionCategory, ...]]

    def __post_init__(self):
        if self.root_category is not CaptionCategory.MAP_TYPE:
            raise InvalidTree("only map_type is legal at the decision-tree root")
        for label, children in self.branches.items():
            if len(set(children)) != len(children):
                raise InvalidTree(f"branch {label!r} repeats a child category")
            if self.root_category in children:
                raise InvalidTree(f"branch {label!r} contains the root category")

    @property
    def reachable_categories(self) -> set[CaptionCategory]:
        reachable = {self.root_category}
        for children in self.branches.values():
            reachable.update(children)
        return reachable


def default_tree() -> DecisionTreeSpec:
    return DecisionTreeSpec(
        root_category=CaptionCategory.MAP_TYPE,
        branches={
            label: tuple(categories_for(label))
            for label in (TOPOGRAPHIC, PICTORIAL)
        },
    )


def load_tree(
    config: str | Path | dict, root_vocabulary: ClassVocabulary = MAP_TYPE_VOCABULARY
) -> DecisionTreeSpec:
    """Build a validated tree spec from a config mapping or YAML file.

    The config has two keys: `root` (a category id) and `branches`
    (root label -> list of child category ids). Every root-vocabulary label
    needs a branch and every branch label must be in the vocabulary.
    """
    if not isinstance(config, dict):
        config = yaml.safe_load(Path(config).read_text(encoding="utf-8"))
    if not isinstance(config, dict) or set(config) - {"root", "branches"}:
        raise InvalidTree("tree config must contain only 'root' and 'branches'")
    try:
        root = CaptionCategory.from_id(config.get("root", "map_type"))
    except TaxonomyError as exc:
        raise InvalidTree(str(exc)) from exc

    branches: dict[str, tuple[CaptionCategory, ...]] = {}
    for label, children in dict(config.get("branches", {})).items():
        label = normalize_label(label)
        if label not in root_vocabulary:
            raise InvalidTree(f"branch label {label!r} not in the root vocabulary")
        try:
            branches[label] = tuple(CaptionCategory.from_id(c) for c in children)
        except TaxonomyError as exc:
            raise InvalidTree(f"branch {label!r}: {exc}") from exc
    missing = [l for l in root_vocabulary.labels if l not in branches]
    if missing:
        raise InvalidTree(f"root labels without a branch: {missing}")
    return DecisionTreeSpec(root_category=root, branches=branches)


def tree_as_config(spec: DecisionTreeSpec) -> dict:
    return {
        "root": spec.root_category.value,
        "branches": {
            label: [c.value for c in children] for label, children in spec.branches.items()
        },
    }


@dataclass(frozen=True)
class KeywordBundle:
    """Root prediction plus the chosen branch's child predictions, in branch order."""

    map_type: KeywordCaption
    children: tuple[KeywordCaption, ...]
    root_scores: dict[str, float] = field(default_factory=dict)

    def captions(self) -> list[KeywordCaption]:
        return [self.map_type, *self.children]


def infer(image, spec: DecisionTreeSpec, classifiers: dict) -> KeywordBundle:
    """Run the root classifier, then exactly the chosen branch's classifiers."""
    missing = sorted(c.value for c in spec.reachable_categories if c not in classifiers)
    if missing:
        raise MissingClassifier(f"no classifier for categories: {missing}")

    root_prediction = classifiers[spec.root_category].predict(image)
    root_label = root_prediction.caption.label
    if root_label not in spec.branches:
        raise InvalidTree(f"root predicted {root_label!r}, which has no branch")
    children = tuple(
        classifiers[category].predict(image).caption for category in spec.branches[root_label]
    )
    return KeywordBundle(
        map_type=root_prediction.caption,
        children=children,
        root_scores=dict(root_prediction.scores),
    )
