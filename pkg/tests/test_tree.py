import numpy as np
import pytest

from mapstory.taxonomy import (
    MAP_TYPE_VOCABULARY,
    PICTORIAL,
    TOPOGRAPHIC,
    CaptionCategory,
    ClassVocabulary,
)
from mapstory.tree import (
    DecisionTreeSpec,
    InvalidTree,
    KeywordBundle,
    MissingClassifier,
    default_tree,
    infer,
    load_tree,
    tree_as_config,
)

from helpers import MockClassifier

DEFAULT_CONFIG = {
    "root": "map_type",
    "branches": {
        "topographic map": ["location_topo", "style", "century"],
        "pictorial map": ["location_pict", "topic"],
    },
}


def mock_classifiers(map_type_label=PICTORIAL):
    return {
        CaptionCategory.MAP_TYPE: MockClassifier(CaptionCategory.MAP_TYPE, map_type_label),
        CaptionCategory.LOCATION_TOPO: MockClassifier(CaptionCategory.LOCATION_TOPO, "europe"),
        CaptionCategory.STYLE: MockClassifier(CaptionCategory.STYLE, "hand-colored"),
        CaptionCategory.CENTURY: MockClassifier(CaptionCategory.CENTURY, "19th century"),
        CaptionCategory.LOCATION_PICT: MockClassifier(CaptionCategory.LOCATION_PICT, "world"),
        CaptionCategory.TOPIC: MockClassifier(CaptionCategory.TOPIC, "flight network"),
    }


def test_load_tree_default_config_matches_paper_tree():
    spec = load_tree(DEFAULT_CONFIG)
    assert spec == default_tree()
    assert spec.branches[TOPOGRAPHIC] == (
        CaptionCategory.LOCATION_TOPO,
        CaptionCategory.STYLE,
        CaptionCategory.CENTURY,
    )
    assert spec.branches[PICTORIAL] == (CaptionCategory.LOCATION_PICT, CaptionCategory.TOPIC)


def test_load_tree_from_file(tmp_path):
    import yaml

    path = tmp_path / "tree.yaml"
    path.write_text(yaml.safe_dump(DEFAULT_CONFIG))
    assert load_tree(path) == default_tree()


def test_load_tree_extended_vocabulary_three_branches():
    vocab = ClassVocabulary(
        CaptionCategory.MAP_TYPE, (PICTORIAL, TOPOGRAPHIC, "road map")
    )
    config = {
        "root": "map_type",
        "branches": {**DEFAULT_CONFIG["branches"], "road map": ["location_topo"]},
    }
    spec = load_tree(config, vocab)
    assert spec.branches["road map"] == (CaptionCategory.LOCATION_TOPO,)
    assert len(spec.branches) == 3


def test_load_tree_unknown_category_rejected():
    config = {
        "root": "map_type",
        "branches": {**DEFAULT_CONFIG["branches"], "pictorial map": ["price"]},
    }
    with pytest.raises(InvalidTree):
        load_tree(config)


def test_load_tree_missing_branch_rejected():
    config = {"root": "map_type", "branches": {"pictorial map": ["topic"]}}
    with pytest.raises(InvalidTree):
        load_tree(config)


def test_load_tree_root_must_be_map_type():
    with pytest.raises(InvalidTree):
        load_tree({"root": "style", "branches": DEFAULT_CONFIG["branches"]})


def test_load_tree_branch_label_outside_vocabulary():
    config = {
        "root": "map_type",
        "branches": {**DEFAULT_CONFIG["branches"], "star chart": ["topic"]},
    }
    with pytest.raises(InvalidTree):
        load_tree(config)


def test_spec_rejects_duplicate_children():
    with pytest.raises(InvalidTree):
        DecisionTreeSpec(
            CaptionCategory.MAP_TYPE,
            {PICTORIAL: (CaptionCategory.TOPIC, CaptionCategory.TOPIC)},
        )


def test_tree_as_config_round_trip():
    spec = default_tree()
    assert load_tree(tree_as_config(spec)) == spec


def test_infer_pictorial_branch_skips_style():
    classifiers = mock_classifiers(PICTORIAL)
    bundle = infer("img", default_tree(), classifiers)
    assert bundle.map_type.label == PICTORIAL
    assert [c.category for c in bundle.children] == [
        CaptionCategory.LOCATION_PICT,
        CaptionCategory.TOPIC,
    ]
    assert classifiers[CaptionCategory.STYLE].calls == 0
    assert classifiers[CaptionCategory.CENTURY].calls == 0
    assert classifiers[CaptionCategory.LOCATION_TOPO].calls == 0


def test_infer_topographic_branch():
    classifiers = mock_classifiers(TOPOGRAPHIC)
    bundle = infer("img", default_tree(), classifiers)
    assert [c.category for c in bundle.children] == [
        CaptionCategory.LOCATION_TOPO,
        CaptionCategory.STYLE,
        CaptionCategory.CENTURY,
    ]
    assert classifiers[CaptionCategory.LOCATION_PICT].calls == 0
    assert classifiers[CaptionCategory.TOPIC].calls == 0


def test_infer_invocation_count_is_one_plus_branch():
    classifiers = mock_classifiers(PICTORIAL)
    infer("img", default_tree(), classifiers)
    total = sum(c.calls for c in classifiers.values())
    assert total == 1 + len(default_tree().branches[PICTORIAL])


def test_infer_deterministic_golden_with_mocks():
    expected = KeywordBundle(
        map_type=MockClassifier(CaptionCategory.MAP_TYPE, PICTORIAL).predict(None).caption,
        children=(
            MockClassifier(CaptionCategory.LOCATION_PICT, "world").predict(None).caption,
            MockClassifier(CaptionCategory.TOPIC, "flight network").predict(None).caption,
        ),
        root_scores={PICTORIAL: 0.9},
    )
    got = infer("img", default_tree(), mock_classifiers(PICTORIAL))
    assert got == expected
    assert got == infer("img", default_tree(), mock_classifiers(PICTORIAL))


def test_infer_missing_classifier():
    classifiers = mock_classifiers()
    del classifiers[CaptionCategory.TOPIC]
    with pytest.raises(MissingClassifier):
        infer("img", default_tree(), classifiers)


def test_infer_root_label_without_branch():
    classifiers = mock_classifiers("road map")
    with pytest.raises(InvalidTree):
        infer("img", default_tree(), classifiers)


def test_randomized_specs_routing_invariants():
    rng = np.random.default_rng(99)
    children_pool = [c for c in CaptionCategory if c is not CaptionCategory.MAP_TYPE]
    for trial in range(20):
        n_labels = int(rng.integers(2, 5))
        labels = tuple(f"type {i}" for i in range(n_labels))
        vocab = ClassVocabulary(CaptionCategory.MAP_TYPE, labels)
        branches = {}
        for label in labels:
            size = int(rng.integers(0, len(children_pool) + 1))
            picks = rng.choice(len(children_pool), size=size, replace=False)
            branches[label] = tuple(children_pool[int(i)] for i in picks)
        spec = DecisionTreeSpec(CaptionCategory.MAP_TYPE, branches)
        chosen = labels[int(rng.integers(0, n_labels))]
        classifiers = {CaptionCategory.MAP_TYPE: MockClassifier(CaptionCategory.MAP_TYPE, chosen)}
        for cat in children_pool:
            classifiers[cat] = MockClassifier(cat, "x")
        bundle = infer("img", spec, classifiers)
        assert sum(c.calls for c in classifiers.values()) == 1 + len(branches[chosen])
        assert tuple(c.category for c in bundle.children) == branches[chosen]
        off_branch = set(children_pool) - set(branches[chosen])
        assert all(classifiers[c].calls == 0 for c in off_branch)
