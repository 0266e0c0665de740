"""The shipped demo configs must stay loadable and mutually consistent."""
from pathlib import Path

from mapstory.ingest import load_ingest_config
from mapstory.service import ServiceComponents, build_components, load_service_config
from mapstory.taxonomy import CaptionCategory, load_vocabularies
from mapstory.tree import default_tree, load_tree

CONFIGS = Path(__file__).parent.parent / "configs"


def test_vocabularies_config_loads():
    vocabs = load_vocabularies(CONFIGS / "vocabularies.yaml")
    assert set(vocabs) == set(CaptionCategory)
    assert vocabs[CaptionCategory.MAP_TYPE].labels == ("pictorial map", "topographic map")


def test_tree_config_is_paper_default():
    assert load_tree(CONFIGS / "tree.yaml") == default_tree()


def test_ingest_config_loads():
    config = load_ingest_config(CONFIGS / "ingest.yaml")
    assert config.gazetteer and config.style_lexicon and config.topic_lexicon


def test_service_config_builds_components(tmp_path, monkeypatch):
    monkeypatch.chdir(CONFIGS.parent)
    config = load_service_config(CONFIGS / "service.yaml")
    config.model_dir = str(tmp_path)  # empty: every category falls back to toy
    components = build_components(config)
    assert isinstance(components, ServiceComponents)
    assert set(components.classifiers) == set(CaptionCategory)
    assert components.story_client is None
