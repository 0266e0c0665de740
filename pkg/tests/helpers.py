"""Shared test doubles and synthetic data builders."""
from __future__ import annotations

import numpy as np
from PIL import Image

from mapstory.classify import Prediction
from mapstory.ingest import DatasetManifest
from mapstory.taxonomy import (
    PICTORIAL,
    TOPOGRAPHIC,
    CaptionCategory,
    ClassVocabulary,
    KeywordCaption,
)


class MockClassifier:
    """Returns a fixed label and counts how often it was invoked."""

    def __init__(self, category: CaptionCategory, label: str, confidence: float = 0.9):
        self.category = category
        self.label = label
        self.confidence = confidence
        self.calls = 0

    def predict(self, image) -> Prediction:
        self.calls += 1
        caption = KeywordCaption(self.category, self.label, self.confidence)
        return Prediction(caption, {self.label: self.confidence})


class StubEncoder:
    """Encoder whose outputs are looked up from fixed tables (for oracle tests)."""

    name = "stub"

    def __init__(self, embed_dim: int, image_vectors: dict, text_vectors: dict):
        self.embed_dim = embed_dim
        self.image_vectors = image_vectors
        self.text_vectors = text_vectors
        self.parameters = {}

    def encode_image(self, image):
        return np.asarray(self.image_vectors[image], dtype=np.float64)

    def encode_text(self, text):
        return np.asarray(self.text_vectors[text], dtype=np.float64)


def solid_array(r: int, g: int, b: int, size: int = 32) -> Image.Image:
    arr = np.zeros((size, size, 3), dtype=np.uint8)
    arr[..., 0], arr[..., 1], arr[..., 2] = r, g, b
    return Image.fromarray(arr)


def make_color_training_set(n_per_class: int = 10):
    """Solid red / solid blue images labeled pictorial / topographic.

    Returns (manifest, loader) where loader maps image refs to PIL images.
    The untrained toy encoder misclassifies the red half, so training has
    real work to do.
    """
    images: dict[str, Image.Image] = {}
    samples: list[tuple[str, str]] = []
    for i in range(n_per_class):
        images[f"red-{i}"] = solid_array(200 + i % 5, 8, 8)
        samples.append((f"red-{i}", PICTORIAL))
    for i in range(n_per_class):
        images[f"blue-{i}"] = solid_array(8, 8, 200 + i % 5)
        samples.append((f"blue-{i}", TOPOGRAPHIC))
    vocab = ClassVocabulary(
        CaptionCategory.MAP_TYPE, (PICTORIAL, TOPOGRAPHIC), source="derived_from_manifest"
    )
    manifest = DatasetManifest(CaptionCategory.MAP_TYPE, samples, vocab, split="train")
    return manifest, images.__getitem__
