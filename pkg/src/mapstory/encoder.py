"""Paired image/text encoders sharing one embedding space.

Two implementations of the same contract: encoders reconstructed from a
checkpoint file, and a deterministic toy encoder (fixed featurizers plus one
trainable linear map per tower) that makes training and evaluation runnable
without any model download.

Checkpoint layout: magic, little-endian uint32 header length, UTF-8 JSON
header {name, embed_dim, params: [[key, shape], ...], config}, then raw
little-endian float32 parameter blocks in header order.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .taxonomy import CaptionCategory


class EncoderError(Exception):
    pass


class EncoderFailure(EncoderError):
    """Checkpoint missing, corrupt, or otherwise unusable."""


class EmptyText(EncoderError, ValueError):
    pass


MODEL_DIR_ENV = "MAPSTORY_MODEL_DIR"

_MAGIC = b"MSENC1\n"


def model_dir(override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(MODEL_DIR_ENV, "models"))


def checkpoint_path(category: CaptionCategory, directory: str | Path | None = None) -> Path:
    return model_dir(directory) / f"{category.value}.ckpt"


def _as_rgb_array(image) -> np.ndarray:
    if isinstance(image, Image.Image):
        return np.asarray(image.convert("RGB"), dtype=np.uint8)
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise EncoderError(f"expected an RGB image, got array shape {arr.shape}")
    return arr.astype(np.uint8)


class ToyEncoder:
    """Deterministic encoder: fixed featurizers + one trainable linear map per tower.

    Image features: per-channel color histogram and a downsampled intensity
    grid. Text features: hashed character n-gram counts. Both are
    l2-normalized before the linear maps, so embeddings are bounded.
    Parameters are float32 (the checkpoint dtype); all math runs in float64.
    """

    name = "toy"

    N_BINS = 8
    GRID = 6
    TEXT_BUCKETS = 256
    NGRAM_MIN = 1
    NGRAM_MAX = 3

    def __init__(self, embed_dim: int = 64, seed: int = 0, parameters: dict | None = None):
        self.embed_dim = embed_dim
        self.seed = seed
        self.image_feature_dim = 3 * self.N_BINS + self.GRID * self.GRID
        self.text_feature_dim = self.TEXT_BUCKETS
        if parameters is None:
            rng = np.random.default_rng(seed)
            parameters = {
                "image_weight": (
                    rng.standard_normal((embed_dim, self.image_feature_dim))
                    / np.sqrt(self.image_feature_dim)
                ).astype(np.float32),
                "text_weight": (
                    rng.standard_normal((embed_dim, self.text_feature_dim))
                    / np.sqrt(self.text_feature_dim)
                ).astype(np.float32),
            }
        self.parameters = {k: np.asarray(v, dtype=np.float32) for k, v in parameters.items()}
        expected = {
            "image_weight": (embed_dim, self.image_feature_dim),
            "text_weight": (embed_dim, self.text_feature_dim),
        }
        for key, shape in expected.items():
            if key not in self.parameters or self.parameters[key].shape != shape:
                raise EncoderError(f"toy encoder parameter {key!r} must have shape {shape}")

    # fixed featurizers ----------------------------------------------------

    def featurize_image(self, image) -> np.ndarray:
        raw = kernels.image_raw_features(_as_rgb_array(image), self.N_BINS, self.GRID)
        norm = np.linalg.norm(raw)
        return raw / norm if norm > 0 else raw

    def featurize_text(self, text: str) -> np.ndarray:
        if not text:
            raise EmptyText("cannot encode empty text")
        data = np.frombuffer(text.encode("utf-8"), dtype=np.uint8)
        raw = kernels.ngram_counts(data, self.NGRAM_MIN, self.NGRAM_MAX, self.TEXT_BUCKETS)
        norm = np.linalg.norm(raw)
        return raw / norm if norm > 0 else raw

    # encoder contract -----------------------------------------------------

    def encode_image(self, image) -> np.ndarray:
        return self.parameters["image_weight"].astype(np.float64) @ self.featurize_image(image)

    def encode_text(self, text: str) -> np.ndarray:
        return self.parameters["text_weight"].astype(np.float64) @ self.featurize_text(text)

    def with_parameters(self, parameters: dict) -> "ToyEncoder":
        return ToyEncoder(self.embed_dim, self.seed, parameters)

    # checkpoint hooks -----------------------------------------------------

    def checkpoint_config(self) -> dict:
        return {"seed": self.seed}

    @classmethod
    def from_checkpoint(cls, header: dict, parameters: dict) -> "ToyEncoder":
        return cls(
            embed_dim=header["embed_dim"],
            seed=header.get("config", {}).get("seed", 0),
            parameters=parameters,
        )


_ENCODER_REGISTRY = {ToyEncoder.name: ToyEncoder.from_checkpoint}


def save_encoder(encoder, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    params = encoder.parameters
    header = {
        "name": encoder.name,
        "embed_dim": encoder.embed_dim,
        "params": [[key, list(params[key].shape)] for key in params],
        "config": encoder.checkpoint_config(),
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for key in params:
            fh.write(np.ascontiguousarray(params[key], dtype="<f4").tobytes())


def load_encoder(path: str | Path):
    path = Path(path)
    if not path.is_file():
        raise EncoderFailure(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if not data.startswith(_MAGIC):
        raise EncoderFailure(f"{path}: bad checkpoint magic")
    offset = len(_MAGIC)
    try:
        (header_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
        offset += header_len
        parameters = {}
        for key, shape in header["params"]:
            n = int(np.prod(shape))
            block = data[offset : offset + 4 * n]
            if len(block) != 4 * n:
                raise EncoderFailure(f"{path}: truncated parameter block {key!r}")
            parameters[key] = np.frombuffer(block, dtype="<f4").reshape(shape).copy()
            offset += 4 * n
    except (struct.error, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise EncoderFailure(f"{path}: corrupt checkpoint: {exc}") from exc
    if offset != len(data):
        raise EncoderFailure(f"{path}: {len(data) - offset} trailing bytes")
    factory = _ENCODER_REGISTRY.get(header.get("name"))
    if factory is None:
        raise EncoderFailure(f"{path}: unknown encoder name {header.get('name')!r}")
    encoder = factory(header, parameters)
    for arr in encoder.parameters.values():
        if not np.all(np.isfinite(arr)):
            raise EncoderFailure(f"{path}: non-finite parameters")
    return encoder
