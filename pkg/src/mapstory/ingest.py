"""Dataset construction from raw map repository records.

Turns metadata records into per-category (image, label) manifests:
map type from the repository category, locations parsed from titles and
metadata, styles/topics from description keywords, centuries from date
fields, with configurable class pruning and merging.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from io import BytesIO
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .taxonomy import (
    PICTORIAL,
    TOPOGRAPHIC,
    CaptionCategory,
    ClassVocabulary,
    normalize_label,
)


class IngestError(ValueError):
    pass


class InvalidPolicy(IngestError):
    pass


class EmptyManifest(IngestError):
    pass


class DecodeError(IngestError):
    pass


REPOSITORY_CATEGORIES = ("classical", "pictorial_map", "other")


@dataclass(frozen=True)
class MapRecord:
    """One raw repository entry."""

    id: str
    image_ref: str
    title: str = ""
    metadata_location: str = ""
    description: str = ""
    date_field: str = ""
    repository_category: str = "other"

    def __post_init__(self):
        if not self.id:
            raise IngestError("record id must be non-empty")
        if not self.image_ref:
            raise IngestError(f"{self.id}: image_ref must be non-empty")
        if self.repository_category not in REPOSITORY_CATEGORIES:
            raise IngestError(
                f"{self.id}: unknown repository_category {self.repository_category!r}"
            )


def load_corpus(corpus_dir: str | Path) -> list[MapRecord]:
    """Load every *.json record file in a corpus directory, sorted by id.

    Relative image refs are interpreted relative to the corpus directory.
    """
    corpus_dir = Path(corpus_dir)
    records = []
    for path in sorted(corpus_dir.glob("*.json")):
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}: not valid JSON: {exc}") from exc
        unknown = set(raw) - {f.name for f in MapRecord.__dataclass_fields__.values()}
        if unknown:
            raise IngestError(f"{path}: unknown record keys {sorted(unknown)}")
        ref = raw.get("image_ref", "")
        if ref and not Path(ref).is_absolute():
            raw["image_ref"] = (corpus_dir / ref).as_posix()
        records.append(MapRecord(**raw))
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise IngestError(f"duplicate record ids in corpus: {dupes}")
    return sorted(records, key=lambda r: r.id)


# ---------------------------------------------------------------------------
# field derivation rules
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _contains_sequence(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    return any(haystack[i : i + n] == needle for i in range(len(haystack) - n + 1))


def _best_gazetteer_match(text: str, gazetteer: list[str]) -> str | None:
    # longest token sequence wins; ties break by gazetteer order
    toks = _tokens(text)
    best = None
    best_len = 0
    for entry in gazetteer:
        label = normalize_label(entry)
        needle = _tokens(label)
        if len(needle) > best_len and _contains_sequence(toks, needle):
            best, best_len = label, len(needle)
    return best


def parse_location(title: str, metadata_location: str, gazetteer: list[str]) -> str | None:
    """Match a gazetteer entry in the title, falling back to the metadata field.

    The title wins over the metadata location when both match: the location
    attribute in repository metadata is unreliable.
    """
    if not gazetteer:
        raise IngestError("gazetteer must be non-empty")
    return _best_gazetteer_match(title, gazetteer) or _best_gazetteer_match(
        metadata_location, gazetteer
    )


_YEAR_RE = re.compile(r"(?<!\d)(\d{4})(?!\d)")

_ORDINAL_SUFFIXES = {1: "st", 2: "nd", 3: "rd"}


def _ordinal(n: int) -> str:
    if n % 100 in (11, 12, 13):
        return f"{n}th"
    return f"{n}{_ORDINAL_SUFFIXES.get(n % 10, 'th')}"


def derive_century(date_field: str) -> str | None:
    """Century label from the first plausible 4-digit year in a date string.

    Years ending in 00 belong to the earlier century (1800 -> 18th).
    """
    for match in _YEAR_RE.finditer(date_field):
        year = int(match.group(1))
        if 1000 <= year <= 2099:
            return f"{_ordinal((year + 99) // 100)} century"
    return None


def extract_style_keywords(description: str, style_lexicon: list[str]) -> list[str]:
    """All lexicon entries whose token sequence occurs in the description.

    Deduplicated, returned in lexicon order.
    """
    if not style_lexicon:
        raise IngestError("style lexicon must be non-empty")
    toks = _tokens(description)
    found = []
    for entry in style_lexicon:
        label = normalize_label(entry)
        if label not in found and _contains_sequence(toks, _tokens(label)):
            found.append(label)
    return found


# ---------------------------------------------------------------------------
# class pruning
# ---------------------------------------------------------------------------

PRUNING_MODES = ("top_k", "min_count", "explicit_list")


@dataclass(frozen=True)
class PruningPolicy:
    mode: str
    k: int | None = None
    min_count: int | None = None
    keep: tuple[str, ...] | None = None
    merge_map: dict[str, str] | None = None

    def __post_init__(self):
        if self.mode not in PRUNING_MODES:
            raise InvalidPolicy(f"unknown pruning mode {self.mode!r}")
        required = {"top_k": "k", "min_count": "min_count", "explicit_list": "keep"}[self.mode]
        if getattr(self, required) is None:
            raise InvalidPolicy(f"mode {self.mode!r} requires field {required!r}")


def apply_merge_map(label: str, merge_map: dict[str, str] | None) -> str:
    label = normalize_label(label)
    if not merge_map:
        return label
    return normalize_label(merge_map.get(label, label))


def prune_classes(counts: dict[str, int], policy: PruningPolicy) -> list[str]:
    """Kept labels under a pruning policy; merge_map folds counts first.

    top_k ties break by the order labels appear in `counts`.
    """
    if not counts:
        raise IngestError("counts must be non-empty")
    merged: dict[str, int] = {}
    for label, count in counts.items():
        target = apply_merge_map(label, policy.merge_map)
        merged[target] = merged.get(target, 0) + count

    if policy.mode == "explicit_list":
        return [normalize_label(l) for l in policy.keep]
    if policy.mode == "min_count":
        return [l for l, c in merged.items() if c >= policy.min_count]
    order = {label: i for i, label in enumerate(merged)}
    ranked = sorted(merged.items(), key=lambda kv: (-kv[1], order[kv[0]]))
    return [l for l, _ in ranked[: policy.k]]


# ---------------------------------------------------------------------------
# image loading / preprocessing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreprocessConfig:
    max_side_px: int = 768
    upscale: bool = False

    def __post_init__(self):
        if self.max_side_px <= 0:
            raise IngestError("max_side_px must be positive")


def load_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as img:
            img.load()
            return img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc


def load_image_bytes(data: bytes) -> Image.Image:
    try:
        img = Image.open(BytesIO(data))
        img.load()
        return img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode uploaded image: {exc}") from exc


def preprocess_image(image: Image.Image, config: PreprocessConfig | None = None) -> Image.Image:
    """Shrink so the longest side is at most max_side_px, preserving aspect.

    Images already within bounds pass through untouched unless upscaling is
    explicitly enabled.
    """
    config = config or PreprocessConfig()
    w, h = image.size
    longest = max(w, h)
    if longest == config.max_side_px or (longest < config.max_side_px and not config.upscale):
        return image
    scale = config.max_side_px / longest
    new_w = max(1, int(round(w * scale)))
    new_h = max(1, int(round(h * scale)))
    return image.resize((new_w, new_h), Image.LANCZOS)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

SPLITS = ("train", "test", "full")


@dataclass
class DatasetManifest:
    category: CaptionCategory
    samples: list[tuple[str, str]]
    class_labels: ClassVocabulary
    split: str = "full"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise IngestError(f"unknown split {self.split!r}")
        if self.class_labels.category != self.category:
            raise IngestError("manifest category does not match its vocabulary")
        refs = [ref for ref, _ in self.samples]
        if len(set(refs)) != len(refs):
            raise IngestError(f"{self.category.value}: duplicate image refs in manifest")
        for ref, label in self.samples:
            if label not in self.class_labels:
                raise IngestError(
                    f"{self.category.value}: label {label!r} outside vocabulary ({ref})"
                )

    def __len__(self) -> int:
        return len(self.samples)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Line-oriented manifest: JSON header, then one {image, label} per line."""
    header = {
        "category": manifest.category.value,
        "labels": list(manifest.class_labels.labels),
        "count": len(manifest.samples),
    }
    lines = [json.dumps(header, ensure_ascii=False)]
    lines += [
        json.dumps({"image": ref, "label": label}, ensure_ascii=False)
        for ref, label in manifest.samples
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path, split: str = "full") -> DatasetManifest:
    path = Path(path)
    lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]
    if not lines:
        raise IngestError(f"{path}: empty manifest file")
    header = json.loads(lines[0])
    samples = [(row["image"], row["label"]) for row in map(json.loads, lines[1:])]
    if header["count"] != len(samples):
        raise IngestError(
            f"{path}: header count {header['count']} != {len(samples)} samples"
        )
    category = CaptionCategory.from_id(header["category"])
    vocab = ClassVocabulary(category, tuple(header["labels"]), source="derived_from_manifest")
    return DatasetManifest(category, samples, vocab, split=split)


def manifest_filename(category: CaptionCategory, split: str) -> str:
    return f"{category.value}.{split}.manifest"


# ---------------------------------------------------------------------------
# corpus -> manifests
# ---------------------------------------------------------------------------


@dataclass
class IngestConfig:
    gazetteer: list[str]
    style_lexicon: list[str]
    topic_lexicon: list[str]
    pictorial_locations: list[str]
    style_policy: PruningPolicy | None = None
    topic_policy: PruningPolicy | None = None
    pict_location_policy: PruningPolicy | None = None
    topo_location_policy: PruningPolicy | None = None
    style_joiner: str = " with "


def load_ingest_config(path: str | Path) -> IngestConfig:
    import yaml

    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    policies = {}
    for key in ("style_policy", "topic_policy", "pict_location_policy", "topo_location_policy"):
        if raw.get(key) is not None:
            spec = dict(raw[key])
            if "keep" in spec:
                spec["keep"] = tuple(spec["keep"])
            policies[key] = PruningPolicy(**spec)
    return IngestConfig(
        gazetteer=list(raw.get("gazetteer", [])),
        style_lexicon=list(raw.get("style_lexicon", [])),
        topic_lexicon=list(raw.get("topic_lexicon", [])),
        pictorial_locations=list(raw.get("pictorial_locations", [])),
        **policies,
    )


_MAP_TYPE_OF = {"classical": TOPOGRAPHIC, "pictorial_map": PICTORIAL}


def _derive_label(record: MapRecord, category: CaptionCategory, config: IngestConfig) -> str | None:
    if category is CaptionCategory.MAP_TYPE:
        return _MAP_TYPE_OF.get(record.repository_category)
    if category is CaptionCategory.LOCATION_TOPO:
        return parse_location(record.title, record.metadata_location, config.gazetteer)
    if category is CaptionCategory.LOCATION_PICT:
        return parse_location(record.title, record.metadata_location, config.pictorial_locations)
    if category is CaptionCategory.CENTURY:
        return derive_century(record.date_field)
    if category is CaptionCategory.STYLE:
        found = extract_style_keywords(record.description, config.style_lexicon)
        # multiple style traits become one compound class, in lexicon order
        return config.style_joiner.join(found) if found else None
    if category is CaptionCategory.TOPIC:
        found = extract_style_keywords(record.description, config.topic_lexicon)
        return found[0] if found else None
    raise IngestError(f"no derivation rule for {category}")


_POLICY_FIELD = {
    CaptionCategory.STYLE: "style_policy",
    CaptionCategory.TOPIC: "topic_policy",
    CaptionCategory.LOCATION_PICT: "pict_location_policy",
    CaptionCategory.LOCATION_TOPO: "topo_location_policy",
}

_CATEGORY_RECORDS = {
    CaptionCategory.MAP_TYPE: ("classical", "pictorial_map"),
    CaptionCategory.LOCATION_TOPO: ("classical",),
    CaptionCategory.STYLE: ("classical",),
    CaptionCategory.CENTURY: ("classical",),
    CaptionCategory.LOCATION_PICT: ("pictorial_map",),
    CaptionCategory.TOPIC: ("pictorial_map",),
}


def build_manifests(
    records: list[MapRecord], config: IngestConfig
) -> tuple[dict[CaptionCategory, DatasetManifest], list[str]]:
    """Per-category full manifests plus a human-readable build log."""
    if not records:
        raise IngestError("no records to ingest")
    ordered = sorted(records, key=lambda r: r.id)
    manifests: dict[CaptionCategory, DatasetManifest] = {}
    log: list[str] = []
    n_topo = sum(1 for r in ordered if r.repository_category == "classical")
    n_pict = sum(1 for r in ordered if r.repository_category == "pictorial_map")
    log.append(f"corpus: {len(ordered)} records ({n_topo} topographic, {n_pict} pictorial)")

    for category in CaptionCategory:
        applicable = [r for r in ordered if r.repository_category in _CATEGORY_RECORDS[category]]
        labeled: list[tuple[str, str]] = []
        skipped = 0
        for record in applicable:
            label = _derive_label(record, category, config)
            if label is None:
                skipped += 1
                continue
            labeled.append((record.image_ref, normalize_label(label)))

        policy = None
        if category in _POLICY_FIELD:
            policy = getattr(config, _POLICY_FIELD[category])
        if policy is not None:
            if policy.merge_map:
                labeled = [(ref, apply_merge_map(l, policy.merge_map)) for ref, l in labeled]
            counts: dict[str, int] = {}
            for _, label in labeled:
                counts[label] = counts.get(label, 0) + 1
            if counts:
                kept = prune_classes(counts, policy)
                pruned = len(labeled) - sum(counts.get(l, 0) for l in kept)
                labeled = [(ref, l) for ref, l in labeled if l in kept]
                class_order = kept
                if pruned:
                    log.append(f"{category.value}: pruned {pruned} samples outside kept classes")
            else:
                class_order = []
        else:
            class_order = list(dict.fromkeys(label for _, label in labeled))
        if category is CaptionCategory.MAP_TYPE:
            class_order = [PICTORIAL, TOPOGRAPHIC]

        if not class_order:
            log.append(f"{category.value}: EMPTY (no derivable labels)")
            continue
        vocab = ClassVocabulary(category, tuple(class_order), source="derived_from_manifest")
        manifests[category] = DatasetManifest(category, labeled, vocab, split="full")
        log.append(
            f"{category.value}: {len(labeled)} samples, {len(class_order)} classes"
            f" ({skipped} records without derivable label)"
        )
    return manifests, log


def split_train_test(
    manifest: DatasetManifest, test_fraction: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Deterministic per-class stratified split; singleton classes go to train."""
    import numpy as np

    if not manifest.samples:
        raise EmptyManifest(f"{manifest.category.value}: nothing to split")
    if not 0.0 < test_fraction < 1.0:
        raise IngestError(f"test_fraction must be in (0,1), got {test_fraction}")

    rng = np.random.default_rng(seed)
    by_label: dict[str, list[tuple[str, str]]] = {l: [] for l in manifest.class_labels.labels}
    for sample in manifest.samples:
        by_label[sample[1]].append(sample)

    train: list[tuple[str, str]] = []
    test: list[tuple[str, str]] = []
    for label in manifest.class_labels.labels:
        group = by_label[label]
        n = len(group)
        if n == 0:
            continue
        perm = rng.permutation(n)
        n_test = min(n - 1, int(n * test_fraction + 0.5)) if n >= 2 else 0
        picks = set(perm[:n_test].tolist())
        for i in range(n):
            (test if i in picks else train).append(group[i])

    train.sort(key=lambda s: s[0])
    test.sort(key=lambda s: s[0])
    make = lambda samples, split: DatasetManifest(
        manifest.category, samples, manifest.class_labels, split=split
    )
    return make(train, "train"), make(test, "test")
