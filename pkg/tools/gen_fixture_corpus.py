"""Regenerate the 60-record fixture corpus under tests/fixtures/corpus/.

The per-category label distribution is fixed by the tables below; the golden
summary in tests/fixtures/golden/ is derived from these tables by hand and is
NOT written by this script. Each record also gets a small deterministic image
whose palette correlates with its labels, so fine-tuning on the fixture data
has signal to learn.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "corpus"

# topo table: (location key or (None, meta) tuple, style key, date string)
# location: t:<name> from title, m:<name> from metadata_location, None absent
TOPO = [
    ("t:Europe", "hc", "1750"),
    ("t:France", "eng", "ca. 1820"),
    ("t:Italy", "hcpr", "1650?"),
    ("t:Asia", "de", "published 1790"),
    ("t:Europe", "hc", "[1810]"),
    ("t:France", "eng", "1760"),
    ("m:Europe", "hc", "1845-1850"),
    ("t:Italy", "hcpr", "1770"),
    ("t:Europe", "eng", "1890"),
    ("t:France", "hc", "1740"),
    ("t:Europe", None, "1660"),
    ("t:Asia", "hc", "1855"),
    ("m:France", "engde", "1799"),
    ("t:Italy", "hcpr", "undated"),
    ("t:Europe", "de", "1830"),
    ("x:France", "hc", "1785"),  # title France, metadata italy: title wins
    ("t:Europe", None, "1870"),
    (None, "eng", "1705"),
    ("m:Italy", "hcpr", "1625"),
    ("t:Europe", None, "1795"),
    (None, "eng", "1865"),
    ("t:France", "hc", ""),
    (None, None, "1788"),
    (None, None, "1840"),
]

STYLE_TEXT = {
    "hc": "A hand-colored map with elaborate borders.",
    "eng": "Engraved plate from an old atlas.",
    "hcpr": "Hand-colored sheet with fine pictorial relief shading.",
    "de": "Decorated with decorative elements in each corner.",
    "engde": "Engraved, with decorative elements along the margin.",
    None: "A plain sheet without further notes.",
}

# pict table: (location key, topic key)
PICT = [
    ("t:world", "fn"),
    ("t:United States", "mil"),
    ("t:world", "rr"),
    ("t:Paris", "fn"),
    ("t:world", "trade"),
    ("t:United States", "fn"),
    ("t:world", "mil"),
    ("m:world", "fn"),
    ("t:United States", "rr"),
    ("t:world", None),
    ("t:Paris", "mil"),
    ("t:world", "fn"),
    ("t:United States", "trade"),
    ("t:world", "fnmil"),
    (None, "mil"),
    ("t:world", "fn"),
    ("t:United States", "rr"),
    ("t:world", "fn"),
    (None, "rr"),
    ("m:United States", "mil"),
    ("t:world", "fn"),
    ("t:Paris", None),
    ("t:world", "fn"),
    ("t:United States", "mil"),
    ("t:world", "rr"),
    (None, "fn"),
    ("t:United States", None),
    ("t:world", "fn"),
    ("t:United States", "mil"),
    (None, None),
]

TOPIC_TEXT = {
    "fn": "Shows the global flight network of an early airline.",
    "mil": "Depicts military fortifications and garrisons.",
    "rr": "Illustrates the railroad lines crossing the region.",
    "trade": "Charts the major trade routes of the era.",
    "fnmil": "Flight network connections alongside military airfields.",
    None: "A colorful illustrated scene.",
}

OTHER_TITLES = [
    "Celestial chart of the northern sky",
    "City plan fragment",
    "Nautical almanac cover",
    "Portrait of a cartographer",
    "Decorative atlas frontispiece",
    "Table of distances",
]


def topo_record(i: int, loc, style, date) -> dict:
    rid = f"topo-{i:02d}"
    title, meta = f"Untitled survey sheet {i}", ""
    if loc:
        kind, name = loc.split(":", 1)
        if kind == "t":
            title = f"Map of {name}, sheet {i}"
        elif kind == "m":
            meta = name
        elif kind == "x":
            title = "Carte de la France méridionale"
            meta = "italy"
    return {
        "id": rid,
        "image_ref": f"images/{rid}.png",
        "title": title,
        "metadata_location": meta,
        "description": STYLE_TEXT[style],
        "date_field": date,
        "repository_category": "classical",
    }


def pict_record(i: int, loc, topic) -> dict:
    rid = f"pict-{i:02d}"
    title, meta = f"An illustrated broadside {i}", ""
    if loc:
        kind, name = loc.split(":", 1)
        if kind == "t":
            title = f"A pictorial map of the {name}" if name == "world" else f"Pictorial chart of {name}"
        else:
            meta = name
    return {
        "id": rid,
        "image_ref": f"images/{rid}.png",
        "title": title,
        "metadata_location": meta,
        "description": TOPIC_TEXT[topic],
        "date_field": "1930",
        "repository_category": "pictorial_map",
    }


def other_record(i: int) -> dict:
    rid = f"other-{i:02d}"
    return {
        "id": rid,
        "image_ref": f"images/{rid}.png",
        "title": OTHER_TITLES[i - 1],
        "metadata_location": "",
        "description": "Miscellaneous holding.",
        "date_field": "1900",
        "repository_category": "other",
    }


# base palettes keyed by the record's labels, so classifiers have signal
LOCATION_TINT = {
    "Europe": (96, 120, 72), "France": (80, 104, 128), "Italy": (136, 112, 64),
    "Asia": (128, 88, 96), "world": (64, 112, 144), "United States": (152, 96, 72),
    "Paris": (112, 96, 136), None: (104, 104, 104),
}
STYLE_SHIFT = {"hc": 28, "eng": -24, "hcpr": 48, "de": 8, "engde": -40, None: 0}
TOPIC_SHIFT = {"fn": 40, "mil": -32, "rr": 12, "trade": -8, "fnmil": 40, None: 0}


def _seed(record_id: str) -> int:
    return int(hashlib.sha256(record_id.encode()).hexdigest()[:8], 16)


def _location_name(loc) -> str | None:
    if loc is None:
        return None
    kind, name = loc.split(":", 1)
    return "France" if kind == "x" else name


def render_image(record_id: str, base, shift: int, topographic: bool) -> None:
    rng = np.random.default_rng(_seed(record_id))
    h, w = 48, 64
    arr = np.clip(
        np.array(base, dtype=np.int16) + shift + rng.integers(-18, 19, size=(h, w, 3)),
        0, 255,
    ).astype(np.uint8)
    img = Image.fromarray(arr)
    draw = ImageDraw.Draw(img)
    if topographic:  # contour-like horizontal lines
        for y in range(4 + int(rng.integers(0, 4)), h, 7):
            draw.line([(0, y), (w, y)], fill=tuple(int(c * 0.6) for c in base), width=1)
    else:  # pictorial blobs
        for _ in range(6):
            x, y = int(rng.integers(0, w)), int(rng.integers(0, h))
            r = int(rng.integers(3, 9))
            color = tuple(int(v) for v in rng.integers(40, 256, size=3))
            draw.ellipse([x - r, y - r, x + r, y + r], fill=color)
    img.save(OUT / "images" / f"{record_id}.png")


def main() -> None:
    (OUT / "images").mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for old in (OUT / "images").glob("*.png"):
        old.unlink()
    records = (
        [topo_record(i + 1, *row) for i, row in enumerate(TOPO)]
        + [pict_record(i + 1, *row) for i, row in enumerate(PICT)]
        + [other_record(i + 1) for i in range(len(OTHER_TITLES))]
    )
    for record in records:
        path = OUT / f"{record['id']}.json"
        path.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    for i, (loc, style, _) in enumerate(TOPO):
        render_image(
            f"topo-{i + 1:02d}", LOCATION_TINT[_location_name(loc)], STYLE_SHIFT[style], True
        )
    for i, (loc, topic) in enumerate(PICT):
        render_image(
            f"pict-{i + 1:02d}", LOCATION_TINT[_location_name(loc)], TOPIC_SHIFT[topic], False
        )
    for i in range(len(OTHER_TITLES)):
        render_image(f"other-{i + 1:02d}", (104, 104, 104), 0, False)
    print(f"wrote {len(records)} records (+images) to {OUT}")


if __name__ == "__main__":
    main()
