"""Per-category accuracy evaluation and the comparison report."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .ingest import DatasetManifest, load_image
from .taxonomy import CaptionCategory

log = logging.getLogger(__name__)

CATEGORY_ORDER = tuple(CaptionCategory)


class EvaluationError(Exception):
    pass


@dataclass
class BackendRow:
    accuracies: dict[CaptionCategory, float]
    average: float


@dataclass
class EvaluationReport:
    rows: dict[str, BackendRow] = field(default_factory=dict)
    sample_counts: dict[CaptionCategory, int] = field(default_factory=dict)


def evaluate(
    backend, manifests: dict[CaptionCategory, DatasetManifest]
) -> tuple[dict[CaptionCategory, float], float]:
    """Exact accuracy per category plus the unweighted category mean.

    `backend` needs `predict_label(category, image_ref) -> label`. Empty
    manifests are skipped with a warning.
    """
    accuracies: dict[CaptionCategory, float] = {}
    for category in CATEGORY_ORDER:
        manifest = manifests.get(category)
        if manifest is None:
            continue
        if not manifest.samples:
            log.warning("%s: empty test manifest, skipped", category.value)
            continue
        correct = sum(
            1
            for ref, label in manifest.samples
            if backend.predict_label(category, ref) == label
        )
        accuracies[category] = correct / len(manifest.samples)
    if not accuracies:
        raise EvaluationError("no non-empty manifests to evaluate")
    average = sum(accuracies.values()) / len(accuracies)
    return accuracies, average


def row_from_accuracies(accuracies: dict[CaptionCategory, float]) -> BackendRow:
    if not accuracies:
        raise EvaluationError("cannot build a report row without accuracies")
    return BackendRow(dict(accuracies), sum(accuracies.values()) / len(accuracies))


def make_report(
    backends, manifests: dict[CaptionCategory, DatasetManifest]
) -> EvaluationReport:
    report = EvaluationReport(
        sample_counts={c: len(m.samples) for c, m in manifests.items() if m.samples}
    )
    for backend in backends:
        accuracies, average = evaluate(backend, manifests)
        report.rows[backend.name] = BackendRow(accuracies, average)
    return report


def render_report(report: EvaluationReport) -> str:
    """Text table: one row per backend, Table-1 category order, 2-decimal cells."""
    categories = [
        c for c in CATEGORY_ORDER if any(c in row.accuracies for row in report.rows.values())
    ]
    headers = ["Backend"] + [c.display_name for c in categories] + ["Ave. Acc."]
    lines = []
    for name, row in report.rows.items():
        cells = [name]
        for category in categories:
            acc = row.accuracies.get(category)
            cells.append("-" if acc is None else f"{acc:.2f}")
        cells.append(f"{row.average:.2f}")
        lines.append(cells)
    widths = [max(len(h), *(len(l[i]) for l in lines)) if lines else len(h)
              for i, h in enumerate(headers)]
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [fmt(headers), fmt(["-" * w for w in widths])]
    out += [fmt(l) for l in lines]
    return "\n".join(out) + "\n"


def report_as_dict(report: EvaluationReport) -> dict:
    return {
        "rows": {
            name: {
                "accuracies": {c.value: a for c, a in row.accuracies.items()},
                "average": row.average,
            }
            for name, row in report.rows.items()
        },
        "sample_counts": {c.value: n for c, n in report.sample_counts.items()},
    }


def write_report(report: EvaluationReport, path: str | Path) -> None:
    """Text table at `path`, machine-readable JSON alongside it."""
    path = Path(path)
    path.write_text(render_report(report), encoding="utf-8")
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(report_as_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


class ClassifierBackend:
    """Evaluates real per-category classifiers on manifest image files."""

    def __init__(self, name: str, classifiers: dict, image_loader: Callable = load_image):
        self.name = name
        self.classifiers = classifiers
        self._loader = image_loader
        self._cache: dict[str, object] = {}

    def predict_label(self, category: CaptionCategory, image_ref: str) -> str:
        if image_ref not in self._cache:
            self._cache[image_ref] = self._loader(image_ref)
        return self.classifiers[category].predict(self._cache[image_ref]).caption.label


class OracleBackend:
    """Reads the true labels back from the manifests; accuracy 1.0 by design."""

    name = "oracle"

    def __init__(self, manifests: dict[CaptionCategory, DatasetManifest]):
        self._lookup = {
            (category, ref): label
            for category, manifest in manifests.items()
            for ref, label in manifest.samples
        }

    def predict_label(self, category: CaptionCategory, image_ref: str) -> str:
        return self._lookup[(category, image_ref)]
