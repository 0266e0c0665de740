import json

import pytest

from mapstory.evaluation import (
    EvaluationError,
    EvaluationReport,
    OracleBackend,
    evaluate,
    make_report,
    render_report,
    report_as_dict,
    row_from_accuracies,
    write_report,
)
from mapstory.ingest import DatasetManifest
from mapstory.taxonomy import CaptionCategory, ClassVocabulary

BASE_ROW = {
    CaptionCategory.MAP_TYPE: 0.43,
    CaptionCategory.LOCATION_TOPO: 0.28,
    CaptionCategory.STYLE: 0.29,
    CaptionCategory.CENTURY: 0.40,
    CaptionCategory.LOCATION_PICT: 0.96,
    CaptionCategory.TOPIC: 0.47,
}
TUNED_ROW = {
    CaptionCategory.MAP_TYPE: 0.96,
    CaptionCategory.LOCATION_TOPO: 0.78,
    CaptionCategory.STYLE: 0.75,
    CaptionCategory.CENTURY: 0.76,
    CaptionCategory.LOCATION_PICT: 0.93,
    CaptionCategory.TOPIC: 0.67,
}


def small_manifests():
    vocab_a = ClassVocabulary(CaptionCategory.MAP_TYPE, ("pictorial map", "topographic map"),
                              source="derived_from_manifest")
    vocab_b = ClassVocabulary(CaptionCategory.TOPIC, ("flight network", "military"),
                              source="derived_from_manifest")
    m_a = DatasetManifest(
        CaptionCategory.MAP_TYPE,
        [(f"img-{i}", "pictorial map" if i % 2 else "topographic map") for i in range(10)],
        vocab_a,
        split="test",
    )
    m_b = DatasetManifest(
        CaptionCategory.TOPIC,
        [(f"img-{i}", "flight network" if i < 6 else "military") for i in range(10)],
        vocab_b,
        split="test",
    )
    return {CaptionCategory.MAP_TYPE: m_a, CaptionCategory.TOPIC: m_b}


class ConstantBackend:
    def __init__(self, name, label):
        self.name = name
        self.label = label

    def predict_label(self, category, image_ref):
        return self.label


def test_oracle_backend_scores_one():
    manifests = small_manifests()
    accuracies, average = evaluate(OracleBackend(manifests), manifests)
    assert all(a == 1.0 for a in accuracies.values())
    assert average == 1.0


def test_constant_wrong_backend_scores_zero():
    manifests = small_manifests()
    accuracies, _ = evaluate(ConstantBackend("wrong", "no such label"), manifests)
    assert all(a == 0.0 for a in accuracies.values())


def test_seven_of_ten_correct():
    manifests = {CaptionCategory.TOPIC: small_manifests()[CaptionCategory.TOPIC]}

    class SevenRight:
        name = "seven"

        def predict_label(self, category, image_ref):
            i = int(image_ref.split("-")[1])
            truth = "flight network" if i < 6 else "military"
            return truth if i < 7 else "wrong"

    accuracies, average = evaluate(SevenRight(), manifests)
    assert accuracies[CaptionCategory.TOPIC] == pytest.approx(0.7)
    assert average == pytest.approx(0.7)


def test_accuracy_matches_brute_force_recount():
    manifests = small_manifests()
    backend = ConstantBackend("always-pictorial", "pictorial map")
    accuracies, _ = evaluate(backend, manifests)
    manifest = manifests[CaptionCategory.MAP_TYPE]
    hits = 0
    for ref, label in manifest.samples:
        if backend.predict_label(CaptionCategory.MAP_TYPE, ref) == label:
            hits += 1
    assert accuracies[CaptionCategory.MAP_TYPE] == hits / len(manifest.samples)


def test_accuracy_permutation_invariant():
    manifests = small_manifests()
    backend = OracleBackend(manifests)
    forward, _ = evaluate(backend, manifests)
    for manifest in manifests.values():
        manifest.samples.reverse()
    backward, _ = evaluate(backend, manifests)
    assert forward == backward


def test_empty_manifest_skipped_with_warning(caplog):
    manifests = small_manifests()
    vocab = ClassVocabulary(CaptionCategory.STYLE, ("x",), source="derived_from_manifest")
    manifests[CaptionCategory.STYLE] = DatasetManifest(
        CaptionCategory.STYLE, [], vocab, split="test"
    )
    with caplog.at_level("WARNING"):
        accuracies, _ = evaluate(OracleBackend(manifests), manifests)
    assert CaptionCategory.STYLE not in accuracies
    assert any("style" in r.message for r in caplog.records)


def test_evaluate_requires_some_data():
    with pytest.raises(EvaluationError):
        evaluate(ConstantBackend("x", "y"), {})


def test_render_report_paper_rows():
    report = EvaluationReport(
        rows={
            "zeroshot": row_from_accuracies(BASE_ROW),
            "finetuned": row_from_accuracies(TUNED_ROW),
        }
    )
    table = render_report(report)
    lines = table.splitlines()
    assert lines[0].split() == [
        "Backend", "Map", "Type", "Location", "(topo.)", "Style", "Century",
        "Location", "(pict.)", "Topic", "Ave.", "Acc.",
    ]
    base_line = next(l for l in lines if l.startswith("zeroshot"))
    tuned_line = next(l for l in lines if l.startswith("finetuned"))
    assert base_line.split()[-1] == "0.47"
    assert tuned_line.split()[-1] == "0.81"
    assert base_line.split()[1:-1] == ["0.43", "0.28", "0.29", "0.40", "0.96", "0.47"]


def test_average_full_precision_stored():
    row = row_from_accuracies(BASE_ROW)
    assert row.average == pytest.approx(sum(BASE_ROW.values()) / 6)
    assert f"{row.average:.2f}" == "0.47"


def test_single_backend_all_ones_renders():
    report = EvaluationReport(
        rows={"oracle": row_from_accuracies({c: 1.0 for c in CaptionCategory})}
    )
    line = render_report(report).splitlines()[-1]
    assert line.split()[-1] == "1.00"


def test_write_report_emits_table_and_json(tmp_path):
    manifests = small_manifests()
    report = make_report([OracleBackend(manifests)], manifests)
    out = tmp_path / "report.txt"
    write_report(report, out)
    assert "oracle" in out.read_text()
    sidecar = json.loads((tmp_path / "report.txt.json").read_text())
    assert sidecar["rows"]["oracle"]["average"] == 1.0
    assert sidecar["sample_counts"]["map_type"] == 10
    assert report_as_dict(report)["rows"]["oracle"]["accuracies"]["topic"] == 1.0
