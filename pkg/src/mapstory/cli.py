"""Command-line entry points: build-dataset, train, predict, evaluate, serve."""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .classify import CategoryClassifier, TrainingConfig, fine_tune
from .encoder import ToyEncoder, checkpoint_path, load_encoder, save_encoder
from .evaluation import (
    ClassifierBackend,
    OracleBackend,
    make_report,
    render_report,
    write_report,
)
from .ingest import (
    build_manifests,
    load_corpus,
    load_image,
    load_ingest_config,
    manifest_filename,
    read_manifest,
    split_train_test,
    write_manifest,
)
from .service import load_service_config, serve as run_server
from .taxonomy import CaptionCategory
from .tree import default_tree


@click.group()
def main():
    """Historical map captioning and storytelling."""


@main.command("build-dataset")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--test-fraction", default=0.2, show_default=True, type=float)
def build_dataset(corpus, out, config_path, seed, test_fraction):
    """Build per-category train/test manifests from a metadata corpus."""
    records = load_corpus(corpus)
    config = load_ingest_config(config_path)
    manifests, log_lines = build_manifests(records, config)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for category, manifest in manifests.items():
        train, test = split_train_test(manifest, test_fraction, seed)
        write_manifest(train, out_dir / manifest_filename(category, "train"))
        write_manifest(test, out_dir / manifest_filename(category, "test"))
        log_lines.append(
            f"{category.value}: wrote {len(train)} train / {len(test)} test samples"
        )
    (out_dir / "build.log").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    for line in log_lines:
        click.echo(line)


@main.command()
@click.option("--category", required=True, type=click.Choice([c.value for c in CaptionCategory]))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--val-manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--epochs", default=30, show_default=True, type=int)
@click.option("--batch-size", default=10, show_default=True, type=int)
@click.option("--learning-rate", default=1e-2, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def train(category, manifest_path, out_path, val_manifest, epochs, batch_size, learning_rate, seed):
    """Fine-tune one category classifier and write its checkpoint."""
    cat = CaptionCategory(category)
    manifest = read_manifest(manifest_path, split="train")
    val = read_manifest(val_manifest, split="test") if val_manifest else None
    classifier = CategoryClassifier(cat, ToyEncoder(seed=seed), manifest.class_labels)
    config = TrainingConfig(
        batch_size=batch_size, learning_rate=learning_rate, epochs=epochs, seed=seed
    )
    tuned, log = fine_tune(classifier, manifest, config, val_manifest=val)
    for entry in log:
        click.echo(entry.as_line())
    save_encoder(tuned.encoder, out_path)
    click.echo(f"saved checkpoint: {out_path}")


@main.command("predict")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--category", required=True, type=click.Choice([c.value for c in CaptionCategory]))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              help="Manifest supplying the class vocabulary.")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--model-dir", type=click.Path(file_okay=False))
def predict_cmd(image_path, category, manifest_path, checkpoint, model_dir):
    """Classify one image for one category; prints label and score per class."""
    cat = CaptionCategory(category)
    if manifest_path:
        vocab = read_manifest(manifest_path, split="test").class_labels
    elif cat is CaptionCategory.MAP_TYPE:
        from .taxonomy import MAP_TYPE_VOCABULARY

        vocab = MAP_TYPE_VOCABULARY
    else:
        raise click.UsageError("--manifest is required for non-map_type categories")
    ckpt = Path(checkpoint) if checkpoint else checkpoint_path(cat, model_dir)
    encoder = load_encoder(ckpt) if ckpt.is_file() else ToyEncoder()
    classifier = CategoryClassifier(cat, encoder, vocab)
    prediction = classifier.predict(load_image(image_path))
    click.echo(prediction.caption.label)
    for label, score in prediction.scores.items():
        click.echo(f"  {label}: {score:.4f}")


@main.command("evaluate")
@click.option("--backend", required=True, type=click.Choice(["zeroshot", "finetuned", "mock"]))
@click.option("--manifests", "manifest_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--model-dir", type=click.Path(file_okay=False))
def evaluate_cmd(backend, manifest_dir, out_path, model_dir):
    """Per-category accuracy on the test manifests; writes table + JSON."""
    manifest_dir = Path(manifest_dir)
    manifests = {}
    for category in CaptionCategory:
        path = manifest_dir / manifest_filename(category, "test")
        if path.is_file():
            manifests[category] = read_manifest(path, split="test")
    if not manifests:
        raise click.UsageError(f"no *.test.manifest files in {manifest_dir}")

    if backend == "mock":
        chosen = OracleBackend(manifests)
    else:
        classifiers = {}
        for category, manifest in manifests.items():
            if backend == "finetuned":
                encoder = load_encoder(checkpoint_path(category, model_dir))
            else:
                encoder = ToyEncoder()
            classifiers[category] = CategoryClassifier(category, encoder, manifest.class_labels)
        chosen = ClassifierBackend(backend, classifiers)

    report = make_report([chosen], manifests)
    write_report(report, out_path)
    click.echo(render_report(report), nl=False)


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def serve_cmd(config_path):
    """Run the HTTP service with models loaded at startup."""
    run_server(load_service_config(config_path))


if __name__ == "__main__":
    sys.exit(main())
