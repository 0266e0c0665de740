"""Per-category classification: zero-shot similarity prediction and
contrastive fine-tuning of the toy encoder's linear maps.

Prediction scores a single image against one text prompt per vocabulary
label: softmax over cosine similarities, argmax label, ties broken by
vocabulary order. Fine-tuning minimizes the symmetric in-batch contrastive
loss (image-to-text and text-to-image cross-entropy over pairwise cosine
similarities, averaged) with Adam.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .encoder import ToyEncoder
from .ingest import DatasetManifest, load_image
from .taxonomy import CaptionCategory, ClassVocabulary, KeywordCaption, normalize_label


class ClassifyError(Exception):
    pass


class UnknownLabel(ClassifyError):
    pass


class InsufficientData(ClassifyError):
    pass


class NonFiniteLoss(ClassifyError):
    pass


# Fixed similarity sharpening inside the training loss only; reported
# prediction scores always use temperature 1.0.
LOSS_LOGIT_SCALE = 10.0


def prompt_for(label: str, vocabulary: ClassVocabulary, template: str | None = None) -> str:
    """Text prompt for one class label: the bare label unless a template
    like "a map about {label}" is configured."""
    label = normalize_label(label)
    if label not in vocabulary:
        raise UnknownLabel(
            f"{vocabulary.category.value}: label {label!r} not in vocabulary"
        )
    return template.format(label=label) if template else label


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True)
class Prediction:
    caption: KeywordCaption
    scores: dict[str, float]

    @property
    def label(self) -> str:
        return self.caption.label


class CategoryClassifier:
    """One encoder + one vocabulary + one prompt per label."""

    def __init__(
        self,
        category: CaptionCategory,
        encoder,
        vocabulary: ClassVocabulary,
        text_prompts: dict[str, str] | None = None,
        prompt_template: str | None = None,
    ):
        if vocabulary.category != category:
            raise ClassifyError("vocabulary category mismatch")
        if text_prompts is None:
            text_prompts = {
                label: prompt_for(label, vocabulary, prompt_template)
                for label in vocabulary.labels
            }
        if set(text_prompts) != set(vocabulary.labels):
            raise ClassifyError("text_prompts must cover exactly the vocabulary")
        self.category = category
        self.encoder = encoder
        self.vocabulary = vocabulary
        self.text_prompts = dict(text_prompts)
        self._text_matrix: np.ndarray | None = None

    @property
    def text_matrix(self) -> np.ndarray:
        if self._text_matrix is None:
            rows = [self.encoder.encode_text(self.text_prompts[l]) for l in self.vocabulary.labels]
            self._text_matrix = np.stack(rows)
        return self._text_matrix

    def predict(self, image) -> Prediction:
        image_vec = np.asarray(self.encoder.encode_image(image), dtype=np.float64)
        return self.predict_from_embedding(image_vec)

    def predict_from_embedding(self, image_vec: np.ndarray) -> Prediction:
        sims = kernels.cosine_matrix(image_vec[None, :], self.text_matrix)[0]
        scores = softmax(sims)
        best = int(np.argmax(scores))  # first max wins: vocabulary-order tie-break
        labels = self.vocabulary.labels
        caption = KeywordCaption(self.category, labels[best], float(scores[best]))
        return Prediction(caption, {l: float(s) for l, s in zip(labels, scores)})


def predict(classifier: CategoryClassifier, image) -> Prediction:
    return classifier.predict(image)


# ---------------------------------------------------------------------------
# contrastive fine-tuning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingConfig:
    batch_size: int = 10
    learning_rate: float = 1e-5
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ClassifyError("batch_size must be >= 2 (in-batch negatives)")
        if self.learning_rate < 0:
            raise ClassifyError("learning_rate must be >= 0")
        if self.optimizer != "adam":
            raise ClassifyError(f"unsupported optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class TrainEpoch:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float | None = None

    def as_line(self) -> str:
        val = "" if self.val_acc is None else f" val_acc={self.val_acc:.4f}"
        return f"epoch={self.epoch} loss={self.loss:.6f} train_acc={self.train_acc:.4f}{val}"


def _normalize_rows(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms = np.where(norms == 0.0, 1.0, norms)
    return m / norms, norms


def contrastive_loss_and_grads(
    image_weight: np.ndarray,
    text_weight: np.ndarray,
    image_feats: np.ndarray,
    text_feats: np.ndarray,
    scale: float = LOSS_LOGIT_SCALE,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Symmetric in-batch contrastive loss and its gradients w.r.t. both maps.

    Row i of image_feats pairs with row i of text_feats; every other row in
    the batch acts as a negative.
    """
    b = image_feats.shape[0]
    img_emb = image_feats @ image_weight.T
    txt_emb = text_feats @ text_weight.T
    img_n, img_norm = _normalize_rows(img_emb)
    txt_n, txt_norm = _normalize_rows(txt_emb)
    logits = scale * (img_n @ txt_n.T)

    # mean of image->text and text->image cross-entropies on the diagonal
    row_max = logits.max(axis=1, keepdims=True)
    row_lse = row_max[:, 0] + np.log(np.exp(logits - row_max).sum(axis=1))
    col_max = logits.max(axis=0, keepdims=True)
    col_lse = col_max[0, :] + np.log(np.exp(logits - col_max).sum(axis=0))
    diag = np.diag(logits)
    loss = 0.5 * (np.mean(row_lse - diag) + np.mean(col_lse - diag))

    p_row = np.exp(logits - row_lse[:, None])
    p_col = np.exp(logits - col_lse[None, :])
    eye = np.eye(b)
    g_logits = (0.5 / b) * (p_row + p_col - 2.0 * eye)

    g_img_n = scale * (g_logits @ txt_n)
    g_txt_n = scale * (g_logits.T @ img_n)
    # back through row normalization: g - (g.x̂)x̂, divided by the norm
    g_img = (g_img_n - (g_img_n * img_n).sum(axis=1, keepdims=True) * img_n) / img_norm
    g_txt = (g_txt_n - (g_txt_n * txt_n).sum(axis=1, keepdims=True) * txt_n) / txt_norm

    return float(loss), g_img.T @ image_feats, g_txt.T @ text_feats


def contrastive_loss(
    image_weight, text_weight, image_feats, text_feats, scale: float = LOSS_LOGIT_SCALE
) -> float:
    return contrastive_loss_and_grads(image_weight, text_weight, image_feats, text_feats, scale)[0]


class _Adam:
    def __init__(self, shapes: Sequence[tuple[int, ...]], config: TrainingConfig):
        self.config = config
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        c = self.config
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = c.beta1 * self.m[i] + (1 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1 - c.beta2) * g * g
            m_hat = self.m[i] / (1 - c.beta1**self.t)
            v_hat = self.v[i] / (1 - c.beta2**self.t)
            p -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def _manifest_features(
    encoder: ToyEncoder,
    classifier: CategoryClassifier,
    manifest: DatasetManifest,
    image_loader: Callable,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    image_feats = np.stack(
        [encoder.featurize_image(image_loader(ref)) for ref, _ in manifest.samples]
    )
    prompt_feats = {
        label: encoder.featurize_text(classifier.text_prompts[label])
        for label in classifier.vocabulary.labels
    }
    text_feats = np.stack([prompt_feats[label] for _, label in manifest.samples])
    vocab_feats = np.stack([prompt_feats[l] for l in classifier.vocabulary.labels])
    targets = np.array(
        [classifier.vocabulary.index(label) for _, label in manifest.samples], dtype=np.int64
    )
    return image_feats, text_feats, vocab_feats, targets


def _accuracy(w_img, w_txt, image_feats, vocab_feats, targets) -> float:
    sims = kernels.cosine_matrix(image_feats @ w_img.T, vocab_feats @ w_txt.T)
    return float(np.mean(np.argmax(sims, axis=1) == targets))


def fine_tune(
    classifier: CategoryClassifier,
    manifest: DatasetManifest,
    config: TrainingConfig,
    val_manifest: DatasetManifest | None = None,
    image_loader: Callable | None = None,
) -> tuple[CategoryClassifier, list[TrainEpoch]]:
    """Train the toy encoder's linear maps; returns a new classifier and the
    per-epoch log. The input classifier is left untouched.

    When a validation manifest is given, the epoch with the best validation
    accuracy wins; otherwise the final epoch's parameters are returned.
    """
    encoder = classifier.encoder
    if not isinstance(encoder, ToyEncoder):
        raise ClassifyError("fine_tune requires a trainable toy encoder")
    if len(manifest.samples) < config.batch_size:
        raise InsufficientData(
            f"need at least batch_size={config.batch_size} samples, got {len(manifest.samples)}"
        )
    if len({label for _, label in manifest.samples}) < 2:
        raise InsufficientData("need at least 2 distinct labels for contrastive training")

    loader = image_loader or load_image
    image_feats, text_feats, vocab_feats, targets = _manifest_features(
        encoder, classifier, manifest, loader
    )
    val = None
    if val_manifest is not None and val_manifest.samples:
        v_img, _, _, v_targets = _manifest_features(encoder, classifier, val_manifest, loader)
        val = (v_img, v_targets)

    w_img = encoder.parameters["image_weight"].astype(np.float64)
    w_txt = encoder.parameters["text_weight"].astype(np.float64)
    adam = _Adam([w_img.shape, w_txt.shape], config)
    rng = np.random.default_rng(config.seed)
    n = len(manifest.samples)

    log: list[TrainEpoch] = []
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            if len(batch) < 2:
                continue  # a single leftover sample has no in-batch negative
            loss, g_img, g_txt = contrastive_loss_and_grads(
                w_img, w_txt, image_feats[batch], text_feats[batch]
            )
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"{classifier.category.value}: loss became {loss} at epoch {epoch}"
                )
            adam.step([w_img, w_txt], [g_img, g_txt])
            losses.append(loss)
        train_acc = _accuracy(w_img, w_txt, image_feats, vocab_feats, targets)
        val_acc = None
        if val is not None:
            val_acc = _accuracy(w_img, w_txt, val[0], vocab_feats, val[1])
            if best is None or val_acc > best[0]:
                best = (val_acc, w_img.copy(), w_txt.copy())
        log.append(TrainEpoch(epoch, float(np.mean(losses)), train_acc, val_acc))

    if best is not None:
        _, w_img, w_txt = best
    tuned = encoder.with_parameters(
        {
            "image_weight": w_img.astype(np.float32),
            "text_weight": w_txt.astype(np.float32),
        }
    )
    new_classifier = CategoryClassifier(
        classifier.category, tuned, classifier.vocabulary, dict(classifier.text_prompts)
    )
    return new_classifier, log
