"""Micro-averaged evaluation protocol and the training loop: per-epoch
validation F1 with threshold sweeping, best-epoch weight restoration,
and unseen-class zeroing when scoring against the full label universe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .errors import DataError, NumericError
from .features import PAD_ID, encode_batch, stack_dense, transform_batch
from .models import (
    ConstantModel,
    LabelSpace,
    LogisticRegressionModel,
    Model,
    predict_texts,
)

DEFAULT_GRID = tuple(round(t / 100, 2) for t in range(1, 100))


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    threshold: float | None = None
    history: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "threshold": self.threshold,
            "history": self.history,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")


def micro_metrics(y: np.ndarray, y_pred: np.ndarray) -> MetricsReport:
    """Pooled precision/recall/F1 over all (sample, label) cells.

    Any 0/0 ratio is reported as 0.
    """
    if y.shape != y_pred.shape:
        raise DataError(f"label matrix shapes differ: {y.shape} vs {y_pred.shape}")
    tp = float((y * y_pred).sum())
    predicted = float(y_pred.sum())
    actual = float(y.sum())
    precision = tp / predicted if predicted > 0 else 0.0
    recall = tp / actual if actual > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MetricsReport(precision=precision, recall=recall, f1=f1)


def binarize(confidences: np.ndarray, threshold: float) -> np.ndarray:
    """Confidence >= threshold counts as a positive prediction."""
    if not 0.0 < threshold < 1.0:
        raise DataError(f"threshold must lie in (0, 1), got {threshold}")
    return (confidences >= threshold).astype(np.float64)


def sweep_threshold(
    confidences: np.ndarray,
    y: np.ndarray,
    grid: tuple[float, ...] = DEFAULT_GRID,
) -> tuple[float, list[MetricsReport]]:
    """Best-F1 threshold over the grid; ties break to the smaller one."""
    if not grid:
        raise DataError("threshold grid must not be empty")
    reports = []
    best_t, best_f1 = None, -1.0
    for t in grid:
        report = micro_metrics(y, binarize(confidences, t))
        report.threshold = t
        reports.append(report)
        if report.f1 > best_f1:
            best_t, best_f1 = t, report.f1
    return best_t, reports


def pad_unseen(
    confidences: np.ndarray, trained: LabelSpace, full: LabelSpace
) -> np.ndarray:
    """Expand N x C' confidences to the full C-code universe, forcing
    zero confidence for every code the model never saw in training."""
    if confidences.shape[1] != len(trained):
        raise DataError(
            f"confidence width {confidences.shape[1]} != trained label count {len(trained)}"
        )
    out = np.zeros((confidences.shape[0], len(full)))
    for j, code in enumerate(trained.codes):
        idx = full.index.get(code)
        if idx is None:
            raise DataError(f"trained code {code!r} missing from the full label space")
        out[:, idx] = confidences[:, j]
    return out


@dataclass
class TrainConfig:
    max_epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    threshold_grid: tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self) -> None:
        if self.max_epochs < 1:
            raise DataError("max_epochs must be >= 1")
        if any(not 0.0 < t < 1.0 for t in self.threshold_grid):
            raise DataError("threshold grid must lie inside (0, 1)")


@dataclass
class DataSplit:
    """Assembled sample texts with their gold code sets."""

    texts: list[str]
    code_sets: list[set[str]]

    def __len__(self) -> int:
        return len(self.texts)


@dataclass
class EpochRecord:
    epoch: int
    val_f1: float
    val_threshold: float
    train_loss: float

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "val_f1": self.val_f1,
            "val_threshold": self.val_threshold,
            "train_loss": self.train_loss,
        }


@dataclass
class TrainResult:
    model: Model
    history: list[EpochRecord]
    best_epoch: int
    threshold: float
    best_val_f1: float

    def history_json(self) -> list[dict]:
        return [r.to_json() for r in self.history]


def best_epoch_index(val_f1s: list[float]) -> int:
    """0-based index of the best validation F1; ties pick the earliest."""
    best = 0
    for i, f1 in enumerate(val_f1s):
        if f1 > val_f1s[best]:
            best = i
    return best


def _sample_weights(y_batch: np.ndarray) -> np.ndarray:
    counts = np.maximum(y_batch.sum(axis=1), 1.0)
    w = 1.0 / counts
    return w / w.mean()


def _snapshot(model) -> tuple[dict, np.ndarray | None, np.ndarray | None]:
    params = {name: p.data.copy() for name, p in model.parameters().items()}
    running = getattr(model, "bn_running", None)
    if running is None:
        return params, None, None
    return params, running.mean.copy(), running.var.copy()


def _restore(model, snapshot) -> None:
    params, mean, var = snapshot
    for name, p in model.parameters().items():
        p.data[...] = params[name]
    if mean is not None:
        model.bn_running.mean = mean.copy()
        model.bn_running.var = var.copy()


def train(
    model: Model,
    train_split: DataSplit,
    val_split: DataSplit,
    cfg: TrainConfig | None = None,
    on_epoch=None,
) -> TrainResult:
    """Minibatch Adam on binary cross-entropy for at most
    cfg.max_epochs epochs; after each epoch the validation threshold is
    swept and the weights of the best-F1 epoch are restored at the end
    (ties keep the earlier epoch).
    """
    cfg = cfg or TrainConfig()
    space = model.label_space
    y_val = space.matrix(val_split.code_sets)

    if isinstance(model, ConstantModel):
        probs = model.predict_count(len(val_split))
        t, _ = sweep_threshold(probs, y_val, cfg.threshold_grid)
        f1 = micro_metrics(y_val, binarize(probs, t)).f1
        record = EpochRecord(epoch=1, val_f1=f1, val_threshold=t, train_loss=0.0)
        return TrainResult(model, [record], 1, t, f1)

    y_train = space.matrix(train_split.code_sets)
    if isinstance(model, LogisticRegressionModel):
        train_vecs = transform_batch(model.tfidf, train_split.texts)
        get_batch = lambda idx: stack_dense([train_vecs[i] for i in idx])
        forward = lambda batch: model.forward_logits(batch, training=True)
    else:
        ids, counts = encode_batch(
            train_split.texts, model.vocabulary, model.spec.input_length
        )
        get_batch = lambda idx: (ids[idx], counts[idx])
        forward = lambda batch: model.forward_logits(batch[0], batch[1], training=True)

    params = model.parameters()
    adam = ad.AdamState(step_size=model.spec.lr_for_epoch(1))
    rng = np.random.default_rng(cfg.seed)
    history: list[EpochRecord] = []
    best: tuple[int, float, float] | None = None  # (epoch, f1, threshold)
    best_weights = None

    n = len(train_split)
    for epoch in range(1, cfg.max_epochs + 1):
        adam.step_size = model.spec.lr_for_epoch(epoch)
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if len(idx) < 2 and not isinstance(model, LogisticRegressionModel):
                continue  # batch norm needs >= 2 rows in train mode
            y_batch = y_train[idx]
            weights = _sample_weights(y_batch) if model.spec.sample_weighting else None
            for p in params.values():
                p.zero_grad()
            try:
                loss = ad.sigmoid_bce_with_logits(forward(get_batch(idx)), y_batch, weights)
            except NumericError as exc:
                raise NumericError(
                    f"{exc} (epoch {epoch}, batch starting at {start})"
                ) from exc
            loss.backward()
            emb = params.get("embedding")
            if emb is not None and emb.trainable and emb.grad is not None:
                emb.grad[PAD_ID] = 0.0
            ad.adam_step(params, adam)
            if hasattr(model, "after_step"):
                model.after_step()
            epoch_loss += float(loss.data)
            batches += 1

        val_probs = _predict_batched(model, val_split.texts, cfg.batch_size)
        t, _ = sweep_threshold(val_probs, y_val, cfg.threshold_grid)
        f1 = micro_metrics(y_val, binarize(val_probs, t)).f1
        record = EpochRecord(
            epoch=epoch,
            val_f1=f1,
            val_threshold=t,
            train_loss=epoch_loss / max(batches, 1),
        )
        history.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if best is None or f1 > best[1]:
            best = (epoch, f1, t)
            best_weights = _snapshot(model)

    _restore(model, best_weights)
    return TrainResult(
        model=model,
        history=history,
        best_epoch=best[0],
        threshold=best[2],
        best_val_f1=best[1],
    )


def _predict_batched(model: Model, texts: list[str], batch_size: int) -> np.ndarray:
    chunks = [
        predict_texts(model, texts[i : i + batch_size])
        for i in range(0, len(texts), batch_size)
    ]
    return np.vstack(chunks)


def evaluate(
    model: Model,
    threshold: float,
    test_split: DataSplit,
    full_space: LabelSpace,
    batch_size: int = 32,
) -> MetricsReport:
    """Score on test data against the full label universe: predict,
    zero the unseen columns, binarize at the checkpoint threshold."""
    probs = _predict_batched(model, test_split.texts, batch_size)
    padded = pad_unseen(probs, model.label_space, full_space)
    y = full_space.matrix(test_split.code_sets)
    report = micro_metrics(y, binarize(padded, threshold))
    report.threshold = threshold
    return report
