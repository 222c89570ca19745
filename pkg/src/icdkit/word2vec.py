"""Self-trained word embeddings: skip-gram and CBoW with negative
sampling, ported to plain numpy after the classic reference trainer.

Single-threaded and deterministic for a fixed seed. Rows 0 and 1 of the
resulting matrix are reserved for the padding token (frozen at zero)
and the unknown token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .features import PAD_ID, UNK_ID, Vocabulary, tokenize


@dataclass
class Word2VecConfig:
    algorithm: str = "skip_gram"  # skip_gram | cbow
    size: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_sample_count: int = 10
    initial_lr: float = 0.025
    min_lr: float = 1e-4
    seed: int = 1

    def __post_init__(self) -> None:
        if self.algorithm not in ("skip_gram", "cbow"):
            raise DataError(f"unknown word2vec algorithm {self.algorithm!r}")
        if self.size < 1:
            raise DataError("embedding size must be >= 1")


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray  # V x d; row 0 pad (all zero), row 1 unk
    vocabulary: Vocabulary
    metadata: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.vectors.shape[1])

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise DataError("embedding matrix must be V x d with d >= 1")
        if self.vectors.shape[0] != len(self.vocabulary):
            raise DataError("embedding row count does not match vocabulary")
        if np.any(self.vectors[PAD_ID] != 0.0):
            raise DataError("padding row must be exactly zero")
        if not np.all(np.isfinite(self.vectors)):
            raise DataError("embedding matrix contains non-finite values")

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.vocabulary.lookup(token)]

    def cosine(self, a: str, b: str) -> float:
        va, vb = self.vector(a), self.vector(b)
        denom = np.linalg.norm(va) * np.linalg.norm(vb)
        if denom == 0:
            return 0.0
        return float(va @ vb / denom)

    def save_text(self, path: str | Path) -> None:
        """Classic text export: header `V d`, then one token per line."""
        with Path(path).open("w", encoding="utf-8") as fh:
            v, d = self.vectors.shape
            fh.write(f"{v} {d}\n")
            for token, row in zip(self.vocabulary.id_to_token, self.vectors):
                fh.write(token + " " + " ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load_text(cls, path: str | Path) -> "EmbeddingMatrix":
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline().split()
            v, d = int(header[0]), int(header[1])
            tokens: list[str] = []
            vectors = np.zeros((v, d))
            for i in range(v):
                parts = fh.readline().rstrip("\n").split(" ")
                tokens.append(parts[0])
                vectors[i] = [float(x) for x in parts[1:]]
        token_to_id = {t: i for i, t in enumerate(tokens) if i >= 2}
        vocab = Vocabulary(
            id_to_token=tokens,
            token_to_id=token_to_id,
            sample_freq={},
            total_count={},
        )
        return cls(vectors=vectors, vocabulary=vocab)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


class _NoiseSampler:
    """Unigram^0.75 negative-sampling distribution over real token ids."""

    def __init__(self, vocabulary: Vocabulary, power: float = 0.75):
        freqs = np.array(
            [vocabulary.total_count[t] for t in vocabulary.id_to_token[2:]],
            dtype=np.float64,
        )
        weights = freqs**power
        self.cumulative = np.cumsum(weights)
        self.total = self.cumulative[-1]

    def draw(self, rng: np.random.Generator, count: int, forbidden: int) -> np.ndarray:
        ids = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            picks = (
                np.searchsorted(self.cumulative, rng.random(count - filled) * self.total)
                + 2
            )
            picks = picks[picks != forbidden]
            take = min(len(picks), count - filled)
            ids[filled : filled + take] = picks[:take]
            filled += take
        return ids


def train_word2vec(
    train_texts: list[str], config: Word2VecConfig | None = None
) -> EmbeddingMatrix:
    """Train word vectors on assembled sample texts.

    Tokens present in fewer than config.min_sample_count samples are
    dropped from the vocabulary and map to the unknown id downstream.
    """
    config = config or Word2VecConfig()
    if not train_texts:
        raise DataError("cannot train embeddings on an empty corpus")
    vocab = Vocabulary.build(train_texts, min_sample_count=config.min_sample_count)

    sentences = []
    total_positions = 0
    for text in train_texts:
        ids = [vocab.token_to_id[t] for t in tokenize(text) if t in vocab.token_to_id]
        if len(ids) > 1:
            sentences.append(np.asarray(ids, dtype=np.int64))
            total_positions += len(ids)
    if not sentences:
        raise DataError("no trainable sentences after vocabulary filtering")

    rng = np.random.default_rng(config.seed)
    v, d = len(vocab), config.size
    syn0 = (rng.random((v, d)) - 0.5) / d
    syn0[PAD_ID] = 0.0
    syn0[UNK_ID] = 0.0
    syn1 = np.zeros((v, d))
    sampler = _NoiseSampler(vocab)

    labels = np.zeros(config.negatives + 1)
    labels[0] = 1.0
    total_work = total_positions * config.epochs
    processed = 0
    lr_span = config.initial_lr - config.min_lr

    for _ in range(config.epochs):
        for ids in sentences:
            n = len(ids)
            for pos in range(n):
                alpha = config.initial_lr - lr_span * (processed / total_work)
                processed += 1
                span = int(rng.integers(1, config.window + 1))
                lo, hi = max(0, pos - span), min(n, pos + span + 1)
                center = int(ids[pos])
                context = [int(ids[j]) for j in range(lo, hi) if j != pos]
                if not context:
                    continue
                if config.algorithm == "skip_gram":
                    for ctx in context:
                        targets = np.empty(config.negatives + 1, dtype=np.int64)
                        targets[0] = center
                        targets[1:] = sampler.draw(rng, config.negatives, center)
                        _pair_update(syn0, syn1, ctx, targets, labels, alpha)
                else:
                    targets = np.empty(config.negatives + 1, dtype=np.int64)
                    targets[0] = center
                    targets[1:] = sampler.draw(rng, config.negatives, center)
                    _cbow_update(syn0, syn1, context, targets, labels, alpha)

    meta = {
        "algorithm": config.algorithm,
        "window": config.window,
        "negatives": config.negatives,
        "epochs": config.epochs,
        "min_sample_count": config.min_sample_count,
        "seed": config.seed,
    }
    syn0[PAD_ID] = 0.0
    return EmbeddingMatrix(vectors=syn0, vocabulary=vocab, metadata=meta)


def _pair_update(syn0, syn1, input_id, targets, labels, alpha) -> None:
    l1 = syn0[input_id]
    l2 = syn1[targets]  # copy (fancy indexing)
    g = (labels - _sigmoid(l2 @ l1)) * alpha
    syn1[targets] += np.outer(g, l1)
    syn0[input_id] += g @ l2


def _cbow_update(syn0, syn1, context_ids, targets, labels, alpha) -> None:
    l1 = syn0[context_ids].mean(axis=0)
    l2 = syn1[targets]
    g = (labels - _sigmoid(l2 @ l1)) * alpha
    syn1[targets] += np.outer(g, l1)
    err = g @ l2
    for cid in context_ids:
        syn0[cid] += err


def save_metadata(embedding: EmbeddingMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps(embedding.metadata, indent=2), encoding="utf-8")
