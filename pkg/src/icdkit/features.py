"""Text featurization: token vocabularies, TF-IDF vectors for the
linear model, and fixed-length token-id sequences for the neural ones.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import preprocess_text
from .errors import DataError

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

TFIDF_MAX_VOCAB = 20000


def tokenize(text: str) -> list[str]:
    """Split preprocessed text on whitespace; never yields empty tokens."""
    return text.split()


def load_stopwords(languages: tuple[str, ...] = ("english", "portuguese")) -> set[str]:
    """Vendored stopword lists, normalized through preprocess_text so
    they match tokenized corpus text (contractions split apart, etc.)."""
    words: set[str] = set()
    for lang in languages:
        data = resources.files("icdkit.stopwords").joinpath(f"{lang}.txt").read_text("utf-8")
        for line in data.splitlines():
            line = line.strip()
            if not line:
                continue
            words.update(tokenize(preprocess_text(line)))
    return words


@dataclass
class Vocabulary:
    """Token-id table for the embedding path.

    Ids 0 and 1 are reserved for padding and unknown tokens; real tokens
    occupy 2..V-1. sample_freq counts the training samples containing
    each token (also its document frequency, since one sample is one
    text); total_count counts raw occurrences.
    """

    id_to_token: list[str]
    token_to_id: dict[str, int] = field(repr=False)
    sample_freq: dict[str, int] = field(repr=False)
    total_count: dict[str, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    @classmethod
    def build(
        cls,
        train_texts: list[str],
        min_sample_count: int = 1,
    ) -> "Vocabulary":
        sample_freq: Counter[str] = Counter()
        total_count: Counter[str] = Counter()
        for text in train_texts:
            tokens = tokenize(text)
            total_count.update(tokens)
            sample_freq.update(set(tokens))
        kept = sorted(
            t for t, n in sample_freq.items() if n >= min_sample_count
        )
        if not kept:
            raise DataError("vocabulary is empty after frequency filtering")
        id_to_token = [PAD_TOKEN, UNK_TOKEN] + kept
        token_to_id = {t: i + 2 for i, t in enumerate(kept)}
        return cls(
            id_to_token=id_to_token,
            token_to_id=token_to_id,
            sample_freq={t: sample_freq[t] for t in kept},
            total_count={t: total_count[t] for t in kept},
        )


@dataclass
class TokenSequence:
    ids: np.ndarray
    real_count: int

    @property
    def length(self) -> int:
        return int(self.ids.shape[0])


def encode_fixed(tokens: list[str], vocabulary: Vocabulary, length: int) -> TokenSequence:
    """Map tokens to ids, truncating at `length` and padding the tail
    with the pad id."""
    if length < 1:
        raise DataError(f"fixed length must be >= 1, got {length}")
    ids = np.full(length, PAD_ID, dtype=np.int64)
    real = min(len(tokens), length)
    for i in range(real):
        ids[i] = vocabulary.lookup(tokens[i])
    return TokenSequence(ids=ids, real_count=real)


def encode_batch(
    texts: list[str], vocabulary: Vocabulary, length: int
) -> tuple[np.ndarray, np.ndarray]:
    """Encode many texts at once; returns (ids [N, L], real_counts [N])."""
    ids = np.full((len(texts), length), PAD_ID, dtype=np.int64)
    counts = np.zeros(len(texts), dtype=np.int64)
    for n, text in enumerate(texts):
        seq = encode_fixed(tokenize(text), vocabulary, length)
        ids[n] = seq.ids
        counts[n] = seq.real_count
    return ids, counts


@dataclass
class SparseVector:
    """Indices/values pair for one TF-IDF feature vector."""

    indices: np.ndarray
    values: np.ndarray
    size: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.size)
        dense[self.indices] = self.values
        return dense


@dataclass
class TfidfModel:
    vocabulary: list[str]  # rank order: descending frequency, ties lexicographic
    idf: np.ndarray
    stopword_set_id: str
    _index: dict[str, int] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self._index is None:
            self._index = {t: i for i, t in enumerate(self.vocabulary)}

    @property
    def size(self) -> int:
        return len(self.vocabulary)

    def to_json(self) -> dict:
        return {
            "vocabulary": self.vocabulary,
            "idf": [float(v) for v in self.idf],
            "stopword_set_id": self.stopword_set_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TfidfModel":
        return cls(
            vocabulary=list(obj["vocabulary"]),
            idf=np.asarray(obj["idf"], dtype=np.float64),
            stopword_set_id=obj["stopword_set_id"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_tfidf(
    train_texts: list[str],
    stopwords: set[str] | None = None,
    max_vocab: int = TFIDF_MAX_VOCAB,
    stopword_set_id: str = "nltk-en-pt",
) -> TfidfModel:
    """Fit the TF-IDF weighting on training texts.

    Vocabulary keeps the `max_vocab` most frequent non-stopword tokens
    (total occurrences, ties broken lexicographically). idf uses the
    smooth formula ln((1+N)/(1+df)) + 1.
    """
    if not train_texts:
        raise DataError("cannot fit TF-IDF on an empty corpus")
    stopwords = stopwords or set()
    total: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    for text in train_texts:
        tokens = [t for t in tokenize(text) if t not in stopwords]
        total.update(tokens)
        doc_freq.update(set(tokens))
    if not total:
        raise DataError("no tokens left after stopword removal")
    ranked = sorted(total.items(), key=lambda kv: (-kv[1], kv[0]))[:max_vocab]
    vocabulary = [t for t, _ in ranked]
    n = len(train_texts)
    idf = np.array(
        [math.log((1 + n) / (1 + doc_freq[t])) + 1.0 for t in vocabulary]
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, stopword_set_id=stopword_set_id)


def transform_tfidf(model: TfidfModel, text: str) -> SparseVector:
    """Count-weighted idf vector, L2 normalized. Out-of-vocabulary
    tokens are ignored; all-OOV or empty text yields the zero vector."""
    counts: Counter[int] = Counter()
    for token in tokenize(text):
        idx = model._index.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return SparseVector(
            indices=np.empty(0, dtype=np.int64),
            values=np.empty(0),
            size=model.size,
        )
    indices = np.fromiter(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    values *= model.idf[indices]
    norm = np.linalg.norm(values)
    if norm > 0:
        values /= norm
    return SparseVector(indices=indices, values=values, size=model.size)


def transform_batch(model: TfidfModel, texts: list[str]) -> list[SparseVector]:
    return [transform_tfidf(model, t) for t in texts]


def stack_dense(vectors: list[SparseVector]) -> np.ndarray:
    """Materialize a batch of sparse vectors as a dense [N, V] matrix."""
    if not vectors:
        return np.zeros((0, 0))
    out = np.zeros((len(vectors), vectors[0].size))
    for n, vec in enumerate(vectors):
        out[n, vec.indices] = vec.values
    return out
