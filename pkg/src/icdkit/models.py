"""The five predictor families over a shared predict interface:
constant top-k, logistic regression on TF-IDF, CNN, GRU, and CNN with
per-label attention. All return per-label confidences of width C'.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff.layers import GruWeights, RunningStats
from .errors import DataError
from .features import (
    PAD_ID,
    SparseVector,
    TfidfModel,
    Vocabulary,
    encode_batch,
    stack_dense,
    transform_batch,
)
from .word2vec import EmbeddingMatrix

FAMILIES = ("constant", "lr", "cnn", "gru", "cnn_att")

DEFAULT_LR = {"lr": 0.1, "cnn": 1e-3, "gru": 8e-4}
DEFAULT_CNN_ATT_SCHEDULE = [1e-3, 1e-3, 1e-4]
DEFAULT_FINETUNE = {"cnn": False, "gru": True, "cnn_att": False}

CONF_CLIP = 1e-12


@dataclass
class LabelSpace:
    codes: list[str]
    counts: dict[str, int] = field(repr=False)
    index: dict[str, int] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.index is None:
            self.index = {c: i for i, c in enumerate(self.codes)}

    def __len__(self) -> int:
        return len(self.codes)

    @classmethod
    def from_code_sets(cls, code_sets: list[set[str]]) -> "LabelSpace":
        counts: dict[str, int] = {}
        for codes in code_sets:
            for code in codes:
                counts[code] = counts.get(code, 0) + 1
        if not counts:
            raise DataError("no codes in training data")
        return cls(codes=sorted(counts), counts=counts)

    def matrix(self, code_sets: list[set[str]]) -> np.ndarray:
        """Binary N x C' label matrix; codes outside the space are ignored."""
        y = np.zeros((len(code_sets), len(self.codes)))
        for n, codes in enumerate(code_sets):
            for code in codes:
                idx = self.index.get(code)
                if idx is not None:
                    y[n, idx] = 1.0
        return y


@dataclass
class ModelSpec:
    family: str
    embedding_size: int = 300
    conv_filters: int = 500
    kernel_size: int = 10
    gru_units: int = 500
    input_length: int = 2000
    learning_rate: float | None = None
    lr_schedule: list[float] | None = None
    mask_padding: bool = False
    sample_weighting: bool = False
    finetune_embeddings: bool | None = None
    top_k: int = 15
    tfidf_vocab: int = 20000

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DataError(f"unknown model family {self.family!r}")
        if self.family in ("cnn", "cnn_att") and self.input_length < self.kernel_size:
            raise DataError(
                f"input length {self.input_length} shorter than kernel {self.kernel_size}"
            )

    def lr_for_epoch(self, epoch: int) -> float:
        """Step size for a 1-based epoch number."""
        if self.lr_schedule:
            return self.lr_schedule[min(epoch, len(self.lr_schedule)) - 1]
        if self.learning_rate is not None:
            return self.learning_rate
        if self.family == "cnn_att":
            sched = DEFAULT_CNN_ATT_SCHEDULE
            return sched[min(epoch, len(sched)) - 1]
        return DEFAULT_LR.get(self.family, 1e-3)

    @property
    def finetune(self) -> bool:
        if self.finetune_embeddings is not None:
            return self.finetune_embeddings
        return DEFAULT_FINETUNE.get(self.family, False)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        return cls(**obj)


def _clip_conf(probs: np.ndarray) -> np.ndarray:
    return np.clip(probs, CONF_CLIP, 1.0 - CONF_CLIP)


class ConstantModel:
    """Predicts the k most frequent training codes for every input."""

    family = "constant"

    def __init__(self, spec: ModelSpec, label_space: LabelSpace, top_codes: list[str]):
        self.spec = spec
        self.label_space = label_space
        self.top_codes = top_codes
        self._row = np.zeros(len(label_space))
        for code in top_codes:
            self._row[label_space.index[code]] = 1.0

    def predict_count(self, n: int) -> np.ndarray:
        return np.tile(self._row, (n, 1))

    def parameters(self) -> dict[str, ad.Parameter]:
        return {}


def constant_fit(
    train_label_sets: list[set[str]],
    k: int,
    label_space: LabelSpace | None = None,
) -> ConstantModel:
    """Select the k most frequent training codes, ties lexicographic."""
    if k < 1:
        raise DataError("k must be >= 1")
    space = label_space or LabelSpace.from_code_sets(train_label_sets)
    counts: dict[str, int] = {}
    for codes in train_label_sets:
        for code in codes:
            counts[code] = counts.get(code, 0) + 1
    if k > len(counts):
        raise DataError(f"k={k} exceeds the {len(counts)} distinct training codes")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    top = [code for code, _ in ranked[:k]]
    return ConstantModel(ModelSpec(family="constant", top_k=k), space, top)


class LogisticRegressionModel:
    """Independent per-label sigmoid units over a shared TF-IDF vector."""

    family = "lr"

    def __init__(self, spec: ModelSpec, label_space: LabelSpace, tfidf: TfidfModel):
        self.spec = spec
        self.label_space = label_space
        self.tfidf = tfidf
        self.params = {
            "out_w": ad.Parameter(np.zeros((tfidf.size, len(label_space)))),
            "out_b": ad.Parameter(np.zeros(len(label_space))),
        }

    def parameters(self) -> dict[str, ad.Parameter]:
        return self.params

    def forward_logits(self, dense_batch: np.ndarray, training: bool = False) -> ad.Tensor:
        x = ad.Tensor(dense_batch)
        return ad.dense(x, self.params["out_w"], self.params["out_b"])

    def predict_vectors(self, vectors: list[SparseVector]) -> np.ndarray:
        logits = self.forward_logits(stack_dense(vectors))
        return _clip_conf(ad.sigmoid(logits).data)


class _NeuralBase:
    """Shared pieces: embedding table, pad mask, prediction path."""

    def __init__(self, spec: ModelSpec, label_space: LabelSpace, embedding: EmbeddingMatrix):
        if embedding.size != spec.embedding_size:
            raise DataError(
                f"embedding size {embedding.size} does not match spec {spec.embedding_size}"
            )
        self.spec = spec
        self.label_space = label_space
        self.vocabulary = embedding.vocabulary
        self.params: dict[str, ad.Parameter] = {
            "embedding": ad.Parameter(embedding.vectors.copy(), trainable=spec.finetune)
        }
        self.bn_running = RunningStats.fresh(self._bn_channels())

    def _bn_channels(self) -> int:
        raise NotImplementedError

    def parameters(self) -> dict[str, ad.Parameter]:
        return self.params

    def _mask(self, counts: np.ndarray, length: int) -> np.ndarray | None:
        if not self.spec.mask_padding:
            return None
        return (np.arange(length)[None, :] < counts[:, None]).astype(np.float64)

    def _check_length(self, ids: np.ndarray) -> None:
        if ids.ndim != 2 or ids.shape[1] != self.spec.input_length:
            raise DataError(
                f"input length {ids.shape[-1]} does not match the model's "
                f"fixed length {self.spec.input_length}"
            )

    def after_step(self) -> None:
        """Keep the padding embedding row pinned at zero."""
        emb = self.params["embedding"]
        if emb.trainable:
            emb.data[PAD_ID] = 0.0

    def forward_logits(
        self, ids: np.ndarray, counts: np.ndarray, training: bool
    ) -> ad.Tensor:
        raise NotImplementedError

    def predict_ids(self, ids: np.ndarray, counts: np.ndarray) -> np.ndarray:
        logits = self.forward_logits(ids, counts, training=False)
        return _clip_conf(ad.sigmoid(logits).data)


class CnnModel(_NeuralBase):
    family = "cnn"

    def __init__(self, spec, label_space, embedding, seed: int = 0):
        super().__init__(spec, label_space, embedding)
        rng = np.random.default_rng(seed)
        d, f, k, c = spec.embedding_size, spec.conv_filters, spec.kernel_size, len(label_space)
        self.params.update(
            {
                "conv_w": ad.Parameter(ad.glorot_uniform((k, d, f), rng, k * d, f)),
                "conv_b": ad.Parameter(np.zeros(f)),
                "bn_gamma": ad.Parameter(np.ones(f)),
                "bn_beta": ad.Parameter(np.zeros(f)),
                "out_w": ad.Parameter(np.zeros((f, c))),
                "out_b": ad.Parameter(np.zeros(c)),
            }
        )

    def _bn_channels(self) -> int:
        return self.spec.conv_filters

    def forward_logits(self, ids, counts, training):
        self._check_length(ids)
        p = self.params
        mask = self._mask(counts, ids.shape[1])
        x = ad.embedding_lookup(ids, p["embedding"])
        h = ad.tanh(ad.conv1d(x, p["conv_w"], p["conv_b"]))
        h = ad.batch_norm(h, p["bn_gamma"], p["bn_beta"], self.bn_running, training)
        pooled = ad.global_average_pool(h, mask)
        return ad.dense(pooled, p["out_w"], p["out_b"])


class GruModel(_NeuralBase):
    family = "gru"

    def __init__(self, spec, label_space, embedding, seed: int = 0):
        super().__init__(spec, label_space, embedding)
        rng = np.random.default_rng(seed)
        d, u, c = spec.embedding_size, spec.gru_units, len(label_space)
        gates = {}
        for gate in ("z", "r", "h"):
            gates[f"gru_w{gate}"] = ad.Parameter(ad.glorot_uniform((d, u), rng, d, u))
            gates[f"gru_u{gate}"] = ad.Parameter(ad.orthogonal(u, rng))
            gates[f"gru_b{gate}"] = ad.Parameter(np.zeros(u))
        self.params.update(gates)
        self.params.update(
            {
                "bn_gamma": ad.Parameter(np.ones(u)),
                "bn_beta": ad.Parameter(np.zeros(u)),
                "out_w": ad.Parameter(np.zeros((u, c))),
                "out_b": ad.Parameter(np.zeros(c)),
            }
        )

    def _bn_channels(self) -> int:
        return self.spec.gru_units

    def _gru_weights(self) -> GruWeights:
        p = self.params
        return GruWeights(
            w_z=p["gru_wz"], w_r=p["gru_wr"], w_h=p["gru_wh"],
            u_z=p["gru_uz"], u_r=p["gru_ur"], u_h=p["gru_uh"],
            b_z=p["gru_bz"], b_r=p["gru_br"], b_h=p["gru_bh"],
        )

    def forward_logits(self, ids, counts, training):
        self._check_length(ids)
        p = self.params
        mask = self._mask(counts, ids.shape[1])
        x = ad.embedding_lookup(ids, p["embedding"])
        h = ad.gru(x, self._gru_weights(), mask)
        h = ad.batch_norm(h, p["bn_gamma"], p["bn_beta"], self.bn_running, training)
        pooled = ad.global_average_pool(h, mask)
        return ad.dense(pooled, p["out_w"], p["out_b"])


class CnnAttModel(_NeuralBase):
    family = "cnn_att"

    def __init__(self, spec, label_space, embedding, seed: int = 0):
        super().__init__(spec, label_space, embedding)
        rng = np.random.default_rng(seed)
        d, f, k, c = spec.embedding_size, spec.conv_filters, spec.kernel_size, len(label_space)
        self.params.update(
            {
                "conv_w": ad.Parameter(ad.glorot_uniform((k, d, f), rng, k * d, f)),
                "conv_b": ad.Parameter(np.zeros(f)),
                "bn_gamma": ad.Parameter(np.ones(f)),
                "bn_beta": ad.Parameter(np.zeros(f)),
                "att_u": ad.Parameter(ad.glorot_uniform((c, f), rng, f, c)),
                "out_w": ad.Parameter(np.zeros((c, f))),
                "out_b": ad.Parameter(np.zeros(c)),
            }
        )

    def _bn_channels(self) -> int:
        return self.spec.conv_filters

    def _features(self, ids, training):
        self._check_length(ids)
        p = self.params
        x = ad.embedding_lookup(ids, p["embedding"])
        h = ad.tanh(ad.conv1d(x, p["conv_w"], p["conv_b"]))
        return ad.batch_norm(h, p["bn_gamma"], p["bn_beta"], self.bn_running, training)

    def forward_logits(self, ids, counts, training):
        contexts, _ = ad.label_attention(self._features(ids, training), self.params["att_u"])
        return ad.per_label_dense(contexts, self.params["out_w"], self.params["out_b"])

    def attention_weights(self, ids: np.ndarray) -> np.ndarray:
        """batch x C x L softmax weights, inference mode."""
        _, alpha = ad.label_attention(self._features(ids, False), self.params["att_u"])
        return alpha


Model = ConstantModel | LogisticRegressionModel | CnnModel | GruModel | CnnAttModel


def build_model(
    spec: ModelSpec,
    label_space: LabelSpace,
    featurizer: EmbeddingMatrix | TfidfModel | None = None,
    seed: int = 0,
    train_label_sets: list[set[str]] | None = None,
) -> Model:
    """Assemble a model of the requested family around its featurizer."""
    if spec.family == "constant":
        if train_label_sets is None:
            raise DataError("constant family needs training label sets")
        return constant_fit(train_label_sets, spec.top_k, label_space)
    if spec.family == "lr":
        if not isinstance(featurizer, TfidfModel):
            raise DataError("lr family needs a fitted TF-IDF model")
        return LogisticRegressionModel(spec, label_space, featurizer)
    if not isinstance(featurizer, EmbeddingMatrix):
        raise DataError(f"{spec.family} family needs an embedding matrix")
    cls = {"cnn": CnnModel, "gru": GruModel, "cnn_att": CnnAttModel}[spec.family]
    return cls(spec, label_space, featurizer, seed=seed)


def transplant_cnn_weights(cnn: CnnModel, att: CnnAttModel) -> None:
    """Copy a CNN's weights into a CNN-Att under the reduction mapping:
    zero attention targets make every context the global average, so
    output-matrix columns become the per-label output vectors."""
    for name in ("embedding", "conv_w", "conv_b", "bn_gamma", "bn_beta"):
        att.params[name].data[...] = cnn.params[name].data
    att.bn_running.mean = cnn.bn_running.mean.copy()
    att.bn_running.var = cnn.bn_running.var.copy()
    att.params["att_u"].data[...] = 0.0
    att.params["out_w"].data[...] = cnn.params["out_w"].data.T
    att.params["out_b"].data[...] = cnn.params["out_b"].data


def explain(
    model: CnnAttModel, ids: np.ndarray, real_count: int, codes: list[str]
) -> dict[str, dict]:
    """Per-code attention weights over the input positions.

    Weights sum to 1 over all L positions; entries beyond real_count
    cover padding and are flagged as such.
    """
    if not isinstance(model, CnnAttModel):
        raise DataError("attention explanations require a cnn_att model")
    for code in codes:
        if code not in model.label_space.index:
            raise DataError(f"code {code!r} is not in the model's label space")
    alpha = model.attention_weights(ids[None, :])[0]
    out = {}
    for code in codes:
        row = alpha[model.label_space.index[code]]
        out[code] = {
            "weights": row,
            "real_count": real_count,
            "padding": np.arange(len(row)) >= real_count,
        }
    return out


# -- checkpointing ----------------------------------------------------------


@dataclass
class LoadedCheckpoint:
    model: Model
    threshold: float
    history: list[dict]
    card: dict

    @property
    def spec(self) -> ModelSpec:
        return self.model.spec

    @property
    def label_space(self) -> LabelSpace:
        return self.model.label_space


def save_checkpoint(
    path: str | Path,
    model: Model,
    threshold: float,
    history: list[dict] | None = None,
    card: dict | None = None,
) -> None:
    """Write a self-contained checkpoint: weights, label space,
    featurizer vocabulary and the selected decision threshold."""
    meta = {
        "spec": model.spec.to_json(),
        "codes": model.label_space.codes,
        "code_counts": [model.label_space.counts.get(c, 1) for c in model.label_space.codes],
        "threshold": threshold,
        "history": history or [],
        "card": card or {},
    }
    tensors: dict[str, np.ndarray] = {}
    if isinstance(model, ConstantModel):
        meta["top_codes"] = model.top_codes
    elif isinstance(model, LogisticRegressionModel):
        meta["featurizer"] = {
            "kind": "tfidf",
            "vocabulary": model.tfidf.vocabulary,
            "stopword_set_id": model.tfidf.stopword_set_id,
        }
        tensors["idf"] = model.tfidf.idf
        for name, p in model.params.items():
            tensors[f"param/{name}"] = p.data
    else:
        meta["featurizer"] = {
            "kind": "embedding",
            "tokens": model.vocabulary.id_to_token,
        }
        for name, p in model.params.items():
            tensors[f"param/{name}"] = p.data
        tensors["bn_running_mean"] = model.bn_running.mean
        tensors["bn_running_var"] = model.bn_running.var
    ad.save_container(path, meta, tensors)


def load_checkpoint(path: str | Path) -> LoadedCheckpoint:
    meta, tensors = ad.load_container(path)
    spec = ModelSpec.from_json(meta["spec"])
    codes = list(meta["codes"])
    counts = dict(zip(codes, meta["code_counts"]))
    space = LabelSpace(codes=codes, counts=counts)

    if spec.family == "constant":
        model: Model = ConstantModel(spec, space, list(meta["top_codes"]))
    elif spec.family == "lr":
        feat = meta["featurizer"]
        tfidf = TfidfModel(
            vocabulary=list(feat["vocabulary"]),
            idf=tensors["idf"],
            stopword_set_id=feat["stopword_set_id"],
        )
        model = LogisticRegressionModel(spec, space, tfidf)
        for name, p in model.params.items():
            p.data[...] = tensors[f"param/{name}"]
    else:
        tokens = list(meta["featurizer"]["tokens"])
        vocab = Vocabulary(
            id_to_token=tokens,
            token_to_id={t: i for i, t in enumerate(tokens) if i >= 2},
            sample_freq={},
            total_count={},
        )
        embedding = EmbeddingMatrix(
            vectors=tensors["param/embedding"].copy(), vocabulary=vocab
        )
        cls = {"cnn": CnnModel, "gru": GruModel, "cnn_att": CnnAttModel}[spec.family]
        model = cls(spec, space, embedding, seed=0)
        for name, p in model.params.items():
            p.data[...] = tensors[f"param/{name}"]
        model.bn_running.mean = tensors["bn_running_mean"].copy()
        model.bn_running.var = tensors["bn_running_var"].copy()

    return LoadedCheckpoint(
        model=model,
        threshold=float(meta["threshold"]),
        history=list(meta["history"]),
        card=dict(meta["card"]),
    )


def predict_texts(model: Model, texts: list[str]) -> np.ndarray:
    """Uniform text-in, confidences-out prediction for every family.

    Texts must already be preprocessed/assembled.
    """
    if isinstance(model, ConstantModel):
        return model.predict_count(len(texts))
    if isinstance(model, LogisticRegressionModel):
        return model.predict_vectors(transform_batch(model.tfidf, texts))
    ids, counts = encode_batch(texts, model.vocabulary, model.spec.input_length)
    return model.predict_ids(ids, counts)


def encode_text(model: Model, text: str) -> tuple[np.ndarray, int]:
    """Token ids and real-token count for one preprocessed text, using
    the model's own vocabulary and fixed input length."""
    if isinstance(model, (ConstantModel, LogisticRegressionModel)):
        raise DataError("only embedding-based models encode token sequences")
    ids, counts = encode_batch([text], model.vocabulary, model.spec.input_length)
    return ids[0], int(counts[0])
