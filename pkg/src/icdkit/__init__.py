"""Toolkit for training, evaluating and serving multi-label ICD code
predictors over free-text clinical notes."""

from .corpus import (
    Admission,
    ClinicalDocument,
    SplitManifest,
    assemble_sample,
    corpus_stats,
    load_corpus,
    preprocess_text,
    save_corpus,
    split_by_patient,
)
from .evaluation import (
    DataSplit,
    MetricsReport,
    TrainConfig,
    binarize,
    evaluate,
    micro_metrics,
    pad_unseen,
    sweep_threshold,
    train,
)
from .features import TfidfModel, Vocabulary, encode_fixed, fit_tfidf, tokenize, transform_tfidf
from .models import (
    LabelSpace,
    ModelSpec,
    build_model,
    constant_fit,
    explain,
    load_checkpoint,
    predict_texts,
    save_checkpoint,
)
from .synth import SynthConfig, generate_synthetic_corpus
from .word2vec import EmbeddingMatrix, Word2VecConfig, train_word2vec

__version__ = "0.1.0"

__all__ = [
    "Admission",
    "ClinicalDocument",
    "DataSplit",
    "EmbeddingMatrix",
    "LabelSpace",
    "MetricsReport",
    "ModelSpec",
    "SplitManifest",
    "SynthConfig",
    "TfidfModel",
    "TrainConfig",
    "Vocabulary",
    "Word2VecConfig",
    "assemble_sample",
    "binarize",
    "build_model",
    "constant_fit",
    "corpus_stats",
    "encode_fixed",
    "evaluate",
    "explain",
    "fit_tfidf",
    "generate_synthetic_corpus",
    "load_checkpoint",
    "load_corpus",
    "micro_metrics",
    "pad_unseen",
    "predict_texts",
    "preprocess_text",
    "save_checkpoint",
    "save_corpus",
    "split_by_patient",
    "sweep_threshold",
    "tokenize",
    "train",
    "train_word2vec",
    "transform_tfidf",
]
