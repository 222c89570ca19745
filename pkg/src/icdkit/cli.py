"""Command-line entry point.

Subcommands: ingest, stats, split, train-embeddings, train, evaluate,
predict, synth, serve. Exit codes: 0 success, 1 usage error, 2 data
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # py310
    import tomli as tomllib

import numpy as np

from . import corpus as corpus_mod
from . import report
from .corpus import SplitManifest, assemble_sample, corpus_stats, load_corpus, parse_order
from .errors import DataError, NumericError, UsageError
from .evaluation import DataSplit, TrainConfig, evaluate, train
from .features import fit_tfidf, load_stopwords
from .models import (
    LabelSpace,
    ModelSpec,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from .synth import SynthConfig, generate_synthetic_corpus
from .word2vec import EmbeddingMatrix, Word2VecConfig, train_word2vec

# Dataset presets: fixed input length and constant-model k. Family
# learning rates on top of these come from ModelSpec defaults except
# where a profile pins one.
PROFILES = {
    "mimic": {"input_length": 2000, "top_k": 15},
    "hsl-s": {"input_length": 300, "top_k": 8},
    "hsl-sea": {"input_length": 4000, "top_k": 8, "cnn_learning_rate": 3e-3},
}

DEFAULT_ORDER = "SEA"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _data_root() -> Path | None:
    root = os.environ.get("ICDKIT_DATA_ROOT")
    return Path(root) if root else None


def _resolve(path: str) -> Path:
    p = Path(path)
    root = _data_root()
    if root is not None and not p.is_absolute():
        return root / p
    return p


def build_parser() -> _Parser:
    parser = _Parser(prog="icdkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file and report drops")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write the normalized corpus here")

    p = sub.add_parser("stats", help="corpus statistics report with figures")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", help="split manifest for unseen-code fraction")
    p.add_argument("--order", default=DEFAULT_ORDER, choices=["S", "SA", "SE", "SEA", "SAE"])
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("split", help="patient-disjoint train/validation/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", default="0.905,0.031,0.064")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-embeddings", help="train word vectors on the training subset")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--order", default=DEFAULT_ORDER, choices=["S", "SA", "SE", "SEA", "SAE"])
    p.add_argument("--algorithm", default="skip_gram", choices=["skip_gram", "cbow"])
    p.add_argument("--size", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--min-sample-count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="embedding text file")

    p = sub.add_parser("train", help="train a model from a TOML run config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("evaluate", help="score a checkpoint on a corpus subset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--subset", default="test", choices=["train", "validation", "test"])
    p.add_argument("--order", choices=["S", "SA", "SE", "SEA", "SAE"])
    p.add_argument("--out", help="metrics JSON path")

    p = sub.add_parser("predict", help="batch predictions for a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", choices=["S", "SA", "SE", "SEA", "SAE"])
    p.add_argument("--top-n", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic trigger-token corpus")
    p.add_argument("--num-codes", type=int, default=50)
    p.add_argument("--samples", type=int, default=2400)
    p.add_argument("--placement", default="s_only", choices=["s_only", "split"])
    p.add_argument("--vocab-size", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="corpus JSONL path")
    p.add_argument("--split-out", help="split manifest path")

    p = sub.add_parser("serve", help="run the prediction HTTP service")
    p.add_argument("--models", required=True, help="directory of .ckpt files")
    p.add_argument("--port", type=int, default=8351)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--feedback-log", default="feedback.jsonl")
    p.add_argument("--static", help="optional directory of static assets to serve at /")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = globals()[f"_cmd_{args.command.replace('-', '_')}"]
        handler(args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def _load_split_texts(
    admissions, manifest: SplitManifest, order
) -> dict[str, DataSplit]:
    by_id = {a.admission_id: a for a in admissions}
    splits = {}
    for name in ("train", "validation", "test"):
        ids = [i for i in getattr(manifest, name) if i in by_id]
        adms = [by_id[i] for i in ids]
        splits[name] = DataSplit(
            texts=[assemble_sample(a, order) for a in adms],
            code_sets=[a.codes for a in adms],
        )
    return splits


def _cmd_ingest(args) -> None:
    admissions, dropped = load_corpus(_resolve(args.corpus))
    print(f"admissions kept: {len(admissions)}")
    print(f"admissions dropped (no S document or no codes): {dropped}")
    if args.out:
        corpus_mod.save_corpus(admissions, _resolve(args.out))
        print(f"normalized corpus written to {args.out}")


def _cmd_stats(args) -> None:
    admissions, _ = load_corpus(_resolve(args.corpus))
    manifest = SplitManifest.load(_resolve(args.split)) if args.split else None
    stats = corpus_stats(admissions, manifest, args.order)
    outdir = _resolve(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "stats.json").write_text(
        json.dumps(stats.to_json(), indent=2), encoding="utf-8"
    )
    (outdir / "stats.txt").write_text(report.stats_table(stats), encoding="utf-8")
    figures = report.render_stats_figures(stats, outdir)
    print(f"stats written to {outdir}/stats.json and stats.txt")
    for fig in figures:
        print(f"figure written to {fig}")


def _cmd_split(args) -> None:
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --ratios: {exc}") from exc
    if len(ratios) != 3:
        raise UsageError("--ratios needs exactly three comma-separated fractions")
    admissions, _ = load_corpus(_resolve(args.corpus))
    manifest = corpus_mod.split_by_patient(admissions, ratios, args.seed)
    manifest.save(_resolve(args.out))
    print(
        f"split sizes: train={len(manifest.train)} "
        f"validation={len(manifest.validation)} test={len(manifest.test)}"
    )


def _cmd_train_embeddings(args) -> None:
    admissions, _ = load_corpus(_resolve(args.corpus))
    manifest = SplitManifest.load(_resolve(args.split))
    splits = _load_split_texts(admissions, manifest, args.order)
    cfg = Word2VecConfig(
        algorithm=args.algorithm,
        size=args.size,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        min_sample_count=args.min_sample_count,
        seed=args.seed,
    )
    embedding = train_word2vec(splits["train"].texts, cfg)
    out = _resolve(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    embedding.save_text(out)
    out.with_suffix(out.suffix + ".meta.json").write_text(
        json.dumps(embedding.metadata, indent=2), encoding="utf-8"
    )
    print(f"embeddings: {len(embedding.vocabulary)} rows x {embedding.size} dims -> {out}")


def _read_run_config(path: Path) -> dict:
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"bad TOML in {path}: {exc}") from exc


def _spec_from_config(model_cfg: dict) -> ModelSpec:
    family = model_cfg.get("family")
    if not family:
        raise DataError("run config needs model.family")
    profile = model_cfg.get("profile")
    fields = {}
    if profile:
        if profile not in PROFILES:
            raise DataError(f"unknown profile {profile!r}")
        preset = PROFILES[profile]
        fields["input_length"] = preset["input_length"]
        fields["top_k"] = preset["top_k"]
        if family == "cnn" and "cnn_learning_rate" in preset:
            fields["learning_rate"] = preset["cnn_learning_rate"]
    for key in (
        "embedding_size",
        "conv_filters",
        "kernel_size",
        "gru_units",
        "input_length",
        "learning_rate",
        "lr_schedule",
        "mask_padding",
        "sample_weighting",
        "finetune_embeddings",
        "top_k",
        "tfidf_vocab",
    ):
        if key in model_cfg:
            fields[key] = model_cfg[key]
    return ModelSpec(family=family, **fields)


def _fingerprint(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


def _cmd_train(args) -> None:
    cfg = _read_run_config(_resolve(args.config))
    data_cfg = cfg.get("data", {})
    for key in ("corpus", "split"):
        if key not in data_cfg:
            raise DataError(f"run config needs data.{key}")
    corpus_path = _resolve(data_cfg["corpus"])
    admissions, _ = load_corpus(corpus_path)
    manifest = SplitManifest.load(_resolve(data_cfg["split"]))
    order = data_cfg.get("order", DEFAULT_ORDER)
    parse_order(order)
    splits = _load_split_texts(admissions, manifest, order)

    spec = _spec_from_config(cfg.get("model", {}))
    train_cfg_dict = cfg.get("train", {})
    tcfg = TrainConfig(
        max_epochs=train_cfg_dict.get("max_epochs", 10),
        batch_size=train_cfg_dict.get("batch_size", 32),
        seed=train_cfg_dict.get("seed", 0),
    )
    seed = train_cfg_dict.get("seed", 0)

    space = LabelSpace.from_code_sets(splits["train"].code_sets)
    featurizer = None
    featurizer_id = "none"
    if spec.family == "lr":
        featurizer = fit_tfidf(
            splits["train"].texts, load_stopwords(), max_vocab=spec.tfidf_vocab
        )
        featurizer_id = "tfidf"
    elif spec.family in ("cnn", "gru", "cnn_att"):
        if "embeddings" not in data_cfg:
            raise DataError(f"{spec.family} run config needs data.embeddings")
        featurizer = EmbeddingMatrix.load_text(_resolve(data_cfg["embeddings"]))
        featurizer_id = str(data_cfg["embeddings"])

    model = build_model(
        spec,
        space,
        featurizer,
        seed=seed,
        train_label_sets=splits["train"].code_sets,
    )
    result = train(
        model,
        splits["train"],
        splits["validation"],
        tcfg,
        on_epoch=lambda r: print(
            f"epoch={r.epoch} val_f1={r.val_f1:.4f} "
            f"val_threshold={r.val_threshold} train_loss={r.train_loss:.4f}"
        ),
    )

    outdir = _resolve(cfg.get("out", {}).get("dir", "runs/latest"))
    outdir.mkdir(parents=True, exist_ok=True)
    card = {
        "family": spec.family,
        "order": order,
        "profile": cfg.get("model", {}).get("profile"),
        "hyperparameters": spec.to_json(),
        "data_fingerprint": _fingerprint(corpus_path),
        "train_samples": len(splits["train"]),
        "metrics": {"val_f1": result.best_val_f1, "best_epoch": result.best_epoch},
        "featurizer": featurizer_id,
        "seed": seed,
    }
    ckpt_path = outdir / "checkpoint.ckpt"
    save_checkpoint(ckpt_path, model, result.threshold, result.history_json(), card)
    (outdir / "model_card.json").write_text(json.dumps(card, indent=2), encoding="utf-8")
    (outdir / "history.csv").write_text(
        report.history_csv(result.history_json()), encoding="utf-8"
    )
    report.render_history_figure(result.history_json(), outdir / "history.png")
    val_metrics = evaluate(model, result.threshold, splits["validation"], space)
    val_metrics.history = result.history_json()
    val_metrics.save(outdir / "metrics.json")
    print(
        f"best epoch {result.best_epoch}: val_f1={result.best_val_f1:.4f} "
        f"threshold={result.threshold}"
    )
    print(f"checkpoint written to {ckpt_path}")


def _cmd_evaluate(args) -> None:
    loaded = load_checkpoint(_resolve(args.checkpoint))
    admissions, _ = load_corpus(_resolve(args.corpus))
    manifest = SplitManifest.load(_resolve(args.split))
    order = args.order or loaded.card.get("order", DEFAULT_ORDER)
    splits = _load_split_texts(admissions, manifest, order)
    subset = splits[args.subset]
    full_space = LabelSpace.from_code_sets(
        [set(loaded.label_space.codes)] + subset.code_sets
    )
    metrics = evaluate(loaded.model, loaded.threshold, subset, full_space)
    print(
        f"{args.subset}: f1={metrics.f1:.4f} precision={metrics.precision:.4f} "
        f"recall={metrics.recall:.4f} threshold={metrics.threshold}"
    )
    if args.out:
        metrics.save(_resolve(args.out))


def _cmd_predict(args) -> None:
    from .models import predict_texts

    loaded = load_checkpoint(_resolve(args.checkpoint))
    admissions, _ = load_corpus(_resolve(args.corpus))
    order = args.order or loaded.card.get("order", DEFAULT_ORDER)
    texts = [assemble_sample(a, order) for a in admissions]
    probs = predict_texts(loaded.model, texts)
    codes = loaded.label_space.codes
    outdir = _resolve(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    jsonl = outdir / "predictions.jsonl"
    tsv = outdir / "predictions.tsv"
    with jsonl.open("w", encoding="utf-8") as jf, tsv.open("w", encoding="utf-8") as tf:
        tf.write("admission_id\tcode\tconfidence\tabove_threshold\n")
        for adm, row in zip(admissions, probs):
            ranked = np.argsort(-row)[: args.top_n]
            preds = [
                {
                    "code": codes[j],
                    "confidence": float(row[j]),
                    "above_threshold": bool(row[j] >= loaded.threshold),
                }
                for j in ranked
            ]
            jf.write(
                json.dumps(
                    {
                        "admission_id": adm.admission_id,
                        "threshold": loaded.threshold,
                        "predictions": preds,
                    }
                )
                + "\n"
            )
            for p in preds:
                tf.write(
                    f"{adm.admission_id}\t{p['code']}\t{p['confidence']:.6f}"
                    f"\t{int(p['above_threshold'])}\n"
                )
    print(f"predictions for {len(admissions)} admissions written to {jsonl} and {tsv}")


def _cmd_synth(args) -> None:
    cfg = SynthConfig(
        num_codes=args.num_codes,
        samples=args.samples,
        placement=args.placement,
        vocab_size=args.vocab_size,
        seed=args.seed,
    )
    admissions, manifest = generate_synthetic_corpus(cfg)
    corpus_mod.save_corpus(admissions, _resolve(args.out))
    print(f"synthetic corpus with {len(admissions)} admissions -> {args.out}")
    if args.split_out:
        manifest.save(_resolve(args.split_out))
        print(
            f"split manifest (train={len(manifest.train)} val={len(manifest.validation)} "
            f"test={len(manifest.test)}) -> {args.split_out}"
        )


def _cmd_serve(args) -> None:
    from .serve import run_server

    run_server(
        models_dir=_resolve(args.models),
        host=args.host,
        port=args.port,
        feedback_log=_resolve(args.feedback_log),
        static_dir=_resolve(args.static) if args.static else None,
    )


if __name__ == "__main__":
    sys.exit(main())
