"""Report rendering: plain-text statistic tables plus matplotlib
figures written next to the JSON/delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .corpus import CorpusStats


def stats_table(stats: CorpusStats) -> str:
    """Tab-delimited table mirroring the corpus statistics."""
    lines = [
        "doc_types\tunique_patients\tadmissions\ttotal_documents\tavg_words_per_sample"
    ]
    for row in stats.per_type:
        lines.append(
            f"{row.doc_types}\t{row.unique_patients}\t{row.admissions}"
            f"\t{row.total_documents}\t{row.avg_words_per_sample:.1f}"
        )
    lines.append("")
    lines.append("rank\tsample_coverage")
    for rank, coverage in sorted(stats.rank_coverage.items()):
        lines.append(f"{rank}\t{coverage:.2%}")
    lines.append("")
    lines.append(f"unseen_test_code_fraction\t{stats.unseen_test_code_fraction:.2%}")
    lines.append("")
    lines.append("codes_per_sample\tsamples")
    for n_codes, count in sorted(stats.codes_per_sample.items()):
        lines.append(f"{n_codes}\t{count}")
    return "\n".join(lines) + "\n"


def render_stats_figures(stats: CorpusStats, outdir: str | Path) -> list[Path]:
    """Word-count cumulative distribution and codes-per-sample
    histogram, written as PNG files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    counts = [c for c, _ in stats.word_count_cdf]
    fractions = [f for _, f in stats.word_count_cdf]
    ax.step(counts, fractions, where="post")
    ax.set_xlabel("Words per sample")
    ax.set_ylabel("Cumulative fraction of samples")
    ax.set_title(f"Word count per sample ({stats.order} order)")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    path = outdir / "word_count_cdf.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    keys = sorted(stats.codes_per_sample)
    ax.bar(keys, [stats.codes_per_sample[k] for k in keys])
    ax.set_xlabel("Codes per sample")
    ax.set_ylabel("Samples")
    ax.set_title("Code count per sample")
    ax.grid(alpha=0.3, axis="y")
    path = outdir / "codes_per_sample.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    return paths


def render_history_figure(history: list[dict], path: str | Path) -> Path:
    """Per-epoch validation F1 curve with the selected thresholds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    epochs = [h["epoch"] for h in history]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(epochs, [h["val_f1"] for h in history], marker="o", label="validation F1")
    ax.set_xlabel("Epoch")
    ax.set_ylabel("Micro F1")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(
        epochs,
        [h["val_threshold"] for h in history],
        marker="s",
        color="tab:orange",
        alpha=0.6,
        label="threshold",
    )
    ax2.set_ylabel("Selected threshold")
    ax2.set_ylim(0, 1.02)
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="lower right")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def history_csv(history: list[dict]) -> str:
    lines = ["epoch,val_f1,val_threshold,train_loss"]
    for h in history:
        lines.append(
            f"{h['epoch']},{h['val_f1']:.6f},{h['val_threshold']},{h['train_loss']:.6f}"
        )
    return "\n".join(lines) + "\n"
