"""Synthetic trigger-token corpus generator.

Stands in for the access-restricted clinical datasets at desk scale:
each code owns a unique trigger token, labels are exactly the codes
whose triggers a sample emits, and code frequencies follow a power-law
decay. With split placement, half of each sample's triggers appear only
in type-E documents, so a discharge-summary-only model hits a recall
ceiling that the concatenated orders do not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Admission, ClinicalDocument, SplitManifest, split_by_patient
from .errors import DataError


@dataclass
class SynthConfig:
    num_codes: int = 50
    samples: int = 2400
    placement: str = "s_only"  # s_only | split
    vocab_size: int = 200
    noise_length: int = 20
    trigger_repeats: int = 3
    max_codes_per_sample: int = 8
    skew: float = 0.75
    ratios: tuple[float, float, float] = (5 / 6, 1 / 12, 1 / 12)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_codes < 2:
            raise DataError("need at least 2 codes")
        if self.vocab_size < self.num_codes:
            raise DataError("noise vocabulary smaller than the code set")
        if self.placement not in ("s_only", "split"):
            raise DataError(f"unknown trigger placement {self.placement!r}")


def generate_synthetic_corpus(
    cfg: SynthConfig | None = None,
) -> tuple[list[Admission], SplitManifest]:
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed)

    codes = [f"C{i:03d}" for i in range(1, cfg.num_codes + 1)]
    triggers = {code: f"trig{i:03d}" for i, code in enumerate(codes, start=1)}
    noise_vocab = [f"w{j:03d}" for j in range(cfg.vocab_size)]
    weights = np.arange(1, cfg.num_codes + 1, dtype=np.float64) ** (-cfg.skew)
    weights /= weights.sum()

    admissions = []
    for n in range(cfg.samples):
        patient = f"p{n:05d}"
        adm_id = f"a{n:05d}"
        m = int(rng.integers(1, min(cfg.max_codes_per_sample, cfg.num_codes) + 1))
        picked_idx = rng.choice(cfg.num_codes, size=m, replace=False, p=weights)
        picked = [codes[i] for i in picked_idx]

        if cfg.placement == "split":
            shuffled = list(picked)
            rng.shuffle(shuffled)
            cut = (m + 1) // 2
            s_codes, e_codes = shuffled[:cut], shuffled[cut:]
        else:
            s_codes, e_codes = picked, []

        documents = [
            ClinicalDocument(
                admission_id=adm_id,
                patient_id=patient,
                doc_type="S",
                seq_index=0,
                text=_doc_text(rng, noise_vocab, [triggers[c] for c in s_codes], cfg),
            )
        ]
        if e_codes:
            documents.append(
                ClinicalDocument(
                    admission_id=adm_id,
                    patient_id=patient,
                    doc_type="E",
                    seq_index=0,
                    text=_doc_text(rng, noise_vocab, [triggers[c] for c in e_codes], cfg),
                )
            )
        if cfg.placement == "split":
            documents.append(
                ClinicalDocument(
                    admission_id=adm_id,
                    patient_id=patient,
                    doc_type="A",
                    seq_index=0,
                    text=_doc_text(rng, noise_vocab, [], cfg, length=cfg.noise_length // 2),
                )
            )
        admissions.append(
            Admission(
                admission_id=adm_id,
                patient_id=patient,
                documents=documents,
                codes=set(picked),
            )
        )

    manifest = split_by_patient(admissions, cfg.ratios, cfg.seed)
    return admissions, manifest


def _doc_text(
    rng: np.random.Generator,
    noise_vocab: list[str],
    trigger_tokens: list[str],
    cfg: SynthConfig,
    length: int | None = None,
) -> str:
    words = list(rng.choice(noise_vocab, size=length or cfg.noise_length))
    for trig in trigger_tokens:
        words.extend([trig] * cfg.trigger_repeats)
    rng.shuffle(words)
    return " ".join(words)
