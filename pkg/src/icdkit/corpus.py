"""Admission-level corpus handling.

Loads JSON Lines corpora of clinical admissions, applies the text
cleanup used throughout the toolkit, assembles per-admission input
texts under a configurable document-type concatenation order, produces
patient-disjoint splits and computes corpus statistics.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError, ParseError

DOC_TYPES = ("S", "E", "A")

# Order matters: date and time patterns must go before the separator
# characters they contain are blanked out.
_DATE_RE = re.compile(r"\d{1,4}[-/]\d{1,2}[-/]\d{1,4}")
_TIME_RE = re.compile(r"\d{1,2}:\d{2}(:\d{2})?")

# ASCII letters, digits, and the accented letters used in Portuguese.
_KEEP = "a-z0-9áàâãäéêèíóôõúüç"
_DROP_RE = re.compile(f"[^{_KEEP}]+")


def normalize_code(code: str) -> str:
    """Uppercase and strip an ICD code; codes are otherwise opaque."""
    return code.strip().upper()


@dataclass(frozen=True)
class ClinicalDocument:
    admission_id: str
    patient_id: str
    doc_type: str
    seq_index: int
    text: str


@dataclass
class Admission:
    admission_id: str
    patient_id: str
    documents: list[ClinicalDocument]
    codes: set[str]

    def documents_of_type(self, doc_type: str) -> list[ClinicalDocument]:
        docs = [d for d in self.documents if d.doc_type == doc_type]
        docs.sort(key=lambda d: d.seq_index)
        return docs


@dataclass
class SplitManifest:
    train: list[str]
    validation: list[str]
    test: list[str]
    seed: int
    ratios: tuple[float, float, float]

    def subset_of(self, admission_id: str) -> str:
        for name in ("train", "validation", "test"):
            if admission_id in getattr(self, f"_{name}_set"):
                return name
        raise KeyError(admission_id)

    def __post_init__(self) -> None:
        self._train_set = set(self.train)
        self._validation_set = set(self.validation)
        self._test_set = set(self.test)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train": self.train,
            "validation": self.validation,
            "test": self.test,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitManifest":
        return cls(
            train=list(obj["train"]),
            validation=list(obj["validation"]),
            test=list(obj["test"]),
            seed=int(obj["seed"]),
            ratios=tuple(obj["ratios"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def preprocess_text(raw: str) -> str:
    """Lowercase, drop date/time patterns, keep only the retained
    alphabet, collapse whitespace. Idempotent."""
    text = raw.lower()
    text = _DATE_RE.sub(" ", text)
    text = _TIME_RE.sub(" ", text)
    text = _DROP_RE.sub(" ", text)
    return " ".join(text.split())


def load_corpus(path: str | Path) -> tuple[list[Admission], int]:
    """Read a JSON Lines corpus file.

    Returns the kept admissions plus the number dropped for lacking a
    type-S document or lacking codes. Raises ParseError on malformed
    lines and DataError on duplicate admission ids.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    admissions: list[Admission] = []
    seen_ids: set[str] = set()
    dropped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            try:
                admission = _parse_admission(record, lineno)
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
            if admission.admission_id in seen_ids:
                raise DataError(
                    f"line {lineno}: duplicate admission_id {admission.admission_id!r}"
                )
            seen_ids.add(admission.admission_id)
            if not admission.documents_of_type("S") or not admission.codes:
                dropped += 1
                continue
            admissions.append(admission)
    return admissions, dropped


def _parse_admission(record: dict, lineno: int) -> Admission:
    admission_id = str(record["admission_id"])
    patient_id = str(record["patient_id"])
    documents = []
    seen_seq: set[tuple[str, int]] = set()
    for doc in record["documents"]:
        doc_type = doc["type"]
        if doc_type not in DOC_TYPES:
            raise ValueError(f"unknown document type {doc_type!r}")
        seq = int(doc["seq"])
        if seq < 0:
            raise ValueError(f"negative seq {seq} for type {doc_type}")
        if (doc_type, seq) in seen_seq:
            raise ValueError(f"duplicate seq {seq} for type {doc_type}")
        seen_seq.add((doc_type, seq))
        documents.append(
            ClinicalDocument(
                admission_id=admission_id,
                patient_id=patient_id,
                doc_type=doc_type,
                seq_index=seq,
                text=str(doc["text"]),
            )
        )
    codes = {normalize_code(c) for c in record["codes"]}
    codes.discard("")
    return Admission(
        admission_id=admission_id,
        patient_id=patient_id,
        documents=documents,
        codes=codes,
    )


def save_corpus(admissions: list[Admission], path: str | Path) -> None:
    """Write admissions in the same JSON Lines schema load_corpus reads."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for adm in admissions:
            record = {
                "admission_id": adm.admission_id,
                "patient_id": adm.patient_id,
                "documents": [
                    {"type": d.doc_type, "seq": d.seq_index, "text": d.text}
                    for d in adm.documents
                ],
                "codes": sorted(adm.codes),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def parse_order(order: str | tuple[str, ...]) -> tuple[str, ...]:
    """Validate a document-type order like "SEA" or ("S", "E", "A")."""
    types = tuple(order)
    if not types:
        raise DataError("document order must not be empty")
    for t in types:
        if t not in DOC_TYPES:
            raise DataError(f"unknown document type {t!r} in order")
    if len(set(types)) != len(types):
        raise DataError(f"document order {''.join(types)!r} repeats a type")
    return types


def assemble_sample(admission: Admission, order: str | tuple[str, ...]) -> str:
    """Concatenate the admission's preprocessed document texts grouped by
    type in the given order, each group sorted by seq_index."""
    types = parse_order(order)
    parts = []
    for doc_type in types:
        for doc in admission.documents_of_type(doc_type):
            cleaned = preprocess_text(doc.text)
            if cleaned:
                parts.append(cleaned)
    return " ".join(parts)


def split_by_patient(
    admissions: list[Admission],
    ratios: tuple[float, float, float],
    seed: int,
) -> SplitManifest:
    """Deterministic patient-disjoint split.

    Patients are shuffled by seed and greedily assigned to the subset
    with the largest remaining admission-count deficit, so subset sizes
    approach the target ratios while keeping each patient whole.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise DataError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must sum to 1, got {sum(ratios)}")

    by_patient: dict[str, list[str]] = {}
    for adm in admissions:
        by_patient.setdefault(adm.patient_id, []).append(adm.admission_id)
    if len(by_patient) < 3:
        raise DataError(
            f"need at least 3 distinct patients to split, got {len(by_patient)}"
        )

    patients = sorted(by_patient)
    rng = random.Random(seed)
    rng.shuffle(patients)

    subsets: tuple[list[str], list[str], list[str]] = ([], [], [])
    counts = [0, 0, 0]
    assigned = 0
    for patient in patients:
        adm_ids = sorted(by_patient[patient])
        size = len(adm_ids)
        # Deficit if this patient were added; largest wins, ties go to
        # the earlier subset (train first).
        deficits = [
            ratios[i] * (assigned + size) - counts[i] for i in range(3)
        ]
        target = max(range(3), key=lambda i: (deficits[i], -i))
        subsets[target].extend(adm_ids)
        counts[target] += size
        assigned += size

    return SplitManifest(
        train=subsets[0],
        validation=subsets[1],
        test=subsets[2],
        seed=seed,
        ratios=tuple(ratios),
    )


@dataclass
class DocTypeStats:
    doc_types: str
    unique_patients: int
    admissions: int
    total_documents: int
    avg_words_per_sample: float


@dataclass
class CorpusStats:
    per_type: list[DocTypeStats]
    codes_per_sample: dict[int, int]
    word_count_cdf: list[tuple[int, float]]
    rank_coverage: dict[int, float] = field(default_factory=dict)
    unseen_test_code_fraction: float = 0.0
    order: str = "SEA"

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "per_type": [vars(row) for row in self.per_type],
            "codes_per_sample": {str(k): v for k, v in sorted(self.codes_per_sample.items())},
            "word_count_cdf": [[c, f] for c, f in self.word_count_cdf],
            "rank_coverage": {str(k): v for k, v in sorted(self.rank_coverage.items())},
            "unseen_test_code_fraction": self.unseen_test_code_fraction,
        }


def _word_count(text: str) -> int:
    return len(text.split())


def corpus_stats(
    admissions: list[Admission],
    split: SplitManifest | None,
    order: str | tuple[str, ...],
    cdf_points: int = 200,
    coverage_ranks: tuple[int, ...] = (1, 10, 100, 1000),
) -> CorpusStats:
    """Compute corpus statistics over assembled samples."""
    if not admissions:
        raise DataError("cannot compute statistics over an empty corpus")
    types = parse_order(order)

    per_type = []
    present_types = [t for t in DOC_TYPES if any(a.documents_of_type(t) for a in admissions)]
    for doc_type in present_types:
        with_type = [a for a in admissions if a.documents_of_type(doc_type)]
        total_docs = sum(len(a.documents_of_type(doc_type)) for a in with_type)
        counts = [_word_count(assemble_sample(a, (doc_type,))) for a in with_type]
        per_type.append(
            DocTypeStats(
                doc_types=doc_type,
                unique_patients=len({a.patient_id for a in with_type}),
                admissions=len(with_type),
                total_documents=total_docs,
                avg_words_per_sample=sum(counts) / len(counts) if counts else 0.0,
            )
        )

    assembled_counts = sorted(_word_count(assemble_sample(a, types)) for a in admissions)
    total_docs_in_order = sum(
        len(a.documents_of_type(t)) for a in admissions for t in types
    )
    per_type.append(
        DocTypeStats(
            doc_types="".join(types),
            unique_patients=len({a.patient_id for a in admissions}),
            admissions=len(admissions),
            total_documents=total_docs_in_order,
            avg_words_per_sample=sum(assembled_counts) / len(assembled_counts),
        )
    )

    n = len(assembled_counts)
    if n <= cdf_points:
        cdf = [(assembled_counts[i], (i + 1) / n) for i in range(n)]
    else:
        idx = [round((j + 1) / cdf_points * n) - 1 for j in range(cdf_points)]
        cdf = [(assembled_counts[i], (i + 1) / n) for i in idx]
    if not cdf or cdf[-1][1] != 1.0:
        cdf.append((assembled_counts[-1], 1.0))

    codes_hist = Counter(len(a.codes) for a in admissions)

    code_freq = Counter()
    for adm in admissions:
        code_freq.update(adm.codes)
    ranked = sorted(code_freq.items(), key=lambda kv: (-kv[1], kv[0]))
    rank_coverage = {}
    for rank in coverage_ranks:
        if rank <= len(ranked):
            rank_coverage[rank] = ranked[rank - 1][1] / len(admissions)

    unseen_fraction = 0.0
    if split is not None:
        by_id = {a.admission_id: a for a in admissions}
        train_codes: set[str] = set()
        for adm_id in split.train:
            if adm_id in by_id:
                train_codes |= by_id[adm_id].codes
        test_codes: set[str] = set()
        for adm_id in split.test:
            if adm_id in by_id:
                test_codes |= by_id[adm_id].codes
        if test_codes:
            unseen_fraction = len(test_codes - train_codes) / len(test_codes)

    return CorpusStats(
        per_type=per_type,
        codes_per_sample=dict(codes_hist),
        word_count_cdf=cdf,
        rank_coverage=rank_coverage,
        unseen_test_code_fraction=unseen_fraction,
        order="".join(types),
    )
