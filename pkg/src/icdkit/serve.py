"""Stateless HTTP/JSON prediction service.

Loads checkpoints from a directory, serves ranked code suggestions
with per-label attention evidence for attention models, and appends
coder feedback to an append-only JSON Lines log (fsync on write,
idempotent on identical fingerprint + decisions).
"""

from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .corpus import Admission, ClinicalDocument, assemble_sample, preprocess_text
from .errors import DataError
from .features import tokenize
from .models import (
    CnnAttModel,
    ConstantModel,
    LoadedCheckpoint,
    LogisticRegressionModel,
    load_checkpoint,
    predict_texts,
)

MAX_PAYLOAD = 1 << 20  # 1 MiB
DEFAULT_TOP_N = 20
DECISIONS = ("accepted", "rejected", "added")


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class PredictionService:
    """HTTP-agnostic core: loads models once, answers requests, and
    owns the single feedback appender."""

    def __init__(self, models_dir: str | Path, feedback_log: str | Path):
        self.models: dict[str, LoadedCheckpoint] = {}
        models_dir = Path(models_dir)
        if models_dir.exists():
            for path in sorted(models_dir.glob("*.ckpt")):
                self.models[path.stem] = load_checkpoint(path)
        self.feedback_log = Path(feedback_log)
        self._lock = threading.Lock()
        self._seen: set[str] = set()
        if self.feedback_log.exists():
            for line in self.feedback_log.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._seen.add(self._feedback_key(json.loads(line)))

    # -- GET /models --------------------------------------------------------

    def list_models(self) -> list[dict]:
        return [
            {
                "model_id": model_id,
                "family": loaded.spec.family,
                "label_count": len(loaded.label_space),
                "threshold": loaded.threshold,
                "profile": loaded.card.get("profile"),
            }
            for model_id, loaded in self.models.items()
        ]

    # -- POST /predict ------------------------------------------------------

    def predict(self, payload: dict) -> dict:
        if not isinstance(payload, dict):
            raise ServiceError(422, "request body must be a JSON object")
        model_id = payload.get("model_id")
        loaded = self.models.get(model_id)
        if loaded is None:
            raise ServiceError(404, f"unknown model id {model_id!r}")
        top_n = payload.get("top_n", DEFAULT_TOP_N)
        if not isinstance(top_n, int) or top_n < 1:
            raise ServiceError(422, "top_n must be a positive integer")
        threshold = payload.get("threshold", loaded.threshold)
        try:
            threshold = float(threshold)
        except (TypeError, ValueError):
            raise ServiceError(422, "threshold must be a number")

        text = self._assembled_text(payload, loaded)
        tokens = tokenize(text)
        if not tokens:
            raise ServiceError(422, "request contains no non-empty text")

        probs = predict_texts(loaded.model, [text])[0]
        order = np.argsort(-probs)[:top_n]
        codes = loaded.label_space.codes

        truncated = False
        attention = None
        if isinstance(loaded.model, CnnAttModel):
            length = loaded.spec.input_length
            truncated = len(tokens) > length
            kept = tokens[:length]
            alpha = loaded.model.attention_weights(
                _encode_ids(loaded, text)[None, :]
            )[0]
            attention = {}
            for j in order:
                row = alpha[j][: len(kept)]
                total = row.sum()
                weights = row / total if total > 0 else np.full(len(kept), 1.0 / len(kept))
                attention[codes[j]] = [
                    {"token": tok, "weight": float(w)} for tok, w in zip(kept, weights)
                ]
        elif not isinstance(loaded.model, (ConstantModel, LogisticRegressionModel)):
            truncated = len(tokens) > loaded.spec.input_length

        suggestions = []
        for j in order:
            entry = {
                "code": codes[j],
                "confidence": float(probs[j]),
                "above_threshold": bool(probs[j] >= threshold),
            }
            if attention is not None:
                entry["attention"] = attention[codes[j]]
            suggestions.append(entry)

        return {
            "model_id": model_id,
            "threshold": threshold,
            "suggestions": suggestions,
            "trace": {"token_count": len(tokens), "truncated": truncated},
        }

    def _assembled_text(self, payload: dict, loaded: LoadedCheckpoint) -> str:
        if "documents" in payload:
            docs = payload["documents"]
            if not isinstance(docs, list) or not docs:
                raise ServiceError(422, "documents must be a non-empty list")
            try:
                admission = Admission(
                    admission_id="request",
                    patient_id="request",
                    documents=[
                        ClinicalDocument(
                            admission_id="request",
                            patient_id="request",
                            doc_type=d["type"],
                            seq_index=int(d.get("seq", i)),
                            text=str(d["text"]),
                        )
                        for i, d in enumerate(docs)
                    ],
                    codes=set(),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ServiceError(422, f"bad document entry: {exc}") from exc
            if any(d.doc_type not in ("S", "E", "A") for d in admission.documents):
                raise ServiceError(422, "document type must be S, E or A")
            order = loaded.card.get("order", "SEA")
            try:
                return assemble_sample(admission, order)
            except DataError as exc:
                raise ServiceError(422, str(exc)) from exc
        if "text" in payload:
            return preprocess_text(str(payload["text"]))
        raise ServiceError(422, "request needs either documents or text")

    # -- POST /feedback -----------------------------------------------------

    @staticmethod
    def _feedback_key(record: dict) -> str:
        decisions = sorted(
            (d.get("code", ""), d.get("decision", "")) for d in record.get("decisions", [])
        )
        return json.dumps([record.get("fingerprint"), decisions])

    def feedback(self, payload: dict) -> dict:
        if not isinstance(payload, dict):
            raise ServiceError(422, "feedback must be a JSON object")
        fingerprint = payload.get("fingerprint")
        if not isinstance(fingerprint, str) or not fingerprint:
            raise ServiceError(422, "feedback needs a non-empty fingerprint")
        suggested = payload.get("suggested")
        if not isinstance(suggested, list):
            raise ServiceError(422, "feedback needs the suggested code list")
        decisions = payload.get("decisions")
        if not isinstance(decisions, list) or not decisions:
            raise ServiceError(422, "feedback needs a non-empty decisions list")
        for d in decisions:
            if not isinstance(d, dict) or "code" not in d or "decision" not in d:
                raise ServiceError(422, "each decision needs code and decision")
            if d["decision"] not in DECISIONS:
                raise ServiceError(422, f"unknown decision {d['decision']!r}")
            if d["decision"] != "added" and d["code"] not in suggested:
                raise ServiceError(
                    422,
                    f"decision references code {d['code']!r} absent from suggestions",
                )
        record = {
            "fingerprint": fingerprint,
            "model_id": payload.get("model_id"),
            "suggested": suggested,
            "decisions": decisions,
            "coder_id": payload.get("coder_id", "anonymous"),
            "timestamp": payload.get("timestamp"),
        }
        key = self._feedback_key(record)
        with self._lock:
            if key in self._seen:
                return {"status": "ok", "stored": False}
            with self.feedback_log.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._seen.add(key)
        return {"status": "ok", "stored": True}


def _encode_ids(loaded: LoadedCheckpoint, text: str) -> np.ndarray:
    from .features import encode_batch

    ids, _ = encode_batch([text], loaded.model.vocabulary, loaded.spec.input_length)
    return ids[0]


_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


def make_handler(service: PredictionService, static_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status: int, body: dict) -> None:
            raw = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(raw)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(raw)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length > MAX_PAYLOAD:
                raise ServiceError(413, "payload exceeds 1 MiB")
            raw = self.rfile.read(length)
            try:
                return json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ServiceError(400, f"invalid JSON body: {exc}") from exc

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            if self.path == "/health":
                self._send_json(200, {"status": "ok"})
            elif self.path == "/models":
                self._send_json(200, service.list_models())
            elif static_dir is not None:
                self._serve_static()
            else:
                self._send_json(404, {"error": "not found"})

        def _serve_static(self):
            rel = self.path.lstrip("/") or "index.html"
            target = (static_dir / rel).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self._send_json(404, {"error": "not found"})
                return
            raw = target.read_bytes()
            self.send_response(200)
            ctype = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(raw)))
            self.end_headers()
            self.wfile.write(raw)

        def do_POST(self):
            try:
                payload = self._read_body()
                if self.path == "/predict":
                    self._send_json(200, service.predict(payload))
                elif self.path == "/feedback":
                    self._send_json(200, service.feedback(payload))
                else:
                    self._send_json(404, {"error": "not found"})
            except ServiceError as exc:
                self._send_json(exc.status, {"error": str(exc)})

    return Handler


def make_server(
    models_dir: str | Path,
    host: str,
    port: int,
    feedback_log: str | Path,
    static_dir: Path | None = None,
) -> ThreadingHTTPServer:
    service = PredictionService(models_dir, feedback_log)
    handler = make_handler(service, static_dir)
    server = ThreadingHTTPServer((host, port), handler)
    server.service = service
    return server


def run_server(
    models_dir: str | Path,
    host: str,
    port: int,
    feedback_log: str | Path,
    static_dir: Path | None = None,
) -> None:
    server = make_server(models_dir, host, port, feedback_log, static_dir)
    names = ", ".join(sorted(server.service.models)) or "none"
    print(f"serving on http://{host}:{port} (models: {names})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
