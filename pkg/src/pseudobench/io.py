"""Recording container and results persistence.

A recording is a JSON manifest plus a raw payload of little-endian binary32
values stored channel-major (all samples of channel 0, then channel 1, ...).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import EvalRecord, EventSpan, Recording
from .errors import FormatError, SizeMismatchError, ValidationError

PAYLOAD_DTYPE = np.dtype("<f4")

# results column name -> EvalRecord field
RESULT_COLUMNS = {
    "dataset": "dataset_id",
    "subject": "subject_id",
    "session": "session_id",
    "pipeline": "pipeline_id",
    "mode": "mode",
    "protocol": "protocol",
    "nmcc": "nmcc",
    "accuracy": "accuracy",
    "kappa": "kappa",
    "itr": "itr_bits_per_min",
    "n_train": "n_train",
    "n_test": "n_test",
    "fit_s": "fit_seconds",
    "score_s": "score_seconds",
}
_INT_FIELDS = {"n_train", "n_test"}
_FLOAT_FIELDS = {"nmcc", "accuracy", "kappa", "itr_bits_per_min", "fit_seconds", "score_seconds"}


def _require(obj, key, kind, where="manifest"):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    elif kind is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise FormatError(f"{where}: field {key!r} has wrong type {type(val).__name__}")
    return val


def read_recording(path) -> Recording:
    """Load a recording from its JSON manifest and the referenced payload."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: manifest is not valid JSON ({exc})") from None
    if not isinstance(manifest, dict):
        raise FormatError(f"{path}: manifest must be a JSON object")

    subject = _require(manifest, "subject_id", str)
    session = _require(manifest, "session_id", str)
    rate = _require(manifest, "sample_rate_hz", float)
    channels = _require(manifest, "channel_names", list)
    n_samples = _require(manifest, "n_samples", int)
    payload_name = _require(manifest, "payload", str)
    raw_events = _require(manifest, "events", list)
    if not all(isinstance(c, str) for c in channels):
        raise FormatError("manifest: field 'channel_names' must hold strings")
    if not channels:
        raise FormatError("manifest: field 'channel_names' is empty")
    if n_samples < 1:
        raise FormatError("manifest: field 'n_samples' must be positive")

    events = []
    for i, ev in enumerate(raw_events):
        if not isinstance(ev, dict):
            raise FormatError(f"manifest: events[{i}] is not an object")
        where = f"manifest events[{i}]"
        events.append((_require(ev, "onset_sample", int, where),
                       _require(ev, "duration_samples", int, where),
                       _require(ev, "label", str, where)))

    payload_path = path.parent / payload_name
    data = payload_path.read_bytes()
    expected = len(channels) * n_samples * PAYLOAD_DTYPE.itemsize
    if len(data) != expected:
        raise SizeMismatchError(
            f"{payload_path}: payload has {len(data)} bytes, manifest implies {expected}")
    samples = np.frombuffer(data, dtype=PAYLOAD_DTYPE).reshape(len(channels), n_samples)

    try:
        spans = [EventSpan(o, d, lab) for o, d, lab in events]
        return Recording(subject_id=subject, session_id=session, sample_rate_hz=rate,
                         channel_names=channels, samples=samples.astype(np.float64), events=spans)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_recording(rec: Recording, path) -> Path:
    """Write ``rec`` as ``<path>`` (manifest) plus ``<stem>.bin`` (payload).

    Returns the payload path.
    """
    path = Path(path)
    payload_path = path.with_suffix(".bin")
    manifest = {
        "subject_id": rec.subject_id,
        "session_id": rec.session_id,
        "sample_rate_hz": rec.sample_rate_hz,
        "channel_names": list(rec.channel_names),
        "n_samples": rec.n_samples,
        "payload": payload_path.name,
        "events": [{"onset_sample": e.onset_sample, "duration_samples": e.duration_samples,
                    "label": e.label} for e in rec.events],
    }
    payload_path.write_bytes(np.ascontiguousarray(rec.samples, dtype=PAYLOAD_DTYPE).tobytes())
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return payload_path


def _record_row(rec: EvalRecord) -> dict:
    return {col: getattr(rec, attr) for col, attr in RESULT_COLUMNS.items()}


def write_results(records, path, format: str = "csv") -> None:
    """Persist evaluation records as CSV or as a JSON array of flat objects."""
    records = list(records)
    if not records:
        raise ValueError("write_results needs at least one record")
    path = Path(path)
    rows = [_record_row(r) for r in records]
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(RESULT_COLUMNS), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    elif format == "json":
        path.write_text(json.dumps(rows, indent=1) + "\n")
    else:
        raise ValueError(f"unknown results format {format!r}")


def _coerce_row(row: dict, where: str) -> EvalRecord:
    missing = [c for c in RESULT_COLUMNS if c not in row]
    if missing:
        raise FormatError(f"{where}: missing columns {missing}")
    kw = {}
    for col, attr in RESULT_COLUMNS.items():
        val = row[col]
        try:
            if attr in _INT_FIELDS:
                kw[attr] = int(val)
            elif attr in _FLOAT_FIELDS:
                kw[attr] = float(val)
                if not math.isfinite(kw[attr]):
                    raise ValueError
            else:
                kw[attr] = str(val)
        except (TypeError, ValueError):
            raise FormatError(f"{where}: bad value {val!r} in column {col!r}") from None
    try:
        return EvalRecord(**kw)
    except ValidationError as exc:
        raise FormatError(f"{where}: {exc}") from None


def read_results(path) -> list[EvalRecord]:
    """Read a results file written by :func:`write_results` (format from suffix)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            rows = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(rows, list) or not all(isinstance(r, dict) for r in rows):
            raise FormatError(f"{path}: expected a JSON array of objects")
    else:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or list(reader.fieldnames) != list(RESULT_COLUMNS):
                raise FormatError(f"{path}: header does not match the results schema")
            rows = list(reader)
    return [_coerce_row(r, f"{path} row {i}") for i, r in enumerate(rows)]
