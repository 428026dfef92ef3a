"""Reading and writing the canonical track-record files.

Two equivalent encodings, chosen by file suffix: CSV with a fixed header
(``.csv``) and JSON lines with the same field names (``.jsonl`` / ``.ndjson``).
Labeled files carry one extra trailing ``hit`` column. Reals are serialized
with ``repr`` (shortest round-trip form, always >= 9 significant digits when
needed); an unknown release year is an empty CSV cell / JSON null.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .dataset import FEATURE_COLUMNS, RECORD_COLUMNS, TrackRecord
from .errors import SchemaError, ValidationError

LABELED_COLUMNS: tuple[str, ...] = RECORD_COLUMNS + ("hit",)

_INT_FIELDS = {"popularity", "key", "mode", "duration_ms", "time_signature"}


def _is_jsonl(path: str | Path) -> bool:
    return Path(path).suffix.lower() in (".jsonl", ".ndjson")


def _format_cell(name: str, value) -> str:
    if name == "release_year":
        return "" if value is None else str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record_to_dict(record: TrackRecord) -> dict:
    return {name: getattr(record, name) for name in RECORD_COLUMNS}


def _parse_field(name: str, raw, *, path: str, line: int):
    try:
        if name in ("track_id", "title", "artist"):
            return str(raw)
        if name == "release_year":
            if raw is None or raw == "":
                return None
            return int(raw)
        if name in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except (TypeError, ValueError):
        raise SchemaError(f"bad value {raw!r} for column '{name}'", path=path, line=line) from None


def _row_to_record(row: dict, *, path: str, line: int) -> TrackRecord:
    kwargs = {name: _parse_field(name, row[name], path=path, line=line) for name in RECORD_COLUMNS}
    try:
        return TrackRecord(**kwargs)
    except ValidationError as exc:
        raise SchemaError(str(exc), path=path, line=line) from exc


def _check_header(header: list[str] | None, expected: tuple[str, ...], path: str) -> None:
    if header is None:
        raise SchemaError("file is empty (missing header row)", path=path, line=0)
    if tuple(header) != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        parts = []
        if missing:
            parts.append(f"missing column(s) {missing}")
        if extra:
            parts.append(f"unexpected column(s) {extra}")
        if not parts:
            parts.append("columns out of order")
        raise SchemaError("; ".join(parts), path=path, line=1)


def _atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_table(path: str | Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    if _is_jsonl(path):
        lines = [json.dumps({name: row[name] for name in columns}) for row in rows]
        _atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))
        return
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(name, row[name]) for name in columns])
    _atomic_write_text(path, buffer.getvalue())


def _read_table(path: str | Path, columns: tuple[str, ...]) -> list[tuple[int, dict]]:
    """Rows as (1-based line number, column dict), header validated."""
    spath = str(path)
    if _is_jsonl(path):
        out: list[tuple[int, dict]] = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"invalid JSON: {exc.msg}", path=spath, line=line_no) from exc
                missing = [c for c in columns if c not in obj]
                if missing:
                    raise SchemaError(f"missing column(s) {missing}", path=spath, line=line_no)
                out.append((line_no, obj))
        return out
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, columns, spath)
        out = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise SchemaError(
                    f"expected {len(columns)} cells, got {len(row)}", path=spath, line=line_no
                )
            out.append((line_no, dict(zip(columns, row))))
        return out


def save_records(records: list[TrackRecord], path: str | Path) -> None:
    _write_table(path, RECORD_COLUMNS, [_record_to_dict(r) for r in records])


def load_records(path: str | Path) -> list[TrackRecord]:
    rows = _read_table(path, RECORD_COLUMNS)
    return [_row_to_record(row, path=str(path), line=line_no) for line_no, row in rows]


def save_labeled(records: list[TrackRecord], labels, path: str | Path) -> None:
    labels = np.asarray(labels)
    if labels.shape != (len(records),):
        raise ValidationError("need exactly one label per record")
    rows = []
    for record, label in zip(records, labels):
        row = _record_to_dict(record)
        row["hit"] = int(label)
        rows.append(row)
    _write_table(path, LABELED_COLUMNS, rows)


def load_labeled(path: str | Path) -> tuple[list[TrackRecord], np.ndarray]:
    rows = _read_table(path, LABELED_COLUMNS)
    records = []
    labels = []
    for line_no, row in rows:
        records.append(_row_to_record(row, path=str(path), line=line_no))
        raw = row["hit"]
        try:
            label = int(raw)
        except (TypeError, ValueError):
            raise SchemaError(f"bad value {raw!r} for column 'hit'", path=str(path), line=line_no) from None
        if label not in (0, 1):
            raise SchemaError(f"hit must be 0 or 1, got {label}", path=str(path), line=line_no)
        labels.append(label)
    return records, np.asarray(labels, dtype=np.int64)


def feature_matrix(records: list[TrackRecord]) -> np.ndarray:
    """(n, 13) float64 matrix in the canonical column order."""
    return np.array([r.feature_vector() for r in records], dtype=np.float64).reshape(
        len(records), len(FEATURE_COLUMNS)
    )
