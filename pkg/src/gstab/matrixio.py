"""Matrix, label, and report file I/O.

Matrices travel either as plain CSV (optional header row, '.' decimals) or as
a compact binary format: magic ``GSTB``, version u16 LE, flags u16 LE, then
n and d as u64 LE followed by n*d float64 values in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InputFormatError

BINARY_MAGIC = b"GSTB"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sHHQQ")

TOOL_VERSION = "0.1.0"


def write_matrix_binary(path, x: np.ndarray) -> None:
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if x.ndim != 2:
        raise InputFormatError("binary matrix files store 2-D matrices")
    n, d = x.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, 0, n, d))
        fh.write(x.astype("<f8").tobytes())


def write_matrix_csv(path, x: np.ndarray, header: list[str] | None = None) -> None:
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in x:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _read_binary(data: bytes, path) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise InputFormatError(f"{path}: truncated binary header")
    magic, version, _flags, n, d = _HEADER.unpack_from(data)
    if magic != BINARY_MAGIC:
        raise InputFormatError(f"{path}: bad magic")
    if version != BINARY_VERSION:
        raise InputFormatError(f"{path}: unsupported binary version {version}")
    expected = _HEADER.size + 8 * n * d
    if len(data) != expected:
        raise InputFormatError(
            f"{path}: expected {expected} bytes for a {n}x{d} matrix, got {len(data)}"
        )
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, d).copy()


def _parse_csv(text: str, path) -> tuple[np.ndarray, list[str] | None]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputFormatError(f"{path}: empty CSV")
    first = [f.strip() for f in lines[0].split(",")]
    header = None
    try:
        [float(f) for f in first]
        start = 0
    except ValueError:
        header = first
        start = 1
    rows = []
    width = None
    for ln in lines[start:]:
        fields = [f.strip() for f in ln.split(",")]
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise InputFormatError(f"{path}: ragged CSV row: {ln!r}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise InputFormatError(f"{path}: non-numeric value: {exc}") from exc
    if not rows:
        raise InputFormatError(f"{path}: CSV has a header but no data rows")
    if header is not None and len(header) != width:
        raise InputFormatError(f"{path}: header width differs from data width")
    return np.asarray(rows, dtype=np.float64), header


def read_matrix(path) -> np.ndarray:
    x, _ = read_matrix_with_header(path)
    return x


def read_matrix_with_header(path) -> tuple[np.ndarray, list[str] | None]:
    """Read a matrix file, auto-detecting binary vs CSV (with optional header)."""
    data = Path(path).read_bytes()
    if data[:4] == BINARY_MAGIC:
        return _read_binary(data, path), None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputFormatError(f"{path}: neither binary matrix nor UTF-8 CSV") from exc
    return _parse_csv(text, path)


def read_labels(path) -> np.ndarray:
    """Read a single-column CSV of integer labels (optional header row)."""
    x, _ = read_matrix_with_header(path)
    if x.shape[1] != 1:
        raise InputFormatError(f"{path}: label files must have exactly one column")
    col = x[:, 0]
    if np.any(col != np.round(col)):
        raise InputFormatError(f"{path}: labels must be integers")
    return col.astype(np.int64)


def split_label_column(
    x: np.ndarray, header: list[str] | None, label_col: str
) -> tuple[np.ndarray, np.ndarray]:
    """Extract a named label column from a CSV matrix, returning (matrix, labels)."""
    if header is None:
        raise InputFormatError("--label-col requires a CSV header row")
    if label_col not in header:
        raise InputFormatError(f"no column named {label_col!r} in header {header}")
    idx = header.index(label_col)
    col = x[:, idx]
    if np.any(col != np.round(col)):
        raise InputFormatError(f"label column {label_col!r} must hold integers")
    rest = np.delete(x, idx, axis=1)
    return rest, col.astype(np.int64)


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def build_report(command, seed, params, results, warnings=()) -> dict:
    """Assemble a report document; floats keep full round-trip precision."""
    return _jsonable(
        {
            "tool_version": TOOL_VERSION,
            "command": list(command),
            "seed": int(seed),
            "params": params,
            "results": list(results),
            "warnings": list(warnings),
        }
    )


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def write_report(path, report: dict) -> None:
    Path(path).write_text(dump_report(report), encoding="utf-8")


def report_schema_path() -> Path:
    return Path(__file__).with_name("report_schema.json")


def load_report_schema() -> dict:
    return json.loads(report_schema_path().read_text(encoding="utf-8"))
