"""Feature files (CSV and NHUB binary), loss traces and result tables.

CSV feature files carry ``#``-prefixed comment lines, a header
``f0,...,f{k-1},label`` and one row per sample; label -1 marks an unlabeled
row. Floats use the shortest representation that round-trips exactly.

The binary layout is little-endian::

    b"NHUB" | version u16 | n u64 | k u64 | has_labels u8
    | n*k float64 (row-major) | n int64 labels (if has_labels)

Binary files have no comment field; comments go to a ``<path>.json`` sidecar.
"""
import csv
import json
import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

MAGIC = b"NHUB"
VERSION = 1
_HEADER = struct.Struct("<4sHQQB")
BINARY_SUFFIXES = (".bin", ".nhub")


class FileFormatError(ValueError):
    """A feature or table file could not be parsed."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _is_binary(path: Path) -> bool:
    if path.suffix.lower() in BINARY_SUFFIXES:
        return True
    if path.exists():
        with open(path, "rb") as fh:
            return fh.read(4) == MAGIC
    return False


def write_features(path, X, labels=None, comments: Optional[dict] = None):
    path = Path(path)
    X = np.asarray(X, dtype=np.float64)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (X.shape[0],):
            raise ValueError("labels must have one entry per row")
    if _is_binary(path):
        _write_binary(path, X, labels)
        if comments:
            # stored as strings so both formats read back the same comments
            text = {str(k): str(v) for k, v in comments.items()}
            Path(str(path) + ".json").write_text(json.dumps(text, indent=2, sort_keys=True))
        return
    with open(path, "w", newline="") as fh:
        for key, value in (comments or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{j}" for j in range(X.shape[1])] + ["label"])
        lab = labels if labels is not None else np.full(X.shape[0], -1)
        for row, y in zip(X, lab):
            writer.writerow([_fmt(v) for v in row] + [int(y)])


def read_features(path):
    """Return ``(X, labels, comments)``; `labels` is None when absent."""
    path = Path(path)
    if _is_binary(path):
        X, labels = _read_binary(path)
        sidecar = Path(str(path) + ".json")
        comments = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        return X, labels, comments
    comments, rows, header = {}, [], None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                comments[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise FileFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from None
    if header is None:
        raise FileFormatError(f"{path}: no header line")
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    if header[-1] == "label":
        lab = data[:, -1]
        if not np.all(lab == np.round(lab)):
            raise FileFormatError(f"{path}: non-integer label values")
        return data[:, :-1], lab.astype(np.int64), comments
    return data, None, comments


def _write_binary(path: Path, X: np.ndarray, labels):
    n, k = X.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, k, int(labels is not None)))
        fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())
        if labels is not None:
            fh.write(np.ascontiguousarray(labels, dtype="<i8").tobytes())


def _read_binary(path: Path):
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FileFormatError(f"{path}: truncated header")
    magic, version, n, k, has_labels = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FileFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * n * k + (8 * n if has_labels else 0)
    if len(raw) != expected:
        raise FileFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    off = _HEADER.size
    X = np.frombuffer(raw, dtype="<f8", count=n * k, offset=off).reshape(n, k).astype(np.float64)
    labels = None
    if has_labels:
        labels = np.frombuffer(raw, dtype="<i8", count=n, offset=off + 8 * n * k).astype(np.int64)
    return X, labels


def write_trace(path, trace, comments: Optional[dict] = None):
    with open(path, "w", newline="") as fh:
        for key, value in (comments or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("iteration,lsp,unif,total\n")
        for t, (lsp, unif, total) in enumerate(np.asarray(trace), start=1):
            fh.write(f"{t},{_fmt(lsp)},{_fmt(unif)},{_fmt(total)}\n")


@dataclass
class ResultRow:
    method: str
    variant: str
    shots: int
    accuracy_mean: float
    accuracy_ci: float
    sk_mean: float
    ho_mean: float
    episodes: int
    seed: int


def write_result_table(path, rows, comments: Optional[dict] = None):
    names = [f.name for f in fields(ResultRow)]
    with open(path, "w", newline="") as fh:
        for key, value in (comments or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            values = asdict(row)
            writer.writerow([_fmt(values[k]) if isinstance(values[k], float) else values[k] for k in names])


def read_result_table(path):
    """Return ``(rows, comments)``."""
    comments, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                comments[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        rows.append(ResultRow(
            method=rec["method"], variant=rec["variant"], shots=int(rec["shots"]),
            accuracy_mean=float(rec["accuracy_mean"]), accuracy_ci=float(rec["accuracy_ci"]),
            sk_mean=float(rec["sk_mean"]), ho_mean=float(rec["ho_mean"]),
            episodes=int(rec["episodes"]), seed=int(rec["seed"]),
        ))
    return rows, comments
