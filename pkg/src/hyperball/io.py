"""CSV feature files, distance matrices and JSON report envelopes."""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


class FileFormatError(ValueError):
    """Malformed input file; ``row`` is 1-based when known."""

    def __init__(self, path, message, row=None):
        where = f"{path}:{row}" if row is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.row = row


def _parse_row(cells, path, lineno):
    out = []
    for cell in cells:
        try:
            v = float(cell)
        except ValueError:
            raise FileFormatError(path, f"non-numeric value {cell.strip()!r}", lineno) from None
        if not math.isfinite(v):
            raise FileFormatError(path, f"non-finite value {cell.strip()!r}", lineno)
        out.append(v)
    return out


def _read_rows(path):
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(x.strip() for x in r)]
    except OSError as exc:
        raise FileFormatError(path, exc.strerror or str(exc)) from None
    if not rows:
        raise FileFormatError(path, "file has no data rows")
    # header: first row is taken as a header when any cell is not a number
    first = rows[0][1]
    try:
        [float(x) for x in first]
    except ValueError:
        rows = rows[1:]
        if not rows:
            raise FileFormatError(path, "file has a header but no data rows")
    return path, rows


def read_feature_file(path, labeled=False):
    """Read a feature CSV.

    Returns ``(features, labels)``; ``labels`` is ``None`` unless
    ``labeled``, in which case column 0 holds integer labels.
    """
    path, rows = _read_rows(path)
    width = len(rows[0][1])
    values = []
    for lineno, cells in rows:
        if len(cells) != width:
            raise FileFormatError(path, f"expected {width} columns, found {len(cells)}", lineno)
        values.append(_parse_row(cells, path, lineno))
    arr = np.array(values, dtype=np.float64)
    if not labeled:
        return arr, None
    if width < 2:
        raise FileFormatError(path, "labelled file needs a label column and at least one feature")
    lab = arr[:, 0]
    bad = np.flatnonzero((lab != np.round(lab)) | (lab < 0))
    if bad.size:
        raise FileFormatError(path, f"label {lab[bad[0]]!r} is not a non-negative integer", rows[bad[0]][0])
    return arr[:, 1:], lab.astype(np.int64)


def read_distance_matrix(path):
    path, rows = _read_rows(path)
    n = len(rows)
    values = []
    for lineno, cells in rows:
        if len(cells) != n:
            raise FileFormatError(path, f"square matrix needs {n} columns, found {len(cells)}", lineno)
        values.append(_parse_row(cells, path, lineno))
    return np.array(values, dtype=np.float64)


def fmt(v):
    """17 significant digits, enough to round-trip any float64."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def write_features(path, features, labels=None):
    features = np.asarray(features)
    header = ([] if labels is None else ["label"]) + [f"x{i}" for i in range(features.shape[1])]
    if labels is None:
        rows = features.tolist()
    else:
        rows = [[int(l)] + list(r) for l, r in zip(labels, features.tolist())]
    return write_csv(path, header, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def envelope(command, seed, params, payload):
    return {
        "command": command,
        "seed": seed,
        "params": _jsonable(params),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "payload": _jsonable(payload),
    }


def dumps(obj):
    return json.dumps(obj, indent=2, allow_nan=False)
