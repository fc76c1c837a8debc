"""Feature and label files.

Features live in a flat little-endian float32 file (``features.bin``) with a
JSON sidecar (``features.json``) carrying ``{"n": ..., "d": ...}``. Labels are
plain text, one integer per line.
"""
import json
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, DegenerateInputError, DimensionError, LabelParseError

NORM_TOL = 1e-6


@dataclass(frozen=True)
class FeatureSet:
    """``n`` row vectors of dimension ``d``; ``data`` is float64, row-major."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionError(f"feature matrix must be n x d with n, d >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DataError("feature matrix contains NaN or Inf")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]


def sidecar_path(path):
    root, _ = os.path.splitext(str(path))
    return root + ".json"


def read_sidecar(path):
    side = sidecar_path(path)
    if not os.path.exists(side):
        return None, None
    with open(side, encoding="utf-8") as fh:
        meta = json.load(fh)
    return meta.get("n"), meta.get("d")


def load_features(path, n=None, d=None):
    """Read a raw float32 feature file.

    ``n`` and ``d`` override the JSON sidecar next to ``path``.
    """
    side_n, side_d = read_sidecar(path)
    n = side_n if n is None else n
    d = side_d if d is None else d
    if n is None or d is None:
        raise DimensionError(f"{path}: n and d must be given or present in {sidecar_path(path)}")
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise DimensionError(f"n and d must be >= 1, got n={n}, d={d}")
    size = os.path.getsize(path)
    if size != 4 * n * d:
        raise DimensionError(f"{path}: expected {4 * n * d} bytes for n={n}, d={d}, found {size}")
    raw = np.fromfile(path, dtype="<f4").reshape(n, d)
    if not np.all(np.isfinite(raw)):
        bad = int(np.argwhere(~np.isfinite(raw))[0, 0])
        raise DataError(f"{path}: non-finite value in row {bad}")
    return FeatureSet(raw.astype(np.float64))


def save_features(fs, path):
    """Write ``fs`` as float32 plus its sidecar."""
    np.asarray(fs.data, dtype="<f4").tofile(path)
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump({"n": fs.n, "d": fs.d}, fh)


def normalize(fs):
    norms = np.linalg.norm(fs.data, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DegenerateInputError(f"row {int(zero[0])} has zero norm")
    return FeatureSet(fs.data / norms[:, None], normalized=True)


def check_normalized(fs, tol=NORM_TOL):
    norms = np.linalg.norm(fs.data, axis=1)
    return bool(np.all(np.abs(norms - 1.0) <= tol))


def load_labels(path):
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            try:
                value = int(text)
            except ValueError:
                raise LabelParseError(line_no, text) from None
            if value < 0:
                raise LabelParseError(line_no, text)
            labels.append(value)
    return np.asarray(labels, dtype=np.int64)


def save_labels(labels, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)
