"""Exact cosine K-nearest-neighbor graphs."""
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import FormatError, ParameterError

KNN_MAGIC = b"NKNN"
KNN_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class KnnGraph:
    """Top-``k`` neighbors per node, most similar first.

    ``sims`` holds float32-representable values (stored as float64) so the
    binary cache round-trips exactly. Neighbors are ranked on those rounded
    values, so equal stored similarities always appear in index order.
    """

    neighbors: np.ndarray
    sims: np.ndarray

    def __post_init__(self):
        nbrs = np.ascontiguousarray(self.neighbors, dtype=np.int64)
        sims = np.ascontiguousarray(self.sims, dtype=np.float64)
        if nbrs.ndim != 2 or nbrs.shape != sims.shape:
            raise ParameterError(f"neighbors {nbrs.shape} and sims {sims.shape} must be matching n x k arrays")
        nbrs.setflags(write=False)
        sims.setflags(write=False)
        object.__setattr__(self, "neighbors", nbrs)
        object.__setattr__(self, "sims", sims)

    @property
    def n(self):
        return self.neighbors.shape[0]

    @property
    def k(self):
        return self.neighbors.shape[1]

    def __eq__(self, other):
        if not isinstance(other, KnnGraph):
            return NotImplemented
        return np.array_equal(self.neighbors, other.neighbors) and np.array_equal(self.sims, other.sims)

    __hash__ = None


def cosine_similarity(i, j, fs):
    n = fs.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node index out of range for n={n}: ({i}, {j})")
    return float(np.dot(fs.data[i], fs.data[j]))


def _topk_rows(S, k):
    """Indices of the k largest entries per row; ties go to the lower index."""
    b = S.shape[0]
    part = np.argpartition(-S, k - 1, axis=1)[:, :k]
    kth = np.take_along_axis(S, part, axis=1).min(axis=1)
    n_ge = (S >= kth[:, None]).sum(axis=1)
    out = np.empty((b, k), dtype=np.int64)
    for r in range(b):
        if n_ge[r] == k:
            cand = part[r]
        else:
            # boundary ties: keep everything strictly above, then lowest indices at the boundary
            above = np.flatnonzero(S[r] > kth[r])
            at = np.flatnonzero(S[r] == kth[r])
            cand = np.concatenate([above, at[: k - above.size]])
        vals = S[r, cand]
        out[r] = cand[np.lexsort((cand, -vals))]
    return out


def build_knn(fs, k, block_size=1024, n_jobs=1):
    """Brute-force KNN under cosine similarity, excluding each node itself.

    ``fs`` must be normalized. Similarities are rounded to float32 before
    ranking: mathematically tied pairs can differ in the last float64 bit
    depending on how the product was evaluated, and rounding first keeps
    the tie-break by index stable. The result does not depend on
    ``block_size`` or ``n_jobs``.
    """
    n = fs.n
    k = int(k)
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must satisfy 1 <= k <= n-1 (n={n}), got {k}")
    X = fs.data
    neighbors = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k), dtype=np.float64)

    def run_block(start):
        stop = min(start + block_size, n)
        S = X[start:stop] @ X.T
        np.clip(S, -1.0, 1.0, out=S)
        S = S.astype(np.float32).astype(np.float64)
        S[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        idx = _topk_rows(S, k)
        neighbors[start:stop] = idx
        sims[start:stop] = np.take_along_axis(S, idx, axis=1)

    starts = range(0, n, block_size)
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run_block, starts))
    else:
        for s in starts:
            run_block(s)
    return KnnGraph(neighbors, sims)


def save_knn(g, path):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(KNN_MAGIC, KNN_VERSION, g.n, g.k))
        fh.write(g.neighbors.astype("<i4").tobytes())
        fh.write(g.sims.astype("<f4").tobytes())


def load_knn(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, k = _HEADER.unpack_from(blob)
    if magic != KNN_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != KNN_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    body = n * k * 4
    if len(blob) != _HEADER.size + 2 * body:
        raise FormatError(f"{path}: expected {_HEADER.size + 2 * body} bytes, found {len(blob)}")
    off = _HEADER.size
    nbrs = np.frombuffer(blob, dtype="<i4", count=n * k, offset=off).reshape(n, k)
    sims = np.frombuffer(blob, dtype="<f4", count=n * k, offset=off + body).reshape(n, k)
    if n and (nbrs.min() < 0 or nbrs.max() >= n):
        raise FormatError(f"{path}: neighbor index out of range")
    return KnnGraph(nbrs.astype(np.int64), sims.astype(np.float64))
