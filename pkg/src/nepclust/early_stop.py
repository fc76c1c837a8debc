"""Early-stopping edge selection and ending-position diagnostics."""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError

EARLY_STOP = "early_stop"
RECALL_CANDIDATE = "recall_candidate"
RECALL_ACCEPTED = "recall_accepted"

STATS_MODES = ("raw_similarity", "sorted_nep", "unsorted_nep")


@dataclass
class EdgeSet:
    """Directed weighted edges ``i -> j``; ``rank`` is j's position in ``N_i`` when known."""

    i: np.ndarray
    j: np.ndarray
    w: np.ndarray
    kind: str
    rank: np.ndarray = field(default=None)

    def __post_init__(self):
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.rank is not None:
            self.rank = np.asarray(self.rank, dtype=np.int64)
        if not (self.i.shape == self.j.shape == self.w.shape):
            raise ParameterError("edge arrays must have equal length")

    def __len__(self):
        return self.i.size

    def pairs(self):
        return set(zip(self.i.tolist(), self.j.tolist()))

    @classmethod
    def empty(cls, kind):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, np.zeros(0), kind, rank=z)

    def to_tsv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for a, b, w in zip(self.i.tolist(), self.j.tolist(), self.w.tolist()):
                fh.write(f"{a}\t{b}\t{w!r}\n")


def stop_positions(values, threshold):
    """First rank per row whose value falls below ``threshold`` (K if none)."""
    below = values < threshold
    return np.where(below.any(axis=1), below.argmax(axis=1), values.shape[1])


def early_stop_edges(nep, theta):
    """Emit ``(i, j, p_tilde)`` along each neighbor list until the first ``p_tilde < theta``."""
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    pt = nep.p_tilde
    stop = stop_positions(pt, theta)
    keep = np.arange(pt.shape[1])[None, :] < stop[:, None]
    ii, rr = np.nonzero(keep)
    return EdgeSet(ii, nep.knn.neighbors[ii, rr], pt[ii, rr], EARLY_STOP, rank=rr)


def early_stop_edges_scan(nep, theta, on_read=None):
    """Row-by-row form of :func:`early_stop_edges`.

    ``on_read(i, r)`` is called for every ``p_tilde`` entry examined, which
    lets tests confirm nothing past a stop position is touched.
    """
    ei, ej, ew, er = [], [], [], []
    nbrs = nep.knn.neighbors
    for i in range(nep.n):
        for r in range(nep.k):
            if on_read is not None:
                on_read(i, r)
            v = nep.p_tilde[i, r]
            if v >= theta:
                ei.append(i)
                ej.append(int(nbrs[i, r]))
                ew.append(float(v))
                er.append(r)
            else:
                break
    return EdgeSet(ei, ej, ew, EARLY_STOP, rank=er)


@dataclass
class EndingStatsReport:
    mode: str
    threshold: float
    negative_fraction_at_ending: float
    num_endings: int
    num_negative: int
    num_nodes: int

    def to_dict(self):
        return {
            "mode": self.mode,
            "threshold": self.threshold,
            "negative_fraction_at_ending": self.negative_fraction_at_ending,
            "counts": {
                "endings": self.num_endings,
                "negative": self.num_negative,
                "nodes": self.num_nodes,
            },
        }


def ending_position_stats(nep, labels, mode, threshold):
    """Fraction of ending-position connections that join different identities.

    ``raw_similarity`` ends at the first cosine below ``threshold``;
    ``sorted_nep`` re-sorts each row by ``p_tilde`` first; ``unsorted_nep``
    uses the early-stopping position. Rows that never end are skipped.
    """
    if mode not in STATS_MODES:
        raise ParameterError(f"unknown stats mode {mode!r}; expected one of {STATS_MODES}")
    labels = np.asarray(labels)
    nbrs = nep.knn.neighbors
    if mode == "raw_similarity":
        values, order = nep.knn.sims, nbrs
    elif mode == "unsorted_nep":
        values, order = nep.p_tilde, nbrs
    else:
        perm = np.argsort(-nep.p_tilde, axis=1, kind="stable")
        values = np.take_along_axis(nep.p_tilde, perm, axis=1)
        order = np.take_along_axis(nbrs, perm, axis=1)
    stop = stop_positions(values, threshold)
    ended = np.flatnonzero(stop < values.shape[1])
    j_end = order[ended, stop[ended]]
    neg = int(np.count_nonzero(labels[ended] != labels[j_end]))
    frac = neg / ended.size if ended.size else 0.0
    return EndingStatsReport(mode, float(threshold), frac, int(ended.size), neg, int(nep.n))


def matched_similarity_threshold(knn, num_endings):
    """Cosine threshold at which exactly ``num_endings`` rows end (barring ties).

    A row ends under raw similarity iff its smallest kept similarity is below
    the threshold, so the threshold sits between consecutive row minima.
    """
    last = np.sort(knn.sims[:, -1])
    if num_endings <= 0:
        return float(last[0])
    if num_endings >= last.size:
        return float(np.nextafter(last[-1], np.inf))
    return float((last[num_endings - 1] + last[num_endings]) / 2)


def ending_stats_sweep(nep, labels, thresholds):
    """All three modes per threshold, plus raw similarity at matched coverage.

    ``raw_similarity_matched`` uses the cosine threshold that yields as many
    ending positions as early stopping does at that threshold; cosine and
    ``p_tilde`` live on different scales, so equal coverage is the fair
    comparison.
    """
    rows = []
    for t in thresholds:
        entry = {"threshold": float(t)}
        for mode in STATS_MODES:
            entry[mode] = ending_position_stats(nep, labels, mode, t).to_dict()
        t_raw = matched_similarity_threshold(nep.knn, entry["unsorted_nep"]["counts"]["endings"])
        entry["raw_similarity_matched"] = ending_position_stats(nep, labels, "raw_similarity", t_raw).to_dict()
        rows.append(entry)
    return rows
