"""Neighbor-based edge probabilities over a KNN graph.

Cosine similarity ``a`` becomes a squared distance ``2 - 2a``, then an edge
probability ``exp(-d / tau)``, normalized per node over its K neighbors to
give ``p_hat``. The neighbor-based probability ``p_tilde`` of a KNN edge
``(i, j)`` is the normalized mass the two endpoints put on their common
neighbors.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import ParameterError

DEFAULT_TAU = 0.5


def to_sq_l2(a):
    """Squared L2 distance between unit vectors with cosine ``a``."""
    return 2.0 - 2.0 * np.clip(a, -1.0, 1.0)


def edge_prob(d, tau=DEFAULT_TAU):
    if tau <= 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    return np.exp(-np.asarray(d, dtype=np.float64) / tau)


def normalize_probs(knn, tau=DEFAULT_TAU):
    """Row-normalized edge probabilities, aligned with ``knn`` rank order."""
    p = edge_prob(to_sq_l2(knn.sims), tau)
    return p / p.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class NepGraph:
    knn: object
    tau: float
    p_hat: np.ndarray
    p_tilde: np.ndarray
    literal: bool = False

    @property
    def n(self):
        return self.knn.n

    @property
    def k(self):
        return self.knn.k


def _rank_matrix(knn, values):
    """Sparse n x n matrix with ``values[i, r]`` at ``(i, neighbors[i, r])``."""
    n, k = knn.neighbors.shape
    rows = np.repeat(np.arange(n), k)
    return sp.csr_matrix((np.asarray(values, dtype=np.float64).ravel(), (rows, knn.neighbors.ravel())), shape=(n, n))


def _membership(knn):
    return _rank_matrix(knn, np.ones(knn.neighbors.shape))


def _pick(M, rows, cols):
    return np.asarray(M[rows, cols]).ravel()


def compute_all_nep(knn, tau=DEFAULT_TAU, literal=False):
    """Neighbor-based edge probability for every KNN edge.

    The common-neighbor sums for all edges come from two sparse products,
    ``P_hat @ B.T`` where ``B`` is the neighbor-membership indicator, so
    the cost is bounded by ``n * K**2`` nonzeros.

    With ``literal=False`` (default) the second endpoint contributes its own
    outgoing ``p_hat[j, h]``; both normalizers equal 1 and
    ``p_tilde = (sum_M p_hat[i,h] + sum_M p_hat[j,h]) / 2``.
    With ``literal=True`` the second term is ``p[h,j] / s_h`` (mass from ``h``
    toward ``j``, normalized by ``h``'s own sum) and the denominator becomes
    ``1 + sum_{h in N_j} p[h,j] / s_h``. Cosine is symmetric, so ``p[h,j]``
    equals the stored ``p[j,h]`` and no features are needed.
    """
    if tau <= 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    n, k = knn.neighbors.shape
    p = edge_prob(to_sq_l2(knn.sims), tau)
    s = p.sum(axis=1)
    p_hat = p / s[:, None]

    rows = np.repeat(np.arange(n), k)
    cols = knn.neighbors.ravel()
    B = _membership(knn)
    forward = (_rank_matrix(knn, p_hat) @ B.T).tocsr()
    from_i = _pick(forward, rows, cols)
    if literal:
        q = p / s[knn.neighbors]
        backward = (_rank_matrix(knn, q) @ B.T).tocsr()
        from_j = _pick(backward, cols, rows)
        denom = 1.0 + q.sum(axis=1)[cols]
    else:
        from_j = _pick(forward, cols, rows)
        denom = 2.0
    p_tilde = np.clip((from_i + from_j) / denom, 0.0, 1.0).reshape(n, k)
    return NepGraph(knn=knn, tau=float(tau), p_hat=p_hat, p_tilde=p_tilde, literal=bool(literal))


def neighbor_edge_prob(i, j, knn, p_hat, literal=False, tau=DEFAULT_TAU):
    """Scalar ``p_tilde`` for a single KNN edge ``j in N_i``; reference path."""
    row_i = knn.neighbors[i]
    hits = np.flatnonzero(row_i == j)
    if hits.size == 0:
        raise ParameterError(f"node {j} is not a neighbor of node {i}")
    row_j = knn.neighbors[j]
    common = np.intersect1d(row_i, row_j, assume_unique=True)
    mi = np.isin(row_i, common)
    mj = np.isin(row_j, common)
    num_i = p_hat[i, mi].sum()
    if not literal:
        return float(min(max((num_i + p_hat[j, mj].sum()) / 2.0, 0.0), 1.0))
    p = edge_prob(to_sq_l2(knn.sims), tau)
    s = p.sum(axis=1)
    q_j = p[j] / s[row_j]
    val = (num_i + q_j[mj].sum()) / (1.0 + q_j.sum())
    return float(min(max(val, 0.0), 1.0))


def dump_tsv(nep, path):
    """Debug dump: ``i, rank, j, a_ij, p_hat, p_tilde`` per KNN edge."""
    knn = nep.knn
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i\trank\tj\ta_ij\tp_hat\tp_tilde\n")
        for i in range(knn.n):
            for r in range(knn.k):
                fh.write(
                    f"{i}\t{r}\t{knn.neighbors[i, r]}\t{knn.sims[i, r]:.9g}\t"
                    f"{nep.p_hat[i, r]:.17g}\t{nep.p_tilde[i, r]:.17g}\n"
                )
