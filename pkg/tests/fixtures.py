"""Hand-built graphs for trace-level tests."""
import numpy as np

from nepclust.knn import KnnGraph
from nepclust.nep import NepGraph


def ring_neighbors(n, k):
    return np.array([[(i + 1 + r) % n for r in range(k)] for i in range(n)])


def nep_from_rows(p_tilde, sims=None):
    """NepGraph whose p_tilde rows are given; node i lists i+1, i+2, ... (mod n)."""
    pt = np.atleast_2d(np.asarray(p_tilde, dtype=float))
    k = pt.shape[1]
    n = max(pt.shape[0], k + 1)
    full = np.zeros((n, k))
    full[: pt.shape[0]] = pt
    if sims is None:
        sims = np.tile(np.linspace(0.9, 0.5, k), (n, 1))
    knn = KnnGraph(ring_neighbors(n, k), np.asarray(sims, dtype=float))
    p_hat = np.full((n, k), 1.0 / k)
    return NepGraph(knn, 0.5, p_hat, full)
