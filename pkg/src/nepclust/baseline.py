"""Threshold-connected-components baseline on the KNN graph."""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .metrics import evaluate


def threshold_components(knn, t):
    """Connect every KNN edge with cosine >= ``t``; clusters are the connected components."""
    ii, rr = np.nonzero(knn.sims >= t)
    A = sp.coo_matrix((np.ones(ii.size), (ii, knn.neighbors[ii, rr])), shape=(knn.n, knn.n))
    _, labels = connected_components(A, directed=False)
    return labels


def threshold_grid(knn, num=20):
    return np.linspace(knn.sims.min(), knn.sims.max(), num)


def best_threshold_components(knn, gt, num=20):
    """Best F_M over a ``num``-point threshold grid spanning the KNN similarities.

    Returns ``(threshold, labels, report)``. Uses ground truth, so it is an
    upper bound for the baseline rather than a deployable method.
    """
    best = None
    for t in threshold_grid(knn, num):
        labels = threshold_components(knn, t)
        rep = evaluate(labels, gt)
        if best is None or rep.f_mean > best[2].f_mean:
            best = (float(t), labels, rep)
    return best
