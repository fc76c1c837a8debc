"""Pairwise and BCubed precision/recall/F for clusterings.

Both are computed from the predicted x ground-truth contingency table, so the
cost is linear in the number of samples rather than in the number of pairs.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import DataError, DimensionError


def check_clusterings(pred, gt, min_size=1):
    pred = np.asarray(pred).ravel()
    gt = np.asarray(gt).ravel()
    if pred.shape != gt.shape:
        raise DimensionError(f"label arrays differ in length: {pred.size} vs {gt.size}")
    if pred.size < min_size:
        raise DataError(f"need at least {min_size} samples, got {pred.size}")
    return pred, gt


def _contingency(pred, gt):
    _, p = np.unique(pred, return_inverse=True)
    _, g = np.unique(gt, return_inverse=True)
    p, g = p.ravel(), g.ravel()
    cells, counts = np.unique(np.stack([p, g]), axis=1, return_counts=True)
    return cells[0], cells[1], counts.astype(np.float64), np.bincount(p).astype(np.float64), np.bincount(g).astype(np.float64)


def _f(precision, recall):
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def _pairs(x):
    return x * (x - 1) / 2


def pairwise_f(pred, gt):
    """Precision, recall and F over unordered sample pairs; 0/0 counts as 0."""
    pred, gt = check_clusterings(pred, gt, min_size=2)
    _, _, nij, a, b = _contingency(pred, gt)
    tp = _pairs(nij).sum()
    pred_pairs = _pairs(a).sum()
    gt_pairs = _pairs(b).sum()
    precision = tp / pred_pairs if pred_pairs else 0.0
    recall = tp / gt_pairs if gt_pairs else 0.0
    return float(precision), float(recall), float(_f(precision, recall))


def bcubed_f(pred, gt):
    """Per-sample averaged BCubed precision, recall and F."""
    pred, gt = check_clusterings(pred, gt)
    pi, gi, nij, a, b = _contingency(pred, gt)
    n = pred.size
    precision = float((nij**2 / a[pi]).sum() / n)
    recall = float((nij**2 / b[gi]).sum() / n)
    return precision, recall, float(_f(precision, recall))


def f_mean(f_pairwise, f_bcubed):
    return (f_pairwise + f_bcubed) / 2


@dataclass
class MetricsReport:
    pairwise: tuple
    bcubed: tuple
    f_mean: float

    def to_dict(self):
        d = asdict(self)
        d["pairwise"] = dict(zip(("precision", "recall", "f"), self.pairwise))
        d["bcubed"] = dict(zip(("precision", "recall", "f"), self.bcubed))
        return d

    def to_table(self):
        lines = [f"{'metric':<10}{'precision':>11}{'recall':>11}{'f':>11}"]
        for name, (p, r, f) in (("pairwise", self.pairwise), ("bcubed", self.bcubed)):
            lines.append(f"{name:<10}{p:>11.4f}{r:>11.4f}{f:>11.4f}")
        lines.append(f"{'F_M':<10}{'':>22}{self.f_mean:>11.4f}")
        return "\n".join(lines)


def evaluate(pred, gt):
    fp = pairwise_f(pred, gt)
    fb = bcubed_f(pred, gt)
    return MetricsReport(fp, fb, f_mean(fp[2], fb[2]))
