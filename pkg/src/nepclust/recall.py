"""Edge recall: post-stop candidates, a linkage predictor, and score filtering."""
import json
import logging
import warnings

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .early_stop import RECALL_ACCEPTED, RECALL_CANDIDATE, EdgeSet, stop_positions
from .exceptions import DegenerateInputError, FormatError, ParameterError

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("cosine", "p_tilde", "common_frac", "rank_frac", "p_hat", "mutual")


def recall_candidates(nep, theta, delta, recall_on_similarity=False):
    """Neighbors at or after each node's early-stopping position with score >= ``delta``.

    The scan does not break: every entry from the stop position to the end of
    the row is examined. With ``recall_on_similarity`` the ``delta`` test is
    applied to the cosine similarity instead of ``p_tilde``.
    """
    if delta > theta:
        warnings.warn(f"delta={delta} exceeds theta={theta}; recall candidates may overlap early-stop edges")
    pt = nep.p_tilde
    stop = stop_positions(pt, theta)
    after = np.arange(pt.shape[1])[None, :] >= stop[:, None]
    score = nep.knn.sims if recall_on_similarity else pt
    ii, rr = np.nonzero(after & (score >= delta))
    return EdgeSet(ii, nep.knn.neighbors[ii, rr], pt[ii, rr], RECALL_CANDIDATE, rank=rr)


def pairwise_features(nep, i, rank):
    """Feature rows for KNN edges ``(i, neighbors[i, rank])``.

    Columns follow :data:`FEATURE_NAMES`: cosine, p_tilde, common-neighbor
    count over K, rank over K, p_hat, and whether ``i`` is among ``j``'s
    neighbors.
    """
    knn = nep.knn
    n, k = knn.neighbors.shape
    i = np.asarray(i, dtype=np.int64)
    rank = np.asarray(rank, dtype=np.int64)
    if i.size == 0:
        return np.zeros((0, len(FEATURE_NAMES)))
    j = knn.neighbors[i, rank]
    rows = np.repeat(np.arange(n), k)
    B = sp.csr_matrix((np.ones(n * k), (rows, knn.neighbors.ravel())), shape=(n, n))
    common = np.asarray((B[i].multiply(B[j])).sum(axis=1)).ravel()
    mutual = np.asarray(B[j, i]).ravel()
    return np.column_stack(
        [
            knn.sims[i, rank],
            nep.p_tilde[i, rank],
            common / k,
            rank / k,
            nep.p_hat[i, rank],
            mutual,
        ]
    )


def edge_targets(edges, labels):
    labels = np.asarray(labels)
    return (labels[edges.i] == labels[edges.j]).astype(np.int64)


class LogisticLinkagePredictor(BaseEstimator, ClassifierMixin):
    """Logistic regression on pairwise edge features, fit by full-batch gradient descent.

    Parameters
    ----------
    learning_rate : float
        Fixed step size.
    epochs : int
        Number of full-batch steps.
    seed : int
        Seeds the small random weight initialization.
    init_scale : float
        Standard deviation of the initial weights.
    l2 : float
        Optional ridge penalty on the weights (not the bias).
    """

    def __init__(self, learning_rate=0.5, epochs=2000, seed=0, init_scale=0.01, l2=0.0, feature_names=FEATURE_NAMES):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed
        self.init_scale = init_scale
        self.l2 = l2
        self.feature_names = feature_names

    def loss(self, coef, intercept, X, y):
        z = X @ coef + intercept
        return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * self.l2 * coef @ coef)

    def gradient(self, coef, intercept, X, y):
        r = expit(X @ coef + intercept) - y
        return X.T @ r / X.shape[0] + self.l2 * coef, float(r.mean())

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if X.shape[1] != len(self.feature_names):
            raise ParameterError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise DegenerateInputError(
                "training candidates contain a single class; adjust theta/delta so both positive and negative pairs occur"
            )
        if not np.array_equal(self.classes_, [0, 1]):
            raise ParameterError(f"labels must be 0/1, got classes {self.classes_.tolist()}")
        y = y.astype(np.float64)
        rng = np.random.default_rng(self.seed)
        coef = rng.normal(0.0, self.init_scale, X.shape[1])
        intercept = 0.0
        curve = [self.loss(coef, intercept, X, y)]
        for _ in range(self.epochs):
            g_w, g_b = self.gradient(coef, intercept, X, y)
            coef = coef - self.learning_rate * g_w
            intercept = intercept - self.learning_rate * g_b
            curve.append(self.loss(coef, intercept, X, y))
        self.coef_ = coef
        self.intercept_ = intercept
        self.loss_curve_ = curve
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        s = expit(self.decision_function(X))
        return np.column_stack([1.0 - s, s])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int64)

    def to_dict(self):
        check_is_fitted(self, "coef_")
        return {
            "feature_names": list(self.feature_names),
            "weights": [float(v) for v in self.coef_],
            "bias": float(self.intercept_),
            "seed": self.seed,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "final_loss": self.loss_curve_[-1] if getattr(self, "loss_curve_", None) else None,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            m = cls(
                learning_rate=d.get("learning_rate", 0.5),
                epochs=d["epochs"],
                seed=d["seed"],
                l2=d.get("l2", 0.0),
                feature_names=tuple(d["feature_names"]),
            )
            m.coef_ = np.asarray(d["weights"], dtype=np.float64)
            m.intercept_ = float(d["bias"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad predictor model: {exc}") from exc
        if m.coef_.shape != (len(m.feature_names),) or not np.all(np.isfinite(m.coef_)):
            raise FormatError("predictor weights must be finite, one per feature")
        m.classes_ = np.array([0, 1])
        m.n_features_in_ = m.coef_.size
        m.loss_curve_ = []
        return m


def save_predictor(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def load_predictor(path):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return LogisticLinkagePredictor.from_dict(d)


def train_predictor(candidates, features, labels, learning_rate=0.5, epochs=2000, seed=0, l2=0.0):
    """Fit a :class:`LogisticLinkagePredictor` on candidate edges.

    An edge is a positive example when both endpoints share a ground-truth label.
    """
    if len(candidates) == 0:
        raise DegenerateInputError("no candidate edges to train on; lower delta or raise theta")
    y = edge_targets(candidates, labels)
    model = LogisticLinkagePredictor(learning_rate=learning_rate, epochs=epochs, seed=seed, l2=l2)
    model.fit(features, y)
    logger.info("trained linkage predictor on %d edges (%d positive), loss %.5f", len(y), int(y.sum()), model.loss_curve_[-1])
    return model


def predict_scores(model, candidates, features):
    """Connection score per candidate edge, in candidate order."""
    names = getattr(model, "feature_names", None)
    if names is not None and tuple(names) != FEATURE_NAMES:
        raise ParameterError(f"predictor feature schema {tuple(names)} does not match {FEATURE_NAMES}")
    if len(candidates) == 0:
        return EdgeSet(candidates.i, candidates.j, np.zeros(0), RECALL_CANDIDATE, rank=candidates.rank)
    scores = np.clip(model.predict_proba(features)[:, 1], 0.0, 1.0)
    return EdgeSet(candidates.i, candidates.j, scores, RECALL_CANDIDATE, rank=candidates.rank)


def filter_by_eta(scored, eta):
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must lie in [0, 1], got {eta}")
    keep = scored.w >= eta
    rank = scored.rank[keep] if scored.rank is not None else None
    return EdgeSet(scored.i[keep], scored.j[keep], scored.w[keep], RECALL_ACCEPTED, rank=rank)


def post_stop_positive_stats(nep, labels, theta):
    """Positive pairs among neighbors not connected by early stopping.

    Entries from the stop position to the end of each row count as post-stop.
    Returns the positive fraction among them and the mean number of positive
    post-stop entries per sample.
    """
    labels = np.asarray(labels)
    stop = stop_positions(nep.p_tilde, theta)
    after = np.arange(nep.k)[None, :] >= stop[:, None]
    ii, rr = np.nonzero(after)
    pos = labels[ii] == labels[nep.knn.neighbors[ii, rr]]
    total = int(ii.size)
    n_pos = int(pos.sum())
    return {
        "theta": float(theta),
        "post_stop_entries": total,
        "positive_entries": n_pos,
        "positive_fraction": n_pos / total if total else 0.0,
        "positives_per_sample": n_pos / nep.n,
        "nodes_with_stop": int(np.count_nonzero(stop < nep.k)),
    }
