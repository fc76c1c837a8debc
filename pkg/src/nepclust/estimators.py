"""scikit-learn style clusterers wrapping the pipeline."""
import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .features import FeatureSet, normalize
from .pipeline import PipelineConfig, cluster_es, cluster_eser, knn_stage, train_on
from .recall import LogisticLinkagePredictor


class FCES(BaseEstimator, ClusterMixin):
    """Unsupervised clustering: KNN graph, neighbor-based edge probabilities,
    early stopping, map equation.

    Rows of ``X`` are L2-normalized before use. After ``fit``: ``labels_``,
    ``codelength_``, ``knn_graph_``, ``nep_graph_`` and ``edges_``.
    """

    def __init__(self, k=80, tau=0.5, theta=0.22, merge_rule="mean", nep_literal=False, n_jobs=1):
        self.k = k
        self.tau = tau
        self.theta = theta
        self.merge_rule = merge_rule
        self.nep_literal = nep_literal
        self.n_jobs = n_jobs

    def _config(self, **extra):
        return PipelineConfig(
            k=self.k,
            tau=self.tau,
            theta=self.theta,
            merge_rule=self.merge_rule,
            nep_literal=self.nep_literal,
            threads=self.n_jobs,
            **extra,
        )

    def _prepare(self, X, cfg):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        fs = normalize(FeatureSet(X))
        return knn_stage(fs, cfg)

    def _store(self, result, knn):
        self.labels_ = result.partition.labels
        self.codelength_ = result.partition.codelength
        self.knn_graph_ = knn
        self.nep_graph_ = result.nep
        self.edges_ = result.des
        self.timings_ = result.timings

    def fit(self, X, y=None):
        cfg = self._config().validate()
        knn = self._prepare(X, cfg)
        self._store(cluster_es(knn, cfg), knn)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self


class FCESER(FCES):
    """FC-ES plus edge recall through a trained linkage predictor.

    ``predictor`` is any fitted classifier with ``predict_proba`` over the
    pairwise edge features; use :meth:`fit_predictor` to train the default
    logistic model on a labeled training set.
    """

    def __init__(
        self,
        k=80,
        tau=0.5,
        theta=0.22,
        delta=0.12,
        eta=0.60,
        predictor=None,
        recall_on_similarity=False,
        merge_rule="mean",
        nep_literal=False,
        n_jobs=1,
    ):
        super().__init__(k=k, tau=tau, theta=theta, merge_rule=merge_rule, nep_literal=nep_literal, n_jobs=n_jobs)
        self.delta = delta
        self.eta = eta
        self.predictor = predictor
        self.recall_on_similarity = recall_on_similarity

    def _config(self, **extra):
        return super()._config(
            delta=self.delta, eta=self.eta, recall_on_similarity=self.recall_on_similarity, mode="eser", model="<in-memory>", **extra
        )

    def fit_predictor(self, X_train, y_train, epochs=2000, learning_rate=0.5, seed=0):
        """Train a :class:`LogisticLinkagePredictor` on recall candidates of ``X_train``."""
        cfg = self._config(epochs=epochs, learning_rate=learning_rate, seed=seed).validate()
        X_train = check_array(X_train, dtype=np.float64, ensure_min_samples=2)
        fs = normalize(FeatureSet(X_train))
        self.predictor = train_on(fs, np.asarray(y_train), cfg)
        return self

    def fit(self, X, y=None):
        if self.predictor is None:
            raise ValueError("FCESER needs a predictor; pass one or call fit_predictor first")
        if isinstance(self.predictor, LogisticLinkagePredictor):
            check_is_fitted(self.predictor, "coef_")
        cfg = self._config().validate()
        knn = self._prepare(X, cfg)
        result = cluster_eser(knn, cfg, self.predictor)
        self._store(result, knn)
        self.recall_candidates_ = result.candidates
        self.recalled_edges_ = result.accepted
        self.n_features_in_ = np.asarray(X).shape[1]
        return self
