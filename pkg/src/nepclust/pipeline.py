"""End-to-end FC-ES / FC-ESER runs and the configuration they share."""
import json
import logging
import time
import warnings
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields

import numpy as np

from .early_stop import EdgeSet, early_stop_edges
from .exceptions import ParameterError, StageError
from .knn import build_knn
from .mapequation import MERGE_RULES, build_transition, optimize
from .nep import compute_all_nep
from .recall import filter_by_eta, pairwise_features, predict_scores, recall_candidates, train_predictor

logger = logging.getLogger(__name__)

# (k, theta, delta, eta) per dataset profile; tau is 0.5 throughout.
PROFILES = {
    "ms1m": {"k": 80, "theta": 0.22, "delta": 0.12, "eta": 0.60},
    "msmt17": {"k": 40, "theta": 0.50, "delta": 0.20, "eta": 0.50},
    "veri776": {"k": 60, "theta": 0.30, "delta": 0.16, "eta": 0.50},
    "synthetic": {"k": 20, "theta": 0.22, "delta": 0.12, "eta": 0.50},
}


@dataclass
class PipelineConfig:
    k: int = 80
    tau: float = 0.5
    theta: float = 0.22
    delta: float = 0.12
    eta: float = 0.60
    mode: str = "es"
    merge_rule: str = "mean"
    nep_literal: bool = False
    recall_on_similarity: bool = False
    seed: int = 0
    threads: int = 1
    epochs: int = 2000
    learning_rate: float = 0.5
    features: str = None
    labels: str = None
    n: int = None
    d: int = None
    model: str = None
    train: str = None
    knn_cache: str = None
    out: str = None

    @classmethod
    def from_profile(cls, name, **overrides):
        if name not in PROFILES:
            raise ParameterError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
        return cls(**{**PROFILES[name], **overrides})

    @classmethod
    def from_file(cls, path, **overrides):
        """Flat key-value JSON; an optional ``profile`` key is applied first."""
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known - {"profile"}
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        base = dict(PROFILES[raw["profile"]]) if "profile" in raw else {}
        base.update({k: v for k, v in raw.items() if k != "profile"})
        base.update(overrides)
        return cls(**base)

    def validate(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.tau <= 0:
            raise ParameterError(f"tau must be > 0, got {self.tau}")
        for name in ("theta", "delta", "eta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.mode not in ("es", "eser"):
            raise ParameterError(f"mode must be 'es' or 'eser', got {self.mode!r}")
        if self.merge_rule not in MERGE_RULES:
            raise ParameterError(f"merge_rule must be one of {MERGE_RULES}")
        if self.mode == "eser" and not (self.model or self.train):
            raise ParameterError("eser mode needs a predictor model path or a training set")
        if self.delta > self.theta:
            warnings.warn(f"delta={self.delta} exceeds theta={self.theta}")
        return self

    def to_dict(self):
        return asdict(self)


@contextmanager
def stage(name, timings=None):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        elapsed = time.perf_counter() - start
        if timings is not None:
            timings[name] = elapsed
        logger.info("stage %s: %.3fs", name, elapsed)


def positive_edges(edges):
    """Drop zero-weight edges; they carry no flow."""
    keep = edges.w > 0
    rank = edges.rank[keep] if edges.rank is not None else None
    return EdgeSet(edges.i[keep], edges.j[keep], edges.w[keep], edges.kind, rank=rank)


@dataclass
class ClusterResult:
    partition: object
    nep: object
    des: EdgeSet
    candidates: EdgeSet = None
    accepted: EdgeSet = None
    timings: dict = None


def knn_stage(fs, cfg, timings=None):
    with stage("knn", timings):
        return build_knn(fs, cfg.k, n_jobs=cfg.threads)


def cluster_es(knn, cfg, timings=None):
    """Early-stopping edges weighted by ``p_tilde``, clustered by map equation."""
    timings = {} if timings is None else timings
    with stage("nep", timings):
        nep = compute_all_nep(knn, cfg.tau, literal=cfg.nep_literal)
    with stage("early_stop", timings):
        des = early_stop_edges(nep, cfg.theta)
        logger.info("early stop: %d edges", len(des))
    with stage("map_equation", timings):
        g = build_transition(positive_edges(des), None, knn.n, merge_rule=cfg.merge_rule)
        part = optimize(g)
        logger.info("map equation: %d clusters, L=%.6f", part.num_clusters, part.codelength)
    return ClusterResult(part, nep, des, timings=timings)


def recall_stage(nep, cfg, model, timings=None):
    with stage("recall", timings):
        cand = recall_candidates(nep, cfg.theta, cfg.delta, cfg.recall_on_similarity)
        feats = pairwise_features(nep, cand.i, cand.rank)
        scored = predict_scores(model, cand, feats)
        accepted = filter_by_eta(scored, cfg.eta)
        logger.info("recall: %d candidates, %d accepted", len(cand), len(accepted))
    return cand, accepted


def cluster_eser(knn, cfg, model, timings=None):
    """Early-stopping edges plus predictor-accepted recall edges."""
    timings = {} if timings is None else timings
    with stage("nep", timings):
        nep = compute_all_nep(knn, cfg.tau, literal=cfg.nep_literal)
    with stage("early_stop", timings):
        des = early_stop_edges(nep, cfg.theta)
    cand, accepted = recall_stage(nep, cfg, model, timings)
    with stage("map_equation", timings):
        g = build_transition(positive_edges(des), positive_edges(accepted), knn.n, merge_rule=cfg.merge_rule)
        part = optimize(g)
        logger.info("map equation: %d clusters, L=%.6f", part.num_clusters, part.codelength)
    return ClusterResult(part, nep, des, cand, accepted, timings)


def train_on(fs, labels, cfg, knn=None, timings=None):
    """Fit the linkage predictor on recall candidates of a labeled training set."""
    labels = np.asarray(labels)
    if labels.shape != (fs.n,):
        raise StageError("train", ParameterError(f"{labels.size} labels for {fs.n} samples"))
    if knn is None:
        knn = knn_stage(fs, cfg, timings)
    with stage("train", timings):
        nep = compute_all_nep(knn, cfg.tau, literal=cfg.nep_literal)
        cand = recall_candidates(nep, cfg.theta, cfg.delta, cfg.recall_on_similarity)
        feats = pairwise_features(nep, cand.i, cand.rank)
        return train_predictor(cand, feats, labels, learning_rate=cfg.learning_rate, epochs=cfg.epochs, seed=cfg.seed)
