"""Clustering of unit-norm embeddings via neighbor-based edge probabilities,
early stopping, edge recall and map-equation partitioning."""
from .baseline import best_threshold_components, threshold_components
from .datagen import SynthConfig, gen_sphere_mixture
from .early_stop import EdgeSet, early_stop_edges, ending_position_stats
from .estimators import FCES, FCESER
from .features import FeatureSet, load_features, load_labels, normalize, save_features, save_labels
from .knn import KnnGraph, build_knn, load_knn, save_knn
from .mapequation import Partition, WeightedGraph, brute_force_optimize, build_transition, codelength, optimize
from .metrics import MetricsReport, bcubed_f, evaluate, pairwise_f
from .nep import NepGraph, compute_all_nep
from .pipeline import PROFILES, PipelineConfig
from .recall import LogisticLinkagePredictor, filter_by_eta, pairwise_features, predict_scores, recall_candidates

__version__ = "0.1.0"

__all__ = [
    "bcubed_f",
    "best_threshold_components",
    "brute_force_optimize",
    "build_knn",
    "build_transition",
    "codelength",
    "compute_all_nep",
    "early_stop_edges",
    "EdgeSet",
    "ending_position_stats",
    "evaluate",
    "FCES",
    "FCESER",
    "FeatureSet",
    "filter_by_eta",
    "gen_sphere_mixture",
    "KnnGraph",
    "load_features",
    "load_knn",
    "load_labels",
    "LogisticLinkagePredictor",
    "MetricsReport",
    "NepGraph",
    "normalize",
    "optimize",
    "pairwise_f",
    "pairwise_features",
    "Partition",
    "PipelineConfig",
    "predict_scores",
    "PROFILES",
    "recall_candidates",
    "save_features",
    "save_knn",
    "save_labels",
    "SynthConfig",
    "threshold_components",
    "WeightedGraph",
]
