"""Seeded synthetic labeled embeddings: Gaussian blobs around sphere centers."""
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ParameterError
from .features import FeatureSet

MAX_CENTER_ATTEMPTS = 100_000


@dataclass(frozen=True)
class SynthConfig:
    """``min_center_cosine_gap`` is the largest cosine allowed between two centers."""

    num_clusters: int = 50
    size_min: int = 5
    size_max: int = 100
    d: int = 64
    noise_sigma: float = 0.16
    min_center_cosine_gap: float = 0.3
    seed: int = 7

    def validate(self):
        if self.num_clusters < 1:
            raise ParameterError("num_clusters must be >= 1")
        if self.size_min < 1 or self.size_max < self.size_min:
            raise ParameterError("need 1 <= size_min <= size_max")
        if self.d < 2:
            raise ParameterError("d must be >= 2")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")

    def to_dict(self):
        return asdict(self)


def _unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def gen_sphere_mixture(cfg=SynthConfig()):
    """Return ``(FeatureSet, labels)``.

    Centers are uniform on the unit sphere, rejecting any whose cosine to an
    accepted center exceeds ``min_center_cosine_gap``. Each point is its
    center plus isotropic Gaussian noise, renormalized. Values are rounded to
    float32 so the in-memory set equals what the feature file stores.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    centers = []
    attempts = 0
    while len(centers) < cfg.num_clusters:
        if attempts >= MAX_CENTER_ATTEMPTS:
            raise ParameterError(
                f"placed only {len(centers)} of {cfg.num_clusters} centers in {MAX_CENTER_ATTEMPTS} attempts; "
                "use fewer clusters or a looser min_center_cosine_gap"
            )
        attempts += 1
        c = _unit(rng.standard_normal(cfg.d))
        if centers and np.max(np.asarray(centers) @ c) > cfg.min_center_cosine_gap:
            continue
        centers.append(c)
    centers = np.asarray(centers)
    sizes = rng.integers(cfg.size_min, cfg.size_max + 1, size=cfg.num_clusters)
    labels = np.repeat(np.arange(cfg.num_clusters), sizes)
    points = centers[labels] + cfg.noise_sigma * rng.standard_normal((labels.size, cfg.d))
    data = _unit(points).astype(np.float32).astype(np.float64)
    return FeatureSet(data, normalized=True), labels
