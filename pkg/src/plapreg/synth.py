"""Deterministic synthetic datasets for testing the full pipeline.

Stands in for real measurement data: features come from Gaussian blobs or a
noisy one-dimensional curve, targets from a linear combination or a smooth
nonlinear map of the features, plus optional Gaussian noise.  A synthetic
binary "gender" column supports the dataset-filter pathway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import FeatureTable

TARGET_COLUMN = "target"
GENDER_COLUMN = "gender"


@dataclass(frozen=True)
class GaussianBlobs:
    """Isotropic Gaussian clusters; ``centers`` is either a (c, dim) array of
    explicit centers or a count of randomly placed ones."""

    centers: int | np.ndarray = 3
    spread: float = 1.0


@dataclass(frozen=True)
class ManifoldCurve:
    """Points along a smooth closed curve embedded in the ambient space."""

    ambient_noise: float = 0.05


@dataclass(frozen=True)
class LinearCombo:
    weights: np.ndarray | None = None  # None -> all-ones / dim


@dataclass(frozen=True)
class SmoothNonlinear:
    """target = ||x||^2 / dim + sin(x_0); Lipschitz on the sampled domain."""


@dataclass(frozen=True)
class SynthSpec:
    n: int = 500
    dim: int = 10
    structure: GaussianBlobs | ManifoldCurve = GaussianBlobs()
    target_fn: LinearCombo | SmoothNonlinear = SmoothNonlinear()
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.dim < 1:
            raise ValueError(f"need n >= 1 and dim >= 1, got n={self.n}, dim={self.dim}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be nonnegative, got {self.noise_sd}")


def _blob_features(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    s = spec.structure
    if isinstance(s.centers, (int, np.integer)):
        centers = rng.normal(scale=3.0, size=(int(s.centers), spec.dim))
    else:
        centers = np.asarray(s.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != spec.dim:
            raise ValueError(f"explicit centers must have shape (c, {spec.dim}), got {centers.shape}")
    which = rng.integers(0, centers.shape[0], size=spec.n)
    return centers[which] + rng.normal(scale=s.spread, size=(spec.n, spec.dim))


def _curve_features(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    t = rng.uniform(0.0, 2.0 * np.pi, size=spec.n)
    phases = np.linspace(0.0, np.pi, spec.dim)
    freqs = 1.0 + np.arange(spec.dim) * 0.5
    X = np.sin(np.outer(t, freqs) + phases)
    return X + rng.normal(scale=spec.structure.ambient_noise, size=X.shape)


def _target(spec: SynthSpec, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec.target_fn, LinearCombo):
        w = spec.target_fn.weights
        w = np.ones(spec.dim) / spec.dim if w is None else np.asarray(w, dtype=float)
        if w.shape != (spec.dim,):
            raise ValueError(f"weights must have shape ({spec.dim},), got {w.shape}")
        y = X @ w
    else:
        y = (X**2).sum(axis=1) / spec.dim + np.sin(X[:, 0])
    if spec.noise_sd > 0:
        y = y + rng.normal(scale=spec.noise_sd, size=spec.n)
    return y


def generate(spec: SynthSpec) -> FeatureTable:
    """Generate a FeatureTable deterministically from the spec's seed."""
    rng = np.random.default_rng(spec.seed)
    if isinstance(spec.structure, GaussianBlobs):
        X = _blob_features(spec, rng)
    elif isinstance(spec.structure, ManifoldCurve):
        X = _curve_features(spec, rng)
    else:
        raise TypeError(f"unknown structure {type(spec.structure).__name__}")
    y = _target(spec, X, rng)
    gender = np.asarray(rng.choice(["M", "F"], size=spec.n), dtype=object)
    names = [f"f{j:02d}" for j in range(spec.dim)]
    return FeatureTable(
        column_names=names,
        rows=X,
        targets={TARGET_COLUMN: y},
        categorical={GENDER_COLUMN: gender},
    )
