"""Randomization calibration against matched-shape Gaussian null data.

The observed projection content of a dataset is judged by comparison with
the Monte-Carlo expectation for a dataset of identical shape filled with
independent standard normal values (variance-normalized when the observed
pipeline was). The asymptotic upper eigenvalue edge (1 + sqrt(gamma))^2 of
the white-noise sample covariance is exposed as a reference value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .preprocess import standardize_variables
from .svd import compute_dual_svd, normalize_index_set, projection_content


@dataclass(frozen=True)
class NullSpec:
    """Shape and sampling configuration of the Gaussian null."""

    p: int
    n: int
    standardized: bool = True
    trials: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ValidationError("null dimensions must be >= 1")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")


def gaussian_dataset(spec: NullSpec, trial=None) -> Dataset:
    """A p x N dataset of independent standard normals, deterministic in seed.

    ``trial`` derives an independent per-trial stream from (seed, trial).
    """
    key = spec.seed if trial is None else [spec.seed, trial]
    rng = np.random.default_rng(key)
    values = rng.standard_normal((spec.p, spec.n))
    return Dataset(
        values,
        np.zeros_like(values, dtype=bool),
        tuple(f"v{i+1}" for i in range(spec.p)),
        tuple(f"s{i+1}" for i in range(spec.n)),
    )


def _null_alpha2(spec: NullSpec, components, trial) -> float:
    x = gaussian_dataset(spec, trial).values
    if spec.standardized:
        x, _ = standardize_variables(x)
    svd = compute_dual_svd(x)
    used = [i for i in components if i <= svd.rank]
    if not used:
        raise ValidationError(
            f"component subset {components} exceeds achievable rank {svd.rank}"
        )
    return projection_content(svd, used)


def expected_projection_content(spec: NullSpec, components):
    """(mean, sd) of the null projection content over the configured trials."""
    s = normalize_index_set(components, min(spec.p, spec.n))
    values = np.array([_null_alpha2(spec, s, t) for t in range(spec.trials)])
    sd = float(values.std(ddof=1)) if spec.trials > 1 else 0.0
    return float(values.mean()), sd


def signal_noise_ratio(observed_alpha2, null_alpha2) -> float:
    """Observed projection content over its null expectation."""
    if null_alpha2 <= 0.0:
        raise ValidationError("null projection content must be positive")
    return float(observed_alpha2) / float(null_alpha2)


def largest_eigenvalue_edge(gamma) -> float:
    """Asymptotic largest sample-covariance eigenvalue for p/N -> gamma."""
    if gamma <= 0.0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    return float((1.0 + np.sqrt(gamma)) ** 2)


def largest_covariance_eigenvalue(values) -> float:
    """Largest eigenvalue of the p x p sample covariance, via the N x N side."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValidationError("need a 2-D matrix with at least two samples")
    y = x - x.mean(axis=1, keepdims=True)
    n = x.shape[1]
    gram = (y.T @ y) / (n - 1)
    return float(np.linalg.eigvalsh(gram)[-1])
