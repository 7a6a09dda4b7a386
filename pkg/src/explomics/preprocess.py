"""Matrix conditioning: centering, variance normalization and filtering.

All functions are pure and operate on plain p x N arrays (variables in rows).
Sample variance uses the N-1 denominator throughout. Each conditioning step
consumes degrees of freedom; the number consumed is reported so a session can
adjust downstream test statistics.
"""

from __future__ import annotations

import numpy as np

from .dataset import Factor
from .errors import ValidationError

#: degrees of freedom consumed per variable by plain or variance-normalizing
#: centering (one estimated mean)
CENTER_DOF = 1


def _as_matrix(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("expected a 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise ValidationError("matrix entries must be finite")
    return x


def center_samples(x) -> np.ndarray:
    """Subtract each variable's mean across samples (rows end up mean zero)."""
    x = _as_matrix(x)
    if x.shape[1] < 2:
        raise ValidationError("centering a single sample would annihilate the data")
    return x - x.mean(axis=1, keepdims=True)


def row_variances(x) -> np.ndarray:
    """Per-variable sample variance (N-1 denominator)."""
    x = _as_matrix(x)
    if x.shape[1] < 2:
        raise ValidationError("variance needs at least two samples")
    return x.var(axis=1, ddof=1)


def standardize_variables(x):
    """Scale every variable to mean 0, sample variance 1.

    Zero-variance variables cannot be scaled; they are dropped and their row
    indices returned alongside the reduced matrix.
    """
    x = _as_matrix(x)
    if x.shape[1] < 2:
        raise ValidationError("standardization needs at least two samples")
    variances = x.var(axis=1, ddof=1)
    dropped = np.nonzero(variances == 0.0)[0]
    if dropped.size == x.shape[0]:
        raise ValidationError("every variable has zero variance")
    kept = np.nonzero(variances != 0.0)[0]
    centered = x[kept] - x[kept].mean(axis=1, keepdims=True)
    return centered / np.sqrt(variances[kept])[:, None], dropped


def variance_filter(x, n: int):
    """Keep the n most variable rows; ties go to the lower index.

    Returns the filtered matrix and the kept row indices in original order.
    """
    x = _as_matrix(x)
    if n < 1:
        raise ValidationError(f"keep-count must be >= 1, got {n}")
    p = x.shape[0]
    if n >= p:
        return x.copy(), np.arange(p)
    variances = row_variances(x)
    # stable sort on descending variance preserves index order among ties
    order = np.argsort(-variances, kind="stable")[:n]
    kept = np.sort(order)
    return x[kept], kept


def group_mean_center(x, factor: Factor) -> np.ndarray:
    """Remove each factor level's mean from its samples, per variable."""
    x = _as_matrix(x)
    if factor.codes.shape[0] != x.shape[1]:
        raise ValidationError(
            f"factor {factor.name!r} covers {factor.codes.shape[0]} samples, "
            f"matrix has {x.shape[1]}"
        )
    out = x.copy()
    for code in range(len(factor.levels)):
        cols = factor.codes == code
        out[:, cols] -= out[:, cols].mean(axis=1, keepdims=True)
    return out


def group_center_dof(factor: Factor) -> int:
    """Degrees of freedom consumed by group mean-centering (one per level)."""
    return len(factor.levels)
