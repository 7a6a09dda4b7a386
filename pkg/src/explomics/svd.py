"""Dual singular value decomposition and the quantities built on it.

A decomposition is stored as paired orthonormal bases: ``sample_basis`` holds
the vectors u^k in R^N, ``variable_basis`` the vectors v^k in R^p, coupled by
X u^k = lambda_k v^k and X^T v^k = lambda_k u^k. Everything downstream
(synchronized biplot coordinates, component-subset approximations, projection
content, error norms) is a direct function of this system.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ValidationError

DEFAULT_RANK_TOL = 1e-12
ORTHONORMALITY_TOL = 1e-10
COUPLING_TOL = 1e-10

#: smallest singular-value ratio the Gram route can resolve: eigenvalues of
#: X^T X carry O(eps * lambda_1^2) rounding noise, so singular values below
#: about sqrt(eps) * lambda_1 are indistinguishable from zero
GRAM_RANK_FLOOR = 1e-7

#: the Gram-mapped basis loses orthonormality like eps * (lambda_1/lambda_r)^2;
#: below this spectrum ratio the decomposition is redone densely on X itself,
#: which keeps every 1e-10 contract regardless of conditioning
GRAM_CONDITION_LIMIT = 3e-3

FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class DualSvdSystem:
    """Singular values with the paired sample/variable orthonormal bases."""

    singular_values: np.ndarray  # (r,), strictly positive, non-increasing
    sample_basis: np.ndarray     # (N, r), columns u^k
    variable_basis: np.ndarray   # (p, r), columns v^k
    dims: tuple                  # (p, N)

    def __post_init__(self):
        lam = np.asarray(self.singular_values, dtype=np.float64)
        u = np.asarray(self.sample_basis, dtype=np.float64)
        v = np.asarray(self.variable_basis, dtype=np.float64)
        object.__setattr__(self, "singular_values", lam)
        object.__setattr__(self, "sample_basis", u)
        object.__setattr__(self, "variable_basis", v)
        object.__setattr__(self, "dims", (int(self.dims[0]), int(self.dims[1])))
        p, n = self.dims
        r = lam.shape[0]
        if r < 1:
            raise ValidationError("empty singular value list")
        if np.any(lam <= 0):
            raise ValidationError("singular values must be strictly positive")
        if np.any(np.diff(lam) > 0):
            raise ValidationError("singular values must be non-increasing")
        if u.shape != (n, r) or v.shape != (p, r):
            raise ValidationError(
                f"basis shapes {u.shape}/{v.shape} inconsistent with dims {self.dims} and rank {r}"
            )
        for name, b in (("sample", u), ("variable", v)):
            dev = np.abs(b.T @ b - np.eye(r)).max()
            if dev > ORTHONORMALITY_TOL:
                raise ValidationError(
                    f"{name} basis is not orthonormal (deviation {dev:.2e})"
                )
        for a in (lam, u, v):
            a.setflags(write=False)

    @property
    def rank(self):
        return self.singular_values.shape[0]

    def check_against(self, matrix):
        """Verify the coupling relations against the source matrix."""
        x = np.asarray(matrix, dtype=np.float64)
        lam, u, v = self.singular_values, self.sample_basis, self.variable_basis
        scale = max(lam[0], 1.0)
        dev_uv = np.abs(x @ u - v * lam).max() / scale
        dev_vu = np.abs(x.T @ v - u * lam).max() / scale
        if max(dev_uv, dev_vu) > COUPLING_TOL:
            raise ValidationError(
                f"basis coupling violated (deviations {dev_uv:.2e}, {dev_vu:.2e})"
            )


def _sign_fix(u, v):
    """Make the largest-magnitude coordinate of each v^k positive; u follows."""
    for k in range(v.shape[1]):
        pivot = np.argmax(np.abs(v[:, k]))
        if v[pivot, k] < 0:
            v[:, k] = -v[:, k]
            u[:, k] = -u[:, k]
    return u, v


def _order_degenerate(lam, u, v):
    """Within runs of equal singular values, order columns lexicographically by v."""
    start = 0
    while start < lam.size:
        stop = start + 1
        while stop < lam.size and lam[stop] == lam[start]:
            stop += 1
        if stop - start > 1:
            cluster = sorted(range(start, stop), key=lambda i: tuple(v[:, i]))
            u[:, start:stop] = u[:, cluster]
            v[:, start:stop] = v[:, cluster]
        start = stop
    return u, v


def compute_dual_svd(matrix, rank_tol: float = DEFAULT_RANK_TOL) -> DualSvdSystem:
    """Decompose a p x N matrix via the smaller Gram matrix.

    The eigenproblem is solved on the N x N side when p >= N (and vice
    versa); the other basis follows from the coupling relations. If the kept
    spectrum is too ill-conditioned for that mapping to stay orthonormal,
    the decomposition is redone densely on the matrix itself. Basis signs
    are fixed so the largest-magnitude coordinate of each variable-side
    vector is positive, which makes the result reproducible for simple
    spectra.
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("expected a 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise ValidationError("matrix entries must be finite")
    if not 0.0 < rank_tol < 1.0:
        raise ValidationError(f"rank_tol must lie in (0, 1), got {rank_tol}")
    p, n = x.shape
    small_side_is_samples = p >= n
    gram = x.T @ x if small_side_is_samples else x @ x.T
    gram = (gram + gram.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(gram)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    lam = np.sqrt(np.clip(eigvals, 0.0, None))
    if lam[0] <= 0.0:
        raise DegenerateInputError("all-zero matrix has no singular values")
    cut = max(rank_tol, GRAM_RANK_FLOOR)
    r = int(np.count_nonzero(lam > cut * lam[0]))
    if lam[r - 1] >= GRAM_CONDITION_LIMIT * lam[0]:
        lam = lam[:r]
        if small_side_is_samples:
            u = eigvecs[:, :r]
            v = (x @ u) / lam
        else:
            v = eigvecs[:, :r]
            u = (x.T @ v) / lam
    else:
        v_full, lam_full, ut_full = np.linalg.svd(x, full_matrices=False)
        r = int(np.count_nonzero(lam_full > rank_tol * lam_full[0]))
        lam = lam_full[:r]
        v = v_full[:, :r]
        u = ut_full[:r].T
    u, v = _sign_fix(np.ascontiguousarray(u), np.ascontiguousarray(v))
    u, v = _order_degenerate(lam, u, v)
    return DualSvdSystem(lam, u, v, (p, n))


def reconstruct(svd: DualSvdSystem) -> np.ndarray:
    """V diag(lambda) U^T."""
    return (svd.variable_basis * svd.singular_values) @ svd.sample_basis.T


def normalize_index_set(indices, rank: int) -> tuple:
    """Validate a 1-based component subset and return it sorted."""
    s = sorted(set(int(i) for i in indices))
    if not s:
        raise ValidationError("component subset must be non-empty")
    if s[0] < 1 or s[-1] > rank:
        raise ValidationError(
            f"component indices must lie in 1..{rank}, got {s[0]}..{s[-1]}"
        )
    return tuple(s)


@dataclass(frozen=True)
class BiplotCoords:
    """Synchronized coordinates: rows pair samples with variables via weights."""

    sample_coords: np.ndarray    # (N, |S|), entry (k, m) = lambda_m * u^m_k
    variable_coords: np.ndarray  # (p, |S|), entry (j, m) = lambda_m * v^m_j
    weights: np.ndarray          # (|S|,), the selected singular values
    components: tuple            # 1-based indices S


def biplot_coordinates(svd: DualSvdSystem, components) -> BiplotCoords:
    """Coordinates whose weighted pairing reproduces the matrix entries.

    Pairing row j of ``variable_coords`` with row k of ``sample_coords``
    under :func:`lambda_inner_product` gives the (j, k) entry of the
    component-subset approximation.
    """
    s = normalize_index_set(components, svd.rank)
    cols = [i - 1 for i in s]
    lam = svd.singular_values[cols]
    return BiplotCoords(
        sample_coords=svd.sample_basis[:, cols] * lam,
        variable_coords=svd.variable_basis[:, cols] * lam,
        weights=lam,
        components=s,
    )


def lambda_inner_product(a, b, weights) -> float:
    """Weighted scalar product sum(a_m * b_m / lambda_m)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if a.shape != b.shape or a.shape != w.shape:
        raise ValidationError("vectors and weights must share one shape")
    if np.any(w <= 0):
        raise ValidationError("weights must be strictly positive")
    return float(np.sum(a * b / w))


def approx_entries(svd: DualSvdSystem, components) -> np.ndarray:
    """The p x N matrix rebuilt from the selected components only."""
    s = normalize_index_set(components, svd.rank)
    cols = [i - 1 for i in s]
    lam = svd.singular_values[cols]
    return (svd.variable_basis[:, cols] * lam) @ svd.sample_basis[:, cols].T


def projection_content(svd: DualSvdSystem, components) -> float:
    """Share of squared singular values captured by the component subset."""
    s = normalize_index_set(components, svd.rank)
    sq = svd.singular_values**2
    return float(sq[[i - 1 for i in s]].sum() / sq.sum())


def approximation_error(svd: DualSvdSystem, components):
    """(Frobenius error, entrywise sup bound) of the subset approximation."""
    s = normalize_index_set(components, svd.rank)
    rest = [i for i in range(svd.rank) if (i + 1) not in s]
    if not rest:
        return 0.0, 0.0
    lam_rest = svd.singular_values[rest]
    return float(np.sqrt(np.sum(lam_rest**2))), float(lam_rest.max())


def _render_vector(vec):
    return "[" + ", ".join(FLOAT_FORMAT % x for x in vec) + "]"


def _render_matrix(mat):
    return "[" + ", ".join(_render_vector(row) for row in mat) + "]"


def to_json(svd: DualSvdSystem) -> str:
    """Serialize with 17-significant-digit (lossless) float rendering."""
    return (
        '{"singular_values": %s, "sample_basis": %s, "variable_basis": %s, "dims": [%d, %d]}'
        % (
            _render_vector(svd.singular_values),
            _render_matrix(svd.sample_basis),
            _render_matrix(svd.variable_basis),
            svd.dims[0],
            svd.dims[1],
        )
    )


def from_json(text: str) -> DualSvdSystem:
    doc = json.loads(text)
    return DualSvdSystem(
        np.asarray(doc["singular_values"], dtype=np.float64),
        np.asarray(doc["sample_basis"], dtype=np.float64),
        np.asarray(doc["variable_basis"], dtype=np.float64),
        tuple(doc["dims"]),
    )
