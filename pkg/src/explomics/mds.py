"""Distance/covariance duality, kNN graphs, geodesics and ISOMAP embedding.

An N x N "covariance" matrix here is the centered Gram matrix of a point
cloud: symmetric, positive semidefinite and annihilating the all-ones vector.
Squared-distance matrices and such Gram matrices are interconvertible; the
embedding pipeline replaces euclidean distances with graph geodesics before
converting back and extracting principal coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraphError, ValidationError
from .svd import DualSvdSystem, compute_dual_svd, normalize_index_set

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10
CENTERING_TOL = 1e-10
RANK_TOL = 1e-12


def check_covariance(c) -> np.ndarray:
    """Validate membership in the centered-Gram set and return the matrix."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValidationError("covariance matrix must be square")
    scale = max(np.abs(c).max(), 1.0)
    if np.abs(c - c.T).max() > SYMMETRY_TOL * scale:
        raise ValidationError("covariance matrix is not symmetric")
    eigvals = np.linalg.eigvalsh((c + c.T) / 2.0)
    if eigvals[0] < -PSD_TOL * scale:
        raise ValidationError(
            f"covariance matrix is not positive semidefinite (min eig {eigvals[0]:.3e})"
        )
    if np.abs(c.sum(axis=1)).max() > CENTERING_TOL * scale * c.shape[0]:
        raise ValidationError("covariance matrix does not annihilate the ones vector")
    return c


def check_distance(d) -> np.ndarray:
    """Validate a squared-distance matrix and return it."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError("distance matrix must be square")
    scale = max(np.abs(d).max(), 1.0)
    if np.abs(d - d.T).max() > SYMMETRY_TOL * scale:
        raise ValidationError("distance matrix is not symmetric")
    if np.abs(np.diag(d)).max() > SYMMETRY_TOL * scale:
        raise ValidationError("distance matrix has a nonzero diagonal")
    if d.min() < 0.0:
        raise ValidationError("squared distances must be non-negative")
    return d


def gram_from_points(points) -> np.ndarray:
    """Centered Gram matrix Y^T Y of a p x N point matrix (columns = points)."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("expected a 2-D point matrix")
    if not np.all(np.isfinite(x)):
        raise ValidationError("point coordinates must be finite")
    y = x - x.mean(axis=1, keepdims=True)
    c = y.T @ y
    return (c + c.T) / 2.0


def distance_from_points(points, block=256) -> np.ndarray:
    """Squared euclidean distances between columns, computed blockwise.

    Explicit differences (not the Gram shortcut) keep the entries accurate
    for nearly coincident points; ``block`` bounds the temporary to
    block * N * N floats.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("expected a 2-D point matrix")
    if not np.all(np.isfinite(x)):
        raise ValidationError("point coordinates must be finite")
    p, n = x.shape
    d = np.zeros((n, n), dtype=np.float64)
    for start in range(0, p, block):
        chunk = x[start:start + block]
        diff = chunk[:, :, None] - chunk[:, None, :]
        d += (diff * diff).sum(axis=0)
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


def covariance_to_distance(c) -> np.ndarray:
    """D_jk = C_jj + C_kk - 2 C_jk."""
    c = check_covariance(c)
    diag = np.diag(c)
    d = diag[:, None] + diag[None, :] - 2.0 * c
    d = np.clip((d + d.T) / 2.0, 0.0, None)
    np.fill_diagonal(d, 0.0)
    return d


def distance_to_covariance(d) -> np.ndarray:
    """Double-center: C = -1/2 (I - 1 1^T / N) D (I - 1 1^T / N)."""
    d = check_distance(d)
    n = d.shape[0]
    j = np.eye(n) - np.ones((n, n)) / n
    c = -0.5 * (j @ d @ j)
    return (c + c.T) / 2.0


def project_to_valid_covariance(a) -> np.ndarray:
    """Nearest centered Gram matrix: symmetrize, double-center, clip spectrum."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix entries must be finite")
    n = a.shape[0]
    sym = (a + a.T) / 2.0
    j = np.eye(n) - np.ones((n, n)) / n
    centered = j @ sym @ j
    centered = (centered + centered.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(centered)
    clipped = np.clip(eigvals, 0.0, None)
    c = (eigvecs * clipped) @ eigvecs.T
    return (c + c.T) / 2.0


def reconstruct_points(c, dim) -> np.ndarray:
    """Centered points (dim x N) whose centered Gram matrix equals ``c``.

    Built from the positive-semidefinite square root; requires
    dim >= rank(c).
    """
    c = check_covariance(c)
    eigvals, eigvecs = np.linalg.eigh(c)
    eigvals = np.clip(eigvals, 0.0, None)
    top = eigvals[-1]
    keep = np.nonzero(eigvals > RANK_TOL * max(top, 1.0))[0][::-1]
    rank = keep.size
    if dim < rank:
        raise ValidationError(f"target dimension {dim} < rank {rank}")
    points = np.zeros((dim, c.shape[0]), dtype=np.float64)
    points[:rank] = (np.sqrt(eigvals[keep])[:, None]) * eigvecs[:, keep].T
    return points


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetrized k-nearest-neighbor graph with euclidean edge weights."""

    n_nodes: int
    k: int
    edges: np.ndarray    # (m, 2) node index pairs, i < j
    weights: np.ndarray  # (m,) unsquared distances
    nodes: np.ndarray    # original node indices (identity unless restricted)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.intp).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64)
        nodes = np.asarray(self.nodes, dtype=np.intp)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "nodes", nodes)
        if edges.shape[0] != weights.shape[0]:
            raise ValidationError("edge list and weight list differ in length")
        if edges.size and (edges[:, 0] == edges[:, 1]).any():
            raise ValidationError("self-loops are not allowed")
        if np.any(weights <= 0.0):
            raise ValidationError("edge weights must be strictly positive")


def _components(n, edges):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def knn_graph(d, k, on_disconnect="error") -> NeighborGraph:
    """Symmetrized union of each node's k nearest neighbors.

    Distance ties break toward the lower node index. A disconnected result
    raises :class:`DisconnectedGraphError` listing the components, unless
    ``on_disconnect="largest"`` restricts the graph to its largest component.
    """
    d = check_distance(d)
    n = d.shape[0]
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < N = {n}, got {k}")
    if on_disconnect not in ("error", "largest"):
        raise ValidationError(f"unknown disconnect policy {on_disconnect!r}")
    pairs = set()
    for i in range(n):
        row = d[i].copy()
        row[i] = np.inf
        order = np.argsort(row, kind="stable")[:k]
        for j in order:
            pairs.add((min(i, int(j)), max(i, int(j))))
    edges = np.array(sorted(pairs), dtype=np.intp).reshape(-1, 2)
    comps = _components(n, edges)
    nodes = np.arange(n)
    if len(comps) > 1:
        if on_disconnect == "error":
            raise DisconnectedGraphError(comps)
        comps.sort(key=lambda c: (-len(c), c[0]))
        keep = np.array(sorted(comps[0]), dtype=np.intp)
        remap = {int(old): new for new, old in enumerate(keep)}
        mask = np.isin(edges[:, 0], keep) & np.isin(edges[:, 1], keep)
        edges = np.array(
            [[remap[int(i)], remap[int(j)]] for i, j in edges[mask]], dtype=np.intp
        ).reshape(-1, 2)
        nodes = keep
        weights = np.sqrt([d[nodes[i], nodes[j]] for i, j in edges])
    else:
        weights = np.sqrt(d[edges[:, 0], edges[:, 1]]) if edges.size else np.empty(0)
    return NeighborGraph(n_nodes=len(nodes), k=k, edges=edges,
                         weights=np.asarray(weights, dtype=np.float64), nodes=nodes)


def geodesic_distances(graph: NeighborGraph) -> np.ndarray:
    """All-pairs shortest-path lengths, squared into a distance matrix.

    Exact Floyd-Warshall; the target regime keeps N small enough that the
    cubic cost is irrelevant.
    """
    n = graph.n_nodes
    g = np.full((n, n), np.inf, dtype=np.float64)
    np.fill_diagonal(g, 0.0)
    for (i, j), w in zip(graph.edges, graph.weights):
        g[i, j] = min(g[i, j], w)
        g[j, i] = g[i, j]
    for mid in range(n):
        np.minimum(g, g[:, [mid]] + g[[mid], :], out=g)
    if not np.all(np.isfinite(g)):
        raise DisconnectedGraphError(_components(n, graph.edges))
    d = g * g
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True)
class IsomapResult:
    """Geodesic embedding plus the spectrum backing its projection content."""

    coords: np.ndarray        # (n_embedded, |S|) sample coordinates
    components: tuple         # 1-based component indices actually used
    svd: DualSvdSystem        # decomposition of the geodesic covariance points
    graph: NeighborGraph
    nodes: np.ndarray         # original sample indices that were embedded


def isomap_embed(points=None, distances=None, k=2, components=(1, 2, 3),
                 on_disconnect="error") -> IsomapResult:
    """Embed samples by principal coordinates of graph geodesic distances.

    Pipeline: squared distances -> kNN graph -> geodesics -> double
    centering -> projection onto valid centered Gram matrices -> point
    reconstruction -> principal components. Component indices beyond the
    achieved rank are dropped.
    """
    if (points is None) == (distances is None):
        raise ValidationError("provide exactly one of points or distances")
    d = distance_from_points(points) if distances is None else check_distance(distances)
    graph = knn_graph(d, k, on_disconnect=on_disconnect)
    geo = geodesic_distances(graph)
    c = project_to_valid_covariance(distance_to_covariance(geo))
    eigvals = np.linalg.eigvalsh(c)
    rank = int(np.count_nonzero(eigvals > RANK_TOL * max(eigvals[-1], 1.0)))
    pts = reconstruct_points(c, max(rank, 1))
    svd = compute_dual_svd(pts)
    requested = normalize_index_set(components, max(max(components), svd.rank))
    used = tuple(i for i in requested if i <= svd.rank)
    if not used:
        raise ValidationError(
            f"no requested component <= achieved rank {svd.rank}"
        )
    cols = [i - 1 for i in used]
    coords = svd.sample_basis[:, cols] * svd.singular_values[cols]
    return IsomapResult(coords=coords, components=used, svd=svd,
                        graph=graph, nodes=graph.nodes)
