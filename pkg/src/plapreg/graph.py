"""Symmetric weighted k-nearest-neighbor similarity graphs.

Edges carry Gaussian weights w = exp(-(d/eps)^2) of the pairwise Euclidean
distance d.  The bandwidth eps is either one global constant or self-tuned
per vertex from the distance to its k-th nearest neighbor, combined pairwise
as sqrt(eps_x * eps_y).  Directed k-NN edges are union-symmetrized, so every
vertex keeps at least k neighbors.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist


class DimensionMismatch(ValueError):
    pass


class NonPositiveEpsilon(ValueError):
    pass


class KTooLarge(ValueError):
    pass


class ComponentWithoutLabel(ValueError):
    """Some connected component contains no labeled vertex."""

    def __init__(self, components: list[np.ndarray]):
        self.components = components
        heads = [f"[{c[0]}..] size {len(c)}" for c in components]
        super().__init__(f"{len(components)} component(s) without a labeled vertex: {heads}")


class DuplicatePointsWarning(UserWarning):
    """Distinct rows at Euclidean distance zero; their edge weight is 1."""


@dataclass(frozen=True)
class GlobalEpsilon:
    eps: float


@dataclass(frozen=True)
class SelfTuningEpsilon:
    """Per-vertex bandwidth = distance to the k_scale-th nearest neighbor.

    k_scale=None means "use the graph's k".
    """

    k_scale: int | None = None


EpsilonMode = GlobalEpsilon | SelfTuningEpsilon


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph in CSR adjacency form.

    ``indices[indptr[x]:indptr[x+1]]`` are the neighbors of x (ascending),
    ``weights`` the matching edge weights, and ``degrees[x]`` their sum.
    Symmetric by construction: (x, y, w) is stored in both directions.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray

    def neighbors_of(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[x], self.indptr[x + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def neighbor_count(self, x: int) -> int:
        return int(self.indptr[x + 1] - self.indptr[x])

    @cached_property
    def num_edges(self) -> int:
        return int(self.indices.shape[0]) // 2


def euclidean_distance(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"vectors have shapes {x.shape} and {y.shape}")
    return float(np.linalg.norm(x - y))


def gaussian_weight(d: float, eps: float) -> float:
    """exp(-(d/eps)^2), strictly in (0, 1] for finite d."""
    if eps <= 0:
        raise NonPositiveEpsilon(f"eps must be positive, got {eps}")
    return float(np.exp(-((d / eps) ** 2)))


def _pairwise_eps(dist: np.ndarray, eps_mode: EpsilonMode, k: int) -> np.ndarray:
    """Per-pair bandwidth matrix for the Gaussian kernel."""
    n = dist.shape[0]
    if isinstance(eps_mode, GlobalEpsilon):
        if eps_mode.eps <= 0:
            raise NonPositiveEpsilon(f"global eps must be positive, got {eps_mode.eps}")
        return np.full((n, n), eps_mode.eps)
    k_scale = eps_mode.k_scale if eps_mode.k_scale is not None else k
    if k_scale < 1 or k_scale > n - 1:
        raise KTooLarge(f"k_scale={k_scale} out of range [1, {n - 1}]")
    # distance to the k_scale-th nearest *other* vertex
    sorted_d = np.sort(dist, axis=1)
    eps_x = sorted_d[:, k_scale]
    if (eps_x == 0).any():
        # >= k_scale exact duplicates; fall back to the smallest positive
        # bandwidth so weights stay in (0, 1]
        positive = eps_x[eps_x > 0]
        eps_x = np.where(eps_x == 0, positive.min() if positive.size else 1.0, eps_x)
    return np.sqrt(np.outer(eps_x, eps_x))


def knn_graph(points: np.ndarray, k: int, eps_mode: EpsilonMode | None = None) -> WeightedGraph:
    """Build the union-symmetrized k-NN graph over normalized feature rows.

    Each vertex points to its k nearest others (exact brute-force distances,
    ties broken by lower index); the undirected edge set is the union of
    both directions.  Weights are Gaussian in the pairwise distance with the
    bandwidth given by ``eps_mode`` (default: self-tuning at the k-th
    neighbor distance).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise DimensionMismatch(f"points must be a 2-d matrix, got shape {points.shape}")
    n = points.shape[0]
    if not (1 <= k < n):
        raise KTooLarge(f"k={k} out of range [1, {n - 1}] for {n} points")
    if not np.isfinite(points).all():
        raise ValueError("points contain non-finite values")
    if eps_mode is None:
        eps_mode = SelfTuningEpsilon()

    dist = cdist(points, points)
    off_diag_zero = (dist == 0).sum() > n
    if off_diag_zero:
        warnings.warn("duplicate points at distance 0; their edges get weight 1", DuplicatePointsWarning)

    # k nearest others per row: exclude self via +inf diagonal, stable sort
    # resolves distance ties toward the lower index
    d_query = dist.copy()
    np.fill_diagonal(d_query, np.inf)
    nearest = np.argsort(d_query, axis=1, kind="stable")[:, :k]

    adjacency = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), k)
    adjacency[rows, nearest.ravel()] = True
    adjacency |= adjacency.T
    np.fill_diagonal(adjacency, False)

    eps = _pairwise_eps(dist, eps_mode, k)
    weight_matrix = np.where(adjacency, np.exp(-((dist / eps) ** 2)), 0.0)

    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(adjacency.sum(axis=1))
    indices = np.flatnonzero(adjacency.ravel()).astype(np.int64) % n
    flat_weights = weight_matrix[adjacency]
    return WeightedGraph(
        n=n,
        indptr=indptr,
        indices=indices,
        weights=flat_weights,
        degrees=weight_matrix.sum(axis=1),
    )


def graph_from_edges(n: int, edges: list[tuple[int, int, float]]) -> WeightedGraph:
    """Build a WeightedGraph from an undirected (u, v, w) edge list."""
    adjacency: list[dict[int, float]] = [{} for _ in range(n)]
    for u, v, w in edges:
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        if w <= 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        adjacency[u][v] = w
        adjacency[v][u] = w
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices: list[int] = []
    weights: list[float] = []
    for x in range(n):
        nbrs = sorted(adjacency[x])
        indptr[x + 1] = indptr[x] + len(nbrs)
        indices.extend(nbrs)
        weights.extend(adjacency[x][y] for y in nbrs)
    return WeightedGraph(
        n=n,
        indptr=indptr,
        indices=np.asarray(indices, dtype=np.int64),
        weights=np.asarray(weights, dtype=float),
        degrees=np.array([sum(adjacency[x].values()) for x in range(n)], dtype=float),
    )


def connected_components(g: WeightedGraph) -> list[np.ndarray]:
    """Partition vertices into connected components by breadth-first search.

    Components are returned sorted by their smallest vertex id, each as an
    ascending array of vertex ids.
    """
    seen = np.zeros(g.n, dtype=bool)
    components: list[np.ndarray] = []
    for start in range(g.n):
        if seen[start]:
            continue
        queue = deque([start])
        seen[start] = True
        members = [start]
        while queue:
            x = queue.popleft()
            nbrs, w = g.neighbors_of(x)
            for y in nbrs[w > 0]:
                if not seen[y]:
                    seen[y] = True
                    members.append(int(y))
                    queue.append(int(y))
        components.append(np.array(sorted(members), dtype=np.int64))
    return components


def assert_labels_cover_components(g: WeightedGraph, labeled: np.ndarray) -> None:
    """Raise ComponentWithoutLabel unless every component has a labeled vertex."""
    labeled_mask = np.zeros(g.n, dtype=bool)
    labeled_mask[np.asarray(labeled, dtype=np.int64)] = True
    uncovered = [c for c in connected_components(g) if not labeled_mask[c].any()]
    if uncovered:
        raise ComponentWithoutLabel(uncovered)


def dump_edges(g: WeightedGraph) -> str:
    """Edge-list text dump "u v w" (0-based, one line per undirected edge, u < v)."""
    lines = []
    for x in range(g.n):
        nbrs, w = g.neighbors_of(x)
        for y, wy in zip(nbrs, w):
            if x < y:
                lines.append(f"{x} {y} {wy:.12e}")
    return "\n".join(lines) + ("\n" if lines else "")
