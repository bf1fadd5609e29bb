"""Shared test helpers: point clouds, graphs, and independent oracles."""

from __future__ import annotations

import numpy as np

from plapreg.graph import WeightedGraph, knn_graph


def dense_weights(g: WeightedGraph) -> np.ndarray:
    """Dense symmetric weight matrix reconstructed from the CSR arrays."""
    W = np.zeros((g.n, g.n))
    for x in range(g.n):
        nbrs, w = g.neighbors_of(x)
        W[x, nbrs] = w
    return W


def reachability_oracle(g: WeightedGraph) -> np.ndarray:
    """Boolean reachability matrix by repeated squaring of (A | I).

    Independent of graph.connected_components; used to cross-check it.
    """
    A = dense_weights(g) > 0
    R = A | np.eye(g.n, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(g.n, 2))))):
        R = R @ R
    return R


def components_from_reachability(g: WeightedGraph) -> list[frozenset[int]]:
    R = reachability_oracle(g)
    seen: set[int] = set()
    components = []
    for x in range(g.n):
        if x in seen:
            continue
        members = frozenset(np.flatnonzero(R[x]).tolist())
        seen |= members
        components.append(members)
    return components


def random_connected_graph(rng: np.random.Generator, n: int, dim: int = 3, k: int | None = None) -> WeightedGraph:
    """k-NN graph over a Gaussian cloud, with k grown until connected."""
    points = rng.normal(size=(n, dim))
    k = k if k is not None else max(3, n // 20)
    while True:
        g = knn_graph(points, k)
        if components_from_reachability(g)[0] == frozenset(range(n)):
            return g
        k += 2


def random_labels(rng: np.random.Generator, n: int, frac: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    size = max(1, int(round(frac * n)))
    labeled = np.sort(rng.choice(n, size=size, replace=False))
    return labeled, rng.normal(size=size)
