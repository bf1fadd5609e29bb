"""Boundary-value game-theoretic p-Laplacian solver on weighted graphs.

Labeled vertices are clamped to their known target values; every unlabeled
vertex x is driven to the tug-of-war fixed point

    u(x) = (alpha / d_x) * sum_y w_xy u(y)
         + ((1 - alpha) / 2) * (min_{N_x} u + max_{N_x} u)

with alpha = 1 / (p - 1).  At p = 2 this is the pure random-walk average; as
p grows the neighborhood min/max midpoint dominates, and p = inf is handled
exactly as alpha = 0.  The fixed point is computed by in-place Gauss-Seidel
sweeps in ascending vertex order, which keeps the iteration deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .graph import WeightedGraph, assert_labels_cover_components


class POutOfRange(ValueError):
    pass


class IsolatedVertex(ValueError):
    pass


class SingularSystem(RuntimeError):
    """Linear reduction at p=2 failed; cannot happen when labels cover components."""


@dataclass(frozen=True)
class LabelAssignment:
    """The labeled vertex subset and its known target values."""

    labeled: np.ndarray
    values: np.ndarray
    n: int

    def __post_init__(self):
        labeled = np.asarray(self.labeled, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "labeled", labeled)
        object.__setattr__(self, "values", values)
        if labeled.size == 0:
            raise ValueError("labeled set must be nonempty")
        if labeled.size != values.size:
            raise ValueError(f"{labeled.size} labeled vertices but {values.size} values")
        if labeled.min() < 0 or labeled.max() >= self.n:
            raise ValueError(f"labeled ids must lie in [0, {self.n})")
        if len(np.unique(labeled)) != labeled.size:
            raise ValueError("labeled ids must be unique")
        if not np.isfinite(values).all():
            raise ValueError("labeled values must be finite")

    def unlabeled(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.labeled] = False
        return np.flatnonzero(mask).astype(np.int64)


@dataclass(frozen=True)
class SolverConfig:
    """p in [2, inf] (math.inf admitted), stopping tolerance and iteration cap."""

    p: float = 2.0
    tol: float = 1e-6
    max_iter: int = 100_000
    init: str = "label_mean"  # "label_mean" | "zero" | "custom"
    init_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.p < 2:
            raise POutOfRange(f"p must be >= 2, got {self.p}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.init not in ("label_mean", "zero", "custom"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "custom" and self.init_values is None:
            raise ValueError("init='custom' requires init_values")


@dataclass(frozen=True)
class Solution:
    u: np.ndarray
    iterations: int
    residual: float
    converged: bool


def solution_json(sol: Solution, p: float) -> dict:
    """JSON-ready dump of a solution together with the p it was solved at."""
    return {
        "p": "inf" if math.isinf(p) else p,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "converged": sol.converged,
        "u": sol.u.tolist(),
    }


def alpha_of_p(p: float) -> float:
    """Blend factor 1/(p-1): 1 at p=2, 0 at p=inf."""
    if p < 2:
        raise POutOfRange(f"p must be in [2, inf], got {p}")
    if math.isinf(p):
        return 0.0
    return 1.0 / (p - 1.0)


def dpp_update(g: WeightedGraph, u: np.ndarray, x: int, alpha: float) -> float:
    """One fixed-point evaluation at vertex x from the current values u."""
    nbrs, w = g.neighbors_of(x)
    if nbrs.size == 0 or g.degrees[x] <= 0:
        raise IsolatedVertex(f"vertex {x} has no neighbors")
    vals = u[nbrs]
    mean_term = float(w @ vals) / g.degrees[x]
    return alpha * mean_term + 0.5 * (1.0 - alpha) * (vals.min() + vals.max())


@njit(cache=True)
def _gauss_seidel(indptr, indices, weights, degrees, order, u, alpha, tol, max_iter):
    """In-place ascending-order sweeps; returns (sweeps, last max change)."""
    half = 0.5 * (1.0 - alpha)
    sweeps = 0
    residual = np.inf
    while sweeps < max_iter:
        max_change = 0.0
        for ii in range(order.shape[0]):
            x = order[ii]
            acc = 0.0
            vmin = np.inf
            vmax = -np.inf
            for jj in range(indptr[x], indptr[x + 1]):
                uy = u[indices[jj]]
                acc += weights[jj] * uy
                if uy < vmin:
                    vmin = uy
                if uy > vmax:
                    vmax = uy
            new = alpha * acc / degrees[x] + half * (vmin + vmax)
            change = abs(new - u[x])
            if change > max_change:
                max_change = change
            u[x] = new
        sweeps += 1
        residual = max_change
        if max_change <= tol:
            break
    return sweeps, residual


def _initial_values(labels: LabelAssignment, cfg: SolverConfig) -> np.ndarray:
    if cfg.init == "zero":
        u = np.zeros(labels.n)
    elif cfg.init == "custom":
        u = np.asarray(cfg.init_values, dtype=float).copy()
        if u.shape != (labels.n,):
            raise ValueError(f"init_values must have shape ({labels.n},), got {u.shape}")
    else:
        u = np.full(labels.n, labels.values.mean())
    u[labels.labeled] = labels.values
    return u


def solve(g: WeightedGraph, labels: LabelAssignment, cfg: SolverConfig | None = None) -> Solution:
    """Solve the boundary-value problem for u by Gauss-Seidel iteration.

    Labeled values are fixed; unlabeled vertices are swept in ascending
    order until the largest per-sweep change drops to cfg.tol or max_iter
    sweeps have run.  Non-convergence is reported on the Solution, not
    raised.  Deterministic: same graph, labels and config give bit-identical
    u across runs.
    """
    if cfg is None:
        cfg = SolverConfig()
    if g.n == 0:
        raise ValueError("graph is empty")
    if labels.n != g.n:
        raise ValueError(f"labels sized for {labels.n} vertices, graph has {g.n}")
    assert_labels_cover_components(g, labels.labeled)

    u = _initial_values(labels, cfg)
    order = labels.unlabeled()
    if order.size == 0:
        return Solution(u=u, iterations=0, residual=0.0, converged=True)
    if (g.degrees[order] <= 0).any():
        bad = order[g.degrees[order] <= 0][0]
        raise IsolatedVertex(f"unlabeled vertex {bad} has no neighbors")

    alpha = alpha_of_p(cfg.p)
    sweeps, residual = _gauss_seidel(
        g.indptr, g.indices, g.weights, g.degrees, order, u, alpha, cfg.tol, cfg.max_iter
    )
    return Solution(u=u, iterations=int(sweeps), residual=float(residual), converged=residual <= cfg.tol)


def solve_p2_direct(g: WeightedGraph, labels: LabelAssignment) -> Solution:
    """Exact p=2 solution via one dense linear solve; the test oracle.

    At p=2 the fixed point is the degree-weighted harmonic extension, so
    u restricted to unlabeled vertices solves
    d_x u(x) - sum_{unlabeled y} w_xy u(y) = sum_{labeled y} w_xy g(y).
    """
    if labels.n != g.n:
        raise ValueError(f"labels sized for {labels.n} vertices, graph has {g.n}")
    assert_labels_cover_components(g, labels.labeled)
    u = np.zeros(g.n)
    u[labels.labeled] = labels.values
    order = labels.unlabeled()
    if order.size == 0:
        return Solution(u=u, iterations=0, residual=0.0, converged=True)

    pos = {int(x): i for i, x in enumerate(order)}
    labeled_mask = np.zeros(g.n, dtype=bool)
    labeled_mask[labels.labeled] = True
    m = order.size
    A = np.zeros((m, m))
    b = np.zeros(m)
    for i, x in enumerate(order):
        nbrs, w = g.neighbors_of(int(x))
        if nbrs.size == 0 or g.degrees[x] <= 0:
            raise IsolatedVertex(f"unlabeled vertex {x} has no neighbors")
        A[i, i] = g.degrees[x]
        for y, wy in zip(nbrs, w):
            if labeled_mask[y]:
                b[i] += wy * u[y]
            else:
                A[i, pos[int(y)]] -= wy
    try:
        u[order] = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"harmonic system is singular: {exc}") from exc
    return Solution(u=u, iterations=1, residual=0.0, converged=True)


def solve_sweep_p(
    g: WeightedGraph,
    labels: LabelAssignment,
    cfg: SolverConfig,
    p_list: list[float],
) -> list[Solution]:
    """Solve for each p in turn, warm-starting from the previous solution."""
    solutions: list[Solution] = []
    init = cfg.init
    init_values = cfg.init_values
    for p in p_list:
        step_cfg = SolverConfig(p=p, tol=cfg.tol, max_iter=cfg.max_iter, init=init, init_values=init_values)
        sol = solve(g, labels, step_cfg)
        solutions.append(sol)
        init = "custom"
        init_values = sol.u
    return solutions
