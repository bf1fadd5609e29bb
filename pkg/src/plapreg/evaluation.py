"""Evaluation protocol: RMSE%, K-fold plans, repeated runs, parameter sweeps.

RMSE is reported as a percentage of the root-mean-square of the true test
values.  Two fold modes exist: standard K-fold trains on K-1 folds and tests
on one; modified K-fold inverts that (train on one fold, test on K-1), which
realizes low training percentages such as 5% at K=20.  Every evaluation is a
pure function of (data, config, master seed): repeat r derives its own fold
seed from the master seed, so whole sweeps re-run bit-identically.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines, dataio
from .graph import ComponentWithoutLabel, EpsilonMode, WeightedGraph, knn_graph
from .plaplace import LabelAssignment, SolverConfig, solve, solve_sweep_p

STANDARD = "standard"
MODIFIED = "modified"


class LengthMismatch(ValueError):
    pass


class ZeroDenominator(ValueError):
    """All true values in the test fold are zero; RMSE% is undefined."""


class KOutOfRange(ValueError):
    pass


def rmse_percent(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """100 * sqrt(mean((pred - true)^2)) / sqrt(mean(true^2))."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise LengthMismatch(f"shapes {y_true.shape} and {y_pred.shape} (need equal, nonempty)")
    denom = np.sqrt(np.mean(y_true**2))
    if denom == 0:
        raise ZeroDenominator("all true values are zero")
    return float(100.0 * np.sqrt(np.mean((y_pred - y_true) ** 2)) / denom)


def repeat_seed(master_seed: int, repeat: int) -> int:
    """Per-repeat 64-bit seed from the master seed via a counter-keyed mix."""
    seq = np.random.SeedSequence([int(master_seed), int(repeat)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class FoldSpec:
    """Fold count and direction; the per-repeat seed is supplied separately."""

    k: int
    mode: str = STANDARD

    def __post_init__(self):
        if self.mode not in (STANDARD, MODIFIED):
            raise ValueError(f"mode must be {STANDARD!r} or {MODIFIED!r}, got {self.mode!r}")

    @property
    def training_pct(self) -> float:
        return 100.0 * (self.k - 1) / self.k if self.mode == STANDARD else 100.0 / self.k


@dataclass(frozen=True)
class FoldPlan:
    n: int
    k: int
    mode: str
    assignments: np.ndarray
    seed: int

    def rotations(self):
        """Yield (train_idx, test_idx) once per fold."""
        for f in range(self.k):
            in_fold = np.flatnonzero(self.assignments == f)
            out_of_fold = np.flatnonzero(self.assignments != f)
            if self.mode == STANDARD:
                yield out_of_fold, in_fold
            else:
                yield in_fold, out_of_fold


def make_folds(n: int, k: int, mode: str, seed: int) -> FoldPlan:
    """Random near-equal partition of n rows into k folds, fixed by seed."""
    if not (2 <= k <= n):
        raise KOutOfRange(f"k={k} out of range [2, {n}]")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    for f, block in enumerate(np.array_split(perm, k)):
        assignments[block] = f
    return FoldPlan(n=n, k=k, mode=mode, assignments=assignments, seed=seed)


def fold_spec_for_training_pct(pct: float) -> FoldSpec:
    """Map a training percentage to its fold realization.

    Percentages above 50 use standard mode with K = round(100/(100-pct));
    50 and below use modified mode with K = round(100/pct).  This realizes
    the ratio table 80->K5 standard, 50->K2, 33->K3, 25->K4, 20->K5,
    10->K10, 5->K20 (all modified).
    """
    if not (0 < pct < 100):
        raise ValueError(f"training pct must be in (0, 100), got {pct}")
    if pct > 50:
        return FoldSpec(k=round(100.0 / (100.0 - pct)), mode=STANDARD)
    return FoldSpec(k=round(100.0 / pct), mode=MODIFIED)


@dataclass(frozen=True)
class GraphConfig:
    k: int
    eps_mode: EpsilonMode | None = None  # None -> self-tuning default


@dataclass
class EvalReport:
    """RMSE% statistics for one (model, target, dataset, parameters) cell."""

    target: str
    dataset: str
    model: str
    params: dict
    training_pct: float
    rmse: np.ndarray  # (repeats, folds); NaN where the fold failed
    rmse_mean: float
    rmse_std: float
    nonconverged_count: int
    fold_errors: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return bool(np.isfinite(self.rmse).any())

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "dataset": self.dataset,
            "model": self.model,
            "params": {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in self.params.items()},
            "training_pct": self.training_pct,
            "rmse": [[None if math.isnan(v) else v for v in row] for row in self.rmse.tolist()],
            "rmse_mean": None if math.isnan(self.rmse_mean) else self.rmse_mean,
            "rmse_std": None if math.isnan(self.rmse_std) else self.rmse_std,
            "nonconverged_count": self.nonconverged_count,
            "fold_errors": list(self.fold_errors),
        }


REPORT_CSV_COLUMNS = [
    "target", "dataset", "model", "p", "k", "gamma", "c", "lambda", "degree",
    "training_pct", "rmse_mean", "rmse_std", "nonconverged_count",
]


def reports_csv(reports: list[EvalReport]) -> str:
    """Flat CSV, one row per report, blank cells for inapplicable parameters."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_CSV_COLUMNS)
    for r in reports:
        row = [r.target, r.dataset, r.model]
        for key in ("p", "k", "gamma", "c", "lambda", "degree"):
            v = r.params.get(key, "")
            if isinstance(v, float) and math.isinf(v):
                v = "inf"
            row.append(v)
        row += [f"{r.training_pct:.6g}", f"{r.rmse_mean:.12g}", f"{r.rmse_std:.12g}", r.nonconverged_count]
        writer.writerow(row)
    return buf.getvalue()


def _aggregate(rmse: np.ndarray) -> tuple[float, float]:
    finite = rmse[np.isfinite(rmse)]
    if finite.size == 0:
        return float("nan"), float("nan")
    return float(finite.mean()), float(finite.std())


def _target_values(table: dataio.FeatureTable, target: str) -> np.ndarray:
    if target not in table.targets:
        raise dataio.UnknownColumn(f"target column {target!r} not in table (have {sorted(table.targets)})")
    return table.targets[target]


def _eval_plaplace_on_graph(
    g: WeightedGraph,
    y: np.ndarray,
    solver_cfg: SolverConfig,
    fold_spec: FoldSpec,
    repeats: int,
    seed: int,
) -> tuple[np.ndarray, int, list[str]]:
    """Shared fold loop: returns (rmse matrix, nonconverged count, fold errors)."""
    n = y.shape[0]
    rmse = np.full((repeats, fold_spec.k), np.nan)
    nonconverged = 0
    errors: list[str] = []
    for r in range(repeats):
        plan = make_folds(n, fold_spec.k, fold_spec.mode, repeat_seed(seed, r))
        for f, (train, test) in enumerate(plan.rotations()):
            labels = LabelAssignment(labeled=train, values=y[train], n=n)
            try:
                sol = solve(g, labels, solver_cfg)
            except ComponentWithoutLabel as exc:
                errors.append(f"repeat {r} fold {f}: {exc}")
                continue
            if not sol.converged:
                nonconverged += 1
            rmse[r, f] = rmse_percent(y[test], sol.u[test])
    return rmse, nonconverged, errors


def run_plaplace_eval(
    table: dataio.FeatureTable,
    target: str,
    graph_cfg: GraphConfig,
    solver_cfg: SolverConfig,
    fold_spec: FoldSpec,
    repeats: int,
    seed: int,
    dataset: str = "combined",
) -> EvalReport:
    """Evaluate the graph solver under repeated randomized K-fold splits.

    Features are z-scored over all rows (transductive: unlabeled features
    legitimately participate in graph construction), the graph is built
    once, and each repeat re-partitions the rows from its derived seed.
    Folds whose labels miss a graph component are recorded and skipped.
    """
    y = _target_values(table, target)
    norm = dataio.fit_zscore(table)
    points = dataio.apply_zscore(table, norm).rows
    g = knn_graph(points, graph_cfg.k, graph_cfg.eps_mode)
    rmse, nonconverged, errors = _eval_plaplace_on_graph(g, y, solver_cfg, fold_spec, repeats, seed)
    mean, std = _aggregate(rmse)
    return EvalReport(
        target=target,
        dataset=dataset,
        model="plaplace",
        params={"p": solver_cfg.p, "k": graph_cfg.k},
        training_pct=fold_spec.training_pct,
        rmse=rmse,
        rmse_mean=mean,
        rmse_std=std,
        nonconverged_count=nonconverged,
        fold_errors=errors,
    )


def _fit_baseline(model_spec: dict, X: np.ndarray, y: np.ndarray):
    name = model_spec["model"]
    if name in ("ridge", "polyridge"):
        degree = int(model_spec.get("degree", 1 if name == "ridge" else 2))
        lam = float(model_spec.get("lambda", 1.0))
        return baselines.ridge_fit(X, y, lam=lam, degree=degree)
    if name == "lssvr":
        return baselines.lssvr_fit(
            X, y, gamma=float(model_spec.get("gamma", 0.001)), c=float(model_spec.get("c", 100.0))
        )
    raise ValueError(f"unknown baseline model {name!r}")


def _baseline_params(model_spec: dict) -> dict:
    name = model_spec["model"]
    if name in ("ridge", "polyridge"):
        return {
            "lambda": float(model_spec.get("lambda", 1.0)),
            "degree": int(model_spec.get("degree", 1 if name == "ridge" else 2)),
        }
    return {"gamma": float(model_spec.get("gamma", 0.001)), "c": float(model_spec.get("c", 100.0))}


def run_baseline_eval(
    table: dataio.FeatureTable,
    target: str,
    model_spec: dict,
    fold_spec: FoldSpec,
    repeats: int,
    seed: int,
    dataset: str = "combined",
) -> EvalReport:
    """Evaluate a supervised baseline: per fold, normalization and model are
    fit on the training rows only, then scored on the held-out rows."""
    y = _target_values(table, target)
    n = table.n_rows
    rmse = np.full((repeats, fold_spec.k), np.nan)
    errors: list[str] = []
    for r in range(repeats):
        plan = make_folds(n, fold_spec.k, fold_spec.mode, repeat_seed(seed, r))
        for f, (train, test) in enumerate(plan.rotations()):
            norm = dataio.fit_zscore(table, train)
            X = dataio.apply_zscore(table, norm).rows
            try:
                model = _fit_baseline(model_spec, X[train], y[train])
                pred = baselines.predict(model, X[test])
            except Exception as exc:  # noqa: BLE001 - recorded per fold by contract
                errors.append(f"repeat {r} fold {f}: {exc}")
                continue
            rmse[r, f] = rmse_percent(y[test], pred)
    mean, std = _aggregate(rmse)
    return EvalReport(
        target=target,
        dataset=dataset,
        model=model_spec["model"],
        params=_baseline_params(model_spec),
        training_pct=fold_spec.training_pct,
        rmse=rmse,
        rmse_mean=mean,
        rmse_std=std,
        nonconverged_count=0,
        fold_errors=errors,
    )


@dataclass(frozen=True)
class SweepOptimum:
    training_pct: float
    p: float
    k: int
    rmse_mean: float


@dataclass
class SweepResult:
    reports: list[EvalReport]
    optima: list[SweepOptimum]


DEFAULT_P_GRID = tuple(np.arange(2.0, 10.01, 0.5))
DEFAULT_K_GRID = tuple(range(10, 61, 5))
DEFAULT_TRAINING_PCTS = (5.0, 10.0, 20.0, 25.0, 33.0, 50.0, 80.0)


def sweep(
    table: dataio.FeatureTable,
    target: str,
    p_grid: tuple[float, ...] = DEFAULT_P_GRID,
    k_grid: tuple[int, ...] = DEFAULT_K_GRID,
    training_pcts: tuple[float, ...] = DEFAULT_TRAINING_PCTS,
    repeats: int = 10,
    seed: int = 0,
    eps_mode: EpsilonMode | None = None,
    tol: float = 1e-6,
    max_iter: int = 100_000,
    dataset: str = "combined",
) -> SweepResult:
    """Grid evaluation over (p, k, training %): one report per cell plus the
    argmin-RMSE (p, k) per training percentage among valid cells.

    The graph for each k is built once and shared across p and training
    percentages.  Cells whose folds all fail stay in the report list but are
    excluded from the optima.
    """
    y = _target_values(table, target)
    norm = dataio.fit_zscore(table)
    points = dataio.apply_zscore(table, norm).rows

    reports: list[EvalReport] = []
    for k in k_grid:
        g = knn_graph(points, k, eps_mode)
        for pct in training_pcts:
            fold_spec = fold_spec_for_training_pct(pct)
            for p in p_grid:
                cfg = SolverConfig(p=p, tol=tol, max_iter=max_iter)
                rmse, nonconverged, errors = _eval_plaplace_on_graph(g, y, cfg, fold_spec, repeats, seed)
                mean, std = _aggregate(rmse)
                reports.append(
                    EvalReport(
                        target=target,
                        dataset=dataset,
                        model="plaplace",
                        params={"p": p, "k": k},
                        training_pct=pct,
                        rmse=rmse,
                        rmse_mean=mean,
                        rmse_std=std,
                        nonconverged_count=nonconverged,
                        fold_errors=errors,
                    )
                )

    optima: list[SweepOptimum] = []
    for pct in training_pcts:
        cells = [r for r in reports if r.training_pct == pct and r.valid]
        if not cells:
            continue
        best = min(cells, key=lambda r: r.rmse_mean)
        optima.append(
            SweepOptimum(training_pct=pct, p=best.params["p"], k=best.params["k"], rmse_mean=best.rmse_mean)
        )
    return SweepResult(reports=reports, optima=optima)


def optima_csv(optima: list[SweepOptimum]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["training_pct", "best_p", "best_k", "rmse_mean"])
    for o in optima:
        p = "inf" if math.isinf(o.p) else f"{o.p:.6g}"
        writer.writerow([f"{o.training_pct:.6g}", p, o.k, f"{o.rmse_mean:.12g}"])
    return buf.getvalue()


@dataclass
class AsymptoticSeries:
    """RMSE as a function of p for one graph (fixed k), ending at p = inf."""

    k: int
    p_values: list[float]
    rmse_mean: np.ndarray
    u_gap_inf: float  # max over folds of ||u(last finite p) - u(inf)||_inf
    rmse_gap: float  # |RMSE(last finite p) - RMSE(inf)|
    converged: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "p": ["inf" if math.isinf(p) else p for p in self.p_values],
            "rmse_mean": self.rmse_mean.tolist(),
            "u_gap_inf": self.u_gap_inf,
            "rmse_gap": self.rmse_gap,
            "converged": self.converged,
        }


def asymptotic_study(
    table: dataio.FeatureTable,
    target: str,
    k_list: tuple[int, ...] = (10, 30, 50),
    p_list: tuple[float, ...] = (2.0, 5.0, 10.0, 50.0, 100.0, 1000.0, math.inf),
    training_pct: float = 20.0,
    repeats: int = 1,
    seed: int = 0,
    eps_mode: EpsilonMode | None = None,
    tol: float = 1e-6,
    max_iter: int = 100_000,
    rmse_gap_tol: float = 0.5,
) -> list[AsymptoticSeries]:
    """Large-p behavior of the solver: RMSE(p) series per k, warm-started.

    p_list must be ascending and end with inf.  Each fold solves the whole
    p series with warm starts; the reported gaps compare the last finite p
    against the exact alpha=0 solve at p = inf.
    """
    p_list = tuple(p_list)
    if list(p_list) != sorted(p_list) or not math.isinf(p_list[-1]):
        raise ValueError("p_list must be ascending and end with inf")
    finite_count = sum(1 for p in p_list if not math.isinf(p))
    if finite_count == 0:
        raise ValueError("p_list needs at least one finite entry")

    y = _target_values(table, target)
    n = table.n_rows
    norm = dataio.fit_zscore(table)
    points = dataio.apply_zscore(table, norm).rows
    fold_spec = fold_spec_for_training_pct(training_pct)

    series: list[AsymptoticSeries] = []
    for k in k_list:
        g = knn_graph(points, k, eps_mode)
        per_p: list[list[float]] = [[] for _ in p_list]
        u_gap = 0.0
        for r in range(repeats):
            plan = make_folds(n, fold_spec.k, fold_spec.mode, repeat_seed(seed, r))
            for train, test in plan.rotations():
                labels = LabelAssignment(labeled=train, values=y[train], n=n)
                cfg = SolverConfig(p=p_list[0], tol=tol, max_iter=max_iter)
                sols = solve_sweep_p(g, labels, cfg, list(p_list))
                for i, sol in enumerate(sols):
                    per_p[i].append(rmse_percent(y[test], sol.u[test]))
                u_gap = max(u_gap, float(np.max(np.abs(sols[finite_count - 1].u - sols[-1].u))))
        rmse_mean = np.array([float(np.mean(v)) for v in per_p])
        rmse_gap = abs(rmse_mean[finite_count - 1] - rmse_mean[-1])
        series.append(
            AsymptoticSeries(
                k=k,
                p_values=list(p_list),
                rmse_mean=rmse_mean,
                u_gap_inf=u_gap,
                rmse_gap=float(rmse_gap),
                converged=bool(rmse_gap <= rmse_gap_tol),
            )
        )
    return series
