"""Graph-based semi-supervised regression via the game-theoretic p-Laplacian."""

from .baselines import LssvrModel, RidgeModel, lssvr_fit, polynomial_expand, predict, ridge_fit
from .dataio import (
    FeatureTable,
    NormalizationParams,
    apply_zscore,
    drop_incomplete,
    filter_dataset,
    fit_zscore,
    load_csv,
    load_schema,
    pearson_rank,
    write_csv,
)
from .evaluation import (
    EvalReport,
    FoldSpec,
    GraphConfig,
    asymptotic_study,
    make_folds,
    rmse_percent,
    run_baseline_eval,
    run_plaplace_eval,
    sweep,
)
from .graph import (
    GlobalEpsilon,
    SelfTuningEpsilon,
    WeightedGraph,
    assert_labels_cover_components,
    connected_components,
    euclidean_distance,
    gaussian_weight,
    graph_from_edges,
    knn_graph,
)
from .plaplace import (
    LabelAssignment,
    Solution,
    SolverConfig,
    alpha_of_p,
    dpp_update,
    solve,
    solve_p2_direct,
    solve_sweep_p,
)
from .synth import GaussianBlobs, LinearCombo, ManifoldCurve, SmoothNonlinear, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "FeatureTable", "NormalizationParams", "load_csv", "load_schema", "write_csv",
    "drop_incomplete", "filter_dataset", "fit_zscore", "apply_zscore", "pearson_rank",
    "WeightedGraph", "GlobalEpsilon", "SelfTuningEpsilon", "euclidean_distance",
    "gaussian_weight", "knn_graph", "graph_from_edges", "connected_components",
    "assert_labels_cover_components",
    "LabelAssignment", "SolverConfig", "Solution", "alpha_of_p", "dpp_update",
    "solve", "solve_p2_direct", "solve_sweep_p",
    "RidgeModel", "LssvrModel", "polynomial_expand", "ridge_fit", "lssvr_fit", "predict",
    "FoldSpec", "GraphConfig", "EvalReport", "rmse_percent", "make_folds",
    "run_plaplace_eval", "run_baseline_eval", "sweep", "asymptotic_study",
    "SynthSpec", "GaussianBlobs", "ManifoldCurve", "LinearCombo", "SmoothNonlinear", "generate",
]
