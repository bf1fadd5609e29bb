"""Closed-form supervised baselines: ridge, polynomial ridge, and LSSVR.

Both model families train by solving one linear system.  Ridge runs on a
polynomial expansion of the features, standardized per column after
expansion, with an unpenalized intercept.  LSSVR solves the standard
least-squares SVM dual saddle system with an RBF kernel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .graph import DimensionMismatch


class UnsupportedDegree(ValueError):
    pass


class SingularNormalMatrix(ValueError):
    """Normal equations are rank-deficient (only possible at lambda = 0)."""


class SingularKernelSystem(ValueError):
    """LSSVR saddle system could not be factorized (e.g. duplicate points at extreme c)."""


class IllConditionedWarning(UserWarning):
    pass


CONDITION_WARN_THRESHOLD = 1e12

# default LSSVR search grid, covering the commonly swept region
DEFAULT_LSSVR_C_GRID = (10.0, 25.0, 100.0, 250.0, 500.0, 1000.0)
DEFAULT_LSSVR_GAMMA_GRID = (0.001, 0.01)


@dataclass(frozen=True)
class RidgeModel:
    coefficients: np.ndarray
    intercept: float
    degree: int
    lam: float
    # standardization of the expanded design, applied again at predict time
    expanded_mean: np.ndarray = field(repr=False)
    expanded_sd: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LssvrModel:
    dual_coefficients: np.ndarray
    bias: float
    gamma: float
    c: float
    training_points: np.ndarray = field(repr=False)


def expanded_dimension(m: int, degree: int) -> int:
    """Number of monomials of total degree 1..degree in m variables."""
    return comb(m + degree, degree) - 1


def polynomial_expand(x: np.ndarray, degree: int) -> np.ndarray:
    """All monomials of total degree <= degree, constant term excluded.

    Works on a single vector or a (n, m) matrix.  Ordering is graded
    lexicographic: for (a, b) at degree 2 the columns are a, b, a^2, ab, b^2.
    """
    if degree not in (1, 2, 3):
        raise UnsupportedDegree(f"degree must be 1, 2 or 3, got {degree}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    m = X.shape[1]
    cols = [X]
    for d in range(2, degree + 1):
        prods = [np.prod(X[:, combo], axis=1) for combo in combinations_with_replacement(range(m), d)]
        cols.append(np.column_stack(prods))
    out = np.hstack(cols)
    return out[0] if single else out


def _standardize(E: np.ndarray, mean: np.ndarray, sd: np.ndarray) -> np.ndarray:
    safe = np.where(sd == 0, 1.0, sd)
    Z = (E - mean) / safe
    Z[:, sd == 0] = 0.0
    return Z


def ridge_fit(X: np.ndarray, y: np.ndarray, lam: float, degree: int = 1) -> RidgeModel:
    """Minimize ||y - Z beta - b||^2 + lam ||beta||^2 over the expanded design.

    Z is the per-column standardized polynomial expansion of X; the
    intercept b is unpenalized and equals mean(y) on the centered design.
    Solved by Cholesky on the normal equations; a condition number above
    1e12 emits IllConditionedWarning.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    E = polynomial_expand(X, degree)
    mean = E.mean(axis=0)
    sd = E.std(axis=0)
    Z = _standardize(E, mean, sd)

    A = Z.T @ Z + lam * np.eye(Z.shape[1])
    rhs = Z.T @ (y - y.mean())
    eigs = scipy.linalg.eigvalsh(A)
    if eigs[0] > 0 and eigs[-1] / eigs[0] > CONDITION_WARN_THRESHOLD:
        warnings.warn(
            f"normal matrix condition {eigs[-1] / eigs[0]:.2e} exceeds {CONDITION_WARN_THRESHOLD:.0e}",
            IllConditionedWarning,
        )
    try:
        factor = scipy.linalg.cho_factor(A)
        beta = scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalMatrix(f"normal equations singular at lambda={lam}: {exc}") from exc
    return RidgeModel(
        coefficients=beta,
        intercept=float(y.mean()),
        degree=degree,
        lam=float(lam),
        expanded_mean=mean,
        expanded_sd=sd,
    )


def _rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def lssvr_fit(X: np.ndarray, y: np.ndarray, gamma: float, c: float) -> LssvrModel:
    """Fit least-squares SVR by solving [[0, 1^T], [1, K + I/c]] [b; a] = [0; y].

    K is the RBF kernel exp(-gamma ||x_i - x_j||^2).  The dual weights a and
    bias b are exact up to the linear solve.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if gamma <= 0 or c <= 0:
        raise ValueError(f"gamma and c must be positive, got gamma={gamma}, c={c}")
    n = X.shape[0]
    K = _rbf_kernel(X, X, gamma)
    A = np.zeros((n + 1, n + 1))
    A[0, 1:] = 1.0
    A[1:, 0] = 1.0
    A[1:, 1:] = K + np.eye(n) / c
    rhs = np.concatenate(([0.0], y))
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularKernelSystem(f"saddle system singular (gamma={gamma}, c={c}): {exc}") from exc
    return LssvrModel(
        dual_coefficients=sol[1:],
        bias=float(sol[0]),
        gamma=float(gamma),
        c=float(c),
        training_points=X.copy(),
    )


def predict(model: RidgeModel | LssvrModel, X: np.ndarray) -> np.ndarray:
    """Evaluate a fitted model on new rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[0] == 0:
        return np.zeros(0)
    if isinstance(model, RidgeModel):
        E = polynomial_expand(X, model.degree)
        if E.shape[1] != model.coefficients.shape[0]:
            raise DimensionMismatch(
                f"expanded dimension {E.shape[1]} != coefficient length {model.coefficients.shape[0]}"
            )
        Z = _standardize(E, model.expanded_mean, model.expanded_sd)
        return Z @ model.coefficients + model.intercept
    if isinstance(model, LssvrModel):
        if X.shape[1] != model.training_points.shape[1]:
            raise DimensionMismatch(
                f"feature dimension {X.shape[1]} != training dimension {model.training_points.shape[1]}"
            )
        Kt = _rbf_kernel(X, model.training_points, model.gamma)
        return Kt @ model.dual_coefficients + model.bias
    raise TypeError(f"unknown model type {type(model).__name__}")


def model_json(model: RidgeModel | LssvrModel) -> dict:
    """JSON-ready dump: kind, hyperparameters, coefficients."""
    if isinstance(model, RidgeModel):
        return {
            "kind": "ridge",
            "degree": model.degree,
            "lambda": model.lam,
            "intercept": model.intercept,
            "coefficients": model.coefficients.tolist(),
        }
    return {
        "kind": "lssvr",
        "gamma": model.gamma,
        "c": model.c,
        "bias": model.bias,
        "dual_coefficients": model.dual_coefficients.tolist(),
    }
