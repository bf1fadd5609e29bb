"""Tabular dataset loading, cleaning, normalization, filtering and feature ranking.

The on-disk format is plain CSV (UTF-8, comma-separated, header row, quoted
fields allowed) plus a JSON schema mapping each column name to one of the
roles "feature", "target", "categorical" or "ignore".
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROLES = ("feature", "target", "categorical", "ignore")

# Cell contents treated as a missing value (case-insensitive).
MISSING_MARKERS = frozenset({"", "na", "nan"})


class MalformedCsv(ValueError):
    """Ragged row or unparseable numeric cell."""


class UnknownColumn(ValueError):
    """Schema and CSV header disagree, or a filter names an absent column."""


class EmptyAfterCleaning(ValueError):
    """No complete rows remain; the dataset is unusable."""


class EmptyFitSet(ValueError):
    """Normalization requested over an empty row set."""


class ZeroVariance(ValueError):
    """Correlation target is constant."""


class ConstantColumnWarning(UserWarning):
    """A feature column has zero spread; it z-scores to all zeros."""


@dataclass(frozen=True)
class FeatureTable:
    """Row-per-subject table: numeric features, named targets, text categoricals.

    ``rows`` is an (n, m) float matrix aligned with ``column_names``; missing
    entries are NaN until :func:`drop_incomplete` removes them.  Targets and
    categoricals are stored as separate named columns of length n.
    """

    column_names: list[str]
    rows: np.ndarray
    targets: dict[str, np.ndarray]
    categorical: dict[str, np.ndarray]

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def take(self, row_idx: np.ndarray) -> "FeatureTable":
        """Row-subset view of the table (features, targets, categoricals)."""
        return FeatureTable(
            column_names=list(self.column_names),
            rows=self.rows[row_idx],
            targets={k: v[row_idx] for k, v in self.targets.items()},
            categorical={k: v[row_idx] for k, v in self.categorical.items()},
        )


@dataclass(frozen=True)
class NormalizationParams:
    """Per-feature-column mean and population standard deviation (divisor n)."""

    mean: np.ndarray
    sd: np.ndarray


def load_schema(path: str | Path) -> dict[str, str]:
    """Read a JSON column-role map and validate the role names."""
    with open(path, encoding="utf-8") as f:
        schema = json.load(f)
    for col, role in schema.items():
        if role not in ROLES:
            raise UnknownColumn(f"column {col!r} has invalid role {role!r}; expected one of {ROLES}")
    return schema


def _parse_cell(raw: str, column: str, line_no: int) -> float:
    text = raw.strip()
    if text.lower() in MISSING_MARKERS:
        return np.nan
    try:
        return float(text)
    except ValueError:
        raise MalformedCsv(f"line {line_no}: cell {raw!r} in column {column!r} is not numeric") from None


def load_csv(path: str | Path, schema: dict[str, str]) -> FeatureTable:
    """Load a CSV file into a FeatureTable using a column-role schema.

    Every header column must appear in the schema and every schema column in
    the header.  Missing numeric cells (empty, "NA", "NaN") load as NaN; they
    are removed later by :func:`drop_incomplete`, never imputed.

    Raises MalformedCsv on ragged rows or unparseable numeric cells and
    UnknownColumn on schema/header mismatches.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: file is empty, expected a header row") from None
        header = [h.strip() for h in header]

        missing_from_schema = [c for c in header if c not in schema]
        if missing_from_schema:
            raise UnknownColumn(f"header columns not named in schema: {missing_from_schema}")
        missing_from_header = [c for c in schema if c not in header]
        if missing_from_header:
            raise UnknownColumn(f"schema names absent header columns: {missing_from_header}")

        feature_cols = [c for c in header if schema[c] == "feature"]
        target_cols = [c for c in header if schema[c] == "target"]
        cat_cols = [c for c in header if schema[c] == "categorical"]
        col_pos = {c: i for i, c in enumerate(header)}

        feat_rows: list[list[float]] = []
        targ_rows: dict[str, list[float]] = {c: [] for c in target_cols}
        cat_rows: dict[str, list[str]] = {c: [] for c in cat_cols}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue  # trailing blank line
            if len(row) != len(header):
                raise MalformedCsv(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
            feat_rows.append([_parse_cell(row[col_pos[c]], c, line_no) for c in feature_cols])
            for c in target_cols:
                targ_rows[c].append(_parse_cell(row[col_pos[c]], c, line_no))
            for c in cat_cols:
                cat_rows[c].append(row[col_pos[c]].strip())

    n = len(feat_rows)
    return FeatureTable(
        column_names=feature_cols,
        rows=np.asarray(feat_rows, dtype=float).reshape(n, len(feature_cols)),
        targets={c: np.asarray(v, dtype=float) for c, v in targ_rows.items()},
        categorical={c: np.asarray(v, dtype=object) for c, v in cat_rows.items()},
    )


def write_csv(table: FeatureTable, path: str | Path) -> None:
    """Write a table back to the CSV format :func:`load_csv` consumes."""
    header = list(table.column_names) + list(table.targets) + list(table.categorical)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(table.n_rows):
            row = [repr(float(v)) for v in table.rows[i]]
            row += [repr(float(table.targets[c][i])) for c in table.targets]
            row += [str(table.categorical[c][i]) for c in table.categorical]
            writer.writerow(row)


def schema_of(table: FeatureTable) -> dict[str, str]:
    """Column-role map matching what :func:`write_csv` emits."""
    schema = {c: "feature" for c in table.column_names}
    schema.update({c: "target" for c in table.targets})
    schema.update({c: "categorical" for c in table.categorical})
    return schema


def missing_counts(table: FeatureTable) -> dict[str, int]:
    """Per-column count of missing (NaN) entries in features and targets."""
    counts = {c: int(np.isnan(table.rows[:, j]).sum()) for j, c in enumerate(table.column_names)}
    counts.update({c: int(np.isnan(v).sum()) for c, v in table.targets.items()})
    return counts


def complete_row_mask(table: FeatureTable) -> np.ndarray:
    mask = ~np.isnan(table.rows).any(axis=1)
    for v in table.targets.values():
        mask &= ~np.isnan(v)
    return mask


def drop_incomplete(table: FeatureTable) -> FeatureTable:
    """Remove every row with a missing feature or target entry, order preserved."""
    mask = complete_row_mask(table)
    if not mask.any():
        raise EmptyAfterCleaning("no rows remain after removing incomplete entries")
    return table.take(np.flatnonzero(mask))


def filter_dataset(table: FeatureTable, column: str | None = None, value: str | None = None) -> FeatureTable:
    """Select rows where a categorical column equals ``value``.

    ``column=None`` is the all-pass selector (the combined dataset).  An
    absent level yields an empty table, which is valid; an absent column
    raises UnknownColumn.
    """
    if column is None:
        return table.take(np.arange(table.n_rows))
    if column not in table.categorical:
        raise UnknownColumn(f"categorical column {column!r} not in table (have {sorted(table.categorical)})")
    mask = table.categorical[column] == value
    return table.take(np.flatnonzero(mask))


def fit_zscore(table: FeatureTable, rows: np.ndarray | None = None) -> NormalizationParams:
    """Per-column mean and population sd computed over the given rows only.

    ``rows=None`` fits on all rows (the transductive default for the graph
    solver); supervised baselines pass the training fold indices instead.
    """
    if rows is None:
        sub = table.rows
    else:
        rows = np.asarray(rows)
        if rows.size == 0:
            raise EmptyFitSet("cannot fit normalization on an empty row set")
        sub = table.rows[rows]
    if sub.shape[0] == 0:
        raise EmptyFitSet("cannot fit normalization on an empty table")
    return NormalizationParams(mean=sub.mean(axis=0), sd=sub.std(axis=0))


def apply_zscore(table: FeatureTable, params: NormalizationParams) -> FeatureTable:
    """Map each feature entry x to (x - mean) / sd; zero-sd columns map to 0."""
    if params.mean.shape[0] != table.n_features:
        raise ValueError(
            f"params cover {params.mean.shape[0]} columns, table has {table.n_features}"
        )
    degenerate = params.sd == 0
    if degenerate.any():
        names = [table.column_names[j] for j in np.flatnonzero(degenerate)]
        warnings.warn(f"constant feature columns z-score to zero: {names}", ConstantColumnWarning)
    safe_sd = np.where(degenerate, 1.0, params.sd)
    z = (table.rows - params.mean) / safe_sd
    z[:, degenerate] = 0.0
    return FeatureTable(
        column_names=list(table.column_names),
        rows=z,
        targets=dict(table.targets),
        categorical=dict(table.categorical),
    )


def pearson_rank(table: FeatureTable, target: str, top_n: int) -> list[tuple[str, float]]:
    """Rank features by |Pearson r| against a target column, descending.

    A constant feature gets r = 0; a constant target raises ZeroVariance.
    Ties in |r| keep the original column order.  Returns the top_n
    (column name, signed r) pairs.
    """
    if target not in table.targets:
        raise UnknownColumn(f"target column {target!r} not in table (have {sorted(table.targets)})")
    if top_n > table.n_features:
        raise ValueError(f"top_n={top_n} exceeds feature count {table.n_features}")
    y = table.targets[target]
    yc = y - y.mean()
    sy = np.sqrt((yc**2).sum())
    if sy == 0:
        raise ZeroVariance(f"target {target!r} is constant; correlations are undefined")
    xc = table.rows - table.rows.mean(axis=0)
    sx = np.sqrt((xc**2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (xc.T @ yc) / (sx * sy)
    r = np.where(sx == 0, 0.0, r)
    # stable sort on -|r| keeps column order for ties
    order = np.argsort(-np.abs(r), kind="stable")[:top_n]
    return [(table.column_names[j], float(r[j])) for j in order]


def select_features(table: FeatureTable, names: list[str]) -> FeatureTable:
    """Restrict the feature matrix to the named columns (targets untouched)."""
    pos = {c: j for j, c in enumerate(table.column_names)}
    missing = [c for c in names if c not in pos]
    if missing:
        raise UnknownColumn(f"feature columns not in table: {missing}")
    idx = [pos[c] for c in names]
    return FeatureTable(
        column_names=list(names),
        rows=table.rows[:, idx],
        targets=dict(table.targets),
        categorical=dict(table.categorical),
    )
