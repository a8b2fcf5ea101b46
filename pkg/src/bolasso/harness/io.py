"""CSV ingestion, standardization and deterministic table output."""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..lasso import LassoProblem

MISSING = {"", "na", "nan", "?", "null", "none"}


class DataError(ValueError):
    """Base class for input-data problems (CLI exit code 3)."""


class ParseError(DataError):
    pass


class MissingTarget(DataError):
    pass


class AllRowsDropped(DataError):
    pass


@dataclass(frozen=True, eq=False)
class LoadedData:
    problem: LassoProblem
    feature_names: list
    target_name: str
    n_dropped: int


def _is_missing(cell):
    return cell.strip().lower() in MISSING


def load_csv(path, target, delimiter=","):
    """Read a numeric CSV with a header row into a :class:`LoadedData`.

    ``target`` is a column name or a zero-based column index (an int, or
    a string of digits that is not itself a column name). Rows with any
    missing cell are dropped and counted; a column holding non-numeric
    values is an error.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]

    if isinstance(target, str) and target in header:
        t = header.index(target)
    else:
        try:
            t = int(target)
        except (TypeError, ValueError):
            raise MissingTarget(f"{path}: no column named {target!r}") from None
        if not -len(header) <= t < len(header):
            raise MissingTarget(f"{path}: column index {t} out of range ({len(header)} columns)")
        t %= len(header)

    bad_cols = {}
    values = []
    dropped = 0
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        parsed = []
        missing = False
        for col, cell in enumerate(row):
            if _is_missing(cell):
                missing = True
                parsed.append(np.nan)
                continue
            try:
                parsed.append(float(cell))
            except ValueError:
                bad_cols.setdefault(header[col], (lineno, cell))
                parsed.append(np.nan)
        if missing:
            dropped += 1
        else:
            values.append(parsed)
    if bad_cols:
        detail = ", ".join(f"{name!r} (line {ln}: {cell!r})" for name, (ln, cell) in bad_cols.items())
        raise ParseError(f"{path}: non-numeric columns: {detail}")
    if not values:
        raise AllRowsDropped(f"{path}: no complete rows ({dropped} dropped)")
    data = np.array(values, dtype=float)
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite values present")
    features = [j for j in range(len(header)) if j != t]
    if not features:
        raise ParseError(f"{path}: no feature columns besides the target")
    problem = LassoProblem(data[:, features], data[:, t])
    return LoadedData(problem, [header[j] for j in features], header[t], dropped)


class Standardizer(TransformerMixin, BaseEstimator):
    """Center columns and response, scale columns to unit standard deviation.

    Constant columns are dropped; their indices are kept in
    ``dropped_columns_``.
    """

    def fit(self, X, y=None):
        X = check_array(X)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.kept_columns_ = np.flatnonzero(np.ptp(X, axis=0) > 0)
        self.dropped_columns_ = np.flatnonzero(np.ptp(X, axis=0) == 0)
        self.scale_ = np.where(std > 0, std, 1.0)
        self.y_mean_ = 0.0 if y is None else float(np.mean(y))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        k = self.kept_columns_
        return (X[:, k] - self.mean_[k]) / self.scale_[k]

    def transform_target(self, y):
        check_is_fitted(self)
        return np.asarray(y, dtype=float) - self.y_mean_

    def predict(self, X, coef):
        """Raw-scale predictions from coefficients fit on standardized data.

        ``coef`` may be a vector or a (k, p_kept) stack of vectors.
        """
        return self.transform(X) @ np.asarray(coef).T + self.y_mean_


def standardize(problem):
    """Return ``(standardized problem, fitted Standardizer)``."""
    if problem.n_samples < 2:
        raise ValueError("standardization needs at least 2 rows")
    st = Standardizer().fit(problem.X, problem.y)
    Xs = st.transform(problem.X)
    ys = st.transform_target(problem.y)
    # recentring removes the last roundoff from the mean subtraction
    Xs = Xs - Xs.mean(axis=0)
    ys = ys - ys.mean()
    return LassoProblem(Xs, ys, centered=True, scaled=Xs.shape[1] > 0), st


def fmt(value):
    """Round-trip text for a table cell."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (tuple, list)):
        return " ".join(str(int(v)) for v in value)
    return str(value)


def write_table(path, header, rows, fmt_kind="csv"):
    """Write rows as CSV (header + rows) or JSON (list of records)."""
    path = Path(path)
    if fmt_kind == "json":
        path = path.with_suffix(".json")
        records = [{h: _jsonable(v) for h, v in zip(header, r)} for r in rows]
        path.write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")
        return path
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, tuple):
        return [int(x) for x in v]
    return v


def write_problem_csv(path, problem, feature_names=None, target_name="y"):
    names = feature_names or [f"x{j}" for j in range(problem.n_features)]
    rows = [list(x) + [yv] for x, yv in zip(problem.X, problem.y)]
    return write_table(path, list(names) + [target_name], rows)
