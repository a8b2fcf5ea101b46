"""Repeated k-fold cross-validation of the regression methods.

Every method has one regularization parameter scanned on a fixed grid.
Grids are anchored on the standardized full dataset so that all folds
share them; the selected parameter minimizes held-out MSE pooled over
all replication x fold cells.
"""

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..baselines import ridge
from ..bootstrap import BolassoConfig, bootstrap_sample, log_grid, replicate_rng, run_bolasso
from ..lasso import lars_lasso_path, path_coefs
from ..numerics import as_index_set
from .io import standardize

METHODS = ("ridge", "lasso", "bolasso", "bagging", "bolasso-s", "null")
DEFAULT_METHODS = ("ridge", "lasso", "bolasso", "bagging", "bolasso-s")


def fold_sizes(n, folds):
    """Balanced fold sizes: the first ``n % folds`` folds get one extra row."""
    base, extra = divmod(n, folds)
    return [base + 1 if f < extra else base for f in range(folds)]


def partition(n, folds, rng):
    """Shuffle ``range(n)`` and cut it into ``folds`` held-out index arrays."""
    perm = rng.permutation(n)
    bounds = np.cumsum([0] + fold_sizes(n, folds))
    return [np.sort(perm[bounds[f]:bounds[f + 1]]) for f in range(folds)]


def parameter_grid(method, problem, n_grid=32, min_ratio=1e-3):
    """Grid for ``method`` anchored on the standardized ``problem``."""
    if method == "null":
        return np.array([0.0])
    if method == "ridge":
        scale = float(np.trace(problem.gram)) / problem.n_features
        return scale * np.logspace(2, -4, n_grid)
    return log_grid(problem.mu_max, n_grid, min_ratio)


@dataclass(frozen=True)
class CvSettings:
    folds: int = 10
    replications: int = 10
    seed: int = 0
    m: int = 128
    soft_fraction: float = 0.9
    n_grid: int = 32
    min_ratio: float = 1e-3
    n_jobs: int = 1


@dataclass(frozen=True, eq=False)
class MethodReport:
    method: str
    grid: np.ndarray
    cell_mse: np.ndarray = field(repr=False)
    """Held-out MSE, shape (len(grid), replications * folds)."""

    @property
    def best_index(self):
        return int(np.argmin(self.cell_mse.mean(axis=1)))

    @property
    def best_param(self):
        return float(self.grid[self.best_index])

    @property
    def mean_x100(self):
        return 100.0 * float(self.cell_mse[self.best_index].mean())

    @property
    def std_x100(self):
        cells = self.cell_mse[self.best_index]
        return 100.0 * float(cells.std(ddof=1)) if cells.size > 1 else 0.0


@dataclass(frozen=True, eq=False)
class CvReport:
    settings: CvSettings
    methods: dict

    @property
    def n_cells(self):
        return self.settings.folds * self.settings.replications

    def rows(self):
        return [(name, r.mean_x100, r.std_x100, r.best_param, r.cell_mse.shape[1])
                for name, r in self.methods.items()]


def _bagging_coefs(train, grid, seed, m):
    total = np.zeros((len(grid), train.n_features))
    for k in range(m):
        sample = bootstrap_sample(train, replicate_rng(seed, k))
        total += path_coefs(lars_lasso_path(sample), grid)
    return total / m


def _cell(problem, test_idx, methods, grids, settings, cell_seed):
    mask = np.ones(problem.n_samples, dtype=bool)
    mask[test_idx] = False
    train_raw = problem.take(np.flatnonzero(mask))
    train, st = standardize(train_raw)
    X_test = problem.X[test_idx]
    y_test = problem.y[test_idx]
    out = {}
    bolasso_cache = None
    for method in methods:
        grid = grids[method]
        if method == "null":
            coefs = np.zeros((1, train.n_features))
        elif method == "ridge":
            coefs = np.vstack([ridge(train, lam) for lam in grid])
        elif method == "lasso":
            coefs = path_coefs(lars_lasso_path(train), grid)
        elif method == "bagging":
            coefs = _bagging_coefs(train, grid, cell_seed, settings.m)
        else:
            if bolasso_cache is None:
                bolasso_cache = run_bolasso(train, BolassoConfig(
                    m=settings.m, mu_grid=tuple(grid), seed=cell_seed,
                    soft_fraction=settings.soft_fraction))
            key = "soft_refit_weights" if method == "bolasso-s" else "refit_weights"
            coefs = np.vstack([getattr(s, key) for s in bolasso_cache.steps])
        pred = st.predict(X_test, coefs)
        out[method] = np.mean((pred - y_test[:, None]) ** 2, axis=0)
    return out


def kfold_cv(problem, methods=DEFAULT_METHODS, settings=None):
    """Repeated k-fold CV; returns a :class:`CvReport`.

    Each fold standardizes its training rows, fits every method on the
    whole parameter grid and scores raw-scale predictions on the held-out
    rows.
    """
    settings = CvSettings() if settings is None else settings
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
    if settings.folds < 2:
        raise ValueError("need at least 2 folds")
    if problem.n_samples < settings.folds:
        raise ValueError(f"n={problem.n_samples} is smaller than folds={settings.folds}")
    full, _ = standardize(problem)
    # Bolasso and Bolasso-S share one bootstrap run, hence one grid
    grids = {m: parameter_grid(m, full, settings.n_grid, settings.min_ratio) for m in methods}

    jobs = []
    for rep in range(settings.replications):
        rng = np.random.default_rng(np.random.SeedSequence([settings.seed, rep]))
        for f, test_idx in enumerate(partition(problem.n_samples, settings.folds, rng)):
            cell_seed = int(np.random.SeedSequence([settings.seed, rep, f]).generate_state(1)[0])
            jobs.append((test_idx, cell_seed))
    if settings.n_jobs == 1:
        cells = [_cell(problem, t, methods, grids, settings, s) for t, s in jobs]
    else:
        cells = Parallel(n_jobs=settings.n_jobs)(
            delayed(_cell)(problem, t, methods, grids, settings, s) for t, s in jobs)
    reports = {m: MethodReport(m, grids[m], np.column_stack([c[m] for c in cells]))
               for m in methods}
    return CvReport(settings, reports)


def selection_error(estimated, truth, p):
    """Squared distance between support indicator vectors."""
    a = np.zeros(p, dtype=int)
    b = np.zeros(p, dtype=int)
    a[list(as_index_set(estimated, p))] = 1
    b[list(as_index_set(truth, p))] = 1
    return int(np.sum((a - b) ** 2))
