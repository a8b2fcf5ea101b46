"""Bootstrap-intersection model selection (Bolasso).

Each bootstrap replicate gets the full exact Lasso path; supports are read
off a shared grid of penalty levels, intersected across replicates (hard)
or thresholded on selection frequency (soft), and the selected variables
are refit by unpenalized least squares on the original data.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .lasso import DegenerateDesign, lars_lasso_path, path_coefs
from .numerics import as_index_set, min_norm_lstsq

DEFAULT_M = 128
MAX_RETRIES = 3


class NoPatternOfSizeR(LookupError):
    pass


def replicate_rng(seed, index, attempt=0):
    """Generator for replicate ``index``; independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index), int(attempt)]))


def log_grid(mu_max, n_points=64, min_ratio=1e-3):
    """``n_points`` log-spaced levels from ``mu_max`` down to ``mu_max * min_ratio``."""
    if mu_max <= 0:
        raise ValueError("mu_max must be positive to build a grid")
    return mu_max * np.logspace(0.0, np.log10(min_ratio), n_points)


def check_mu_grid(mu_grid):
    grid = np.asarray(mu_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("mu grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
        raise ValueError("mu grid must be positive and strictly decreasing")
    return grid


@dataclass(frozen=True)
class BolassoConfig:
    """Settings for :func:`run_bolasso`.

    The penalty grid is, in order of precedence: ``mu_grid`` as given;
    ``mu0 * n ** -0.5`` if ``mu0`` is set; otherwise ``n_grid`` log-spaced
    levels from the data's ``mu_max`` down to ``mu_max * min_ratio``.
    The same absolute levels are used for every replicate.
    """

    m: int = DEFAULT_M
    mu_grid: tuple = None
    mu0: tuple = None
    n_grid: int = 64
    min_ratio: float = 1e-3
    soft_fraction: float = 0.9
    seed: int = 0
    support_tol: float = 0.0
    n_jobs: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0 < self.soft_fraction <= 1:
            raise ValueError("soft_fraction must lie in (0, 1]")
        if self.support_tol < 0:
            raise ValueError("support_tol must be nonnegative")
        for name in ("mu_grid", "mu0"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) for v in check_mu_grid(value)))

    def grid_for(self, problem):
        if self.mu_grid is not None:
            return np.array(self.mu_grid)
        if self.mu0 is not None:
            return np.array(self.mu0) / np.sqrt(problem.n_samples)
        return log_grid(problem.mu_max, self.n_grid, self.min_ratio)


@dataclass(frozen=True, eq=False)
class BolassoStep:
    """Selection at one penalty level."""

    mu: float
    per_replicate_supports: list
    frequencies: np.ndarray
    hard_support: tuple
    soft_support: tuple
    refit_weights: np.ndarray
    soft_refit_weights: np.ndarray


@dataclass(frozen=True, eq=False)
class BolassoResult:
    mu_grid: np.ndarray
    selected: np.ndarray = field(repr=False)
    steps: list = field(repr=False)
    soft_fraction: float = 1.0

    @property
    def m(self):
        return self.selected.shape[0]

    @property
    def hard_supports(self):
        return [s.hard_support for s in self.steps]

    @property
    def soft_supports(self):
        return [s.soft_support for s in self.steps]

    @property
    def frequencies(self):
        """Selection frequency per (mu, variable)."""
        return np.vstack([s.frequencies for s in self.steps])

    def prefix_hard_supports(self, m):
        """Hard supports using only the first ``m`` replicates."""
        keep = self.selected[:m].all(axis=0)
        return [tuple(int(j) for j in np.flatnonzero(row)) for row in keep]


def bootstrap_sample(problem, rng):
    """Draw ``n`` rows uniformly with replacement, keeping ``(x_i, y_i)`` pairs."""
    n = problem.n_samples
    return problem.take(rng.integers(0, n, size=n))


def soft_intersect(supports, fraction, p):
    """Variables present in at least ``fraction`` of ``supports``.

    ``fraction = 1`` is the plain intersection.
    """
    if not supports:
        raise ValueError("need at least one support")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    counts = np.zeros(p, dtype=int)
    for s in supports:
        counts[list(as_index_set(s, p))] += 1
    return _threshold(counts, len(supports), fraction)


def _threshold(counts, m, fraction):
    # integer comparison avoids 0.9 * 10 < 9 style rounding
    need = int(np.ceil(fraction * m - 1e-9))
    return tuple(int(j) for j in np.flatnonzero(counts >= max(need, 1)))


def ols_refit(problem, support):
    """Minimum-norm least squares on the ``support`` columns, zero elsewhere."""
    support = list(as_index_set(support, problem.n_features))
    w = np.zeros(problem.n_features)
    if support:
        w[support] = min_norm_lstsq(problem.X[:, support], problem.y)
    return w


def _replicate_selection(problem, grid, seed, index, tol):
    for attempt in range(MAX_RETRIES + 1):
        rng = replicate_rng(seed, index, attempt)
        sample = bootstrap_sample(problem, rng)
        try:
            path = lars_lasso_path(sample)
        except DegenerateDesign:
            if attempt == MAX_RETRIES:
                raise
            continue
        floor = path.mus[-1]
        if floor > grid[-1]:
            raise DegenerateDesign(f"replicate {index}: path stopped at mu={floor}")
        return np.abs(path_coefs(path, grid)) > tol


def run_bolasso(problem, config=None):
    """Run Bolasso on ``problem`` over the configured penalty grid.

    Returns
    -------
    BolassoResult
        One :class:`BolassoStep` per grid level, plus the raw
        (replicate, level, variable) selection indicator array.
    """
    config = BolassoConfig() if config is None else config
    grid = check_mu_grid(config.grid_for(problem))
    if config.n_jobs == 1:
        sel = [_replicate_selection(problem, grid, config.seed, k, config.support_tol)
               for k in range(config.m)]
    else:
        sel = Parallel(n_jobs=config.n_jobs)(
            delayed(_replicate_selection)(problem, grid, config.seed, k, config.support_tol)
            for k in range(config.m))
    selected = np.stack(sel)
    return aggregate(problem, grid, selected, config.soft_fraction)


def aggregate(problem, grid, selected, soft_fraction):
    """Fold per-replicate selections into a :class:`BolassoResult`."""
    m, _, p = selected.shape
    counts = selected.sum(axis=0)
    steps = []
    refits = {}
    for i, mu in enumerate(grid):
        hard = tuple(int(j) for j in np.flatnonzero(counts[i] == m))
        soft = _threshold(counts[i], m, soft_fraction)
        for s in (hard, soft):
            if s not in refits:
                refits[s] = ols_refit(problem, s)
        steps.append(BolassoStep(
            mu=float(mu),
            per_replicate_supports=[tuple(int(j) for j in np.flatnonzero(selected[k, i]))
                                    for k in range(m)],
            frequencies=counts[i] / m,
            hard_support=hard,
            soft_support=soft,
            refit_weights=refits[hard].copy(),
            soft_refit_weights=refits[soft].copy(),
        ))
    return BolassoResult(np.asarray(grid), selected, steps, soft_fraction)


def most_stable_pattern(supports, r):
    """The size-``r`` support that occurs at the most grid levels.

    ``supports`` is a BolassoResult (its hard supports are used) or a list
    of supports ordered by decreasing penalty. Ties go to the pattern seen
    first, i.e. at the larger penalty.
    """
    if isinstance(supports, BolassoResult):
        supports = supports.hard_supports
    candidates = [tuple(s) for s in supports if len(s) == r]
    if not candidates:
        raise NoPatternOfSizeR(f"no grid level has a support of size {r}")
    counts = Counter(candidates)
    best = max(counts.values())
    return next(s for s in candidates if counts[s] == best)
