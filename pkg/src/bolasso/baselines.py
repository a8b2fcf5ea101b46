"""Comparison estimators and variable selectors."""

from dataclasses import dataclass

import numpy as np

from .bootstrap import bootstrap_sample, ols_refit, replicate_rng
from .lasso import LassoProblem, lars_lasso_path, path_at
from .numerics import NotPositiveDefinite, as_index_set, min_norm_lstsq, solve_spd


class AllWeightsZero(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SelectorOutput:
    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = as_index_set(self.support, w.size)
        off = np.ones(w.size, dtype=bool)
        off[list(s)] = False
        if np.any(np.abs(w[off]) > 1e-10):
            raise ValueError("weights must vanish off the support")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)


def _with_support(problem, support):
    support = as_index_set(support, problem.n_features)
    w = ols_refit(problem, support)
    # refit may leave exact zeros on the support; the support is what was selected
    return SelectorOutput(support, w)


def ols(problem):
    """Minimum-norm least-squares coefficients."""
    return min_norm_lstsq(problem.X, problem.y)


def ridge(problem, lam):
    """Solve ``(X'X / n + lam I) w = X'y / n``.

    At ``lam = 0`` with a singular Gram the minimum-norm least-squares
    solution is returned instead.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    A = problem.gram + lam * np.eye(problem.n_features)
    try:
        return solve_spd(A, problem.xty)
    except NotPositiveDefinite:
        if lam > 0:
            raise
        return ols(problem)


def _rss(problem, support):
    r = problem.y - problem.X @ ols_refit(problem, support)
    return float(r @ r)


def forward_greedy(problem, k):
    """Add, ``k`` times, the variable whose inclusion most reduces the OLS residual."""
    p = problem.n_features
    if not 0 <= k <= p:
        raise ValueError(f"need 0 <= k <= p, got {k}")
    chosen = []
    for _ in range(k):
        best, best_rss = None, np.inf
        for j in range(p):
            if j in chosen:
                continue
            rss = _rss(problem, chosen + [j])
            # strict comparison keeps the lower index on ties
            if rss < best_rss * (1 - 1e-12) or best is None:
                best, best_rss = j, rss
        chosen.append(best)
    return _with_support(problem, chosen)


def top_k(v, k):
    """Indices of the ``k`` largest ``|v_j|``; ties go to the lower index."""
    order = np.lexsort((np.arange(v.size), -np.abs(v)))
    return as_index_set(order[:k])


def threshold_ls(problem, k):
    """Keep the ``k`` largest OLS coefficients and refit on them."""
    if not 0 <= k <= problem.n_features:
        raise ValueError(f"need 0 <= k <= p, got {k}")
    return _with_support(problem, top_k(ols(problem), k))


def adaptive_weights(problem, exponent=1.0):
    """OLS magnitudes raised to ``exponent``; the column rescaling factors."""
    w_ols = ols(problem)
    if np.all(np.abs(w_ols) <= 1e-12):
        raise AllWeightsZero("OLS estimate is identically zero")
    scale = np.abs(w_ols) ** exponent
    scale[np.abs(w_ols) <= 1e-12] = 0.0
    return scale


def adaptive_lasso_path(problem, exponent=1.0):
    """Lasso path on columns rescaled by the adaptive weights.

    Returns ``(path, scale, keep)``. Columns with zero OLS coefficient are
    removed before the solve, so ``keep`` lists the columns the path
    covers and ``path_at(path, mu) * scale[keep]`` gives their
    coefficients on the original scale.
    """
    scale = adaptive_weights(problem, exponent)
    keep = np.flatnonzero(scale > 0)
    reduced = LassoProblem(problem.X[:, keep] * scale[keep], problem.y)
    return lars_lasso_path(reduced), scale, keep


def adaptive_lasso(problem, mu, exponent=1.0):
    """Lasso with per-variable penalty ``mu / |w_ols_j| ** exponent``."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    path, scale, keep = adaptive_lasso_path(problem, exponent)
    w = np.zeros(problem.n_features)
    w[keep] = path_at(path, mu) * scale[keep]
    return SelectorOutput(np.flatnonzero(w), w)


def _bootstrap_problems(problem, m, rng, identity=False):
    if identity:
        return [problem] * m
    seed = int(rng.integers(2 ** 63))
    return [bootstrap_sample(problem, replicate_rng(seed, k)) for k in range(m)]


def bagged_ols(problem, m, rng, identity_resample=False):
    """Average of minimum-norm OLS vectors over ``m`` bootstrap samples."""
    if m < 1:
        raise ValueError("m must be >= 1")
    samples = _bootstrap_problems(problem, m, rng, identity_resample)
    return np.mean([ols(s) for s in samples], axis=0)


def bagged_ls_threshold(problem, m, k, rng, identity_resample=False):
    """Threshold the bagged OLS vector to its top ``k`` entries and refit."""
    avg = bagged_ols(problem, m, rng, identity_resample)
    return _with_support(problem, top_k(avg, k))


def bagged_lasso(problem, m, mu, rng, identity_resample=False):
    """Average of Lasso solutions at ``mu`` over ``m`` bootstrap samples."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if mu <= 0:
        raise ValueError("mu must be positive")
    samples = _bootstrap_problems(problem, m, rng, identity_resample)
    return np.mean([path_at(lars_lasso_path(s), mu) for s in samples], axis=0)
