"""Synthetic Gaussian population models and Monte-Carlo selection studies."""

from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .bootstrap import BolassoConfig, check_mu_grid, log_grid, replicate_rng, run_bolasso
from .lasso import LassoProblem, lars_lasso_path, path_coefs
from .numerics import NotPositiveDefinite, cholesky_checked, complement, solve_spd


class SingularGram(np.linalg.LinAlgError):
    pass


class EmptyComplement(ValueError):
    pass


class NotFound(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PopulationModel:
    """Covariance ``Q`` (unit diagonal), loading vector and noise level."""

    Q: np.ndarray
    w_true: np.ndarray
    sigma: float

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        w = np.array(self.w_true, dtype=float).reshape(-1)
        if Q.shape != (w.size, w.size):
            raise ValueError(f"Q has shape {Q.shape} but w has {w.size} entries")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.any(np.abs(np.diag(Q) - 1.0) > 1e-10):
            raise ValueError("Q must have unit diagonal")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        try:
            cholesky_checked(Q)
        except NotPositiveDefinite:
            raise ValueError("Q must be positive definite") from None
        Q.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "w_true", w)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def p(self):
        return self.w_true.size

    @property
    def J_true(self):
        return tuple(int(j) for j in np.flatnonzero(self.w_true))

    @property
    def s_true(self):
        return np.sign(self.w_true).astype(int)

    @property
    def signal_scale(self):
        """``(w' Q w) ** 0.5``, the standard deviation of ``x' w``."""
        return float(np.sqrt(self.w_true @ self.Q @ self.w_true))

    @property
    def mu_max(self):
        """Population analogue of ``||X'y / n||_inf``, i.e. ``||Q w||_inf``."""
        return float(np.max(np.abs(self.Q @ self.w_true)))

    def to_dict(self):
        return {"Q": self.Q.tolist(), "w_true": self.w_true.tolist(), "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["Q"]), np.array(d["w_true"]), d["sigma"])


def _unit_diagonal(C):
    scale = 1.0 / np.sqrt(np.diag(C))
    Q = C * scale[:, None] * scale[None, :]
    Q = 0.5 * (Q + Q.T)
    np.fill_diagonal(Q, 1.0)
    return Q


def generate_population(p, r, rng, loadings="unit", identity_cov=False):
    """Random population model with the first ``r`` variables relevant.

    ``Q`` is ``G G'`` for a standard normal ``G``, scaled to unit diagonal.
    Relevant loadings start as standard normal draws. With
    ``loadings="unit"`` each is set to unit magnitude (its sign) and scaled
    by its own uniform draw from ``[1/3, 1]``, so ``min |w_j| >= 1/3``.
    With ``loadings="l2"`` the r-vector is normalized to unit Euclidean
    norm and multiplied by one shared uniform scalar from ``[1/3, 1]``.
    The noise level is a tenth of the signal standard deviation.

    ``identity_cov`` forces ``Q = I`` (useful in tests).
    """
    if not 1 <= r <= p:
        raise ValueError(f"need 1 <= r <= p, got r={r}, p={p}")
    if loadings not in ("unit", "l2"):
        raise ValueError(f"unknown loadings scheme {loadings!r}")
    if identity_cov:
        Q = np.eye(p)
    else:
        for attempt in range(2):
            G = rng.standard_normal((p, p))
            Q = _unit_diagonal(G @ G.T)
            try:
                cholesky_checked(Q)
                break
            except NotPositiveDefinite:
                if attempt == 1:
                    raise SingularGram("G G' was singular twice in a row") from None
    v = rng.standard_normal(r)
    w = np.zeros(p)
    if loadings == "unit":
        signs = np.where(v < 0, -1.0, 1.0)
        w[:r] = signs * rng.uniform(1.0 / 3.0, 1.0, size=r)
    else:
        w[:r] = v / np.linalg.norm(v) * rng.uniform(1.0 / 3.0, 1.0)
    sigma = 0.1 * float(np.sqrt(w @ Q @ w))
    return PopulationModel(Q, w, sigma)


def sample_dataset(model, n, rng, noise=True):
    """Draw ``n`` rows ``x ~ N(0, Q)`` and ``y = x'w + eps``, ``eps ~ N(0, sigma^2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = np.linalg.cholesky(model.Q)
    X = rng.standard_normal((n, model.p)) @ L.T
    y = X @ model.w_true
    if noise:
        y = y + model.sigma * rng.standard_normal(n)
    return LassoProblem(X, y)


def consistency_kappa(model):
    """``|| Q[Jc, J] Q[J, J]^-1 s_J ||_inf`` for the model's support ``J``.

    The Lasso can recover the support asymptotically iff this is <= 1.

    Raises
    ------
    EmptyComplement
        When every variable is relevant (the quantity is then taken as 0).
    ValueError
        When no variable is relevant.
    """
    J = list(model.J_true)
    Jc = list(complement(J, model.p))
    if not J:
        raise ValueError("model has no relevant variables")
    if not Jc:
        raise EmptyComplement("every variable is relevant; kappa is 0 by convention")
    Q = model.Q
    z = solve_spd(Q[np.ix_(J, J)], model.s_true[J].astype(float))
    return float(np.max(np.abs(Q[np.ix_(Jc, J)] @ z)))


def find_model_with_kappa(p, r, want_consistent, rng, max_draws=1000, loadings="unit",
                          identity_cov=False):
    """Draw models until one falls on the requested side of ``kappa = 1``."""
    if max_draws < 1:
        raise ValueError("max_draws must be >= 1")
    for _ in range(max_draws):
        model = generate_population(p, r, rng, loadings=loadings, identity_cov=identity_cov)
        kappa = consistency_kappa(model)
        if (kappa <= 1) == bool(want_consistent):
            return model
    side = "<= 1" if want_consistent else "> 1"
    raise NotFound(f"no model with kappa {side} in {max_draws} draws")


def default_mu_grid(model, n_points=64, min_ratio=1e-3):
    """Shared grid for Monte-Carlo studies, anchored at the population ``mu_max``."""
    return log_grid(model.mu_max, n_points, min_ratio)


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Per-replication selection indicators, shape (reps, n_mu, p)."""

    mu_grid: np.ndarray
    selected: np.ndarray = field(repr=False)

    @property
    def reps(self):
        return self.selected.shape[0]

    @property
    def counts(self):
        return self.selected.sum(axis=0)

    @property
    def frequencies(self):
        return self.counts / self.reps

    def log_odds(self):
        """Clipped log-odds of the selection frequencies."""
        eps = 1.0 / (2 * self.reps)
        f = np.clip(self.frequencies, eps, 1 - eps)
        return np.log(f / (1 - f))


def _lasso_selection(problem, grid, tol=0.0):
    path = lars_lasso_path(problem)
    return np.abs(path_coefs(path, grid)) > tol


def _one_replication(model, n, grid, seed, rep, method, soft):
    rng = replicate_rng(seed, rep)
    data = sample_dataset(model, n, rng)
    if method == "lasso":
        return _lasso_selection(data, grid)
    config = replace(method, mu_grid=tuple(grid), mu0=None,
                     seed=int(rng.integers(2 ** 63)), n_jobs=1)
    res = run_bolasso(data, config)
    if soft:
        return np.array([np.isin(np.arange(model.p), s) for s in res.soft_supports])
    return res.selected.all(axis=0)


def sign_frequency_experiment(model, n, mu_grid, reps, seed, method="lasso",
                              soft=False, n_jobs=1):
    """Selection indicators of ``method`` over ``reps`` fresh datasets.

    Parameters
    ----------
    method : "lasso" or BolassoConfig
        Plain Lasso, or Bolasso with the given settings (its grid and seed
        are overridden per replication).
    soft : bool
        For Bolasso, record soft rather than hard supports.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    grid = check_mu_grid(mu_grid)
    if n_jobs == 1:
        sel = [_one_replication(model, n, grid, seed, k, method, soft) for k in range(reps)]
    else:
        sel = Parallel(n_jobs=n_jobs)(
            delayed(_one_replication)(model, n, grid, seed, k, method, soft)
            for k in range(reps))
    return FrequencyTable(grid, np.stack(sel))


def correct_pattern_probability(table, model):
    """Fraction of replications whose support equals the true support, per level."""
    truth = np.zeros(model.p, dtype=bool)
    truth[list(model.J_true)] = True
    return (table.selected == truth).all(axis=2).mean(axis=0)


def _m_sweep_replication(model, n, grid, seed, rep, m_max):
    rng = replicate_rng(seed, rep)
    data = sample_dataset(model, n, rng)
    config = BolassoConfig(m=m_max, mu_grid=tuple(grid), seed=int(rng.integers(2 ** 63)))
    return run_bolasso(data, config).selected


def bolasso_m_sweep(model, n, mu_grid, reps, seed, m_values, n_jobs=1):
    """Correct-pattern probability of Bolasso for several replicate counts.

    Each dataset is bootstrapped ``max(m_values)`` times; smaller ``m`` use
    the leading replicates of the same run.

    Returns
    -------
    dict
        ``m -> array`` of per-level probabilities.
    """
    grid = check_mu_grid(mu_grid)
    m_max = max(m_values)
    if n_jobs == 1:
        runs = [_m_sweep_replication(model, n, grid, seed, k, m_max) for k in range(reps)]
    else:
        runs = Parallel(n_jobs=n_jobs)(
            delayed(_m_sweep_replication)(model, n, grid, seed, k, m_max)
            for k in range(reps))
    truth = np.zeros(model.p, dtype=bool)
    truth[list(model.J_true)] = True
    out = {}
    for m in m_values:
        hits = [(sel[:m].all(axis=0) == truth).all(axis=1) for sel in runs]
        out[m] = np.mean(hits, axis=0)
    return out
