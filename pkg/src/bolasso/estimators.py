"""scikit-learn compatible wrappers.

The estimators center ``X`` and ``y`` when ``fit_intercept=True`` (the
solvers themselves have no intercept) and otherwise defer to the
functional API.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .baselines import adaptive_lasso_path
from .bootstrap import BolassoConfig, run_bolasso
from .lasso import LassoProblem, coordinate_descent, lars_lasso_path, path_at


class _CenteredLinearModel(RegressorMixin, BaseEstimator):

    def _problem(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        X = X.astype(float)
        y = y.astype(float)
        if self.fit_intercept:
            self.x_mean_ = X.mean(axis=0)
            self.y_mean_ = float(y.mean())
        else:
            self.x_mean_ = np.zeros(X.shape[1])
            self.y_mean_ = 0.0
        return LassoProblem(X - self.x_mean_, y - self.y_mean_)

    def _set_coef(self, w):
        self.coef_ = np.asarray(w, dtype=float)
        self.intercept_ = self.y_mean_ - float(self.x_mean_ @ self.coef_)

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_


class LarsLasso(_CenteredLinearModel):
    """Lasso at penalty ``mu`` read off the exact LARS path.

    Parameters
    ----------
    mu : float
        Penalty on ``||w||_1`` against ``(1/2n) ||y - X w||^2``.
    solver : {"lars", "cd"}
        ``"cd"`` uses cyclic coordinate descent instead.
    fit_intercept : bool

    Attributes
    ----------
    coef_, intercept_ : fitted parameters
    path_ : LassoPath or None
        The full path when ``solver="lars"``.
    """

    def __init__(self, mu=1.0, solver="lars", fit_intercept=True):
        self.mu = mu
        self.solver = solver
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        problem = self._problem(X, y)
        if self.solver == "lars":
            self.path_ = lars_lasso_path(problem)
            w = path_at(self.path_, self.mu)
        elif self.solver == "cd":
            self.path_ = None
            w = coordinate_descent(problem, self.mu)
        else:
            raise ValueError(f"unknown solver {self.solver!r}")
        self._set_coef(w)
        return self


class AdaptiveLasso(_CenteredLinearModel):
    """Lasso with penalty ``mu / |w_ols_j| ** exponent`` on each coefficient."""

    def __init__(self, mu=1.0, exponent=1.0, fit_intercept=True):
        self.mu = mu
        self.exponent = exponent
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        problem = self._problem(X, y)
        if problem.n_samples < 2:
            raise ValueError("adaptive weights need n_samples >= 2, "
                             f"got n_samples={problem.n_samples}")
        path, scale, keep = adaptive_lasso_path(problem, self.exponent)
        w = np.zeros(problem.n_features)
        w[keep] = path_at(path, self.mu) * scale[keep]
        self._set_coef(w)
        return self


class Bolasso(SelectorMixin, _CenteredLinearModel):
    """Bootstrap-intersection variable selection followed by an OLS refit.

    Parameters
    ----------
    mu : float
        Penalty level used on every bootstrap replicate.
    m : int
        Number of bootstrap replicates.
    soft_fraction : float
        1.0 keeps variables selected by every replicate; smaller values keep
        those selected by at least that fraction.
    random_state : int
    n_jobs : int

    Attributes
    ----------
    support_ : tuple of selected column indices
    frequencies_ : per-variable selection frequency across replicates
    result_ : BolassoResult
    """

    def __init__(self, mu=1.0, m=128, soft_fraction=1.0, random_state=0, n_jobs=1,
                 fit_intercept=True):
        self.mu = mu
        self.m = m
        self.soft_fraction = soft_fraction
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        problem = self._problem(X, y)
        config = BolassoConfig(m=self.m, mu_grid=(float(self.mu),),
                               soft_fraction=self.soft_fraction,
                               seed=int(self.random_state), n_jobs=self.n_jobs)
        self.result_ = run_bolasso(problem, config)
        step = self.result_.steps[0]
        self.frequencies_ = step.frequencies
        if self.soft_fraction >= 1:
            self.support_ = step.hard_support
            w = step.refit_weights
        else:
            self.support_ = step.soft_support
            w = step.soft_refit_weights
        self._set_coef(w)
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(self.support_)] = True
        return mask
