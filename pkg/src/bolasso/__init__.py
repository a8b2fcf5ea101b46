"""Lasso paths, bootstrap-intersection model selection and the experiments
around them."""

__version__ = "0.1.0"

from .bootstrap import BolassoConfig, BolassoResult, run_bolasso
from .estimators import AdaptiveLasso, Bolasso, LarsLasso
from .lasso import LassoPath, LassoProblem, coordinate_descent, kkt_residual, lars_lasso_path

__all__ = [
    "AdaptiveLasso",
    "Bolasso",
    "BolassoConfig",
    "BolassoResult",
    "LarsLasso",
    "LassoPath",
    "LassoProblem",
    "coordinate_descent",
    "kkt_residual",
    "lars_lasso_path",
    "run_bolasso",
]
