"""Scikit-learn estimator facades over the functional solvers.

These wrap the TAP maximizer and the ridge MAP baseline for pipelines that
expect fit/predict/get_params.  The design convention is the same as the
rest of the package: rows of X should be scaled like N(0, 1/n) draws and y
generated at noise level delta.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .model import ProblemInstance
from .oracle import ridge_solve
from .solver import SolverOptions, maximize_tap

__all__ = ["TapRegressor", "RidgeMapRegressor"]


class TapRegressor(RegressorMixin, BaseEstimator):
    """Sphere-constrained TAP free-energy maximizer with a linear predict.

    Parameters mirror SolverOptions; after fit the best iterate is exposed
    as ``coef_`` together with the achieved value and diagnostics.
    """

    def __init__(
        self,
        delta=0.5,
        restarts=8,
        max_iters=5000,
        grad_tol=None,
        q_init_list=(0.1, 0.3, 0.5, 0.7, 0.9, 0.5, 0.5),
        random_state=0,
    ):
        self.delta = delta
        self.restarts = restarts
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.q_init_list = q_init_list
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        instance = ProblemInstance.from_data(X, y, delta=self.delta, master_seed=int(self.random_state))
        opts = SolverOptions(
            restarts=self.restarts,
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            q_init_list=tuple(self.q_init_list),
        )
        result = maximize_tap(instance, opts=opts)
        self.coef_ = result.a_hat
        self.f_value_ = result.f_value
        self.overlap_ = result.q_final
        self.grad_norm_ = result.grad_norm
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class RidgeMapRegressor(RegressorMixin, BaseEstimator):
    """MAP baseline: coef_ = (X'X + delta I)^{-1} X'y."""

    def __init__(self, delta=0.5):
        self.delta = delta

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        instance = ProblemInstance.from_data(X, y, delta=self.delta)
        solution = ridge_solve(instance)
        self.coef_ = solution.a_delta
        self.norm_sq_over_p_ = solution.norm_sq_over_p
        self.residual_over_p_ = solution.residual_over_p
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
