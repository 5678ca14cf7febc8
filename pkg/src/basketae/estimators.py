"""Estimator-style wrappers around the three pricers.

Each pricer is configured through ``__init__`` (so ``get_params`` /
``set_params`` and ``sklearn.base.clone`` work), bound to a
:class:`~basketae.model.BasketModel` by ``fit`` and queried with ``predict`` on
an ``(n_samples, 2)`` array of ``[maturity, strike]`` rows.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analytic import cv_price
from .expansion import build_surface
from .model import POISSON_TAIL_TOL, BasketModel, OptionSpec, validate
from .montecarlo import McConfig, price_mc
from .pide import build_grid, price_at, solve


def check_model(model):
    if not isinstance(model, BasketModel):
        raise TypeError(f"expected a BasketModel, got {type(model).__name__}")
    validate(model)
    return model


def check_quotes(X):
    """Validate ``[maturity, strike]`` rows; a single pair is promoted to one row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    X = check_array(X, dtype=float)
    if X.shape[1] != 2:
        raise ValueError(f"expected [maturity, strike] columns, got {X.shape[1]}")
    if np.any(X[:, 0] <= 0):
        raise ValueError("maturities must be positive")
    if np.any(X[:, 1] <= 0):
        raise ValueError("strikes must be positive")
    return X


class ControlVariatePricer(BaseEstimator):
    """Closed-form price of the Gaussian-mixture approximation of the basket."""

    def __init__(self, tail_tol=POISSON_TAIL_TOL):
        self.tail_tol = tail_tol

    def fit(self, model, y=None):
        self.model_ = check_model(model)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_quotes(X)
        return np.array(
            [cv_price(self.model_, OptionSpec(K, T), self.tail_tol).price for T, K in X]
        )


class AsymptoticExpansionPricer(BaseEstimator):
    """Forward PIDE priced with the expansion-based local volatility.

    ``fit`` builds the local-vol surface on the solver's time grid and solves
    the PIDE once up to the largest maturity; ``predict`` interpolates the
    resulting call surface.
    """

    def __init__(self, dx=None, dt=None, x_max=None, var_floor=None, smooth=False,
                 upwind=True, tail_tol=POISSON_TAIL_TOL):
        self.dx = dx
        self.dt = dt
        self.x_max = x_max
        self.var_floor = var_floor
        self.smooth = smooth
        self.upwind = upwind
        self.tail_tol = tail_tol

    def fit(self, model, maturities=(1.0,)):
        model = check_model(model)
        maturities = np.atleast_1d(np.asarray(maturities, dtype=float))
        if np.any(maturities <= 0):
            raise ValueError("maturities must be positive")
        t_max = float(maturities.max())
        grid = build_grid(model, t_max, maturities, dx=self.dx, dt=self.dt, x_max=self.x_max)
        self.surface_ = build_surface(model, grid.times[1:], self.var_floor, self.tail_tol)
        self.solution_ = solve(model, self.surface_, t_max, grid, smooth=self.smooth,
                               upwind=self.upwind)
        self.grid_ = grid
        self.model_ = model
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_quotes(X)
        r = self.model_.r
        # the surface is solved on discounted prices
        return np.array([price_at(self.solution_, T, K * np.exp(-r * T)) for T, K in X])


class MonteCarloPricer(BaseEstimator):
    """Euler Monte Carlo, optionally with the expansion control variate."""

    def __init__(self, paths=30_000, batches=4, steps_per_year=512, seed=20100101,
                 use_control_variate=True, cv_coefficient=1.0, n_jobs=1):
        self.paths = paths
        self.batches = batches
        self.steps_per_year = steps_per_year
        self.seed = seed
        self.use_control_variate = use_control_variate
        self.cv_coefficient = cv_coefficient
        self.n_jobs = n_jobs

    def _config(self):
        return McConfig(**self.get_params())

    def fit(self, model, y=None):
        self.model_ = check_model(model)
        self.config_ = self._config()
        return self

    def predict_results(self, X):
        check_is_fitted(self)
        X = check_quotes(X)
        return [price_mc(self.model_, OptionSpec(K, T), self.config_) for T, K in X]

    def predict(self, X):
        results = self.predict_results(X)
        self.stderr_ = np.array([r.stderr for r in results])
        return np.array([r.price for r in results])
