"""Closed-form price of the Gaussian-mixture control variate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .expansion import conditional_moments
from .model import POISSON_TAIL_TOL, BasketModel, OptionSpec, poisson_weights

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def norm_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def normal_call(mu, sigma, K):
    """``E[(X - K)^+]`` for ``X ~ N(mu, sigma**2)``; vectorised."""
    mu, sigma, K = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mu, sigma, K)))
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    intrinsic = np.maximum(mu - K, 0.0)
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    d = (mu - K) / safe
    value = np.where(pos, safe * norm_pdf(d) + (mu - K) * norm_cdf(d), intrinsic)
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class CvPrice:
    price: float
    terms: tuple  # (k, poisson weight, conditional call value)


def cv_price(model: BasketModel, option: OptionSpec, tail_tol=POISSON_TAIL_TOL) -> CvPrice:
    T = option.maturity
    # the expansion works on discounted prices, so discount the strike instead
    K = option.strike * np.exp(-model.r * T)
    weights = poisson_weights(model.lam, T, tail_tol)
    mom = conditional_moments(model, T, len(weights) - 1)
    calls = normal_call(mom.mu_c, np.sqrt(mom.sigma_c_sq), K)
    calls = np.atleast_1d(calls)
    price = float(weights @ calls)
    terms = tuple((int(k), float(p), float(c)) for k, p, c in zip(mom.k, weights, calls))
    return CvPrice(price, terms)
