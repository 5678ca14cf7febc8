"""First-order asymptotic expansion of the basket's local volatility.

The basket variance conditional on ``S(T) = K`` is approximated by the affine
form ``a(T) + b(T) K - c(T) S(0)``.  The coefficients come from linearising
each asset's absolute volatility around its spot and replacing the basket by
its first-order expansion ``S_c(T)``, which is Gaussian given the number of
jumps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .model import POISSON_TAIL_TOL, BasketModel, basket_spot, poisson_weights


class NonPositiveStrike(ValueError):
    pass


FD_REL_STEP = 1e-4


@dataclass(frozen=True)
class TaylorCoeffs:
    forwards: np.ndarray
    p: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class ConditionalMoments:
    k: np.ndarray
    mu_c: np.ndarray
    sigma_c_sq: np.ndarray
    cov: np.ndarray  # (len(k), n): Cov(S_{i,1}(T,k), S_c(T,k))


def _scaled_derivative(vol, t, F):
    if hasattr(vol, "scaled_derivative"):
        return vol.scaled_derivative(t, F)
    h = FD_REL_STEP * F
    return (vol.scaled(t, F + h) - vol.scaled(t, F - h)) / (2 * h)


def taylor_coeffs(model: BasketModel, T) -> TaylorCoeffs:
    """Level ``p_i`` and slope ``q_i`` of each asset's absolute volatility at its forward.

    Works on discounted prices, so the forward is the spot itself.
    """
    F = np.asarray(model.spots, dtype=float)
    p = np.array([v.scaled(T, f) for v, f in zip(model.vols, F)])
    q = np.array([_scaled_derivative(v, T, f) for v, f in zip(model.vols, F)])
    return TaylorCoeffs(F, p, q)


def integrated_cov(model: BasketModel, T, i, j, nodes=64):
    """``int_0^T sig_i(t, S_i(0)) sig_j(t, S_j(0)) dt`` for absolute vols."""
    vi, vj = model.vols[i], model.vols[j]
    si, sj = model.spots[i], model.spots[j]
    if getattr(vi, "time_homogeneous", False) and getattr(vj, "time_homogeneous", False):
        return T * float(vi.scaled(0.0, si) * vj.scaled(0.0, sj))
    t = np.linspace(0.0, T, nodes + 1)
    f = np.array([vi.scaled(s, si) * vj.scaled(s, sj) for s in t])
    return float(simpson(f, x=t))


def _integrated_cov_matrix(model, T):
    n = model.n
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = integrated_cov(model, T, i, j)
    return G


def conditional_moments(model: BasketModel, T, k_max) -> ConditionalMoments:
    """Mean and variance of ``S_c(T, k)`` and its covariance with each ``S_{i,1}(T, k)``."""
    w, s = model.weights, model.spots
    eta, gamma_sq = model.jump.mean, model.jump.var
    s0 = basket_spot(model)
    k = np.arange(k_max + 1)

    diffusive = (model.corr * _integrated_cov_matrix(model, T)) @ w
    # sum_j w_j k gamma^2 S_i S_j = k gamma^2 S_i S(0)
    cov = diffusive[None, :] + np.outer(k * gamma_sq, s * s0)
    sigma_c_sq = cov @ w
    mu_c = (1.0 - model.lam * T * eta + k * eta) * s0
    return ConditionalMoments(k, mu_c, sigma_c_sq, cov)


def abc_coeffs(model: BasketModel, T, tail_tol=POISSON_TAIL_TOL, weights=None):
    """Coefficients ``(a, b, c)`` of the approximate basket variance at maturity ``T``."""
    tc = taylor_coeffs(model, T)
    w, p, q = model.weights, tc.p, tc.q
    wp = w * p
    M = model.corr * np.outer(wp, wp)
    a = float(M.sum())

    if weights is None:
        weights = poisson_weights(model.lam, T, tail_tol)
    mom = conditional_moments(model, T, len(weights) - 1)

    # sum_ij M_ij (v_i + v_j) = 2 v . (M 1) with v_i = q_i / p_i * C_i(k)
    row = M.sum(axis=1)
    ratio = np.divide(q, p, out=np.zeros_like(q), where=p > 0)
    v = mom.cov * ratio[None, :]
    pair = 2.0 * (v @ row)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mom.sigma_c_sq > 0, weights * pair / mom.sigma_c_sq, 0.0)
    b = float(terms.sum())
    c = float((terms * mom.mu_c).sum() / basket_spot(model))
    return a, b, c


def default_var_floor(spot):
    return (0.01 * spot * 1e-2) ** 2


@dataclass(frozen=True)
class LocalVolSurface:
    """Approximate basket local volatility on a maturity grid.

    ``a``, ``b`` and ``c`` are interpolated linearly in ``T`` between grid
    maturities and held flat outside the grid.
    """

    maturities: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    spot: float
    var_floor: float

    def coefficients(self, T):
        return (
            np.interp(T, self.maturities, self.a),
            np.interp(T, self.maturities, self.b),
            np.interp(T, self.maturities, self.c),
        )

    def raw_variance(self, T, K):
        a, b, c = self.coefficients(T)
        return a + b * np.asarray(K, dtype=float) - c * self.spot

    def variance(self, T, K):
        """Floored absolute variance ``sigma(T, K)**2 * K**2``."""
        return np.maximum(self.raw_variance(T, K), self.var_floor)

    def sigma_sq(self, T, K):
        K = np.asarray(K, dtype=float)
        return self.variance(T, K) / K**2

    def local_vol(self, T, K):
        return local_vol(self, T, K)

    def to_csv(self, path, strikes):
        strikes = np.asarray(strikes, dtype=float)
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["T", "a", "b", "c"] + [f"sigma_K{k:g}" for k in strikes])
            for T, a, b, c in zip(self.maturities, self.a, self.b, self.c):
                vols = self.local_vol(T, strikes)
                out.writerow([repr(float(x)) for x in (T, a, b, c, *vols)])


def local_vol(surface: LocalVolSurface, T, K):
    K = np.asarray(K, dtype=float)
    if np.any(K <= 0):
        raise NonPositiveStrike("strike must be positive")
    return np.sqrt(surface.variance(T, K)) / K


def build_surface(model: BasketModel, maturities, var_floor=None, tail_tol=POISSON_TAIL_TOL):
    maturities = np.asarray(maturities, dtype=float)
    if maturities.ndim != 1 or np.any(maturities <= 0) or np.any(np.diff(maturities) <= 0):
        raise ValueError("maturities must be positive and strictly increasing")
    spot = basket_spot(model)
    if var_floor is None:
        var_floor = default_var_floor(spot)
    coeffs = np.array([abc_coeffs(model, T, tail_tol) for T in maturities])
    return LocalVolSurface(
        maturities, coeffs[:, 0], coeffs[:, 1], coeffs[:, 2], spot, float(var_floor)
    )
