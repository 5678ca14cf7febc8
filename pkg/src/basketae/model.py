"""Market model for a basket of correlated local-volatility assets with a common jump.

Each asset follows

    dS_i / S_i- = (r - lam*m) dt + sigma_i(t, S_i-) dW_i + (e^Y - 1) dN

with a single Poisson process N shared by all assets and iid jump log-sizes Y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class DimensionMismatch(ModelError):
    pass


class NonPSDCorrelation(ModelError):
    pass


class TruncationError(RuntimeError):
    """Poisson series could not be truncated below the requested tail mass."""


PIVOT_TOL = 1e-12
POISSON_TAIL_TOL = 1e-12
POISSON_K_CAP = 10_000


@dataclass(frozen=True)
class LocalVolFn:
    """CEV local volatility ``sigma(t, S) = alpha * S**(beta - 1)``.

    ``family`` is kept so other parametric families can be added without
    changing callers; only ``"cev"`` is implemented.
    """

    alpha: float
    beta: float = 1.0
    family: str = "cev"

    def __post_init__(self):
        if self.family != "cev":
            raise ModelError(f"unsupported local vol family {self.family!r}")
        # alpha = 0 is allowed as the degenerate zero-volatility case
        if not self.alpha >= 0:
            raise ModelError(f"alpha must be non-negative, got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise ModelError(f"beta must lie in (0, 1], got {self.beta}")

    time_homogeneous = True

    def __call__(self, t, S):
        return self.alpha * np.power(S, self.beta - 1.0)

    def scaled(self, t, S):
        """Absolute volatility ``sigma(t, S) * S``; finite at ``S = 0``."""
        if self.beta == 1.0:
            return self.alpha * np.asarray(S, dtype=float)
        return self.alpha * np.power(S, self.beta)

    def scaled_derivative(self, t, S):
        return self.alpha * self.beta * np.power(S, self.beta - 1.0)


@dataclass(frozen=True)
class NormalJump:
    """Jump log-size ``Y ~ N(eta, gamma**2)``."""

    eta: float
    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ModelError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def mean(self) -> float:
        return self.eta

    @property
    def var(self) -> float:
        return self.gamma**2

    @property
    def m(self) -> float:
        return float(np.expm1(self.eta + 0.5 * self.gamma**2))


@dataclass(frozen=True)
class ConstantJump:
    """Deterministic jump log-size ``Y = y``."""

    y: float

    @property
    def mean(self) -> float:
        return self.y

    @property
    def var(self) -> float:
        return 0.0

    @property
    def m(self) -> float:
        return float(np.expm1(self.y))


JumpSpec = Union[NormalJump, ConstantJump]


def _as_float_array(x, name):
    a = np.array(x, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BasketModel:
    spots: np.ndarray
    weights: np.ndarray
    corr: np.ndarray
    vols: tuple
    jump: JumpSpec = field(default_factory=lambda: NormalJump(0.0, 0.0))
    lam: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        spots = _as_float_array(self.spots, "spots")
        weights = _as_float_array(self.weights, "weights")
        corr = np.array(self.corr, dtype=float)
        if np.ndim(corr) == 0:
            corr = np.full((len(spots), len(spots)), float(corr))
            np.fill_diagonal(corr, 1.0)
        corr.setflags(write=False)
        vols = tuple(self.vols)
        object.__setattr__(self, "spots", spots)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "corr", corr)
        object.__setattr__(self, "vols", vols)

        n = len(spots)
        if n == 0:
            raise DimensionMismatch("basket needs at least one asset")
        if len(weights) != n or len(vols) != n:
            raise DimensionMismatch(
                f"got {n} spots, {len(weights)} weights, {len(vols)} vols"
            )
        if corr.shape != (n, n):
            raise DimensionMismatch(f"corr has shape {corr.shape}, expected {(n, n)}")
        if np.any(spots <= 0):
            raise ModelError("spots must be positive")
        if np.any(weights <= 0):
            raise ModelError("weights must be positive")
        if self.lam < 0:
            raise ModelError(f"jump intensity must be >= 0, got {self.lam}")

    @property
    def n(self) -> int:
        return len(self.spots)

    @property
    def m(self) -> float:
        return expected_jump(self.jump)

    @classmethod
    def homogeneous(cls, n, spot, weight, rho, alpha, beta, jump, lam, r=0.0):
        """Basket with identical assets and a flat off-diagonal correlation."""
        return cls(
            spots=np.full(n, float(spot)),
            weights=np.full(n, float(weight)),
            corr=rho,
            vols=tuple(LocalVolFn(alpha, beta) for _ in range(n)),
            jump=jump,
            lam=lam,
            r=r,
        )


@dataclass(frozen=True)
class OptionSpec:
    strike: float
    maturity: float

    def __post_init__(self):
        if not self.strike > 0:
            raise ModelError(f"strike must be positive, got {self.strike}")
        if not self.maturity > 0:
            raise ModelError(f"maturity must be positive, got {self.maturity}")


def cholesky_psd(corr, tol=PIVOT_TOL):
    """Lower-triangular ``L`` with ``L @ L.T == corr`` for a PSD matrix.

    Unlike ``np.linalg.cholesky`` this accepts singular matrices: pivots in
    ``[-tol, tol]`` zero out their column.
    """
    a = np.asarray(corr, dtype=float)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d < -tol:
            raise NonPSDCorrelation(f"correlation matrix is not PSD (pivot {j}: {d:.3e})")
        if d <= tol:
            # the rest of column j must vanish for the matrix to be PSD
            resid = a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]
            if np.any(np.abs(resid) > np.sqrt(tol)):
                raise NonPSDCorrelation(f"correlation matrix is not PSD (pivot {j} singular)")
            continue
        L[j, j] = np.sqrt(d)
        L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def validate(model: BasketModel) -> np.ndarray:
    """Check the correlation matrix and return its lower Cholesky factor."""
    corr = model.corr
    if corr.shape != (model.n, model.n):
        raise DimensionMismatch(f"corr has shape {corr.shape}, expected {(model.n, model.n)}")
    if not np.allclose(corr, corr.T, atol=1e-14):
        raise NonPSDCorrelation("correlation matrix is not symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-14):
        raise NonPSDCorrelation("correlation matrix must have a unit diagonal")
    if np.any(np.abs(corr) > 1.0 + 1e-14):
        raise NonPSDCorrelation("correlations must lie in [-1, 1]")
    return cholesky_psd(corr)


def expected_jump(jump: JumpSpec) -> float:
    """Expected relative jump size ``E[e^Y - 1]``."""
    return jump.m


def poisson_weights(lam, T, tail_tol=POISSON_TAIL_TOL, k_cap=POISSON_K_CAP):
    """``P(N(T) = k)`` for ``k = 0..K_max`` with tail mass beyond ``K_max`` below ``tail_tol``."""
    mean = lam * T
    if mean == 0:
        return np.array([1.0])
    # pdtrc(k, mean) = P(N > k); scan a window wide enough for the tolerance, widen if not
    upper = int(mean + 20.0 * np.sqrt(mean) + 50)
    while True:
        upper = min(upper, k_cap)
        k = np.arange(upper + 1)
        below = np.flatnonzero(special.pdtrc(k, mean) < tail_tol)
        if below.size:
            k_max = int(below[0])
            break
        if upper == k_cap:
            raise TruncationError(f"Poisson truncation needs more than {k_cap} terms")
        upper *= 2
    k = k[: k_max + 1]
    return np.exp(special.xlogy(k, mean) - mean - special.gammaln(k + 1))


def basket_spot(model: BasketModel) -> float:
    return float(model.weights @ model.spots)
