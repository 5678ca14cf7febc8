"""Forward PIDE for the basket call surface, solved in log-strike.

With ``x = ln(K / S(0))`` and ``u(T, x) = C(T, K)`` the equation reads

    u_T = (lam*m - sig^2/2) u_x + sig^2/2 u_xx + lam * int u(x - y) e^y phi(y) dy
          - lam*(1 + m) u

and is stepped with an IMEX Euler scheme: the local terms implicitly through a
tridiagonal solve, the jump integral explicitly.  Outside the grid ``u`` is
extended by its deep in/out-of-the-money asymptotics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import lapack
from scipy.signal import fftconvolve

from .expansion import taylor_coeffs
from .model import BasketModel, ConstantJump, basket_spot

DX_TARGET = 1.0 / 1024
DT_TARGET = 1.0 / 512
# dt * lam * (1 + m) must stay below this; it keeps a safety factor on the
# bare explicit-step requirement of < 1
JUMP_CFL_MAX = 0.5
_DIRECT_CONV_MAX = 64
_STORE_BUDGET = 4_000_000


class StabilityViolation(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PideGrid:
    spot: float
    x: np.ndarray  # all nodes including the two boundary nodes
    times: np.ndarray  # 0 = t_0 < t_1 < ... < t_Nt
    maturities: tuple = ()

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    @property
    def nx(self) -> int:
        """Number of interior nodes."""
        return len(self.x) - 2

    @property
    def nt(self) -> int:
        return len(self.times) - 1

    @property
    def strikes(self) -> np.ndarray:
        return self.spot * np.exp(self.x)


def _time_nodes(t_max, dt, maturities):
    nt = max(1, int(np.ceil(t_max / dt - 1e-9)))
    t = np.linspace(0.0, t_max, nt + 1)
    for T in maturities:
        i = np.searchsorted(t, T)
        near = [j for j in (i - 1, i) if 0 <= j < len(t) and abs(t[j] - T) < 1e-9 * max(1.0, T)]
        if near:
            t[near[0]] = T
        else:
            t = np.insert(t, i, T)
    return t


def build_grid(model: BasketModel, t_max, maturities=(), dx=None, dt=None, x_max=None):
    """Uniform log-strike grid with a node at ``x = 0`` and a time grid hitting every maturity.

    Defaults: half-width ``max(5 * total_vol, ln 4, |eta| + 5 gamma)``, ``dx ~ 1/1024``
    and ``dt = min(1/512, stability bound)``.  The last width term keeps a single
    normal jump from the spot well inside the grid.  An explicit ``dt`` with
    ``dt * lam * (1 + m) > JUMP_CFL_MAX`` raises :class:`StabilityViolation`.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    maturities = tuple(sorted(float(T) for T in maturities))
    if any(T <= 0 or T > t_max * (1 + 1e-12) for T in maturities):
        raise ValueError("maturities must lie in (0, t_max]")
    spot = basket_spot(model)
    jump_rate = model.lam * (1.0 + model.m)

    if dt is None:
        dt = DT_TARGET if jump_rate == 0 else min(DT_TARGET, JUMP_CFL_MAX / jump_rate)
    elif dt * jump_rate > JUMP_CFL_MAX:
        raise StabilityViolation(
            f"dt * lam * (1 + m) = {dt * jump_rate:.3g} exceeds {JUMP_CFL_MAX}"
        )

    if x_max is None:
        tc = taylor_coeffs(model, 0.0)
        wp = model.weights * tc.p
        atm_var = float(wp @ model.corr @ wp) / spot**2
        jump_var = model.lam * (model.jump.mean**2 + model.jump.var)
        total_vol = np.sqrt((atm_var + jump_var) * t_max)
        x_max = max(5.0 * total_vol, np.log(4.0))
        if model.lam > 0 and not isinstance(model.jump, ConstantJump):
            x_max = max(x_max, abs(model.jump.eta) + 5.0 * model.jump.gamma)
    n_half = int(np.ceil(x_max / (dx or DX_TARGET) - 1e-9))
    h = x_max / n_half
    x = np.arange(-n_half, n_half + 1) * h
    times = _time_nodes(float(t_max), dt, maturities)
    return PideGrid(spot, x, times, maturities)


@dataclass(frozen=True)
class JumpKernel:
    """Discrete jump integral: ``(K u)_i = sum_j weights[j] * u[i - offsets[j]]``."""

    offsets: np.ndarray
    weights: np.ndarray
    lam: float
    m: float

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


def build_kernel(jump, lam, grid: PideGrid) -> JumpKernel:
    m = jump.m
    h = grid.dx
    if lam == 0:
        return JumpKernel(np.zeros(0, dtype=int), np.zeros(0), 0.0, m)
    if isinstance(jump, ConstantJump) or jump.gamma == 0:
        y = jump.mean
        s = int(np.floor(y / h))
        theta = y / h - s
        weights = lam * np.exp(y) * np.array([1.0 - theta, theta])
        return JumpKernel(np.array([s, s + 1]), weights, lam, m)

    eta, gamma = jump.eta, jump.gamma
    j = np.arange(int(np.floor((eta - 8 * gamma) / h)), int(np.ceil((eta + 8 * gamma) / h)) + 1)
    y = j * h
    dens = np.exp(-0.5 * ((y - eta) / gamma) ** 2) / (gamma * np.sqrt(2 * np.pi))
    weights = lam * np.exp(y) * dens * h
    # renormalise to the exact compensator so the discrete scheme stays a martingale
    weights *= lam * (1.0 + m) / weights.sum()
    return JumpKernel(j, weights, lam, m)


def _extended(u, grid, lo, hi):
    """``u`` on node indices ``lo..hi`` with the payoff asymptotics off the grid."""
    idx = np.arange(lo, hi + 1)
    n = len(u)
    out = np.zeros(len(idx))
    inside = (idx >= 0) & (idx < n)
    out[inside] = u[idx[inside]]
    left = idx < 0
    out[left] = grid.spot * -np.expm1(grid.x_min + idx[left] * grid.dx)
    return out


def apply_kernel(u, grid, kernel: JumpKernel):
    """Jump integral at every node of ``u`` (boundaries included)."""
    if kernel.weights.size == 0:
        return np.zeros_like(u)
    j = kernel.offsets
    jmin, jmax = int(j.min()), int(j.max())
    w = np.zeros(jmax - jmin + 1)
    np.add.at(w, j - jmin, kernel.weights)
    ext = _extended(u, grid, -jmax, len(u) - 1 - jmin)
    if w.size <= _DIRECT_CONV_MAX:
        return np.convolve(ext, w, mode="valid")
    return fftconvolve(ext, w, mode="valid")


def _operator_bands(sig2, drift, h, upwind=True):
    """Sub, main and super diagonals of ``drift * D1 + sig2/2 * D2``."""
    diff = 0.5 * sig2 / h**2
    lower = diff - drift / (2 * h)
    upper = diff + drift / (2 * h)
    main = -2.0 * diff
    if upwind:
        # cell Peclet guard: one-sided differences keep the matrix an M-matrix
        fwd = (np.abs(drift) * h > sig2) & (drift > 0)
        bwd = (np.abs(drift) * h > sig2) & (drift < 0)
        lower = np.where(fwd, diff, np.where(bwd, diff - drift / h, lower))
        upper = np.where(fwd, diff + drift / h, np.where(bwd, diff, upper))
        main = np.where(fwd, main - drift / h, np.where(bwd, main + drift / h, main))
    return lower, main, upper


def step(u_prev, grid: PideGrid, kernel: JumpKernel, sigma_row, dt, upwind=True):
    """Advance one IMEX Euler step.

    ``sigma_row`` is the squared log-space local vol ``sigma(T, K)**2`` on all
    nodes at the new time level.  Boundary values are the deep ITM/OTM limits.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    sig2 = np.asarray(sigma_row, dtype=float)[1:-1]
    h = grid.dx
    drift = kernel.lam * kernel.m - 0.5 * sig2
    lower, main, upper = _operator_bands(sig2, drift, h, upwind)

    left_bc = grid.spot * -np.expm1(grid.x_min)
    right_bc = 0.0

    rhs = u_prev[1:-1].copy()
    if kernel.weights.size:
        rhs += dt * apply_kernel(u_prev, grid, kernel)[1:-1]
    rhs[0] += dt * lower[0] * left_bc
    rhs[-1] += dt * upper[-1] * right_bc

    d = 1.0 - dt * main + dt * kernel.lam * (1.0 + kernel.m)
    dl = -dt * lower[1:]
    du = -dt * upper[:-1]
    *_, x, info = lapack.dgtsv(dl, d, du, rhs)
    if info != 0:
        raise SolverFailure(f"tridiagonal solve failed (info={info})")
    out = np.empty_like(u_prev)
    out[0], out[-1] = left_bc, right_bc
    out[1:-1] = x
    return out


def initial_layer(grid: PideGrid, smooth=False):
    u = grid.spot * np.maximum(-np.expm1(grid.x), 0.0)
    if smooth:
        # cell average of the payoff over the kink cell
        i0 = int(np.argmin(np.abs(grid.x)))
        h = grid.dx
        u[i0] = grid.spot * (0.5 * h + np.expm1(-0.5 * h)) / h
    return u


class FlatVol:
    """Constant local volatility, mostly for checking the solver against closed forms."""

    def __init__(self, sigma):
        self.sigma = float(sigma)

    def sigma_sq(self, T, K):
        return np.full(np.shape(K), self.sigma**2)


def _fingerprint(model):
    return hashlib.sha256(repr(model).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PideSolution:
    times: np.ndarray
    x: np.ndarray
    values: np.ndarray  # (len(times), len(x))
    grid: PideGrid
    fingerprint: str = ""
    _interp: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def strikes(self):
        return self.grid.spot * np.exp(self.x)

    def layer(self, T):
        i = np.flatnonzero(np.isclose(self.times, T, rtol=0, atol=1e-12))
        if not i.size:
            raise KeyError(f"no stored layer at T={T}")
        return self.values[i[0]]

    def to_csv(self, path):
        K = self.strikes
        with open(path, "w") as fh:
            fh.write("T,K,C\n")
            for T, row in zip(self.times, self.values):
                for k, c in zip(K, row):
                    fh.write(f"{T!r},{k!r},{c!r}\n")


def solve(model: BasketModel, surface, T_max, grid: PideGrid | None = None, store=None,
          smooth=False, upwind=True) -> PideSolution:
    """March from the payoff to ``T_max`` and keep the layers in ``store``.

    ``surface`` is anything with ``sigma_sq(T, K)``.  By default every layer is
    stored unless that would exceed a few million values, in which case a
    regular subset plus all grid maturities is kept.
    """
    if grid is None:
        grid = build_grid(model, T_max)
    if grid.times[-1] < T_max - 1e-12:
        raise ValueError("grid does not reach T_max")
    kernel = build_kernel(model.jump, model.lam, grid)
    jump_rate = kernel.lam * (1.0 + kernel.m)
    dts = np.diff(grid.times)
    if np.any(dts * jump_rate > JUMP_CFL_MAX * (1 + 1e-12)):
        raise StabilityViolation(f"time step violates dt * lam * (1 + m) <= {JUMP_CFL_MAX}")

    nt = int(np.searchsorted(grid.times, T_max - 1e-12)) if T_max < grid.times[-1] else grid.nt
    if store is None:
        stride = max(1, int(np.ceil((nt + 1) * len(grid.x) / _STORE_BUDGET)))
        keep = set(range(0, nt + 1, stride)) | {nt}
        keep |= {int(np.argmin(np.abs(grid.times - T))) for T in grid.maturities if T <= T_max}
    else:
        keep = {0, nt} | {int(np.argmin(np.abs(grid.times - T))) for T in store}

    strikes = grid.strikes
    u = initial_layer(grid, smooth)
    times, layers = [0.0], [u.copy()]
    for n in range(nt):
        t = grid.times[n + 1]
        u = step(u, grid, kernel, surface.sigma_sq(t, strikes), dts[n], upwind)
        if n + 1 in keep:
            times.append(float(t))
            layers.append(u.copy())
    return PideSolution(np.array(times), grid.x, np.array(layers), grid, _fingerprint(model))


def _value_in_layer(sol, i, x):
    interp = sol._interp.get(i)
    if interp is None:
        interp = PchipInterpolator(sol.x, sol.values[i], extrapolate=False)
        sol._interp[i] = interp
    x = np.asarray(x, dtype=float)
    v = interp(x)
    spot = sol.grid.spot
    v = np.where(x < sol.x[0], spot * -np.expm1(x), v)
    return np.where(x > sol.x[-1], 0.0, v)


def price_at(solution: PideSolution, T, K):
    """Call price at maturity ``T`` and strike(s) ``K``.

    Linear in ``T`` between stored layers, monotone cubic in log-strike.
    """
    K = np.asarray(K, dtype=float)
    spot = solution.grid.spot
    if T == 0:
        out = np.maximum(spot - K, 0.0)
        return out if out.ndim else float(out)
    times = solution.times
    if T < 0 or T > times[-1] + 1e-12:
        raise ValueError(f"T={T} outside solved range [0, {times[-1]}]")
    x = np.log(K / spot)
    j = int(np.searchsorted(times, T - 1e-12))
    j = min(j, len(times) - 1)
    if abs(times[j] - T) <= 1e-12:
        out = _value_in_layer(solution, j, x)
    else:
        i = j - 1
        theta = (T - times[i]) / (times[j] - times[i])
        out = (1 - theta) * _value_in_layer(solution, i, x) + theta * _value_in_layer(solution, j, x)
    return out if out.ndim else float(out)
