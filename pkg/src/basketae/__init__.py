"""Basket call pricing under a correlated local-volatility jump-diffusion model."""

from .analytic import cv_price, normal_call
from .estimators import AsymptoticExpansionPricer, ControlVariatePricer, MonteCarloPricer
from .expansion import LocalVolSurface, abc_coeffs, build_surface, local_vol
from .model import (
    BasketModel,
    ConstantJump,
    LocalVolFn,
    NormalJump,
    OptionSpec,
    basket_spot,
    expected_jump,
    poisson_weights,
    validate,
)
from .montecarlo import McConfig, McResult, price_mc
from .pide import build_grid, price_at, solve

__all__ = [
    "AsymptoticExpansionPricer",
    "BasketModel",
    "ConstantJump",
    "ControlVariatePricer",
    "LocalVolFn",
    "LocalVolSurface",
    "McConfig",
    "McResult",
    "MonteCarloPricer",
    "NormalJump",
    "OptionSpec",
    "abc_coeffs",
    "basket_spot",
    "build_grid",
    "build_surface",
    "cv_price",
    "expected_jump",
    "local_vol",
    "normal_call",
    "poisson_weights",
    "price_at",
    "price_mc",
    "solve",
    "validate",
]
