import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from basketae import OptionSpec, cv_price
from basketae.estimators import (
    AsymptoticExpansionPricer,
    ControlVariatePricer,
    MonteCarloPricer,
    check_quotes,
)
from basketae.expansion import build_surface
from basketae.montecarlo import McConfig, price_mc
from basketae.pide import build_grid, price_at, solve
from conftest import single
from oracles import bs_call


def test_check_quotes_promotes_single_pair():
    assert check_quotes([1.0, 100.0]).shape == (1, 2)


@pytest.mark.parametrize("X", [[[1.0, 100.0, 3.0]], [[0.0, 100.0]], [[1.0, -5.0]],
                               [[1.0, np.nan]]])
def test_check_quotes_rejects_bad_rows(X):
    with pytest.raises(ValueError):
        check_quotes(X)


@pytest.mark.parametrize("cls", [ControlVariatePricer, AsymptoticExpansionPricer,
                                 MonteCarloPricer])
def test_params_and_clone(cls):
    est = cls()
    params = est.get_params()
    assert clone(est).get_params() == params
    with pytest.raises(NotFittedError):
        est.predict([[1.0, 100.0]])


def test_fit_rejects_non_model():
    with pytest.raises(TypeError):
        ControlVariatePricer().fit({"lam": 0.3})


def test_control_variate_pricer(base_model):
    est = ControlVariatePricer().fit(base_model)
    got = est.predict([[1.0, 100.0], [3.0, 110.0]])
    assert got[0] == cv_price(base_model, OptionSpec(100.0, 1.0)).price
    assert got[1] == cv_price(base_model, OptionSpec(110.0, 3.0)).price


def test_expansion_pricer_matches_pipeline(base_model):
    est = AsymptoticExpansionPricer().fit(base_model, maturities=(0.5, 1.0))
    got = est.predict([[0.5, 100.0], [1.0, 90.0]])
    grid = build_grid(base_model, 1.0, (0.5, 1.0))
    sol = solve(base_model, build_surface(base_model, grid.times[1:]), 1.0, grid)
    np.testing.assert_array_equal(got, [price_at(sol, 0.5, 100.0), price_at(sol, 1.0, 90.0)])
    assert est.solution_.times[-1] == 1.0


def test_expansion_pricer_one_asset_near_black_scholes():
    # one CEV asset with beta=1: the linearised local variance is exact at the money,
    # so short-dated ATM prices sit close to Black-Scholes
    est = AsymptoticExpansionPricer().fit(single(0.2), maturities=(0.25,))
    assert est.predict([[0.25, 100.0]])[0] == pytest.approx(bs_call(100, 100, 0.25, 0.2),
                                                             rel=2e-3)


def test_expansion_pricer_set_params():
    est = AsymptoticExpansionPricer().set_params(dx=0.01, dt=0.01)
    est.fit(single(0.2), maturities=(1.0,))
    assert est.grid_.dx == pytest.approx(0.01, rel=0.02)


def test_monte_carlo_pricer_matches_function(base_model):
    est = MonteCarloPricer(paths=500, batches=2, steps_per_year=16).fit(base_model)
    got = est.predict([[1.0, 100.0]])
    ref = price_mc(base_model, OptionSpec(100.0, 1.0),
                   McConfig(paths=500, batches=2, steps_per_year=16))
    assert got[0] == ref.price
    assert est.stderr_[0] == ref.stderr
