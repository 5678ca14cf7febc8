import numpy as np
import pytest

from basketae import OptionSpec
from basketae.estimators import AsymptoticExpansionPricer
from basketae.harness import TableRow, average_row, mc_config, run_table
from basketae.montecarlo import price_mc
from conftest import basket
from reference_values import TABLE2_AVG_CV_ERR


def test_table1_row_expansion_error_band():
    m = basket(0.5, 1.0, 0.3)
    ae = AsymptoticExpansionPricer().fit(m, (1.0,)).predict([[1.0, 100.0]])[0]
    mc = price_mc(m, OptionSpec(100.0, 1.0), mc_config(1.0, "desk")).price
    row = TableRow(1, 1.0, 0.5, 1.0, 0.3, m.m, mc_price=mc, ae_price=ae)
    assert 1.0 <= row.ae_err_pct <= 3.0


@pytest.mark.slow
def test_table3_expansion_errors_below_one_percent():
    rows = run_table(3, "desk", methods=("mc", "ae"))
    assert len(rows) == 12
    errs = [abs(r.ae_price - r.mc_price) / r.mc_price for r in rows]
    assert max(errs) < 0.01, [(r.lam, r.T, r.ae_price, r.mc_price) for r in rows]


@pytest.mark.slow
def test_table2_average_control_variate_error():
    rows = run_table(2, "desk", methods=("mc", "cv"))
    avg = float(average_row(rows)[-1])
    assert 14.0 <= avg <= 22.0
    assert abs(avg - np.mean(TABLE2_AVG_CV_ERR)) < 4.0
