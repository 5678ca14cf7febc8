"""Method dispatch and the benchmark tables."""

from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import cv_price
from .config import RunConfig, resolved
from .estimators import AsymptoticExpansionPricer
from .model import BasketModel, ConstantJump, NormalJump, OptionSpec
from .montecarlo import McConfig, price_mc

log = logging.getLogger(__name__)

METHODS = ("mc", "ae", "cv")
THREADS_ENV = "BASKETAE_THREADS"
CSV_COLUMNS = (
    "table_id", "T", "alpha", "beta", "lambda", "m",
    "mc_price", "mc_stderr", "ae_price", "ae_err_pct", "cv_price", "cv_err_pct",
)
PEA_NOTE = "# pea: out of scope (method not specified here); column omitted"


@dataclass(frozen=True)
class PriceResult:
    method: str
    maturity: float
    strike: float
    price: float
    stderr: float | None = None
    seconds: float = 0.0
    config: dict = field(default_factory=dict, repr=False)


def run_price(cfg: RunConfig, method: str) -> list[PriceResult]:
    """Price the configured option at every configured maturity."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    echo = resolved(cfg)
    out = []
    if method == "ae":
        t0 = time.perf_counter()
        pricer = AsymptoticExpansionPricer(**cfg.pide).fit(cfg.model, cfg.maturities)
        prices = pricer.predict([[T, cfg.strike] for T in cfg.maturities])
        dt = time.perf_counter() - t0
        return [PriceResult("ae", T, cfg.strike, float(p), None, dt, echo)
                for T, p in zip(cfg.maturities, prices)]
    for opt in cfg.options:
        t0 = time.perf_counter()
        if method == "cv":
            price, se = cv_price(cfg.model, opt).price, None
        else:
            res = price_mc(cfg.model, opt, cfg.mc)
            price, se = res.price, res.stderr
        out.append(PriceResult(method, opt.maturity, opt.strike, price, se,
                               time.perf_counter() - t0, echo))
    return out


# ---------------------------------------------------------------------------
# benchmark tables

BASE = dict(n=4, spot=100.0, weight=0.25, rho=0.3, strike=100.0)


@dataclass(frozen=True)
class Scenario:
    table_id: int
    alpha: float
    beta: float
    lam: float
    jump: object
    maturities: tuple = (1.0, 3.0)

    def model(self) -> BasketModel:
        return BasketModel.homogeneous(
            BASE["n"], BASE["spot"], BASE["weight"], BASE["rho"],
            self.alpha, self.beta, self.jump, self.lam,
        )


def scenarios(table_id: int) -> list[Scenario]:
    """Scenario grid of a benchmark table, in row order (maturity handled per scenario)."""
    if table_id in (1, 2):
        eta = -0.08 if table_id == 1 else -0.3
        return [
            Scenario(table_id, a, b, lam, NormalJump(eta, 0.35))
            for b in (1.0, 0.8, 0.5)
            for a in (0.1, 0.2, 0.5)
            for lam in (0.3, 1.0)
        ]
    if table_id in (3, 4):
        alpha = 0.2 if table_id == 3 else 0.5
        return [
            Scenario(table_id, alpha, 1.0, lam, ConstantJump(-y))
            for lam in (0.3, 1.0)
            for y in (0.25, 0.125, 0.0625)
        ]
    raise ValueError(f"unknown table {table_id}")


def mc_config(T, scale, seed=20100101) -> McConfig:
    if scale == "desk":
        return McConfig(paths=30_000, batches=4, seed=seed)
    if scale == "paper":
        return McConfig(paths=30_000 if T <= 1 else 100_000, batches=10, seed=seed)
    raise ValueError(f"scale must be 'desk' or 'paper', got {scale!r}")


@dataclass
class TableRow:
    table_id: int
    T: float
    alpha: float
    beta: float
    lam: float
    m: float
    mc_price: float | None = None
    mc_stderr: float | None = None
    ae_price: float | None = None
    cv_price: float | None = None
    errors: dict = field(default_factory=dict)

    @staticmethod
    def rel_err(price, ref):
        if price is None or ref is None or ref == 0:
            return None
        return round(abs(price - ref) / ref * 100.0, 1)

    @property
    def ae_err_pct(self):
        return self.rel_err(self.ae_price, self.mc_price)

    @property
    def cv_err_pct(self):
        return self.rel_err(self.cv_price, self.mc_price)

    def csv_fields(self):
        def fmt(name, v, spec):
            if name in self.errors:
                return f"error:{self.errors[name]}"
            return "" if v is None else format(v, spec)

        return [
            str(self.table_id), f"{self.T:g}", f"{self.alpha:g}", f"{self.beta:g}",
            f"{self.lam:g}", f"{self.m:.4f}",
            fmt("mc", self.mc_price, ".6f"), fmt("mc", self.mc_stderr, ".6f"),
            fmt("ae", self.ae_price, ".6f"), fmt("ae", self.ae_err_pct, ".1f"),
            fmt("cv", self.cv_price, ".6f"), fmt("cv", self.cv_err_pct, ".1f"),
        ]


def _run_scenario(sc: Scenario, scale: str, methods: tuple, seed: int, pide_kw: dict):
    model = sc.model()
    rows = [TableRow(sc.table_id, T, sc.alpha, sc.beta, sc.lam, model.m) for T in sc.maturities]
    if "ae" in methods:
        try:
            pricer = AsymptoticExpansionPricer(**pide_kw).fit(model, sc.maturities)
            for row, p in zip(rows, pricer.predict([[T, BASE["strike"]] for T in sc.maturities])):
                row.ae_price = float(p)
        except Exception as e:  # noqa: BLE001 - recorded in the row, run continues
            log.warning("AE failed for %s: %s", sc, e)
            for row in rows:
                row.errors["ae"] = type(e).__name__
    for row in rows:
        opt = OptionSpec(BASE["strike"], row.T)
        if "cv" in methods:
            try:
                row.cv_price = cv_price(model, opt).price
            except Exception as e:  # noqa: BLE001
                row.errors["cv"] = type(e).__name__
        if "mc" in methods:
            try:
                res = price_mc(model, opt, mc_config(row.T, scale, seed))
                row.mc_price, row.mc_stderr = res.price, res.stderr
            except Exception as e:  # noqa: BLE001
                row.errors["mc"] = type(e).__name__
    return rows


def thread_count():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_table(table_id, scale="desk", methods=METHODS, seed=20100101, pide_kw=None,
              workers=None) -> list[TableRow]:
    scs = scenarios(table_id)
    pide_kw = pide_kw or {}
    workers = workers or thread_count()
    args = [(sc, scale, tuple(methods), seed, pide_kw) for sc in scs]
    if workers == 1:
        groups = [_run_scenario(*a) for a in args]
    else:
        with ProcessPoolExecutor(workers) as pool:
            groups = list(pool.map(_run_scenario, *zip(*args)))
    rows = [row for g in groups for row in g]
    if table_id in (1, 2):
        # maturity is the outer key of the layout for the first two tables
        rows.sort(key=lambda r: r.T)
    return rows


def average_row(rows):
    def avg(vals):
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    def rel(price, ref):
        if price is None or ref is None:
            return None
        return abs(price - ref) / ref * 100.0

    se = avg(r.mc_stderr for r in rows)
    ae = avg(rel(r.ae_price, r.mc_price) for r in rows)
    cv = avg(rel(r.cv_price, r.mc_price) for r in rows)
    return ["average", "", "", "", "", "", "",
            "" if se is None else f"{se:.6f}", "", "" if ae is None else f"{ae:.1f}",
            "", "" if cv is None else f"{cv:.1f}"]


def write_table_csv(rows, path, table_id):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_COLUMNS)
        for row in rows:
            out.writerow(row.csv_fields())
        out.writerow(average_row(rows))
        if table_id in (3, 4):
            fh.write(PEA_NOTE + "\n")


def table_path(out_dir, table_id):
    return os.path.join(out_dir, f"table{table_id}.csv")


def emit_table(table_id, scale, out_dir, plots=False, **kw):
    os.makedirs(out_dir, exist_ok=True)
    rows = run_table(table_id, scale, **kw)
    path = table_path(out_dir, table_id)
    write_table_csv(rows, path, table_id)
    if plots:
        from .plots import table_errors_plot

        table_errors_plot(rows, os.path.join(out_dir, f"table{table_id}_errors.svg"))
    return rows, path
