"""JSON run configuration.

Example::

    {
      "schema_version": 1,
      "model": {
        "assets": [{"s0": 100, "alpha": 0.2, "beta": 1.0}, ...],
        "weights": [0.25, 0.25, 0.25, 0.25],
        "rho": 0.3,
        "jump": {"type": "normal", "eta": -0.08, "gamma": 0.35},
        "lambda": 0.3,
        "r": 0.0
      },
      "option": {"K": 100, "T": [1, 3]},
      "mc": {"paths": 30000, "batches": 4, "seed": 7},
      "pide": {"dx": 0.0009765625, "dt": 0.001953125},
      "output": {"csv": "prices.csv", "plots": false}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .model import BasketModel, ConstantJump, LocalVolFn, ModelError, NormalJump, OptionSpec
from .montecarlo import McConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


_TOP = {"schema_version", "model", "option", "mc", "pide", "output"}
_MODEL = {"assets", "weights", "rho", "jump", "lambda", "r"}
_ASSET = {"s0", "alpha", "beta"}
_JUMP = {"type", "eta", "gamma", "y"}
_OPTION = {"K", "T"}
_PIDE = {"dx", "dt", "x_max", "var_floor", "smooth", "upwind"}
_OUTPUT = {"csv", "plots"}
_MC = {f.name for f in fields(McConfig)}


@dataclass(frozen=True)
class RunConfig:
    model: BasketModel
    strike: float
    maturities: tuple
    mc: McConfig = McConfig()
    pide: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def options(self):
        return [OptionSpec(self.strike, T) for T in self.maturities]


def _section(d, key, allowed, required=()):
    if not isinstance(d, dict):
        raise ConfigError(key, "expected an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(key, f"unknown key(s) {', '.join(unknown)}")
    for r in required:
        if r not in d:
            raise ConfigError(f"{key}.{r}" if key else r, "missing required key")
    return d


def _number(d, key, path, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    return float(v)


def _jump(d):
    _section(d, "model.jump", _JUMP, ("type",))
    kind = d["type"]
    if kind == "normal":
        return NormalJump(_number(d, "eta", "model.jump"), _number(d, "gamma", "model.jump"))
    if kind == "constant":
        if "y" in d:
            return ConstantJump(_number(d, "y", "model.jump"))
        return ConstantJump(_number(d, "eta", "model.jump"))
    raise ConfigError("model.jump.type", f"expected 'normal' or 'constant', got {kind!r}")


def _model(d):
    _section(d, "model", _MODEL, ("assets", "jump"))
    assets = d["assets"]
    if not isinstance(assets, list) or not assets:
        raise ConfigError("model.assets", "expected a non-empty list")
    spots, vols = [], []
    for i, a in enumerate(assets):
        path = f"model.assets[{i}]"
        _section(a, path, _ASSET, ("s0", "alpha"))
        spots.append(_number(a, "s0", path))
        try:
            vols.append(LocalVolFn(_number(a, "alpha", path), _number(a, "beta", path, 1.0)))
        except ModelError as e:
            raise ConfigError(path, str(e)) from None
    n = len(assets)
    weights = d.get("weights", [1.0 / n] * n)
    rho = d.get("rho", 0.0)
    try:
        corr = float(rho) if np.ndim(rho) == 0 else np.array(rho, dtype=float)
        return BasketModel(
            spots=spots,
            weights=weights,
            corr=corr,
            vols=vols,
            jump=_jump(d["jump"]),
            lam=_number(d, "lambda", "model", 0.0),
            r=_number(d, "r", "model", 0.0),
        )
    except (ModelError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("model", str(e)) from None


def parse_config(raw: dict) -> RunConfig:
    _section(raw, "", _TOP, ("schema_version", "model", "option"))
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {raw['schema_version']!r}")
    model = _model(raw["model"])

    opt = _section(raw["option"], "option", _OPTION, ("K", "T"))
    strike = _number(opt, "K", "option")
    Ts = opt["T"] if isinstance(opt["T"], list) else [opt["T"]]
    try:
        maturities = tuple(sorted(float(T) for T in Ts))
        for T in maturities:
            OptionSpec(strike, T)
    except (TypeError, ValueError) as e:
        raise ConfigError("option", str(e)) from None

    mc_raw = _section(raw.get("mc", {}), "mc", _MC)
    try:
        mc = McConfig(**mc_raw)
    except (TypeError, ValueError) as e:
        raise ConfigError("mc", str(e)) from None
    pide = dict(_section(raw.get("pide", {}), "pide", _PIDE))
    output = dict(_section(raw.get("output", {}), "output", _OUTPUT))
    return RunConfig(model, strike, maturities, mc, pide, output, raw)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_config(raw)


def model_to_dict(model: BasketModel) -> dict:
    jump = model.jump
    if isinstance(jump, ConstantJump):
        jd = {"type": "constant", "y": jump.y}
    else:
        jd = {"type": "normal", "eta": jump.eta, "gamma": jump.gamma}
    return {
        "assets": [
            {"s0": float(s), "alpha": v.alpha, "beta": v.beta}
            for s, v in zip(model.spots, model.vols)
        ],
        "weights": [float(w) for w in model.weights],
        "rho": model.corr.tolist(),
        "jump": jd,
        "lambda": model.lam,
        "r": model.r,
    }


def resolved(cfg: RunConfig) -> dict:
    """Fully resolved configuration, echoed with every result for provenance."""
    return {
        "schema_version": SCHEMA_VERSION,
        "model": model_to_dict(cfg.model),
        "option": {"K": cfg.strike, "T": list(cfg.maturities)},
        "mc": {f.name: getattr(cfg.mc, f.name) for f in fields(McConfig)},
        "pide": cfg.pide,
        "output": cfg.output,
    }
