"""Scenario configuration: JSON schema, defaults, validation, initial data.

A scenario document is a JSON object.  Only ``params`` (with ``beta``,
``K`` and ``d1``..``d4``) is required; every other key has a default.
Unknown keys are rejected at every nesting level.  See README.md for the
full schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis
from .exceptions import ConfigError
from .grid import Grid, build_grid, read_field_csv
from .model import (
    MU_KINDS,
    MuSchedule,
    Parameters,
    Sinusoid,
    validate_initial_data,
    validate_params,
)

MODELS = ("modified", "original")
STEPPERS = ("explicit", "imex")
IC_KINDS = ("constant", "random", "file", "near-branch", "array")


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "random"
    values: Optional[tuple] = None  # constant: (f, m, s, r)
    low: object = 0.0  # random: scalar or 4-sequence
    high: object = None  # random: defaults to K
    path: Optional[str] = None
    branch: str = "plus-branch"
    scale: float = 0.9
    fallback: Optional[tuple] = None  # near-branch when the branch does not exist; default (0.1K, 0.1K, 0, 0)
    array: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SweepSpec:
    beta_min: Optional[float] = None  # default 0.5*beta0
    beta_max: Optional[float] = None  # default 2*beta0
    points: int = 31
    ic_branch: str = "plus-branch"
    ic_scale: float = 0.9
    workers: int = 1


@dataclass(frozen=True)
class ProbeSpec:
    epsilon: Optional[float] = None  # default 1e-3*K


@dataclass(frozen=True)
class ScenarioConfig:
    params: Parameters
    grid: Grid = field(default_factory=lambda: build_grid(1, 1.0, 64))
    model: str = "modified"
    initial: InitialCondition = field(default_factory=InitialCondition)
    stepper: str = "imex"
    dt: Optional[float] = None
    safety: float = 0.9
    t_max: float = 50.0
    output_interval: float = 0.1
    convergence_window: int = 50
    convergence_tol: Optional[float] = None  # default 1e-6*K*sqrt(|Omega|)
    stop_on_convergence: bool = True
    cg_rtol: float = 1e-10
    cg_maxiter: int = 1000
    seed: int = 0
    out: Optional[str] = None
    sweep: SweepSpec = field(default_factory=SweepSpec)
    probe: ProbeSpec = field(default_factory=ProbeSpec)

    @property
    def tol(self) -> float:
        if self.convergence_tol is not None:
            return self.convergence_tol
        return 1e-6 * self.params.K * math.sqrt(self.grid.measure)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------- parsing

_TOP_KEYS = {
    "model", "params", "grid", "initial", "stepper", "dt", "safety", "t_max",
    "output_interval", "tolerances", "seed", "out", "sweep", "probe",
}
_PARAM_KEYS = {
    "beta", "K", "d1", "d2", "d3", "d4", "a1", "a2", "a3", "a4",
    "a0", "D0", "D1", "mu", "mu_multiplier", "clip_all_growth",
}
_SINUSOID_KEYS = {"mean", "amplitude", "wavenumber", "omega"}
_MU_KEYS = {"kind", "mu0", "gamma", "t_off"}
_GRID_KEYS = {"dim", "extents", "cells"}
_IC_KEYS = {"kind", "values", "low", "high", "path", "branch", "scale", "fallback"}
_TOL_KEYS = {"convergence_window", "convergence_tol", "stop_on_convergence", "cg_rtol", "cg_maxiter"}
_SWEEP_KEYS = {"beta_min", "beta_max", "points", "ic_branch", "ic_scale", "workers"}
_PROBE_KEYS = {"epsilon"}


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(repr(k) for k in unknown)}")


def _num(obj, key, where, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    v = obj[key]
    if v is None:
        return default
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _coefficient(v, where):
    if isinstance(v, dict):
        _reject_unknown(v, _SINUSOID_KEYS, where)
        return Sinusoid(
            mean=_num(v, "mean", where, required=True),
            amplitude=_num(v, "amplitude", where, 0.0),
            wavenumber=_num(v, "wavenumber", where, 1.0),
            omega=_num(v, "omega", where, 0.0),
        )
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number or sinusoid object, got {v!r}")
    return float(v)


def _params(obj):
    where = "params"
    _reject_unknown(obj, _PARAM_KEYS, where)
    kw = {k: _num(obj, k, where, required=True) for k in ("beta", "K", "d1", "d2", "d3", "d4")}
    for k in ("a1", "a2", "a3", "a4"):
        if k in obj:
            kw[k] = _coefficient(obj[k], f"{where}.{k}")
    for k in ("a0", "D0", "D1"):
        if k in obj:
            kw[k] = _num(obj, k, where)
    if "mu" in obj:
        mu = obj["mu"]
        _reject_unknown(mu, _MU_KEYS, f"{where}.mu")
        kind = mu.get("kind", "constant")
        if kind not in MU_KINDS:
            raise ConfigError(f"{where}.mu.kind: expected one of {MU_KINDS}, got {kind!r}")
        kw["mu"] = MuSchedule(
            kind=kind,
            mu0=_num(mu, "mu0", f"{where}.mu", 0.0),
            gamma=_num(mu, "gamma", f"{where}.mu", 0.0),
            t_off=_num(mu, "t_off", f"{where}.mu", 0.0),
        )
    if "mu_multiplier" in obj:
        kw["mu_multiplier"] = _coefficient(obj["mu_multiplier"], f"{where}.mu_multiplier")
    if "clip_all_growth" in obj:
        if not isinstance(obj["clip_all_growth"], bool):
            raise ConfigError(f"{where}.clip_all_growth: expected true/false")
        kw["clip_all_growth"] = obj["clip_all_growth"]
    return Parameters(**kw)


def _choice(obj, key, choices, default, where):
    v = obj.get(key, default)
    if v not in choices:
        raise ConfigError(f"{where}.{key}: expected one of {choices}, got {v!r}")
    return v


def _vector4(v, where):
    if np.ndim(v) == 0:
        return float(v)
    if len(v) != 4:
        raise ConfigError(f"{where}: expected a number or 4 numbers")
    return tuple(float(x) for x in v)


def parse_config(text: str, base_dir=None) -> ScenarioConfig:
    """Parse and validate a JSON scenario document.

    Relative ``initial.path`` entries resolve against ``base_dir``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _reject_unknown(doc, _TOP_KEYS, "config")
    if "params" not in doc:
        raise ConfigError("config: missing required key 'params'")

    params = _params(doc["params"])
    kw = {"params": params}

    g = doc.get("grid", {})
    _reject_unknown(g, _GRID_KEYS, "grid")
    try:
        kw["grid"] = build_grid(int(g.get("dim", 1)), g.get("extents", 1.0), g.get("cells", 64))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from None

    kw["model"] = _choice(doc, "model", MODELS, "modified", "config")
    kw["stepper"] = _choice(doc, "stepper", STEPPERS, "imex", "config")
    for key in ("dt", "safety", "t_max", "output_interval"):
        v = _num(doc, key, "config")
        if v is not None:
            if not v > 0:
                raise ConfigError(f"config.{key}: must be positive, got {v}")
            kw[key] = v
    if "seed" in doc:
        seed = doc["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"config.seed: expected a nonnegative integer, got {seed!r}")
        kw["seed"] = seed
    if doc.get("out") is not None:
        kw["out"] = str(doc["out"])

    ic = doc.get("initial", {})
    _reject_unknown(ic, _IC_KEYS, "initial")
    ic_kind = _choice(ic, "kind", IC_KINDS[:-1], "random", "initial")
    ic_kw = {"kind": ic_kind}
    if "values" in ic:
        ic_kw["values"] = _vector4(ic["values"], "initial.values")
        if not isinstance(ic_kw["values"], tuple):
            ic_kw["values"] = (ic_kw["values"],) * 4
    if "low" in ic:
        ic_kw["low"] = _vector4(ic["low"], "initial.low")
    if "high" in ic:
        ic_kw["high"] = _vector4(ic["high"], "initial.high")
    if "path" in ic:
        path = Path(ic["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        ic_kw["path"] = str(path)
    if "branch" in ic:
        ic_kw["branch"] = str(ic["branch"])
    if "scale" in ic:
        ic_kw["scale"] = _num(ic, "scale", "initial")
    if "fallback" in ic:
        ic_kw["fallback"] = _vector4(ic["fallback"], "initial.fallback")
    if ic_kind == "constant" and "values" not in ic_kw:
        raise ConfigError("initial: kind 'constant' needs 'values'")
    if ic_kind == "file" and "path" not in ic_kw:
        raise ConfigError("initial: kind 'file' needs 'path'")
    kw["initial"] = InitialCondition(**ic_kw)

    tol = doc.get("tolerances", {})
    _reject_unknown(tol, _TOL_KEYS, "tolerances")
    if "convergence_window" in tol:
        w = tol["convergence_window"]
        if isinstance(w, bool) or not isinstance(w, int) or w < 2:
            raise ConfigError(f"tolerances.convergence_window: expected an integer >= 2, got {w!r}")
        kw["convergence_window"] = w
    for key in ("convergence_tol", "cg_rtol"):
        v = _num(tol, key, "tolerances")
        if v is not None:
            kw[key] = v
    if "cg_maxiter" in tol:
        kw["cg_maxiter"] = int(tol["cg_maxiter"])
    if "stop_on_convergence" in tol:
        kw["stop_on_convergence"] = bool(tol["stop_on_convergence"])

    sw = doc.get("sweep", {})
    _reject_unknown(sw, _SWEEP_KEYS, "sweep")
    kw["sweep"] = SweepSpec(
        beta_min=_num(sw, "beta_min", "sweep"),
        beta_max=_num(sw, "beta_max", "sweep"),
        points=int(sw.get("points", 31)),
        ic_branch=str(sw.get("ic_branch", "plus-branch")),
        ic_scale=_num(sw, "ic_scale", "sweep", 0.9),
        workers=int(sw.get("workers", 1)),
    )
    pr = doc.get("probe", {})
    _reject_unknown(pr, _PROBE_KEYS, "probe")
    kw["probe"] = ProbeSpec(epsilon=_num(pr, "epsilon", "probe"))

    config = ScenarioConfig(**kw)
    validate_config(config)
    return config


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def validate_config(config: ScenarioConfig) -> ScenarioConfig:
    """Run parameter and initial-data validation; raise ``ConfigError`` on failure."""
    validate_params(config.params, coords=config.grid.coords, times=(0.0, 0.5 * config.t_max, config.t_max))
    initial_fields(config)
    return config


# ---------------------------------------------------------------- initial data

def _per_species(v, default):
    v = default if v is None else v
    if np.ndim(v) == 0:
        return np.full(4, float(v))
    return np.asarray(v, dtype=float)


def branch_initial_state(params: Parameters, branch: str, scale: float, fallback=None) -> tuple:
    """``scale`` times the named steady state, or ``fallback`` if it does not exist."""
    ss = analysis.find_branch(analysis.steady_states(params), branch)
    if ss is None and branch == "plus-branch":
        # at the critical birth rate the interior pair merges
        ss = analysis.find_branch(analysis.steady_states(params), "degenerate")
    if ss is None:
        if fallback is None:
            return (0.1 * params.K, 0.1 * params.K, 0.0, 0.0)
        return tuple(fallback)
    return (scale * ss.f_star, scale * ss.m_star, 0.0, 0.0)


def initial_fields(config: ScenarioConfig) -> np.ndarray:
    """Build and validate the ``(4, *cells)`` initial array."""
    ic, grid, K = config.initial, config.grid, config.params.K
    shape = (4,) + grid.cells
    if ic.kind == "array":
        Z = np.array(ic.array, dtype=float)
        if Z.shape != shape:
            raise ConfigError(f"initial array has shape {Z.shape}, expected {shape}")
    elif ic.kind == "constant":
        Z = np.broadcast_to(np.asarray(ic.values, dtype=float).reshape((4,) + (1,) * grid.dim), shape).copy()
    elif ic.kind == "random":
        low = _per_species(ic.low, 0.0)
        high = _per_species(ic.high, K)
        rng = np.random.default_rng(config.seed)
        u = rng.random(shape)
        expand = (slice(None),) + (None,) * grid.dim
        Z = low[expand] + (high - low)[expand] * u
    elif ic.kind == "file":
        try:
            Z = read_field_csv(ic.path, grid)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"initial.path: {exc}") from None
    elif ic.kind == "near-branch":
        values = branch_initial_state(config.params, ic.branch, ic.scale, ic.fallback)
        Z = np.broadcast_to(np.asarray(values).reshape((4,) + (1,) * grid.dim), shape).copy()
    else:
        raise ConfigError(f"unknown initial kind {ic.kind!r}")
    validate_initial_data(Z, K)
    return Z


def with_initial_array(config: ScenarioConfig, Z) -> ScenarioConfig:
    return config.replace(initial=InitialCondition(kind="array", array=np.asarray(Z, dtype=float)))
