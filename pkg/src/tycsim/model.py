"""Pointwise model definitions: growth factors, reaction terms, parameters.

All reaction functions broadcast over numpy arrays, so the same code
evaluates a single point or a whole grid of cells.  State arguments are any
4-sequence ``(f, m, s, r)``; a ``StatePoint`` works, as does a stacked
array of shape ``(4, ...)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from .exceptions import ParameterError

log = logging.getLogger(__name__)

SPECIES = ("f", "m", "s", "r")

MU_KINDS = ("constant", "exponential-decay", "step-off")

# hypothesis labels used in violation reports
DIFFUSION_BOUNDS = "diffusion-bounds"
RATE_BOUNDS = "rate-bounds"
INITIAL_DATA_BOUNDS = "initial-data-bounds"
MU_DECAY = "mu-decay"
POSITIVITY = "positivity"


class StatePoint(NamedTuple):
    f: float
    m: float
    s: float
    r: float


@dataclass(frozen=True)
class Sinusoid:
    """Smooth coefficient field ``mean + amplitude*cos(k*pi*x)*cos(omega*t)``.

    ``x`` is the first spatial coordinate.  The extrema are known in closed
    form, which lets validation and time-step selection avoid sampling.
    """

    mean: float
    amplitude: float = 0.0
    wavenumber: float = 1.0
    omega: float = 0.0

    def __call__(self, coords, t):
        x = coords[0]
        return self.mean + self.amplitude * np.cos(self.wavenumber * np.pi * x) * math.cos(self.omega * t)

    @property
    def lower(self):
        return self.mean - abs(self.amplitude)

    @property
    def upper(self):
        return self.mean + abs(self.amplitude)


CoefficientSpec = Union[float, Sinusoid, Callable]


def sample_coefficient(spec: CoefficientSpec, coords, t: float) -> np.ndarray:
    """Evaluate a diffusion coefficient on cell centres ``coords`` at time ``t``.

    ``coords`` is a tuple of arrays, one per axis, all shaped like the grid.
    """
    shape = np.shape(coords[0])
    if callable(spec):
        values = np.asarray(spec(coords, t), dtype=float)
        return np.broadcast_to(values, shape).astype(float, copy=True)
    return np.full(shape, float(spec))


def coefficient_upper(spec: CoefficientSpec, a0: float) -> float:
    """An upper bound of the coefficient valid for all space and time."""
    if isinstance(spec, Sinusoid):
        return spec.upper
    if callable(spec):
        return 1.0 / a0
    return float(spec)


@dataclass(frozen=True)
class MuSchedule:
    """Time dependence of the introduction rate."""

    kind: str = "constant"
    mu0: float = 0.0
    gamma: float = 0.0
    t_off: float = 0.0

    def __call__(self, t: float) -> float:
        return mu_sample(self, t)


def mu_sample(schedule: MuSchedule, t: float) -> float:
    if t < 0:
        raise ValueError(f"mu_sample needs t >= 0, got {t}")
    if schedule.kind == "constant":
        return schedule.mu0
    if schedule.kind == "exponential-decay":
        return schedule.mu0 * math.exp(-schedule.gamma * t)
    if schedule.kind == "step-off":
        return schedule.mu0 if t < schedule.t_off else 0.0
    raise ValueError(f"unknown mu schedule kind {schedule.kind!r}")


def mu_decays(schedule: MuSchedule) -> bool:
    """True when the schedule tends to zero as t grows."""
    if schedule.mu0 == 0.0:
        return True
    if schedule.kind == "exponential-decay":
        return schedule.gamma > 0
    return schedule.kind == "step-off"


@dataclass(frozen=True)
class Parameters:
    beta: float
    K: float
    d1: float
    d2: float
    d3: float
    d4: float
    a1: CoefficientSpec = 1.0
    a2: CoefficientSpec = 1.0
    a3: CoefficientSpec = 1.0
    a4: CoefficientSpec = 1.0
    mu: MuSchedule = field(default_factory=MuSchedule)
    a0: float = 0.1
    D0: float = 0.01
    D1: float = 10.0
    # per-cell multiplier of mu(t); float or callable(coords) -> array
    mu_multiplier: Union[float, Callable] = 1.0
    clip_all_growth: bool = False

    @property
    def deaths(self) -> tuple:
        return (self.d1, self.d2, self.d3, self.d4)

    @property
    def diffusivities(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4)

    def replace(self, **changes) -> "Parameters":
        return replace(self, **changes)


@dataclass(frozen=True)
class Violation:
    field: str
    value: object
    bound: str
    hypothesis: str

    def __str__(self):
        return f"{self.field}={self.value!r} violates {self.bound} [{self.hypothesis}]"


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite input")


def growth_factor(p, K: float):
    """Logistic factor ``1 - (f+m+s+r)/K``; negative above capacity."""
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    f, m, s, r = p
    _check_finite(f, m, s, r)
    return 1.0 - (f + m + s + r) / K


def clipped_growth_factor(p, K: float):
    return np.maximum(growth_factor(p, K), 0.0)


def _modified_kernel(f, m, s, r, beta, K, d, mu, clip_all):
    g = 1.0 - (f + m + s + r) / K
    gp = np.maximum(g, 0.0)
    g_fr = gp if clip_all else g
    return np.stack(
        [
            0.5 * beta * f * m * g_fr - d[0] * f,
            beta * (0.5 * f * m + 0.5 * r * m + f * s) * gp - d[1] * m,
            beta * (0.5 * r * m + r * s) * gp - d[2] * s,
            mu * r * g_fr - d[3] * r,
        ]
    )


def _original_kernel(f, m, s, r, beta, K, d, mu):
    g = 1.0 - (f + m + s + r) / K
    return np.stack(
        [
            0.5 * beta * f * m * g - d[0] * f,
            beta * (0.5 * f * m + 0.5 * r * m + f * s) * g - d[1] * m,
            beta * (0.5 * r * m + r * s) * g - d[2] * s,
            mu - d[3] * r,
        ]
    )


def _broadcast_deaths(d):
    if np.ndim(d) == 0:
        return (float(d),) * 4
    d = tuple(float(x) for x in d)
    if len(d) != 4:
        raise ValueError("death rates must be a scalar or a 4-sequence")
    return d


def reaction_modified(p, params: Parameters, mu_value) -> np.ndarray:
    """Right-hand sides ``(F1, F2, F3, F4)`` of the modified system.

    The f and r equations use the unclipped growth factor, the m and s
    equations its positive part, unless ``params.clip_all_growth`` is set.
    """
    f, m, s, r = (np.asarray(x, dtype=float) for x in p)
    _check_finite(f, m, s, r, mu_value)
    out = _modified_kernel(f, m, s, r, params.beta, params.K, params.deaths, mu_value, params.clip_all_growth)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite reaction value; parameters or state corrupted")
    return out


def reaction_original(p, D, beta: float, K: float, d, mu_value) -> np.ndarray:
    """Reactions of the unmodified model: unclipped g everywhere, constant r source.

    ``D`` is accepted for signature parity and ignored.  ``d`` is a single
    death rate or one per species.
    """
    f, m, s, r = (np.asarray(x, dtype=float) for x in p)
    _check_finite(f, m, s, r, mu_value, beta, K)
    return _original_kernel(f, m, s, r, beta, K, _broadcast_deaths(d), mu_value)


def reaction_reduced(f, m, params: Parameters) -> np.ndarray:
    """Two-species system left once s and r have died out."""
    f = np.asarray(f, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_finite(f, m)
    births = 0.5 * params.beta * f * m * (1.0 - (f + m) / params.K)
    return np.stack([births - params.d1 * f, births - params.d2 * m])


def reaction_rate_bound(params: Parameters, mu_max: float) -> float:
    """Bound on the per-unit-density reaction rates for states in [0, K]^4.

    Forward Euler with ``dt * (diffusion_rate + bound) <= 1`` keeps every
    species inside [0, K] (the growth factor is at least -3 there).
    """
    return 1.5 * params.beta * params.K + max(params.deaths) + 3.0 * mu_max


def sample_multiplier(mult, coords) -> np.ndarray:
    """Per-cell multiplier of the introduction rate; ``Sinusoid`` is sampled at t=0."""
    if isinstance(mult, Sinusoid):
        values = mult(coords, 0.0)
    elif callable(mult):
        values = mult(coords)
    else:
        values = float(mult)
    return np.broadcast_to(np.asarray(values, dtype=float), np.shape(coords[0])).copy()


def _multiplier_max(mult, coords):
    if isinstance(mult, Sinusoid):
        return mult.upper
    if callable(mult):
        if coords is None:
            return None
        return float(np.max(sample_multiplier(mult, coords)))
    return float(mult)


def validate_params(raw: Parameters, coords=None, times: Sequence[float] = (0.0,)) -> Parameters:
    """Check every parameter hypothesis; raise ``ParameterError`` listing all failures.

    Callable coefficient fields are sampled at ``coords`` for each time in
    ``times``; without ``coords`` only their closed-form bounds (if any) are
    checked.
    """
    bad = []
    for name in ("beta", "K"):
        v = getattr(raw, name)
        if not (math.isfinite(v) and v > 0):
            bad.append(Violation(name, v, "> 0", POSITIVITY))
    a0 = raw.a0
    if not (math.isfinite(a0) and 0 < a0 <= 1):
        bad.append(Violation("a0", a0, "0 < a0 <= 1", DIFFUSION_BOUNDS))
    else:
        lo, hi = a0, 1.0 / a0
        for i, spec in enumerate(raw.diffusivities, start=1):
            name = f"a{i}"
            if isinstance(spec, Sinusoid):
                vmin, vmax = spec.lower, spec.upper
            elif callable(spec):
                if coords is None:
                    continue
                samples = [sample_coefficient(spec, coords, t) for t in times]
                vmin = min(float(np.min(s)) for s in samples)
                vmax = max(float(np.max(s)) for s in samples)
            else:
                vmin = vmax = float(spec)
            if not (math.isfinite(vmin) and math.isfinite(vmax)) or vmin < lo or vmax > hi:
                value = vmin if vmin == vmax else (vmin, vmax)
                bad.append(Violation(name, value, f"[{lo:g}, {hi:g}]", DIFFUSION_BOUNDS))
    D0, D1 = raw.D0, raw.D1
    if not (math.isfinite(D0) and math.isfinite(D1) and 0 < D0 <= D1):
        bad.append(Violation("D0,D1", (D0, D1), "0 < D0 <= D1", RATE_BOUNDS))
    else:
        for i, d in enumerate(raw.deaths, start=1):
            if not (math.isfinite(d) and D0 <= d <= D1):
                bad.append(Violation(f"d{i}", d, f"[{D0:g}, {D1:g}]", RATE_BOUNDS))
        mu = raw.mu
        if mu.kind not in MU_KINDS:
            bad.append(Violation("mu.kind", mu.kind, f"one of {MU_KINDS}", RATE_BOUNDS))
        mult = _multiplier_max(raw.mu_multiplier, coords)
        if mu.mu0 < 0 or mu.gamma < 0 or mu.t_off < 0:
            bad.append(Violation("mu", (mu.mu0, mu.gamma, mu.t_off), "nonnegative", RATE_BOUNDS))
        elif mult is not None and (mult < 0 or mu.mu0 * mult > D1):
            bad.append(Violation("mu0", mu.mu0 * mult, f"[0, {D1:g}]", RATE_BOUNDS))
    if bad:
        raise ParameterError(bad)
    return raw


def validate_initial_data(fields, K: float) -> None:
    """Pointwise check ``0 <= f0, m0, s0, r0 <= K``.

    The stronger condition that the four sup-norms sum to at most K is only
    logged: every bound the integrator relies on holds without it.
    """
    bad = []
    sups = []
    for name, u in zip(SPECIES, fields):
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            bad.append(Violation(f"{name}0", "non-finite", "finite", INITIAL_DATA_BOUNDS))
            continue
        lo, hi = float(np.min(u)), float(np.max(u))
        if lo < 0 or hi > K:
            bad.append(Violation(f"{name}0", (lo, hi), f"[0, {K:g}]", INITIAL_DATA_BOUNDS))
        sups.append(hi)
    if bad:
        raise ParameterError(bad)
    if sum(sups) > K:
        log.info("initial sup-norms sum to %.6g > K=%.6g", sum(sups), K)
