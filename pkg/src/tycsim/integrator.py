"""Method-of-lines time integration with bounds monitoring.

Species are stored stacked in one ``(4, *cells)`` array so each step is a
handful of whole-array numpy operations regardless of grid size.
"""

from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ScenarioConfig, initial_fields, with_initial_array
from .exceptions import ConfigError, InvariantViolation, NumericalFailure
from .grid import Grid, diffusion_apply, diffusion_rate, l2_norm
from .model import (
    SPECIES,
    Parameters,
    _modified_kernel,
    _original_kernel,
    coefficient_upper,
    reaction_rate_bound,
    sample_coefficient,
    sample_multiplier,
)
from .solvers import batched_cg

log = logging.getLogger(__name__)

LOWER_TOL = 1e-10
UPPER_RTOL = 1e-10
MAX_STORED_EVENTS = 200


@dataclass
class SimState:
    t: float
    fields: np.ndarray
    grid: Grid
    step: int = 0

    def __getattr__(self, name):
        if name in SPECIES:
            return self.fields[SPECIES.index(name)]
        raise AttributeError(name)


@dataclass
class BoundsEvent:
    t: float
    step: int
    species: str
    kind: str  # "below" or "above"
    index: tuple
    value: float


@dataclass
class ConvergenceVerdict:
    converged: bool
    t: Optional[float] = None
    distance: float = math.inf
    rate: float = math.inf


@dataclass
class SimulationResult:
    final: SimState
    times: np.ndarray
    l2: np.ndarray  # (n_samples, 4)
    mins: np.ndarray
    maxs: np.ndarray
    events: list
    event_counts: dict
    converged: bool
    convergence_time: Optional[float]
    wall_time: float
    steps: int
    dt: float
    model: str
    stepper: str
    snapshots: Optional[np.ndarray] = field(default=None, repr=False)

    def count(self, species: str, kind: str = "below") -> int:
        return self.event_counts.get((species, kind), 0)

    @property
    def n_events(self) -> int:
        return sum(self.event_counts.values())

    def final_norms(self) -> np.ndarray:
        return self.l2[-1]


# ---------------------------------------------------------------- time steps

def stable_dt(grid: Grid, a_max: float, safety: float = 0.9) -> float:
    """Forward-Euler diffusion limit ``safety * h_min^2 / (2 * dim * a_max)``."""
    if not a_max > 0:
        raise ValueError(f"a_max must be positive, got {a_max}")
    return safety * grid.h_min**2 / (2 * grid.dim * a_max)


def explicit_dt(grid: Grid, a_max: float, rate_bound: float, safety: float = 0.9) -> float:
    """Largest Euler step that keeps diffusion and reaction together sign-preserving."""
    return safety / (diffusion_rate(a_max, grid) + rate_bound)


def coefficient_fields(params: Parameters, grid: Grid, t: float) -> np.ndarray:
    return np.stack([sample_coefficient(a, grid.coords, t) for a in params.diffusivities])


def _reaction(Z, params, model, mu):
    if model == "modified":
        return _modified_kernel(Z[0], Z[1], Z[2], Z[3], params.beta, params.K, params.deaths, mu,
                                params.clip_all_growth)
    if model == "original":
        return _original_kernel(Z[0], Z[1], Z[2], Z[3], params.beta, params.K, params.deaths, mu)
    raise ValueError(f"unknown model {model!r}")


def _mu_field(params, grid, t, mu_mult):
    if mu_mult is None:
        mu_mult = sample_multiplier(params.mu_multiplier, grid.coords)
    return params.mu(t) * mu_mult


def _check_finite(Z, t):
    if not np.all(np.isfinite(Z)):
        bad = np.argwhere(~np.isfinite(Z))[0]
        raise NumericalFailure(f"non-finite {SPECIES[bad[0]]} at cell {tuple(bad[1:])}, t={t:.6g}")


def step_explicit(state: SimState, dt: float, params: Parameters, model: str = "modified",
                  *, a=None, mu_mult=None) -> SimState:
    """One forward-Euler step; coefficients and mu are taken at ``state.t``."""
    grid = state.grid
    if a is None:
        a = coefficient_fields(params, grid, state.t)
    mu = _mu_field(params, grid, state.t, mu_mult)
    Z = state.fields
    Z_new = Z + dt * (diffusion_apply(Z, a, grid) + _reaction(Z, params, model, mu))
    _check_finite(Z_new, state.t + dt)
    return SimState(state.t + dt, Z_new, grid, state.step + 1)


def step_imex(state: SimState, dt: float, params: Parameters, model: str = "modified",
              *, a=None, mu_mult=None, rtol: float = 1e-10, maxiter: int = 1000) -> SimState:
    """Explicit reaction, backward-Euler diffusion.

    Solves ``(I - dt*A_i) u_i = u_i + dt*F_i`` for each species with
    conjugate gradients.  Reactions use ``state.t``; the diffusion
    coefficients are taken at the new time level.
    """
    grid = state.grid
    t_new = state.t + dt
    if a is None:
        a = coefficient_fields(params, grid, t_new)
    mu = _mu_field(params, grid, state.t, mu_mult)
    Z = state.fields
    rhs = Z + dt * _reaction(Z, params, model, mu)
    _check_finite(rhs, t_new)
    Z_new, _ = batched_cg(lambda x: x - dt * diffusion_apply(x, a, grid), rhs, x0=rhs,
                          rtol=rtol, maxiter=maxiter)
    _check_finite(Z_new, t_new)
    return SimState(t_new, Z_new, grid, state.step + 1)


# ---------------------------------------------------------------- convergence

def detect_convergence(times, states, window: int = 50, tol: float = 1e-6,
                       cell_volume: float = 1.0) -> ConvergenceVerdict:
    """Decide whether the last ``window`` samples have settled.

    Converged when every sample in the window lies within ``tol`` (L2) of
    the last one and the last step-to-step change per unit time is below
    ``tol``.  ``states`` may be full fields or any per-sample vectors.
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    if len(states) < window:
        return ConvergenceVerdict(False)
    t_end, t_prev = times[-1], times[-2]
    last, prev = np.asarray(states[-1], dtype=float), np.asarray(states[-2], dtype=float)
    rate = math.sqrt(float(np.sum((last - prev) ** 2)) * cell_volume) / (t_end - t_prev)
    if not rate < tol:
        return ConvergenceVerdict(False, t_end, math.inf, rate)
    recent = list(states)[-window:]
    distance = max(math.sqrt(float(np.sum((np.asarray(s, dtype=float) - last) ** 2)) * cell_volume) for s in recent)
    return ConvergenceVerdict(distance < tol, t_end, distance, rate)


def first_convergence(times, states, window: int, tol: float, cell_volume: float = 1.0) -> Optional[int]:
    """Index of the first sample at which :func:`detect_convergence` fires, or None."""
    for k in range(window, len(states) + 1):
        if detect_convergence(times[:k], states[:k], window, tol, cell_volume).converged:
            return k - 1
    return None


# ---------------------------------------------------------------- runs

class _Monitor:
    def __init__(self, K, model):
        self.lower = -LOWER_TOL
        self.upper = K * (1.0 + UPPER_RTOL)
        self.model = model
        self.events = []
        self.counts = {}

    def check(self, state: SimState):
        Z = state.fields
        flat = Z.reshape(4, -1)
        lo = flat.min(axis=1)
        hi = flat.max(axis=1)
        if lo.min() >= self.lower and hi.max() <= self.upper:
            return
        for k, name in enumerate(SPECIES):
            for kind, bad in (("below", lo[k] < self.lower), ("above", hi[k] > self.upper)):
                if not bad:
                    continue
                pos = int(np.argmin(flat[k]) if kind == "below" else np.argmax(flat[k]))
                index = np.unravel_index(pos, state.grid.cells)
                event = BoundsEvent(state.t, state.step, name, kind, tuple(int(i) for i in index),
                                    float(flat[k, pos]))
                if self.model == "modified":
                    raise InvariantViolation(
                        f"{name} went {kind} the band [0, K] at t={state.t:.6g}, cell {event.index}: "
                        f"{event.value:.6g}", event)
                self.counts[(name, kind)] = self.counts.get((name, kind), 0) + 1
                if len(self.events) < MAX_STORED_EVENTS:
                    self.events.append(event)


def plan_steps(config: ScenarioConfig):
    """Return ``(dt, substeps_per_output, n_outputs)`` for a scenario.

    The step is shrunk so a whole number of steps fills each output
    interval; ``t_max`` is rounded up to a whole number of intervals.
    """
    params, grid = config.params, config.grid
    a_max = max(coefficient_upper(a, params.a0) for a in params.diffusivities)
    mu_max = params.mu.mu0 * float(np.max(sample_multiplier(params.mu_multiplier, grid.coords)))
    rate = reaction_rate_bound(params, mu_max)
    if config.stepper == "explicit":
        limit = explicit_dt(grid, a_max, rate, config.safety)
        if config.dt is not None and config.dt > stable_dt(grid, a_max, config.safety) * (1 + 1e-12):
            raise ConfigError(
                f"dt={config.dt} exceeds the explicit stability limit {stable_dt(grid, a_max, config.safety):.6g}")
    else:
        limit = config.safety / rate
    dt = config.dt if config.dt is not None else limit
    if dt > limit * (1 + 1e-12):
        log.warning("dt=%.6g exceeds the bound-preserving step %.6g", dt, limit)
    interval = config.output_interval
    n_sub = max(1, math.ceil(interval / dt - 1e-9))
    n_out = max(1, math.ceil(config.t_max / interval - 1e-9))
    return interval / n_sub, n_sub, n_out


def run(config: ScenarioConfig, *, record_states: bool = False, model: Optional[str] = None) -> SimulationResult:
    """Integrate a scenario to ``t_max`` or until convergence.

    Bounds are checked after every step.  Leaving [0, K] raises
    ``InvariantViolation`` under the modified model and is recorded
    otherwise.  Non-finite values raise ``NumericalFailure``.
    """
    model = model or config.model
    params, grid = config.params, config.grid
    start = time.perf_counter()
    Z0 = initial_fields(config)
    dt, n_sub, n_out = plan_steps(config)
    interval = config.output_interval

    static_a = not any(callable(a) for a in params.diffusivities)
    a_static = coefficient_fields(params, grid, 0.0) if static_a else None
    mu_mult = sample_multiplier(params.mu_multiplier, grid.coords)

    monitor = _Monitor(params.K, model)
    state = SimState(0.0, Z0, grid, 0)
    monitor.check(state)

    times, l2, mins, maxs = [], [], [], []
    snapshots = [] if record_states else None
    window = deque(maxlen=config.convergence_window)
    wtimes = deque(maxlen=config.convergence_window)
    tol = config.tol

    def record(st):
        flat = st.fields.reshape(4, -1)
        times.append(st.t)
        l2.append(l2_norm(st.fields, grid))
        mins.append(flat.min(axis=1))
        maxs.append(flat.max(axis=1))
        if record_states:
            snapshots.append(st.fields.copy())
        window.append(st.fields.copy())
        wtimes.append(st.t)

    record(state)
    verdict = ConvergenceVerdict(False)
    step = step_explicit if config.stepper == "explicit" else step_imex
    kw = {} if config.stepper == "explicit" else {"rtol": config.cg_rtol, "maxiter": config.cg_maxiter}
    # overflow in a blowing-up run is reported by the finiteness check instead
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_out + 1):
            for j in range(n_sub):
                t = ((k - 1) * n_sub + j) * dt
                state = SimState(t, state.fields, grid, state.step)
                state = step(state, dt, params, model, a=a_static, mu_mult=mu_mult, **kw)
                monitor.check(state)
            state.t = k * interval
            record(state)
            verdict = detect_convergence(wtimes, window, config.convergence_window, tol, grid.cell_volume)
            if verdict.converged and config.stop_on_convergence:
                break

    wall = time.perf_counter() - start
    log.info("%s/%s run: %d steps, dt=%.4g, t=%.6g, converged=%s, %.2fs",
             model, config.stepper, state.step, dt, state.t, verdict.converged, wall)
    return SimulationResult(
        final=state,
        times=np.array(times),
        l2=np.array(l2),
        mins=np.array(mins),
        maxs=np.array(maxs),
        events=monitor.events,
        event_counts=monitor.counts,
        converged=verdict.converged,
        convergence_time=verdict.t if verdict.converged else None,
        wall_time=wall,
        steps=state.step,
        dt=dt,
        model=model,
        stepper=config.stepper,
        snapshots=np.array(snapshots) if record_states else None,
    )


# ---------------------------------------------------------------- continuous dependence

@dataclass
class ProbeReport:
    epsilon: float
    times: np.ndarray
    ratios: np.ndarray  # ||Z* - Z**||(t) / epsilon
    ratios_half: np.ndarray  # same with epsilon / 2
    sup_ratio: float
    sup_ratio_half: float

    @property
    def relative_change(self) -> float:
        if self.sup_ratio == 0.0:
            return 0.0
        return abs(self.sup_ratio_half - self.sup_ratio) / self.sup_ratio


def perturbation_direction(grid: Grid) -> np.ndarray:
    """Smooth unit-L2 perturbation of f and m, shaped ``(4, *cells)``."""
    x = grid.coords[0]
    bump = np.cos(np.pi * x / grid.extents[0])
    d = np.zeros((4,) + grid.cells)
    d[0] = bump
    d[1] = bump
    return d / float(np.sqrt(np.sum(d * d) * grid.cell_volume))


def continuous_dependence_probe(config: ScenarioConfig, epsilon: float, direction=None) -> ProbeReport:
    """Sup-in-time distance between a run and its perturbed twin, per unit perturbation.

    The perturbed initial data differ by ``epsilon`` in L2 along
    ``direction``.  The probe is repeated at ``epsilon/2`` so callers can
    check first-order scaling.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    cfg = config.replace(stop_on_convergence=False)
    grid = cfg.grid
    Z0 = initial_fields(cfg)
    base = run(with_initial_array(cfg, Z0), record_states=True)
    if epsilon == 0.0:
        zeros = np.zeros_like(base.times)
        return ProbeReport(0.0, base.times, zeros, zeros.copy(), 0.0, 0.0)
    if direction is None:
        direction = perturbation_direction(grid)

    def ratios(eps):
        Zp = Z0 + eps * direction
        if Zp.min() < 0 or Zp.max() > cfg.params.K:
            raise ValueError("perturbed initial data leave [0, K]; use an interior base state")
        other = run(with_initial_array(cfg, Zp), record_states=True)
        diff = other.snapshots - base.snapshots
        axes = tuple(range(1, diff.ndim))
        return np.sqrt(np.sum(diff * diff, axis=axes) * grid.cell_volume) / eps

    r1 = ratios(epsilon)
    r2 = ratios(0.5 * epsilon)
    return ProbeReport(epsilon, base.times, r1, r2, float(r1.max()), float(r2.max()))
