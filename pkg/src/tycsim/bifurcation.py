"""Birth-rate sweeps that pair analytic branches with simulated long-time states."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .config import InitialCondition, ScenarioConfig
from .exceptions import NoTransitionError, TycError
from .integrator import run


@dataclass
class BifurcationRecord:
    beta: float
    branches: list = field(repr=False)
    norms: np.ndarray  # final L2 norms of (f, m, s, r)
    means: np.ndarray  # final spatial means of (f, m, s, r)
    converged: bool
    t_final: float
    K: float
    measure: float

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    def nearest_branch(self):
        """Analytic branch closest to the simulated mean (f, m), with its distance."""
        best = None
        for ss in self.branches:
            dist = math.hypot(self.means[0] - ss.f_star, self.means[1] - ss.m_star)
            if best is None or dist < best[1]:
                best = (ss, dist)
        return best


@dataclass
class TransitionEstimate:
    beta_star: float
    half_width: float
    below: float
    above: float


def beta_grid(config: ScenarioConfig) -> np.ndarray:
    p, sw = config.params, config.sweep
    beta0 = analysis.critical_beta(p.d1, p.d2, p.K)
    lo = sw.beta_min if sw.beta_min is not None else 0.5 * beta0
    hi = sw.beta_max if sw.beta_max is not None else 2.0 * beta0
    return np.linspace(lo, hi, sw.points)


def _record(args):
    beta, config = args
    params = config.params.replace(beta=float(beta))
    ic = InitialCondition(kind="near-branch", branch=config.sweep.ic_branch, scale=config.sweep.ic_scale,
                          fallback=config.initial.fallback)
    cfg = config.replace(params=params, initial=ic)
    try:
        res = run(cfg)
    except TycError as exc:
        raise type(exc)(f"beta={beta:.15g}: {exc}") from exc
    axes = tuple(range(1, res.final.fields.ndim))
    return BifurcationRecord(
        beta=float(beta),
        branches=analysis.steady_states(params),
        norms=res.l2[-1].copy(),
        means=res.final.fields.mean(axis=axes),
        converged=res.converged,
        t_final=res.final.t,
        K=params.K,
        measure=cfg.grid.measure,
    )


def sweep(beta_values, base_config: ScenarioConfig, workers: int = 1) -> list:
    """One analytic + simulated record per birth rate, in input order.

    Each simulation starts from ``sweep.ic_scale`` times the branch named by
    ``sweep.ic_branch`` (default: the stable upper interior branch), or from
    the fallback state when that branch does not exist at this beta.
    """
    betas = [float(b) for b in beta_values]
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta values must be strictly increasing")
    jobs = [(b, base_config) for b in betas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_record, jobs))
    return [_record(j) for j in jobs]


def f_threshold(record: BifurcationRecord) -> float:
    return 1e-2 * record.K * math.sqrt(record.measure)


def detect_transition(records, threshold=None) -> TransitionEstimate:
    """Bracket the birth rate where the asymptotic female density switches on.

    ``beta*`` is the midpoint between the last record whose final ``||f||``
    is below the threshold and the first one at or above it.
    """
    if len(records) < 2:
        raise NoTransitionError("need at least two records")
    for lo, hi in zip(records, records[1:]):
        thr = threshold if threshold is not None else f_threshold(lo)
        if lo.norms[0] < thr <= hi.norms[0]:
            return TransitionEstimate(0.5 * (lo.beta + hi.beta), 0.5 * (hi.beta - lo.beta), lo.beta, hi.beta)
    raise NoTransitionError(
        f"no transition in beta range [{records[0].beta:.6g}, {records[-1].beta:.6g}]")
