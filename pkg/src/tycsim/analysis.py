"""Constant steady states of the reduced (f, m) system and their linear stability.

Stability is decided from the numerically computed eigenvalues.  The
trace/determinant rule is kept as an independent cross-check, and the
closed-form threshold ``8(d1+d2)/(K(1-b)^2)`` is reported for reference
only: at interior steady states the determinant equals
``beta*f*m*(d1+d2)/(2K) - d1*d2``, which is positive on the upper
("plus") branch and negative on the lower ("minus") branch for every
beta above the critical value, so the lower branch is always a saddle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Parameters, reaction_reduced

STABLE = "stable"
UNSTABLE = "unstable"
NON_HYPERBOLIC = "non-hyperbolic"

HYPERBOLIC_TOL = 1e-10


def critical_beta(d1: float, d2: float, K: float) -> float:
    for name, v in (("d1", d1), ("d2", d2), ("K", K)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return 8.0 * (d1 + d2) / K


def branch_parameter(beta: float, d1: float, d2: float, K: float) -> float:
    """``sqrt(1 - beta0/beta)``; zero exactly at the critical birth rate."""
    beta0 = critical_beta(d1, d2, K)
    if beta < beta0:
        raise ValueError(f"beta={beta} is below the critical value {beta0}")
    if beta == beta0:
        return 0.0
    return math.sqrt(max(0.0, 1.0 - beta0 / beta))


def stability_threshold_minus_branch(params: Parameters) -> float:
    """Closed-form threshold ``8(d1+d2)/(K(1-b)^2)``, equal to ``beta(1+b)/(1-b)``."""
    beta0 = critical_beta(params.d1, params.d2, params.K)
    if params.beta <= beta0:
        raise ValueError(f"threshold needs beta > {beta0}, got {params.beta}")
    b = branch_parameter(params.beta, params.d1, params.d2, params.K)
    return beta0 / (1.0 - b) ** 2


def jacobian(f: float, m: float, params: Parameters) -> np.ndarray:
    beta, K, d1, d2 = params.beta, params.K, params.d1, params.d2
    g1 = 1.0 - (f + m) / K
    dF_df = 0.5 * beta * m * (g1 - f / K)
    dF_dm = 0.5 * beta * f * (g1 - m / K)
    return np.array([[dF_df - d1, dF_dm], [dF_df, dF_dm - d2]])


def eigenvalues_2x2(M) -> tuple:
    """Roots of ``lambda^2 - tr*lambda + det`` as a pair of complex numbers.

    The real case uses the cancellation-free product form for the smaller
    root so that ``l1*l2 == det`` holds to rounding.
    """
    (a, b), (c, d) = np.asarray(M, dtype=float)
    tr = a + d
    det = a * d - b * c
    disc = (a - d) ** 2 + 4.0 * b * c
    if disc >= 0:
        q = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
        if q == 0.0:
            return complex(0.0), complex(0.0)
        return complex(q), complex(det / q)
    root = cmath.sqrt(disc)
    return 0.5 * (tr + root), 0.5 * (tr - root)


def classify_eigenvalues(eigs, tol: float = HYPERBOLIC_TOL) -> str:
    abscissa = max(e.real for e in eigs)
    if abscissa < -tol:
        return STABLE
    if abscissa > tol:
        return UNSTABLE
    return NON_HYPERBOLIC


def trace_det_verdict(M, tol: float = HYPERBOLIC_TOL) -> str:
    """Routh-Hurwitz verdict for a 2x2 matrix: stable iff tr < 0 and det > 0."""
    M = np.asarray(M, dtype=float)
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) <= tol or (det > 0 and abs(tr) <= tol):
        return NON_HYPERBOLIC
    if det < 0 or tr > 0:
        return UNSTABLE
    return STABLE


@dataclass
class SteadyState:
    branch: str
    f_star: float
    m_star: float
    jacobian: np.ndarray = field(repr=False)
    eigenvalues: tuple
    classification: str

    @property
    def trace(self) -> float:
        return float(np.trace(self.jacobian))

    @property
    def det(self) -> float:
        (a, b), (c, d) = self.jacobian
        return float(a * d - b * c)

    @property
    def state(self) -> tuple:
        return (self.f_star, self.m_star, 0.0, 0.0)

    def residual(self, params: Parameters) -> float:
        """Reduced-reaction residual scaled by ``beta*K^2``."""
        F = reaction_reduced(self.f_star, self.m_star, params)
        return float(np.max(np.abs(F))) / (params.beta * params.K**2)


def classify(ss: SteadyState) -> str:
    return classify_eigenvalues(ss.eigenvalues)


def _make(branch, f, m, params):
    J = jacobian(f, m, params)
    eigs = eigenvalues_2x2(J)
    return SteadyState(branch, f, m, J, eigs, classify_eigenvalues(eigs))


def steady_states(params: Parameters) -> list:
    """Constant steady states ``(f*, m*)`` of the reduced system.

    One state below the critical birth rate, two at it (the interior pair
    merges into the ``"degenerate"`` point), three above it.
    """
    beta, K, d1, d2 = params.beta, params.K, params.d1, params.d2
    beta0 = critical_beta(d1, d2, K)
    out = [_make("origin", 0.0, 0.0, params)]
    if beta < beta0:
        return out
    if beta == beta0:
        out.append(_make("degenerate", 4.0 * d2 / beta, 4.0 * d1 / beta, params))
        return out
    b = branch_parameter(beta, d1, d2, K)
    scale = K / (2.0 * (d1 + d2))
    out.append(_make("plus-branch", scale * d2 * (1.0 + b), scale * d1 * (1.0 + b), params))
    out.append(_make("minus-branch", scale * d2 * (1.0 - b), scale * d1 * (1.0 - b), params))
    return out


def find_branch(states, name: str):
    for ss in states:
        if ss.branch == name:
            return ss
    return None


def analysis_report(params: Parameters) -> dict:
    """JSON-ready summary of branches, Jacobians, spectra and thresholds."""
    beta0 = critical_beta(params.d1, params.d2, params.K)
    report = {
        "beta": params.beta,
        "K": params.K,
        "d1": params.d1,
        "d2": params.d2,
        "beta0": beta0,
        "b": None,
        "minus_branch_threshold": None,
        "branches": [],
    }
    if params.beta >= beta0:
        report["b"] = branch_parameter(params.beta, params.d1, params.d2, params.K)
    if params.beta > beta0:
        report["minus_branch_threshold"] = stability_threshold_minus_branch(params)
    for ss in steady_states(params):
        report["branches"].append(
            {
                "branch": ss.branch,
                "f": ss.f_star,
                "m": ss.m_star,
                "s": 0.0,
                "r": 0.0,
                "jacobian": ss.jacobian.tolist(),
                "eigenvalues": [[e.real, e.imag] for e in ss.eigenvalues],
                "trace": ss.trace,
                "det": ss.det,
                "classification": ss.classification,
                "trace_det_verdict": trace_det_verdict(ss.jacobian),
                "residual": ss.residual(params),
            }
        )
    return report
