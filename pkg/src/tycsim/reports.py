"""CSV and JSON emitters.  Every float is written with 15 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .model import SPECIES

PRECISION = 15


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{PRECISION}g}"


def _round(obj):
    """Recursively apply output precision to floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{PRECISION}g}")
    if isinstance(obj, complex):
        return [_round(obj.real), _round(obj.imag)]
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_round(obj), indent=2, sort_keys=False) + "\n")


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


TIME_SERIES_HEADER = (
    ["t"] + [f"l2_{s}" for s in SPECIES] + [c for s in SPECIES for c in (f"min_{s}", f"max_{s}")]
)


def write_time_series(path, result) -> None:
    rows = []
    for k, t in enumerate(result.times):
        minmax = [v for s in range(4) for v in (result.mins[k, s], result.maxs[k, s])]
        rows.append([t, *result.l2[k], *minmax])
    write_rows(path, TIME_SERIES_HEADER, rows)


def result_summary(result) -> dict:
    """JSON-ready summary of a run.  Wall-clock time is left out so files stay reproducible."""
    return {
        "model": result.model,
        "stepper": result.stepper,
        "t_final": result.final.t,
        "steps": result.steps,
        "dt": result.dt,
        "converged": result.converged,
        "convergence_time": result.convergence_time,
        "final_l2": dict(zip(SPECIES, result.l2[-1])),
        "final_min": dict(zip(SPECIES, result.mins[-1])),
        "final_max": dict(zip(SPECIES, result.maxs[-1])),
        "bounds_events": {f"{s}_{k}": n for (s, k), n in sorted(result.event_counts.items())},
        "first_events": [
            {"t": e.t, "step": e.step, "species": e.species, "kind": e.kind, "cell": list(e.index), "value": e.value}
            for e in result.events[:20]
        ],
    }


BIFURCATION_HEADER = [
    "beta", "n_branches",
    "origin_f", "origin_m", "origin_class",
    "plus_f", "plus_m", "plus_class",
    "minus_f", "minus_m", "minus_class",
    "l2_f", "l2_m", "l2_s", "l2_r", "mean_f", "mean_m", "converged",
]


def write_bifurcation(path, records) -> None:
    rows = []
    for rec in records:
        by_name = {ss.branch: ss for ss in rec.branches}
        if "degenerate" in by_name:
            by_name.setdefault("plus-branch", by_name["degenerate"])
            by_name.setdefault("minus-branch", by_name["degenerate"])
        row = [rec.beta, rec.n_branches]
        for name in ("origin", "plus-branch", "minus-branch"):
            ss = by_name.get(name)
            row += [None, None, ""] if ss is None else [ss.f_star, ss.m_star, ss.classification]
        row += [*rec.norms, rec.means[0], rec.means[1], rec.converged]
        rows.append(row)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BIFURCATION_HEADER)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_probe(path, report) -> None:
    rows = zip(report.times, report.ratios, report.ratios_half)
    write_rows(path, ["t", "ratio_eps", "ratio_half_eps"], rows)
