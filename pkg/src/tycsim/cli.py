"""Command line entry point: ``tycsim <subcommand> --config FILE [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 invariant violation.  On error a machine-readable ``error.json`` is
written to the output directory (when known) and echoed on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, bifurcation, plotting, reports
from .config import ScenarioConfig, load_config
from .exceptions import ConfigError, NoTransitionError, NumericalFailure, TycError
from .grid import write_field_csv
from .integrator import continuous_dependence_probe, run
from .model import SPECIES

log = logging.getLogger("tycsim")

OUT_ENV = "TYCSIM_OUT_DIR"


def resolve_out_dir(args, config: ScenarioConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    if config is not None and config.out:
        return Path(config.out)
    return Path("out")


def _emit(args, payload):
    if not args.quiet:
        print(json.dumps(reports._round(payload), indent=2))


# ---------------------------------------------------------------- subcommands

def cmd_validate(config, out, args):
    p = config.params
    _emit(args, {
        "status": "valid",
        "model": config.model,
        "stepper": config.stepper,
        "grid": {"dim": config.grid.dim, "extents": config.grid.extents, "cells": config.grid.cells},
        "beta": p.beta,
        "beta0": analysis.critical_beta(p.d1, p.d2, p.K),
    })
    return 0


def cmd_steady_states(config, out, args):
    report = analysis.analysis_report(config.params)
    reports.write_json(out / "steady_states.json", report)
    _emit(args, report)
    return 0


def cmd_simulate(config, out, args):
    result = run(config)
    reports.write_time_series(out / "time_series.csv", result)
    write_field_csv(out / "final_fields.csv", dict(zip(SPECIES, result.final.fields)), config.grid)
    summary = reports.result_summary(result)
    reports.write_json(out / "summary.json", summary)
    if not args.no_figures:
        plotting.plot_time_series(result, out / "time_series.png", title=f"{config.model} model")
    _emit(args, summary)
    return 0


def cmd_bifurcate(config, out, args):
    betas = bifurcation.beta_grid(config)
    records = bifurcation.sweep(betas, config, workers=config.sweep.workers)
    reports.write_bifurcation(out / "bifurcation.csv", records)
    p = config.params
    summary = {"beta0": analysis.critical_beta(p.d1, p.d2, p.K), "points": len(records), "transition": None}
    try:
        est = bifurcation.detect_transition(records)
        summary["transition"] = {"beta_star": est.beta_star, "half_width": est.half_width,
                                 "last_below": est.below, "first_above": est.above}
    except NoTransitionError as exc:
        summary["note"] = str(exc)
    reports.write_json(out / "bifurcation.json", summary)
    if not args.no_figures:
        plotting.plot_bifurcation(records, out / "bifurcation.png")
    _emit(args, summary)
    return 0


def cmd_compare(config, out, args):
    modified = run(config, model="modified")
    original, failure = None, None
    try:
        original = run(config, model="original")
    except NumericalFailure as exc:
        failure = str(exc)
    reports.write_time_series(out / "time_series_modified.csv", modified)
    report = {
        "modified": reports.result_summary(modified),
        "original": reports.result_summary(original) if original is not None else {"failure": failure},
        "negative_s": {
            "modified": modified.count("s", "below"),
            "original": original.count("s", "below") if original is not None else None,
        },
    }
    if original is not None:
        reports.write_time_series(out / "time_series_original.csv", original)
    neg_orig = report["negative_s"]["original"] or 0
    report["pathology_observed"] = bool(neg_orig > 0 and report["negative_s"]["modified"] == 0)
    reports.write_json(out / "compare.json", report)
    if not args.no_figures:
        plotting.plot_comparison({"modified": modified, "original": original}, out / "compare.png")
    _emit(args, {k: report[k] for k in ("negative_s", "pathology_observed")})
    return 0


def cmd_probe(config, out, args):
    eps = config.probe.epsilon if config.probe.epsilon is not None else 1e-3 * config.params.K
    rep = continuous_dependence_probe(config, eps)
    reports.write_probe(out / "probe.csv", rep)
    summary = {
        "epsilon": rep.epsilon,
        "sup_ratio": rep.sup_ratio,
        "sup_ratio_half_epsilon": rep.sup_ratio_half,
        "relative_change": rep.relative_change,
        "final_ratio": float(rep.ratios[-1]),
    }
    reports.write_json(out / "probe.json", summary)
    if not args.no_figures:
        plotting.plot_probe(rep, out / "probe.png")
    _emit(args, summary)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "steady-states": cmd_steady_states,
    "bifurcate": cmd_bifurcate,
    "compare-models": cmd_compare,
    "probe-dependence": cmd_probe,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tycsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON scenario document")
        sp.add_argument("--out", help=f"output directory (else ${OUT_ENV}, config 'out', ./out)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--quiet", action="store_true", help="suppress stdout summary")
        sp.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    config, out = None, None
    try:
        config = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            config = config.replace(seed=args.seed)
        out = resolve_out_dir(args, config)
        if args.command != "validate":
            out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, out, args)
    except TycError as exc:
        payload = {
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exc.exit_code,
            "command": args.command,
        }
        event = getattr(exc, "event", None)
        if event is not None:
            payload["event"] = {"t": event.t, "species": event.species, "kind": event.kind,
                                "cell": list(event.index), "value": event.value}
        violations = getattr(exc, "violations", None)
        if violations:
            payload["violations"] = [
                {"field": v.field, "value": str(v.value), "bound": v.bound, "hypothesis": v.hypothesis}
                for v in violations
            ]
        if out is None and config is None:
            out = Path(args.out) if args.out else None
        if out is not None and args.command != "validate":
            try:
                out.mkdir(parents=True, exist_ok=True)
                reports.write_json(out / "error.json", payload)
            except OSError:
                pass
        print(json.dumps(reports._round(payload)), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
