"""Command-line front end: ``qme <subcommand> --config <path> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import engine, sweeps
from .config import SWEEP_KINDS, RunConfig, SweepConfig, load_config
from .errors import CrossCheckFailed, QMEError, ValidationError
from .identities import run_battery
from .optimizer import (
    _best_minimum,
    _landscape,
    grid_search,
    hybrid_search,
    optimal_feedback,
    optimal_global_feedback,
)

SUBCOMMANDS = ("spectrum", "cycle", "optimize", "sweep", "identities")
_BRANCH_FLAGS = {"all": "all", "plus": "plus_only", "expected": "expected"}


# -- formatting -----------------------------------------------------------------

def format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _flatten(row: dict) -> dict:
    out = {}
    for key, value in row.items():
        if key == "theta":
            for i, t in enumerate([] if value is None else value, start=1):
                out[f"theta_{i}"] = t
        else:
            out[key] = value
    return out


def to_csv(rows: Sequence[dict]) -> str:
    """CSV text with a header row; floats at 17 significant digits."""
    rows = [_flatten(r) for r in rows]
    columns: list[str] = []
    for r in rows:
        columns.extend(k for k in r if k not in columns)
    # keep theta_1..theta_n together after "probability" when present
    thetas = sorted((c for c in columns if c.startswith("theta_")), key=lambda c: int(c.split("_")[1]))
    rest = [c for c in columns if not c.startswith("theta_")]
    at = rest.index("probability") + 1 if "probability" in rest else len(rest)
    columns = rest[:at] + thetas + rest[at:]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([format_number(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def to_json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2) + "\n"


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.6g}"


# -- subcommands ----------------------------------------------------------------

def _require_detectors(cfg: RunConfig) -> None:
    if not cfg.detectors:
        raise ValidationError("detectors", "at least one detector is required")


def _wanted_branches(cfg: RunConfig, branches):
    live = [b for b in branches if not b.is_null]
    if cfg.branch_policy == "plus_only":
        return [b for b in live if set(b.label) == {"+"}]
    return live


def _optimum(cfg: RunConfig, branch):
    if cfg.feedback_mode == "global":
        return optimal_global_feedback(branch.state, cfg.system, cfg.search)
    return optimal_feedback(branch.state, cfg.system, cfg.method, cfg.search, cfg.grid_points)


def cmd_spectrum(cfg: RunConfig):
    if cfg.system.n_sites != 2:
        raise ValidationError("system.n_sites", "spectrum sweep needs a two-site system")
    grid = cfg.sweep.grid() if cfg.sweep is not None else None
    recs = sweeps.coupling_sweep(cfg.system.epsilon, grid, cfg.system.beta)
    rows = [{k: v for k, v in r.row().items() if k != "gap_closed_form"} for r in recs]
    smallest = min(recs, key=lambda r: (r.gap, r.delta_z))
    summary = [f"{len(recs)} coupling values; smallest gap {smallest.gap:.6g} at delta_z = {smallest.delta_z:.6g}"]
    return rows, None, summary


def cmd_cycle(cfg: RunConfig):
    _require_detectors(cfg)
    branches = _wanted_branches(cfg, engine.measure(cfg.system.thermal, cfg.detectors))
    results = []
    summary = []
    for br in branches:
        theta = np.asarray(cfg.theta) if cfg.theta is not None else _optimum(cfg, br).theta
        m = engine.cycle_metrics(cfg.system, br, theta, cfg.feedback_mode)
        results.append((br, theta, m))
        summary.append(f"branch {br.label}: p={_fmt(br.probability)} theta={np.round(theta, 6).tolist()} "
                       f"W_ext={_fmt(m.work_extracted)} eta={_fmt(m.efficiency)}")
    payload = {"system": cfg.system.as_dict(), "feedback_mode": cfg.feedback_mode}
    if cfg.branch_policy != "expected":
        payload["branches"] = [
            {"label": br.label, "probability": br.probability, "theta": theta, **m.as_dict()}
            for br, theta, m in results
        ]
    if cfg.branch_policy in ("all", "expected"):
        em = sweeps.expected_metrics(results)
        payload["expected"] = em.as_dict()
        summary.append(f"expected: W_ext={_fmt(em.work_extracted)} eta={_fmt(em.efficiency)}")
    return None, payload, summary


def cmd_optimize(cfg: RunConfig):
    _require_detectors(cfg)
    branches = _wanted_branches(cfg, engine.measure(cfg.system.thermal, cfg.detectors))
    out = []
    summary = []
    for br in branches:
        entry = {"label": br.label, "probability": br.probability, "method": cfg.method}
        if cfg.feedback_mode == "global":
            best = optimal_global_feedback(br.state, cfg.system, cfg.search)
            entry["method"] = "closed_form"
            entry["stationary_points"] = [best.as_dict()]
        else:
            land = _landscape(br.state, cfg.system)
            if cfg.method in ("hybrid", "both"):
                entry["stationary_points"] = [p.as_dict() for p in hybrid_search(land, cfg.system, cfg.search)]
            if cfg.method in ("grid", "both"):
                grid_points = grid_search(land, cfg.system, cfg.search, cfg.grid_points)
                entry["grid_stationary_points"] = [p.as_dict() for p in grid_points]
            best = optimal_feedback(land, cfg.system, cfg.method, cfg.search, cfg.grid_points)
            if cfg.method == "both":
                grid_best = _best_minimum(grid_points)
                diff = abs(best.feedback_energy - grid_best.feedback_energy)
                entry["agreement"] = {"hybrid_energy": best.feedback_energy,
                                      "grid_energy": grid_best.feedback_energy, "difference": diff}
        m = engine.cycle_metrics(cfg.system, br, best.theta, cfg.feedback_mode)
        entry["best"] = best.as_dict()
        entry["metrics"] = m.as_dict()
        out.append(entry)
        line = (f"branch {br.label}: theta*={np.round(best.theta, 8).tolist()} E_F={best.feedback_energy:.12g} "
                f"W_ext={_fmt(m.work_extracted)} eta={_fmt(m.efficiency)}")
        if "agreement" in entry:
            line += f" hybrid/grid difference={entry['agreement']['difference']:.3e}"
        summary.append(line)
    return None, {"system": cfg.system.as_dict(), "branches": out}, summary


def _sweep_rows(records) -> list[dict]:
    return [r.row() for r in records]


def cmd_sweep(cfg: RunConfig):
    sw = cfg.sweep or SweepConfig()
    grid = sw.grid()
    spec = cfg.system
    kw = {"cfg": cfg.search}
    if sw.kind == "kappa":
        configurations = sw.configurations or (("n1",) if spec.n_sites == 1 else sweeps.CONFIGURATIONS)
        records = [r for c in configurations
                   for r in sweeps.kappa_sweep(spec, c, grid, cfg.branch_policy, cfg.method, **kw)]
        rows = _sweep_rows(records)
        summary = _best_per_configuration(records)
    elif sw.kind == "coupling":
        return cmd_spectrum(cfg)
    elif sw.kind == "detuning":
        configurations = sw.configurations or ("n2_D1", "n2_D1D2")
        records = sweeps.detuning_sweep(spec, grid, sw.kappa, configurations, cfg.branch_policy, cfg.method, **kw)
        rows = _sweep_rows(records)
        summary = _best_per_configuration(records)
    elif sw.kind == "local_vs_global":
        configuration = (sw.configurations or ("n2_D1D2",))[0]
        pairs = sweeps.local_vs_global(spec, grid, configuration, **kw)
        rows = [r.row() for pair in pairs for r in pair]
        margin = min(loc.metrics.work_extracted - glo.metrics.work_extracted for loc, glo in pairs)
        summary = [f"{len(pairs)} (kappa, branch) points; min W_local - W_global = {margin:.6g}"]
    elif sw.kind == "robustness":
        rows, summary = _robustness(cfg, sw, grid)
    elif sw.kind == "beta":
        _require_detectors(cfg)
        betas = grid if grid is not None else [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
        records, best = sweeps.beta_scan(spec, betas, cfg.detectors, sw.target, cfg.method, **kw)
        rows = _sweep_rows(records)
        if best is None:
            summary = [f"{len(records)} (beta, branch) records; no target given"]
        else:
            summary = [f"best fit beta={best.value:g} branch {best.branch}: W_ext={_fmt(best.metrics.work_extracted)} "
                       f"eta={_fmt(best.metrics.efficiency)} mismatch={best.extra['mismatch']:.4g}"]
    else:
        raise ValidationError("sweep.kind", f"unknown kind {sw.kind!r}")
    return rows, None, summary


def _best_per_configuration(records) -> list[str]:
    lines = []
    for label in dict.fromkeys(r.configuration for r in records):
        recs = [r for r in records if r.configuration == label]
        best = max(recs, key=lambda r: r.metrics.work_extracted)
        lines.append(f"{label}: max W_ext={_fmt(best.metrics.work_extracted)} at {best.variable}={best.value:g} "
                     f"(branch {best.branch}, eta={_fmt(best.metrics.efficiency)})")
    return lines


def _robustness(cfg: RunConfig, sw: SweepConfig, grid):
    _require_detectors(cfg)
    errors = grid if grid is not None else np.arange(0, 11, 1.0)
    if sw.unit == "radians":
        errors = np.degrees(errors)
    rows, summary = [], []
    for br in _wanted_branches(cfg, engine.measure(cfg.system.thermal, cfg.detectors)):
        best = optimal_feedback(br.state, cfg.system, cfg.method, cfg.search, cfg.grid_points)
        for rec in sweeps.robustness_sweep(cfg.system, br, best.theta, errors):
            rows.append({"branch": br.label, "theta": best.theta, **rec})
        worst = min((r["worst_ratio"] for r in rows if r["branch"] == br.label and r["worst_ratio"] is not None),
                    default=None)
        summary.append(f"branch {br.label}: worst W_ext ratio {_fmt(worst)} up to {float(np.max(errors)):g} deg")
    return rows, summary


HANDLERS = {"spectrum": cmd_spectrum, "cycle": cmd_cycle, "optimize": cmd_optimize, "sweep": cmd_sweep}


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qme", description="Measurement-based quantum engine simulator.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON run configuration (not needed for identities)")
    parser.add_argument("--method", choices=("hybrid", "grid", "both"))
    parser.add_argument("--output", help="output file; data goes to stdout when omitted")
    parser.add_argument("--branch", choices=tuple(_BRANCH_FLAGS))
    parser.add_argument("--kind", choices=SWEEP_KINDS, help="sweep kind (overrides the config)")
    parser.add_argument("--format", choices=("csv", "json"), dest="fmt")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.method:
        changes["method"] = args.method
    if args.output:
        changes["output_path"] = args.output
    if args.branch:
        changes["branch_policy"] = _BRANCH_FLAGS[args.branch]
    if args.fmt:
        changes["output_format"] = args.fmt
    if args.kind:
        changes["sweep"] = replace(cfg.sweep or SweepConfig(), kind=args.kind)
    return replace(cfg, **changes) if changes else cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig, subcommand: str) -> int:
    rows, payload, summary = HANDLERS[subcommand](cfg)
    fmt = cfg.output_format or ("csv" if rows is not None else "json")
    if fmt == "csv" and rows is None:
        raise ValidationError("output.format", f"{subcommand} produces a JSON document, not CSV")
    text = to_csv(rows) if fmt == "csv" else to_json(payload if payload is not None else rows)
    _emit(text, cfg.output_path)
    # keep stdout clean for piping when the data itself goes there
    stream = sys.stdout if cfg.output_path else sys.stderr
    for line in summary:
        print(line, file=stream)
    return 0


def run_identities() -> int:
    results = run_battery()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "identities":
            return run_identities()
        if not args.config:
            raise ValidationError("--config", f"required for {args.subcommand}")
        cfg = _apply_overrides(load_config(args.config), args)
        return run(cfg, args.subcommand)
    except (QMEError, OSError, ValueError) as exc:
        kind = "cross-check failed" if isinstance(exc, CrossCheckFailed) else type(exc).__name__
        print(f"qme: error: {kind}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
