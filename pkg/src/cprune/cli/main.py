"""Command-line entry point.

    cprune run --config CFG [--dry-run]
    cprune export-plot TRACE [-o OUT.csv]
    cprune validate (--config CFG | --model MODEL)
    cprune tune-only (--config CFG | --model MODEL --profile PROFILE)

Set ``CPRUNE_LOG_LEVEL`` (e.g. ``DEBUG``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, TextIO

from ..graph.io import load_model, save_model
from ..graph.ir import GraphError, validate_graph
from ..graph.pruning import PruneError
from ..orchestrator.loop import build_table, initialize, run_cprune
from ..orchestrator.oracle import OracleError
from ..tasks import TaskError, pruning_impact, table_to_dict
from ..tuner.profile import load_profile
from ..tuner.program import ScheduleError
from ..tuner.search import DEFAULT_BUDGET, DEFAULT_MAX_DEPTH, model_latency
from .config import MODEL_FILE, SUMMARY_FILE, TABLE_FILE, TRACE_FILE, ConfigError, RunConfig, load_config

log = logging.getLogger("cprune")

CSV_COLUMNS = ["iteration", "latency", "latency_ratio_vs_initial", "short_term_accuracy", "outcome"]
_ERRORS = (ConfigError, GraphError, PruneError, TaskError, ScheduleError, OracleError, FileNotFoundError, ValueError)


def _fmt(v) -> str:
    return "" if v is None else f"{v:.6g}"


def _print_table(table, out: TextIO) -> None:
    out.write(f"{'task':<6}{'subgraphs':>10}{'filters':>9}  {'ff_splits':<14}{'ax3_splits':<14}{'latency_s':>12}{'impact':>12}\n")
    for t in table.tasks:
        p = t.fastest_program
        out.write(
            f"{t.id:<6}{len(t.subgraph_ids):>10}{t.filters:>9}  {str(list(p.ff_splits)):<14}{str(list(p.ax3_splits)):<14}"
            f"{float(p.estimated_latency):>12.6g}{float(pruning_impact(t)):>12.6g}\n"
        )
    out.write(f"model latency: {float(model_latency(table)):.6g} s\n")


def _load_inputs(cfg: RunConfig):
    if not cfg.model_path.is_file():
        raise ConfigError(f"model not found: {cfg.model_path}")
    if not cfg.profile_path.is_file():
        raise ConfigError(f"device profile not found: {cfg.profile_path}")
    model = load_model(cfg.model_path, weight_seed=cfg.seed)
    problems = validate_graph(model)
    if problems:
        raise GraphError("invalid model:\n  " + "\n  ".join(map(str, problems)))
    return model, load_profile(cfg.profile_path)


def cmd_run(cfg: RunConfig, dry_run: bool = False, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    model, profile = _load_inputs(cfg)
    if dry_run:
        _print_table(build_table(model, profile, cfg.budget, cfg.max_depth), out)
        return 0
    oracle = cfg.oracle.build()
    state = initialize(model, cfg.a_g, cfg.alpha, cfg.beta, profile, oracle, cfg.multiplier, cfg.budget, cfg.max_depth)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.output(TRACE_FILE), "w") as trace:

        def write(rec):
            trace.write(json.dumps(rec.as_dict()) + "\n")
            trace.flush()

        result = run_cprune(state, on_record=write)
    save_model(result.model, cfg.output(MODEL_FILE))
    cfg.output(TABLE_FILE).write_text(json.dumps(table_to_dict(result.table), indent=1) + "\n")
    summary = {"model": model.name, "device": profile.name, **result.summary()}
    cfg.output(SUMMARY_FILE).write_text(json.dumps(summary, indent=1) + "\n")
    out.write(
        f"{summary['accepted_iterations']} accepted of {summary['attempts']} attempts; "
        f"latency {summary['initial_latency']:.6g} -> {summary['final_latency']:.6g} s "
        f"({summary['latency_ratio']:.4g}x), final accuracy {summary['final_accuracy']:.4g}\n"
    )
    return 0


def read_trace(path: Path) -> List[dict]:
    if not path.is_file():
        raise FileNotFoundError(f"trace not found: {path}")
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                for key in ("iteration", "l_m", "l_initial", "a_s", "outcome"):
                    rec[key]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed trace record ({exc})") from None
            records.append(rec)
    return records


def cmd_export_plot(trace_path: Path, out: TextIO) -> int:
    records = read_trace(trace_path)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        l_m = rec["l_m"]
        ratio = None if l_m in (None, 0) else rec["l_initial"] / l_m
        writer.writerow([rec["iteration"], _fmt(l_m), _fmt(ratio), _fmt(rec["a_s"]), rec["outcome"]])
    return 0


def cmd_validate(args, out: TextIO) -> int:
    if args.config:
        cfg = load_config(args.config)
        model, profile = _load_inputs(cfg)
        out.write(f"config ok: model {model.name} ({len(model.conv_ids)} convs), device {profile.name}\n")
        return 0
    model = load_model(args.model)
    problems = validate_graph(model)
    for p in problems:
        out.write(f"{p}\n")
    if not problems:
        out.write(f"model ok: {model.name} ({len(model.conv_ids)} convs)\n")
    return 1 if problems else 0


def cmd_tune_only(args, out: TextIO) -> int:
    if args.config:
        cfg = load_config(args.config)
        model, profile = _load_inputs(cfg)
        budget, depth = cfg.budget, cfg.max_depth
    else:
        if not args.model or not args.profile:
            raise ConfigError("tune-only needs --config or both --model and --profile")
        model = load_model(args.model)
        profile = load_profile(args.profile)
        budget, depth = args.budget, args.max_depth
    table = build_table(model, profile, budget, depth)
    if args.json:
        out.write(json.dumps(table_to_dict(table), indent=1) + "\n")
    else:
        _print_table(table, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cprune", description="Schedule-aware structured filter pruning on an analytical device model.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="prune and tune a model")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--dry-run", action="store_true", help="check inputs and print the unpruned task table")

    exp = sub.add_parser("export-plot", help="trace to CSV")
    exp.add_argument("trace", type=Path)
    exp.add_argument("-o", "--output", type=Path)

    val = sub.add_parser("validate", help="check a model or a run config")
    g = val.add_mutually_exclusive_group(required=True)
    g.add_argument("--config", type=Path)
    g.add_argument("--model", type=Path)

    tune = sub.add_parser("tune-only", help="tune without pruning and report per-task latency and impact")
    tune.add_argument("--config", type=Path)
    tune.add_argument("--model", type=Path)
    tune.add_argument("--profile", type=Path)
    tune.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    tune.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    tune.add_argument("--json", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("CPRUNE_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(load_config(args.config), dry_run=args.dry_run)
        if args.command == "export-plot":
            if args.output:
                with open(args.output, "w", newline="") as fh:
                    return cmd_export_plot(args.trace, fh)
            return cmd_export_plot(args.trace, sys.stdout)
        if args.command == "validate":
            return cmd_validate(args, sys.stdout)
        if args.command == "tune-only":
            return cmd_tune_only(args, sys.stdout)
    except _ERRORS as exc:
        print(f"cprune: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
