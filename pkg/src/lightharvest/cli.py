"""Command line entry point.

Subcommands:
  solve-a     one random drop, uplink time-share allocation plus baseline
  solve-b-dl  one random drop, downlink-optimal joint allocation
  solve-b-ul  one random drop, uplink-optimal joint allocation
  pareto      one random drop, weighted min-max trade-off front
  experiment  Monte Carlo sweep (fig4..fig7) written as CSV
  validate    run the built-in check battery

Configuration comes from defaults, then an optional file (--config or the
LIGHTHARVEST_CONFIG environment variable), then repeated --set key=value
overrides, in that order. Every run prints a JSON report that echoes the
effective configuration and which keys were overridden versus defaulted;
--out redirects the primary artifact (CSV for experiments and csv format,
otherwise the JSON report) to a file. Exit status is 0 only when the run
completed and, for validate, every check passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from lightharvest.channels import place_users_uniform, realize_channels
from lightharvest.config import (
    apply_overrides,
    default_config,
    flatten_config,
    load_config_file,
    optical_frontend,
    parse_override_pairs,
    room_geometry,
    slipt_instance,
    wpcn_instance,
)
from lightharvest.experiments import (
    EXPERIMENTS,
    ExperimentRow,
    write_rows_csv,
)
from lightharvest.slipt import (
    InfeasibleError,
    pareto_front,
    solve_dl_max,
    solve_ul_max,
)
from lightharvest.validation import run_checks
from lightharvest.wpcn import equal_time_baseline, solve_time_allocation

ENV_CONFIG = "LIGHTHARVEST_CONFIG"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lightharvest",
        description="resource allocation for lightwave-powered indoor networks",
    )
    parser.add_argument("--config", help="config file (JSON or key = value lines)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable), e.g. --set slipt.max_dc_offset=3",
    )
    parser.add_argument("--seed", type=int, help="override experiment.seed")
    parser.add_argument("--jobs", type=int, help="override experiment.jobs")
    parser.add_argument("--out", help="write the primary artifact to this path")
    parser.add_argument(
        "--format", choices=("json", "csv"), default="json", help="artifact format"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve-a", help="uplink time shares for one random drop")
    sub.add_parser("solve-b-dl", help="downlink-optimal joint allocation")
    sub.add_parser("solve-b-ul", help="uplink-optimal joint allocation")
    p_front = sub.add_parser("pareto", help="trade-off front for one random drop")
    p_front.add_argument("--points", type=int, help="number of weights (default from config)")
    p_exp = sub.add_parser("experiment", help="Monte Carlo sweep")
    p_exp.add_argument("name", choices=sorted(EXPERIMENTS), help="experiment to run")
    p_exp.add_argument("--drops", type=int, help="override experiment.n_drops")
    p_val = sub.add_parser("validate", help="run the built-in checks")
    p_val.add_argument("--check", action="append", dest="checks", help="run only this check")
    return parser


def _effective_config(args):
    config = default_config()
    overridden = []
    path = args.config or os.environ.get(ENV_CONFIG)
    if path:
        _, keys = apply_overrides(config, load_config_file(path))
        overridden.extend(keys)
    pairs = parse_override_pairs(args.overrides)
    if args.seed is not None:
        pairs["experiment.seed"] = str(args.seed)
    if args.jobs is not None:
        pairs["experiment.jobs"] = str(args.jobs)
    if pairs:
        _, keys = apply_overrides(config, pairs)
        overridden.extend(keys)
    overridden = sorted(set(overridden))
    flat = flatten_config(config)
    defaulted = sorted(k for k in flat if k not in overridden)
    return config, overridden, defaulted


def _one_drop(config):
    """Channels of drop 0 under the configured seed."""
    rng = np.random.default_rng([config.experiment.seed, 0])
    room = room_geometry(config)
    frontend = optical_frontend(config)
    drop = place_users_uniform(config.experiment.user_count, room, rng)
    fading = rng.exponential(1.0, size=config.experiment.user_count)
    chan = realize_channels(
        drop, room, frontend, config.channel.path_loss_exponent, rng, fading=fading
    )
    return drop, chan


def _emit(args, report, rows=None):
    """Write the primary artifact and the JSON report."""
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.format == "csv":
        if rows is None:
            raise ValueError("csv output is not defined for this command")
        if not args.out:
            raise ValueError("csv output needs --out")
        write_rows_csv(rows, args.out)
        print(text)
    elif args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"report written to {args.out}")
    else:
        print(text)


def _base_report(args, command, overridden, defaulted, config):
    return {
        "command": command,
        "config": flatten_config(config),
        "overridden_keys": overridden,
        "defaulted_keys": defaulted,
    }


def _slipt_solution_dict(sol):
    return {
        "dl_sum_rate": sol.dl_sum_rate,
        "ul_sum_rate": sol.ul_sum_rate,
        "dl_shares": sol.vars.dl_shares.tolist(),
        "ul_shares": sol.vars.ul_shares.tolist(),
        "dc_energy": sol.vars.dc_energy.tolist(),
        "data_energy": sol.vars.data_energy.tolist(),
        "slot_dc_offsets": sol.slot_dc_offsets.tolist(),
        "slot_led_power": sol.slot_led_power.tolist(),
        "kkt_residual": sol.kkt_residual,
        "converged": sol.converged,
        "backend": sol.backend,
        "iterations": sol.iterations,
        "warnings": list(sol.warnings),
        "duals": {
            k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in sol.duals.items()
        },
    }


def cmd_solve_a(args, config, overridden, defaulted):
    drop, chan = _one_drop(config)
    inst = wpcn_instance(config, chan.vlc_gain, chan.rf_power_gain)
    sol = solve_time_allocation(inst, backend=config.solver.wpcn_backend)
    base = equal_time_baseline(inst)
    report = _base_report(args, "solve-a", overridden, defaulted, config)
    report["outputs"] = {
        "positions": drop.positions.tolist(),
        "vlc_gain": chan.vlc_gain.tolist(),
        "rf_power_gain": chan.rf_power_gain.tolist(),
        "time_shares": sol.time_shares.tolist(),
        "dual": sol.dual,
        "sum_rate": sol.sum_rate,
        "equal_share_rate": base.sum_rate,
        "backend": sol.backend,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    rows = [
        ExperimentRow(sweep_value=float(i), scheme="time_share", mean=float(t), stderr=0.0, n_drops=1)
        for i, t in enumerate(sol.time_shares)
    ]
    _emit(args, report, rows)
    return 0


def _cmd_solve_b(args, config, overridden, defaulted, direction):
    _, chan = _one_drop(config)
    inst = slipt_instance(config, chan.vlc_gain, chan.rf_power_gain)
    solver = config.solver
    solve = solve_dl_max if direction == "dl" else solve_ul_max
    sol = solve(
        inst,
        backend=solver.slipt_backend,
        max_outer=solver.max_outer,
        tol=solver.tol,
        cross_check=solver.cross_check,
        fallback_iterations=solver.fallback_iterations,
    )
    report = _base_report(args, f"solve-b-{direction}", overridden, defaulted, config)
    report["outputs"] = _slipt_solution_dict(sol)
    rows = []
    for i in range(inst.user_count):
        for scheme, arr in (
            ("dl_share", sol.vars.dl_shares),
            ("ul_share", sol.vars.ul_shares),
            ("dc_energy", sol.vars.dc_energy),
            ("data_energy", sol.vars.data_energy),
        ):
            rows.append(
                ExperimentRow(
                    sweep_value=float(i), scheme=scheme, mean=float(arr[i]), stderr=0.0, n_drops=1
                )
            )
    _emit(args, report, rows)
    return 0


def cmd_pareto(args, config, overridden, defaulted):
    _, chan = _one_drop(config)
    inst = slipt_instance(config, chan.vlc_gain, chan.rf_power_gain)
    n_points = args.points or config.experiment.front_points
    front = pareto_front(
        inst,
        n_points=n_points,
        inner_iterations=config.solver.inner_iterations,
        bisection_steps=config.solver.bisection_steps,
    )
    report = _base_report(args, "pareto", overridden, defaulted, config)
    report["outputs"] = {
        "points": [
            {
                "weights": list(p.weights),
                "dl_sum_rate": p.dl_sum_rate,
                "ul_sum_rate": p.ul_sum_rate,
                "epigraph": p.epigraph,
                "converged": p.converged,
            }
            for p in front
        ]
    }
    rows = []
    for p in front:
        rows.append(
            ExperimentRow(
                sweep_value=float(p.weights[0]), scheme="front|dl",
                mean=p.dl_sum_rate, stderr=0.0, n_drops=1,
            )
        )
        rows.append(
            ExperimentRow(
                sweep_value=float(p.weights[0]), scheme="front|ul",
                mean=p.ul_sum_rate, stderr=0.0, n_drops=1,
            )
        )
    _emit(args, report, rows)
    return 0


def cmd_experiment(args, config, overridden, defaulted):
    runner = EXPERIMENTS[args.name]
    result = runner(config, n_drops=args.drops)
    report = _base_report(args, f"experiment {args.name}", overridden, defaulted, config)
    report["outputs"] = {
        "rows": len(result.rows),
        "failed_drops": result.failed_drops,
        "n_drops": result.n_drops,
        "schemes": sorted({r.scheme for r in result.rows}),
    }
    if args.format != "csv" and args.out:
        # default artifact for experiments is the CSV regardless of format
        write_rows_csv(result.rows, args.out)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    _emit(args, report, result.rows)
    return 0


def cmd_validate(args, config, overridden, defaulted):
    results = run_checks(args.checks)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    report = _base_report(args, "validate", overridden, defaulted, config)
    report["outputs"] = {
        r.name: {"passed": r.passed, "detail": r.detail} for r in results
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, overridden, defaulted = _effective_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    handlers = {
        "solve-a": cmd_solve_a,
        "solve-b-dl": lambda a, c, o, d: _cmd_solve_b(a, c, o, d, "dl"),
        "solve-b-ul": lambda a, c, o, d: _cmd_solve_b(a, c, o, d, "ul"),
        "pareto": cmd_pareto,
        "experiment": cmd_experiment,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args, config, overridden, defaulted)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
