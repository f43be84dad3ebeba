"""Monte Carlo sweep experiments and their CSV contract.

Each experiment averages per-drop quantities over random user placements and
RF fading. Drop i of a run seeded with s draws from default_rng([s, i]), so
results are reproducible drop by drop and independent of worker count. Drops
are paired across sweep points: positions are placed once per drop for the
largest user count and truncated for smaller ones, and fading is drawn once,
so sweep curves differ only through the swept parameter. A drop that fails
to solve is excluded from every scheme of that experiment; a run aborts if
more than one percent of drops fail.

Output rows follow the schema (sweep_value, scheme, mean, stderr, n_drops)
and serialize to CSV with repr-precision floats, LF newlines, and a fixed
header, which makes repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from lightharvest.channels import place_users_uniform, realize_channels
from lightharvest.config import (
    SystemConfig,
    optical_frontend,
    room_geometry,
    slipt_instance,
    wpcn_instance,
)
from lightharvest.slipt import (
    InfeasibleError,
    solve_dl_max,
    solve_moop_point,
    solve_ul_max,
)
from lightharvest.wpcn import equal_time_baseline, solve_time_allocation

__all__ = [
    "ExperimentRow",
    "ExperimentResult",
    "run_fig4",
    "run_fig5",
    "run_fig6",
    "run_fig7",
    "EXPERIMENTS",
    "write_rows_csv",
    "read_rows_csv",
    "scheme_series",
]

CSV_HEADER = ("sweep_value", "scheme", "mean", "stderr", "n_drops")

FIG4_OFFSET_GRID = tuple(np.linspace(0.5, 4.0, 10))
FIG4_USER_COUNTS = (2, 5)
FIG5_USER_COUNTS = tuple(range(1, 9))
FIG6_SEMI_ANGLES = (30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
FIG7_COMBOS = ((2, 5.0), (2, 10.0), (4, 5.0), (4, 10.0))


@dataclass(frozen=True)
class ExperimentRow:
    sweep_value: float
    scheme: str
    mean: float
    stderr: float
    n_drops: int


@dataclass(frozen=True)
class ExperimentResult:
    name: str
    rows: tuple
    failed_drops: int
    n_drops: int


def write_rows_csv(rows, path):
    """Serialize rows deterministically: fixed header, repr floats, LF ends."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [repr(float(r.sweep_value)), r.scheme, repr(float(r.mean)),
                 repr(float(r.stderr)), str(int(r.n_drops))]
            )


def read_rows_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = []
        for rec in reader:
            rows.append(
                ExperimentRow(
                    sweep_value=float(rec[0]),
                    scheme=rec[1],
                    mean=float(rec[2]),
                    stderr=float(rec[3]),
                    n_drops=int(rec[4]),
                )
            )
    return rows


def scheme_series(rows, scheme):
    """(sweep_values, means) of one scheme, sorted by sweep value."""
    picked = sorted(
        ((r.sweep_value, r.mean) for r in rows if r.scheme == scheme), key=lambda t: t[0]
    )
    if not picked:
        raise KeyError(f"scheme {scheme!r} not present")
    xs, ys = zip(*picked)
    return np.array(xs), np.array(ys)


# ---------------------------------------------------------------------------
# per-drop kernels; each returns {(sweep_value, scheme): value} or raises


def _scenario_a_channels(config: SystemConfig, seed, drop_index, user_count):
    rng = np.random.default_rng([seed, drop_index])
    room = room_geometry(config)
    frontend = optical_frontend(config)
    drop = place_users_uniform(user_count, room, rng)
    fading = rng.exponential(1.0, size=user_count)
    chan = realize_channels(
        drop, room, frontend, config.channel.path_loss_exponent, rng, fading=fading
    )
    return drop, fading, chan


def _fig4_drop(config: SystemConfig, seed, drop_index):
    k_max = max(FIG4_USER_COUNTS)
    _, _, chan = _scenario_a_channels(config, seed, drop_index, k_max)
    out = {}
    for k in FIG4_USER_COUNTS:
        for offset in FIG4_OFFSET_GRID:
            inst = wpcn_instance(config, chan.vlc_gain[:k], chan.rf_power_gain[:k])
            inst = replace(inst, max_led_power=float(offset) ** 2)
            sol = solve_time_allocation(inst, backend=config.solver.wpcn_backend)
            out[(float(offset), f"optimal|K={k}")] = sol.sum_rate
            out[(float(offset), f"equal|K={k}")] = equal_time_baseline(inst).sum_rate
    return out


def _fig5_drop(config: SystemConfig, seed, drop_index):
    k_max = max(FIG5_USER_COUNTS)
    _, _, chan = _scenario_a_channels(config, seed, drop_index, k_max)
    p_max = config.wpcn.max_led_power
    offsets = (math.sqrt(p_max) / 2.0, math.sqrt(p_max))
    out = {}
    for offset in offsets:
        label = f"a={offset:.3f}"
        for k in FIG5_USER_COUNTS:
            inst = wpcn_instance(config, chan.vlc_gain[:k], chan.rf_power_gain[:k])
            inst = replace(inst, max_led_power=offset**2)
            sol = solve_time_allocation(inst, backend=config.solver.wpcn_backend)
            out[(float(k), f"optimal|{label}")] = sol.sum_rate
            out[(float(k), f"equal|{label}")] = equal_time_baseline(inst).sum_rate
    return out


def _fig6_drop(config: SystemConfig, seed, drop_index):
    k = config.experiment.user_count
    rng = np.random.default_rng([seed, drop_index])
    room = room_geometry(config)
    base_frontend = optical_frontend(config)
    drop = place_users_uniform(k, room, rng)
    fading = rng.exponential(1.0, size=k)
    out = {}
    for angle in FIG6_SEMI_ANGLES:
        frontend = replace(base_frontend, semi_angle_deg=float(angle))
        chan = realize_channels(
            drop, room, frontend, config.channel.path_loss_exponent, rng, fading=fading
        )
        inst = wpcn_instance(config, chan.vlc_gain, chan.rf_power_gain)
        sol = solve_time_allocation(inst, backend=config.solver.wpcn_backend)
        out[(float(angle), "optimal")] = sol.sum_rate
        out[(float(angle), "equal")] = equal_time_baseline(inst).sum_rate
    return out


def _fig7_drop(config: SystemConfig, seed, drop_index, combos=None, front_points=None):
    combos = FIG7_COMBOS if combos is None else combos
    n_weights = config.experiment.front_points if front_points is None else front_points
    k_max = max(k for k, _p in combos)
    rng = np.random.default_rng([seed, drop_index])
    room = room_geometry(config)
    frontend = optical_frontend(config)
    drop = place_users_uniform(k_max, room, rng)
    fading = rng.exponential(1.0, size=k_max)
    chan = realize_channels(
        drop, room, frontend, config.channel.path_loss_exponent, rng, fading=fading
    )
    solver = config.solver
    out = {}
    for k, p_max in combos:
        inst = slipt_instance(config, chan.vlc_gain[:k], chan.rf_power_gain[:k])
        inst = replace(inst, max_led_power=float(p_max))
        label = f"K={k};pmax={p_max:g}"
        corners = (
            solve_dl_max(
                inst,
                backend=solver.slipt_backend,
                max_outer=solver.max_outer,
                tol=solver.tol,
                cross_check=solver.cross_check,
                fallback_iterations=solver.fallback_iterations,
            ),
            solve_ul_max(
                inst,
                backend=solver.slipt_backend,
                max_outer=solver.max_outer,
                tol=solver.tol,
                cross_check=solver.cross_check,
                fallback_iterations=solver.fallback_iterations,
            ),
        )
        for w1 in np.linspace(0.0, 1.0, n_weights):
            point = solve_moop_point(
                inst,
                (float(w1), float(1.0 - w1)),
                corners=corners,
                inner_iterations=solver.inner_iterations,
                bisection_steps=solver.bisection_steps,
            )
            out[(float(w1), f"{label}|dl")] = point.dl_sum_rate
            out[(float(w1), f"{label}|ul")] = point.ul_sum_rate
    return out


# ---------------------------------------------------------------------------
# driver


_DROP_KERNELS = {
    "fig4": _fig4_drop,
    "fig5": _fig5_drop,
    "fig6": _fig6_drop,
    "fig7": _fig7_drop,
}


def _drop_worker(args):
    name, config, seed, drop_index, kwargs = args
    try:
        return _DROP_KERNELS[name](config, seed, drop_index, **kwargs)
    except InfeasibleError:
        return None


def _aggregate(name, outputs, n_drops):
    failed = sum(1 for o in outputs if o is None)
    if failed > 0.01 * n_drops:
        raise RuntimeError(
            f"{name}: {failed} of {n_drops} drops failed, above the 1% budget"
        )
    kept = [o for o in outputs if o is not None]
    if not kept:
        raise RuntimeError(f"{name}: no successful drops")
    keys = sorted(kept[0].keys(), key=lambda t: (t[1], t[0]))
    rows = []
    for key in keys:
        vals = np.array([o[key] for o in kept], dtype=float)
        stderr = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        rows.append(
            ExperimentRow(
                sweep_value=key[0],
                scheme=key[1],
                mean=float(np.mean(vals)),
                stderr=stderr,
                n_drops=vals.size,
            )
        )
    return ExperimentResult(name=name, rows=tuple(rows), failed_drops=failed, n_drops=n_drops)


def _run(name, config, n_drops=None, seed=None, jobs=None, **kwargs):
    n_drops = config.experiment.n_drops if n_drops is None else int(n_drops)
    seed = config.experiment.seed if seed is None else int(seed)
    jobs = config.experiment.jobs if jobs is None else int(jobs)
    tasks = [(name, config, seed, i, kwargs) for i in range(n_drops)]
    if jobs <= 1:
        outputs = [_drop_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_drop_worker, tasks))
    return _aggregate(name, outputs, n_drops)


def run_fig4(config: SystemConfig, n_drops=None, seed=None, jobs=None) -> ExperimentResult:
    """Uplink sum rate against the DC offset amplitude, optimal vs equal shares."""
    return _run("fig4", config, n_drops, seed, jobs)


def run_fig5(config: SystemConfig, n_drops=None, seed=None, jobs=None) -> ExperimentResult:
    """Uplink sum rate against the user count at two offset amplitudes."""
    return _run("fig5", config, n_drops, seed, jobs)


def run_fig6(config: SystemConfig, n_drops=None, seed=None, jobs=None) -> ExperimentResult:
    """Uplink sum rate against the LED half-intensity semi-angle."""
    return _run("fig6", config, n_drops, seed, jobs)


def run_fig7(
    config: SystemConfig,
    n_drops=None,
    seed=None,
    jobs=None,
    combos=None,
    front_points=None,
) -> ExperimentResult:
    """Downlink/uplink trade-off fronts over a weight sweep.

    Emits two rows per weight and configuration, one per objective, with
    scheme labels "...|dl" and "...|ul".
    """
    return _run("fig7", config, n_drops, seed, jobs, combos=combos, front_points=front_points)


EXPERIMENTS = {"fig4": run_fig4, "fig5": run_fig5, "fig6": run_fig6, "fig7": run_fig7}
