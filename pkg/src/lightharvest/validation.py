"""End-to-end self checks, runnable from the CLI and reused by the tests.

Every check is small (the full battery stays well under a minute), named, and
returns a pass/fail verdict with a one-line detail. The battery covers the
analytic fixed points of both allocation problems, grid-oracle agreement,
constraint tightness, trade-off front structure, and one deliberate fault
injection that proves the checks can actually catch a broken solver.

Synthetic instances here pick noise powers that make the SNR coefficients
order one, so verdicts do not hinge on extreme floating point scales; the
physical defaults are exercised by the experiment suite instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lightharvest.kernels import f_aux, f_inverse
from lightharvest.oracles import dl_grid_oracle, moop_grid_epigraph, ul_grid_oracle
from lightharvest.slipt import (
    SliptInstance,
    pareto_front,
    solve_dl_max,
    solve_moop_point,
    solve_ul_max,
)
from lightharvest.wpcn import (
    WpcnInstance,
    brute_force_oracle,
    equal_time_baseline,
    solve_time_allocation,
)

__all__ = ["CheckResult", "NAMED_CHECKS", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _wpcn_instances(seed=7, count=12, max_users=6):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        k = int(rng.integers(1, max_users + 1))
        # moderate SNR coefficients: g, |h|^2 order one, noise order one
        yield WpcnInstance(
            vlc_gain=rng.uniform(0.2, 1.5, size=k),
            rf_power_gain=rng.exponential(1.0, size=k),
            harvest_efficiency=0.2,
            max_led_power=float(rng.uniform(1.0, 20.0)),
            rf_noise_power=0.2,
        )


def _slipt_instance(
    gains=(1.0, 0.7),
    rf=(1.0, 1.3),
    p_max=5.0,
    i_max=2.0,
    ratio=1.0,
    e_min=0.0,
):
    gains = np.asarray(gains, dtype=float)
    return SliptInstance(
        vlc_gain=gains,
        rf_power_gain=np.asarray(rf, dtype=float),
        harvest_efficiency=0.2,
        max_led_power=p_max,
        max_dc_offset=i_max,
        peak_amplitude_ratio=ratio,
        vlc_noise_power=math.e / (2.0 * math.pi),  # makes dl_snr_per_watt = g^2
        rf_noise_power=0.2,                        # makes ul_snr_per_joule = |h|^2 g^2
        min_harvest_per_user=e_min,
        dc_offset=min(math.sqrt(min(p_max, i_max**2)), i_max),
    )


def check_wpcn_closed_form() -> CheckResult:
    """Solver matches tau_k proportional to y_k and rate log2(1 + sum y)."""
    worst = 0.0
    for inst in _wpcn_instances():
        sol = solve_time_allocation(inst)
        y = inst.snr_coefficients()
        expect_rate = math.log2(1.0 + float(np.sum(y)))
        worst = max(worst, abs(sol.sum_rate - expect_rate))
        if np.sum(y) > 0:
            worst = max(worst, float(np.max(np.abs(sol.time_shares - y / np.sum(y)))))
    return CheckResult("wpcn_closed_form", worst <= 1e-8, f"worst deviation {worst:.2e}")


def check_wpcn_grid() -> CheckResult:
    """Solver beats every 1e-3-step simplex grid point and stays within 1e-3."""
    rng = np.random.default_rng(11)
    worst = -np.inf
    for k in (2, 3):
        inst = WpcnInstance(
            vlc_gain=rng.uniform(0.2, 1.5, size=k),
            rf_power_gain=rng.exponential(1.0, size=k),
            max_led_power=8.0,
            rf_noise_power=0.2,
        )
        sol = solve_time_allocation(inst)
        grid_rate, _ = brute_force_oracle(inst, grid_step=1e-3)
        gap = grid_rate - sol.sum_rate  # positive would mean the grid wins
        worst = max(worst, gap)
    return CheckResult("wpcn_grid", worst <= 1e-6, f"largest grid advantage {worst:.2e}")


def check_wpcn_baseline() -> CheckResult:
    """Optimal shares never lose to the equal-share baseline."""
    worst = 0.0
    for inst in _wpcn_instances(seed=13):
        sol = solve_time_allocation(inst)
        base = equal_time_baseline(inst).sum_rate
        worst = max(worst, base - sol.sum_rate)
    return CheckResult("wpcn_baseline", worst <= 1e-9, f"largest baseline edge {worst:.2e}")


def check_slipt_dl_grid() -> CheckResult:
    inst = _slipt_instance()
    sol = solve_dl_max(inst)
    grid_val, _ = dl_grid_oracle(inst, step=0.02)
    ok = sol.dl_sum_rate >= grid_val - 1e-9 and sol.dl_sum_rate <= grid_val * 1.02 + 1e-9
    return CheckResult(
        "slipt_dl_grid", ok, f"solver {sol.dl_sum_rate:.6f} vs grid {grid_val:.6f}"
    )


def check_slipt_ul_grid() -> CheckResult:
    inst = _slipt_instance()
    sol = solve_ul_max(inst)
    grid_val, _ = ul_grid_oracle(inst, step=0.02)
    ok = sol.ul_sum_rate >= grid_val - 1e-9 and sol.ul_sum_rate <= grid_val * 1.02 + 1e-9
    return CheckResult(
        "slipt_ul_grid", ok, f"solver {sol.ul_sum_rate:.6f} vs grid {grid_val:.6f}"
    )


def check_slipt_tightness() -> CheckResult:
    """Budgets bind at both optima; the uplink solution saturates the DC cap."""
    inst = _slipt_instance()
    worst = 0.0
    for sol in (solve_dl_max(inst), solve_ul_max(inst)):
        v = sol.vars
        worst = max(worst, abs(float(np.sum(v.dl_shares)) - 1.0))
        worst = max(worst, abs(float(np.sum(v.ul_shares)) - 1.0))
        worst = max(
            worst,
            abs(float(np.sum(v.dc_energy + v.data_energy)) - inst.max_led_power),
        )
    ul = solve_ul_max(inst)
    cap = min(inst.max_led_power, inst.max_dc_offset**2)
    worst = max(worst, abs(float(np.sum(ul.vars.dc_energy)) - cap))
    return CheckResult("slipt_tightness", worst <= 1e-6, f"worst slack {worst:.2e}")


def check_front_properties() -> CheckResult:
    """Front corners equal the single-objective optima; points are nondominated."""
    inst = _slipt_instance()
    dl_sol = solve_dl_max(inst)
    ul_sol = solve_ul_max(inst)
    front = pareto_front(inst, n_points=7)
    msgs = []
    if abs(front[-1].dl_sum_rate - dl_sol.dl_sum_rate) > 1e-9:
        msgs.append("downlink corner detached")
    if abs(front[0].ul_sum_rate - ul_sol.ul_sum_rate) > 1e-9:
        msgs.append("uplink corner detached")
    dl_vals = [p.dl_sum_rate for p in front]
    ul_vals = [p.ul_sum_rate for p in front]
    if any(dl_vals[i] >= dl_vals[i + 1] + 1e-9 for i in range(len(front) - 1)):
        msgs.append("downlink rates not increasing along the front")
    if any(ul_vals[i] <= ul_vals[i + 1] - 1e-9 for i in range(len(front) - 1)):
        msgs.append("uplink rates not decreasing along the front")
    return CheckResult(
        "front_properties", not msgs, "; ".join(msgs) if msgs else f"{len(front)} points"
    )


def check_moop_grid() -> CheckResult:
    """A mid-weight min-max point is no worse than the grid epigraph estimate."""
    inst = _slipt_instance()
    corners = (solve_dl_max(inst), solve_ul_max(inst))
    weights = (0.5, 0.5)
    point = solve_moop_point(inst, weights, corners=corners)
    utopia = (corners[0].dl_sum_rate, corners[1].ul_sum_rate)
    t_grid = moop_grid_epigraph(inst, weights, utopia, step=0.05)
    achieved = max(
        weights[0] * (utopia[0] - point.dl_sum_rate),
        weights[1] * (utopia[1] - point.ul_sum_rate),
    )
    margin = 0.05 * max(1.0, t_grid)
    return CheckResult(
        "moop_grid", achieved <= t_grid + margin, f"solver {achieved:.5f} vs grid {t_grid:.5f}"
    )


def check_kernel_roundtrip() -> CheckResult:
    # start past the flat region near z = 1, where the forward map loses the
    # digits the roundtrip is asked to reproduce
    zs = np.concatenate([np.linspace(1.002, 4.0, 80), np.geomspace(4.0, 1e6, 40)])
    worst = max(abs(f_inverse(f_aux(z)) - z) / z for z in zs)
    return CheckResult("kernel_roundtrip", worst <= 1e-10, f"worst relative error {worst:.2e}")


def check_fault_injection() -> CheckResult:
    """A deliberately starved solver must be caught by the closed-form test."""
    inst = WpcnInstance(
        vlc_gain=np.array([1.0, 0.4, 0.9]),
        rf_power_gain=np.array([1.0, 2.0, 0.5]),
        max_led_power=9.0,
        rf_noise_power=0.2,
    )
    y = inst.snr_coefficients()
    # one iteration pins the zero dual, where every positive-gain user clamps
    # to a full share and normalization returns the uniform split; more
    # iterations can land on an unclamped dual, where normalization hides the
    # starvation entirely
    crippled = solve_time_allocation(inst, backend="subgradient", max_iter=1, tol=1e-12)
    deviation = float(np.max(np.abs(crippled.time_shares - y / np.sum(y))))
    return CheckResult(
        "fault_injection",
        deviation > 1e-6,
        f"starved solver deviates by {deviation:.2e} (detection works)",
    )


NAMED_CHECKS = {
    "wpcn_closed_form": check_wpcn_closed_form,
    "wpcn_grid": check_wpcn_grid,
    "wpcn_baseline": check_wpcn_baseline,
    "slipt_dl_grid": check_slipt_dl_grid,
    "slipt_ul_grid": check_slipt_ul_grid,
    "slipt_tightness": check_slipt_tightness,
    "front_properties": check_front_properties,
    "moop_grid": check_moop_grid,
    "kernel_roundtrip": check_kernel_roundtrip,
    "fault_injection": check_fault_injection,
}


def run_checks(names=None):
    """Run the named checks (all by default); returns a list of CheckResult."""
    if names is None:
        selected = NAMED_CHECKS
    else:
        unknown = [n for n in names if n not in NAMED_CHECKS]
        if unknown:
            raise ValueError(
                f"unknown checks {unknown!r}; valid: {', '.join(sorted(NAMED_CHECKS))}"
            )
        selected = {n: NAMED_CHECKS[n] for n in names}
    return [fn() for fn in selected.values()]
