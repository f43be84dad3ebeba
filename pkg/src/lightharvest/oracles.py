"""Brute-force grid oracles for the joint downlink/uplink allocation.

Independent of the solvers: every oracle enumerates the substituted variable
polytope on a regular grid, applies the constraint masks exactly, and keeps
the best feasible value. Grid values lower-bound the true optimum, so a
correct solver must match or beat them; the grids are fine enough that the
solver cannot beat them by more than a couple of percent either. Small user
counts only, by design.
"""

from __future__ import annotations

import math

import numpy as np

from lightharvest.kernels import rate_term
from lightharvest.slipt import (
    InfeasibleError,
    SliptInstance,
    SubstitutedVars,
    check_feasible,
)

__all__ = ["dl_grid_oracle", "ul_grid_oracle", "moop_grid_epigraph"]

_MASK_TOL = 1e-12


def _dl_analytic_single(instance: SliptInstance) -> tuple:
    """K = 1 downlink closed form: all time, information share of the budget."""
    check_feasible(instance)
    a2 = instance.peak_amplitude_ratio**2
    p_max = instance.max_led_power
    pt = p_max / (1.0 + a2)
    b = p_max - pt
    if b > instance.max_dc_offset**2 + 1e-12:
        raise InfeasibleError("single-user DC energy exceeds the slot cap")
    gamma = float(instance.dl_snr_per_watt()[0])
    value = math.log2(1.0 + gamma * pt)
    v = SubstitutedVars(
        dl_shares=np.array([1.0]),
        ul_shares=np.array([1.0]),
        dc_energy=np.array([b]),
        data_energy=np.array([pt]),
    )
    return value, v


def dl_grid_oracle(instance: SliptInstance, step: float = 0.02) -> tuple:
    """Best feasible downlink sum rate on a regular grid; (value, vars).

    Two-user instances enumerate (tau_1, b_1, b_2, Pt_1) with Pt_2 taking the
    power-budget residual; single-user instances use the closed form.
    """
    k = instance.user_count
    if k == 1:
        return _dl_analytic_single(instance)
    if k != 2:
        raise ValueError("the downlink grid oracle supports one or two users")
    check_feasible(instance)
    p_max = instance.max_led_power
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    req = instance.harvest_requirements()
    gamma = instance.dl_snr_per_watt()

    ticks = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    b1, b2, p1 = np.meshgrid(ticks * p_max, ticks * p_max, ticks * p_max, indexing="ij")
    b1, b2, p1 = b1.ravel(), b2.ravel(), p1.ravel()
    p2 = p_max - b1 - b2 - p1
    base_ok = p2 >= -_MASK_TOL
    p2 = np.maximum(p2, 0.0)
    harvest_ok = (b2 >= req[0] - _MASK_TOL) & (b1 >= req[1] - _MASK_TOL)

    best_val = -np.inf
    best = None
    for tau1 in ticks:
        tau2 = 1.0 - tau1
        ok = (
            base_ok
            & harvest_ok
            & (a2 * p1 <= b1 + _MASK_TOL)
            & (a2 * p2 <= b2 + _MASK_TOL)
            & (b1 <= i2 * tau1 + _MASK_TOL)
            & (b2 <= i2 * tau2 + _MASK_TOL)
        )
        if not np.any(ok):
            continue
        val = rate_term(tau1, gamma[0] * p1[ok]) + rate_term(tau2, gamma[1] * p2[ok])
        idx = int(np.argmax(val))
        if val[idx] > best_val:
            best_val = float(val[idx])
            sel = np.nonzero(ok)[0][idx]
            best = (tau1, b1[sel], b2[sel], p1[sel], max(p2[sel], 0.0))
    if best is None:
        raise InfeasibleError("no feasible grid point for the downlink oracle")
    tau1, bb1, bb2, pp1, pp2 = best
    v = SubstitutedVars(
        dl_shares=np.array([tau1, 1.0 - tau1]),
        ul_shares=np.array([0.5, 0.5]),
        dc_energy=np.array([bb1, bb2]),
        data_energy=np.array([pp1, pp2]),
    )
    return best_val, v


def ul_grid_oracle(instance: SliptInstance, step: float = 0.02) -> tuple:
    """Best feasible uplink sum rate on a regular grid; (value, vars).

    Two-user instances enumerate (tau_ul_1, b_1, b_2); downlink shares take
    the proportional completion and the information energies are only checked
    for existence. A single user harvests nothing during its own slot, so the
    single-user value is zero.
    """
    k = instance.user_count
    if k == 1:
        check_feasible(instance)
        a2 = instance.peak_amplitude_ratio**2
        b = instance.max_led_power * a2 / (1.0 + a2)
        v = SubstitutedVars(
            dl_shares=np.array([1.0]),
            ul_shares=np.array([1.0]),
            dc_energy=np.array([b]),
            data_energy=np.array([instance.max_led_power - b]),
        )
        return 0.0, v
    if k != 2:
        raise ValueError("the uplink grid oracle supports one or two users")
    check_feasible(instance)
    p_max = instance.max_led_power
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    req = instance.harvest_requirements()
    gamma = instance.ul_snr_per_joule()

    ticks = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    b1, b2 = np.meshgrid(ticks * p_max, ticks * p_max, indexing="ij")
    b1, b2 = b1.ravel(), b2.ravel()
    total = b1 + b2
    # existence of information energies and of downlink shares
    ok = (
        (total <= min(p_max, i2) + _MASK_TOL)
        & (p_max - total <= total / a2 + _MASK_TOL)
        & (b2 >= req[0] - _MASK_TOL)
        & (b1 >= req[1] - _MASK_TOL)
        & (b1 <= i2 + _MASK_TOL)
        & (b2 <= i2 + _MASK_TOL)
    )
    if not np.any(ok):
        raise InfeasibleError("no feasible grid point for the uplink oracle")
    b1, b2, total = b1[ok], b2[ok], total[ok]
    y1 = gamma[0] * np.maximum(total - b1, 0.0)
    y2 = gamma[1] * np.maximum(total - b2, 0.0)
    best_val = -np.inf
    best = None
    for tau1 in ticks:
        val = rate_term(tau1, y1) + rate_term(1.0 - tau1, y2)
        idx = int(np.argmax(val))
        if val[idx] > best_val:
            best_val = float(val[idx])
            best = (tau1, b1[idx], b2[idx])
    tau1, bb1, bb2 = best
    total = bb1 + bb2
    tau_dl = np.array([bb1, bb2]) / total if total > 0 else np.array([0.5, 0.5])
    left = p_max - total
    caps = np.array([bb1, bb2]) / a2
    pt = np.minimum(caps, left * caps / max(float(np.sum(caps)), 1e-300))
    v = SubstitutedVars(
        dl_shares=tau_dl,
        ul_shares=np.array([tau1, 1.0 - tau1]),
        dc_energy=np.array([bb1, bb2]),
        data_energy=pt,
    )
    return best_val, v


def moop_grid_epigraph(
    instance: SliptInstance,
    weights,
    utopia_rates,
    step: float = 0.05,
    refine: bool = True,
) -> float:
    """Smallest weighted worst-case rate gap reachable on a grid.

    For weights (w1, w2) and per-objective best rates (dl*, ul*), returns the
    grid minimum of max(w1 (dl* - dl), w2 (ul* - ul)) over the feasible set
    of a two-user instance, optionally refined once around the best cell. The
    solver's epigraph value must not exceed this by more than a grid-step
    margin.
    """
    if instance.user_count != 2:
        raise ValueError("the epigraph grid oracle supports two users")
    check_feasible(instance)
    w1, w2 = float(weights[0]), float(weights[1])
    dl_star, ul_star = float(utopia_rates[0]), float(utopia_rates[1])
    p_max = instance.max_led_power
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    req = instance.harvest_requirements()
    g_dl = instance.dl_snr_per_watt()
    g_ul = instance.ul_snr_per_joule()

    def scan(tau_dl_ticks, tau_ul_ticks, b1_ticks, b2_ticks, p1_ticks):
        best = np.inf
        best_point = None
        bb1, bb2, pp1 = np.meshgrid(b1_ticks, b2_ticks, p1_ticks, indexing="ij")
        bb1, bb2, pp1 = bb1.ravel(), bb2.ravel(), pp1.ravel()
        pp2 = p_max - bb1 - bb2 - pp1
        total = bb1 + bb2
        power_ok = (
            (pp2 >= -_MASK_TOL)
            & (a2 * pp1 <= bb1 + _MASK_TOL)
            & (a2 * pp2 <= bb2 + _MASK_TOL)
            & (bb2 >= req[0] - _MASK_TOL)
            & (bb1 >= req[1] - _MASK_TOL)
        )
        pp2 = np.maximum(pp2, 0.0)
        for t1 in tau_dl_ticks:
            t2 = 1.0 - t1
            if t1 < -1e-12 or t2 < -1e-12:
                continue
            ok = power_ok & (bb1 <= i2 * t1 + _MASK_TOL) & (bb2 <= i2 * t2 + _MASK_TOL)
            if not np.any(ok):
                continue
            dl = rate_term(t1, g_dl[0] * pp1[ok]) + rate_term(t2, g_dl[1] * pp2[ok])
            y1 = g_ul[0] * np.maximum(total[ok] - bb1[ok], 0.0)
            y2 = g_ul[1] * np.maximum(total[ok] - bb2[ok], 0.0)
            for u1 in tau_ul_ticks:
                u2 = 1.0 - u1
                if u1 < -1e-12 or u2 < -1e-12:
                    continue
                ul = rate_term(u1, y1) + rate_term(u2, y2)
                t_val = np.maximum(w1 * (dl_star - dl), w2 * (ul_star - ul))
                idx = int(np.argmin(t_val))
                if t_val[idx] < best:
                    best = float(t_val[idx])
                    sel = np.nonzero(ok)[0][idx]
                    best_point = (t1, u1, bb1[sel], bb2[sel], pp1[sel])
        return best, best_point

    ticks = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    best, point = scan(ticks, ticks, ticks * p_max, ticks * p_max, ticks * p_max)
    if point is None:
        raise InfeasibleError("no feasible grid point for the epigraph oracle")
    if refine:
        t1, u1, b1c, b2c, p1c = point
        h_tau = step
        h_pow = step * p_max

        def window(center, width, lo, hi):
            return np.linspace(max(lo, center - width), min(hi, center + width), 11)

        best2, point2 = scan(
            window(t1, h_tau, 0.0, 1.0),
            window(u1, h_tau, 0.0, 1.0),
            window(b1c, h_pow, 0.0, p_max),
            window(b2c, h_pow, 0.0, p_max),
            window(p1c, h_pow, 0.0, p_max),
        )
        if point2 is not None and best2 < best:
            best = best2
    return best
