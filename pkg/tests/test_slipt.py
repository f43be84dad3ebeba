import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

from lightharvest.kernels import rate_term
from lightharvest.slipt import (
    InfeasibleError,
    SliptInstance,
    SubstitutedVars,
    check_feasible,
    dl_sum_rate,
    enforce_global_offset,
    harvested_energy,
    pareto_front,
    project_feasible,
    solve_dl_max,
    solve_moop_point,
    solve_ul_max,
    ul_sum_rate,
    utopia_points,
)

# noise powers that turn the SNR coefficients into plain channel-gain products:
# dl_snr_per_watt = g^2 and ul_snr_per_joule = |h|^2 g^2
DL_NOISE = math.e / (2.0 * math.pi)
UL_NOISE = 0.2


def make_instance(
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
        vlc_noise_power=DL_NOISE,
        rf_noise_power=UL_NOISE,
        min_harvest_per_user=e_min,
        dc_offset=min(math.sqrt(min(p_max, i_max**2)), i_max),
    )


def max_violation(instance, v):
    return max(float(np.max(np.atleast_1d(x))) for x in v.constraint_violations(instance).values())


def feasible_vars(instance):
    """A hand-built feasible point used by the evaluator tests."""
    k = instance.user_count
    s_min, s_max = instance.dc_energy_bounds()
    s = 0.5 * (s_min + s_max)
    tau = np.full(k, 1.0 / k)
    b = np.full(k, s / k)
    pt = np.full(k, (instance.max_led_power - s) / k)
    return SubstitutedVars(dl_shares=tau, ul_shares=tau, dc_energy=b, data_energy=pt)


# ---------------------------------------------------------------------------
# instance and variable containers


def test_snr_coefficient_formulas():
    inst = make_instance(gains=(2.0, 0.5), rf=(3.0, 1.0))
    assert np.allclose(inst.dl_snr_per_watt(), [4.0, 0.25], rtol=1e-12)
    assert np.allclose(inst.ul_snr_per_joule(), [12.0, 0.25], rtol=1e-12)


def test_dc_energy_bounds():
    inst = make_instance(p_max=5.0, i_max=2.0, ratio=1.0)
    s_min, s_max = inst.dc_energy_bounds()
    assert s_min == pytest.approx(2.5, rel=1e-14)   # p A^2 / (1 + A^2)
    assert s_max == pytest.approx(4.0, rel=1e-14)   # min(p, I^2)


def test_harvest_requirements():
    inst = make_instance(gains=(1.0, 0.5), e_min=0.1)
    # e_min / (eta g^2)
    assert np.allclose(inst.harvest_requirements(), [0.5, 2.0], rtol=1e-12)
    assert np.all(make_instance().harvest_requirements() == 0.0)


def test_instance_validation():
    with pytest.raises(ValueError):
        make_instance(ratio=0.0)
    with pytest.raises(ValueError):
        make_instance(e_min=-0.1)
    with pytest.raises(ValueError):
        SliptInstance(
            vlc_gain=np.ones(2),
            rf_power_gain=np.ones(2),
            dc_offset=5.0,
            max_dc_offset=2.0,
        )


def test_substituted_vars_shape_validation():
    with pytest.raises(ValueError):
        SubstitutedVars(
            dl_shares=np.ones(2) / 2,
            ul_shares=np.ones(3) / 3,
            dc_energy=np.ones(2),
            data_energy=np.ones(2),
        )


def test_constraint_violations_zero_at_feasible_point():
    inst = make_instance()
    v = feasible_vars(inst)
    viol = v.constraint_violations(inst)
    assert set(viol) == {
        "dl_share_sum",
        "ul_share_sum",
        "power_budget",
        "nonnegativity",
        "data_energy_cap",
        "dc_energy_cap",
        "harvest",
    }
    assert max_violation(inst, v) <= 1e-12
    assert v.is_feasible(inst)


def test_constraint_violations_flag_each_family():
    inst = make_instance()
    v = feasible_vars(inst)
    bad = SubstitutedVars(
        dl_shares=v.dl_shares * 1.5,
        ul_shares=v.ul_shares,
        dc_energy=v.dc_energy,
        data_energy=v.data_energy,
    )
    assert bad.constraint_violations(inst)["dl_share_sum"] == pytest.approx(0.5)
    assert not bad.is_feasible(inst)


# ---------------------------------------------------------------------------
# rate evaluators


def test_dl_sum_rate_term_by_term():
    inst = make_instance(gains=(1.0, 0.5))
    v = feasible_vars(inst)
    gamma = inst.dl_snr_per_watt()
    expected = sum(
        float(rate_term(v.dl_shares[i], gamma[i] * v.data_energy[i])) for i in range(2)
    )
    assert dl_sum_rate(inst, v) == pytest.approx(expected, rel=1e-14)


def test_dl_sum_rate_zero_power():
    inst = make_instance()
    v = feasible_vars(inst)
    zero = SubstitutedVars(
        dl_shares=v.dl_shares,
        ul_shares=v.ul_shares,
        dc_energy=v.dc_energy,
        data_energy=np.zeros(2),
    )
    assert dl_sum_rate(inst, zero) == 0.0


def test_ul_sum_rate_fixed_offset_form():
    inst = make_instance()
    a2 = inst.dc_offset**2
    v = SubstitutedVars(
        dl_shares=np.array([0.5, 0.5]),
        ul_shares=np.array([0.4, 0.6]),
        dc_energy=np.array([0.3 * a2, 0.2 * a2]),
        data_energy=np.zeros(2),
    )
    gbar = inst.ul_snr_per_joule()
    expected = sum(
        float(rate_term(v.ul_shares[i], gbar[i] * (a2 - v.dc_energy[i]))) for i in range(2)
    )
    assert ul_sum_rate(inst, v) == pytest.approx(expected, rel=1e-14)


def test_ul_sum_rate_rejects_offset_overrun():
    inst = make_instance()
    a2 = inst.dc_offset**2
    v = SubstitutedVars(
        dl_shares=np.array([0.5, 0.5]),
        ul_shares=np.array([0.5, 0.5]),
        dc_energy=np.array([a2 * 1.5, 0.0]),
        data_energy=np.zeros(2),
    )
    with pytest.raises(InfeasibleError):
        ul_sum_rate(inst, v)


def test_ul_sum_rate_two_forms_agree_when_total_matches_offset():
    """The fixed-offset and self-consistent forms coincide at sum(b) = a^2."""
    inst = make_instance()
    a2 = inst.dc_offset**2
    v = SubstitutedVars(
        dl_shares=np.array([0.5, 0.5]),
        ul_shares=np.array([0.3, 0.7]),
        dc_energy=np.array([0.6 * a2, 0.4 * a2]),
        data_energy=np.zeros(2),
    )
    fixed = ul_sum_rate(inst, v)
    consistent = ul_sum_rate(inst, v, dc_energy_total=float(np.sum(v.dc_energy)))
    assert fixed == pytest.approx(consistent, rel=1e-14)


def test_ul_sum_rate_matches_physical_per_user_powers():
    """Substituted form equals the per-user transmit-power evaluation."""
    inst = make_instance(gains=(1.1, 0.6), rf=(0.8, 1.7))
    v = feasible_vars(inst)
    total = float(np.sum(v.dc_energy))
    val = ul_sum_rate(inst, v, dc_energy_total=total)
    expected = 0.0
    for k in range(2):
        harvested = inst.harvest_efficiency * inst.vlc_gain[k] ** 2 * (
            total - v.dc_energy[k]
        )
        snr = harvested * inst.rf_power_gain[k] / inst.rf_noise_power
        expected += float(rate_term(v.ul_shares[k], snr))
    assert val == pytest.approx(expected, rel=1e-12)


def test_harvested_energy_each_user():
    inst = make_instance(gains=(1.0, 0.5))
    v = feasible_vars(inst)
    expected = inst.harvest_efficiency * inst.vlc_gain**2 * (
        np.sum(v.dc_energy) - v.dc_energy
    )
    assert np.allclose(harvested_energy(inst, v), expected, rtol=1e-14)


# ---------------------------------------------------------------------------
# feasibility pre-pass


def test_check_feasible_accepts_default():
    check_feasible(make_instance())


def test_check_feasible_rejects_tight_amplitude_budget():
    # S_min = p A^2/(1+A^2) = 2.5 exceeds S_max = I^2 = 1
    with pytest.raises(InfeasibleError):
        check_feasible(make_instance(p_max=5.0, i_max=1.0))


def test_check_feasible_rejects_single_user_with_floor():
    inst = SliptInstance(
        vlc_gain=np.array([1.0]),
        rf_power_gain=np.array([1.0]),
        vlc_noise_power=DL_NOISE,
        rf_noise_power=UL_NOISE,
        max_dc_offset=2.0,
        min_harvest_per_user=0.01,
    )
    with pytest.raises(InfeasibleError):
        check_feasible(inst)


def test_check_feasible_rejects_unreachable_floor():
    with pytest.raises(InfeasibleError):
        check_feasible(make_instance(e_min=10.0))


# ---------------------------------------------------------------------------
# downlink solver


def test_dl_single_user_closed_form():
    """K=1: all time to the user, P = p/(1+A^2) with b = A^2 P at the cap."""
    inst = SliptInstance(
        vlc_gain=np.array([1.0]),
        rf_power_gain=np.array([1.0]),
        max_led_power=4.0,
        max_dc_offset=2.0,
        peak_amplitude_ratio=1.0,
        vlc_noise_power=DL_NOISE,
        rf_noise_power=UL_NOISE,
    )
    sol = solve_dl_max(inst)
    assert sol.dl_sum_rate == pytest.approx(math.log2(1.0 + 2.0), rel=1e-9)
    assert sol.vars.data_energy[0] == pytest.approx(2.0, rel=1e-8)


def test_dl_two_users_winner_take_all_value():
    """Unequal users: the strong one takes the frame, rate log2(1 + p/(1+A^2))."""
    inst = make_instance()
    sol = solve_dl_max(inst)
    assert sol.dl_sum_rate == pytest.approx(math.log2(3.5), rel=1e-10)
    assert sol.converged
    assert sol.warnings == ()
    assert max_violation(inst, sol.vars) <= 1e-9
    assert sol.kkt_residual <= 1e-8


def test_dl_power_budget_tight():
    inst = make_instance()
    sol = solve_dl_max(inst)
    total = float(np.sum(sol.vars.dc_energy + sol.vars.data_energy))
    assert total == pytest.approx(inst.max_led_power, abs=1e-9)
    assert float(np.sum(sol.vars.dl_shares)) == pytest.approx(1.0, abs=1e-9)


def test_dl_symmetric_users_split_evenly():
    inst = make_instance(gains=(0.9, 0.9), rf=(1.0, 1.0))
    sol = solve_dl_max(inst)
    assert sol.vars.dl_shares[0] == pytest.approx(sol.vars.dl_shares[1], abs=1e-6)


def test_dl_harvest_floor_binds():
    inst = make_instance(e_min=0.12)
    sol = solve_dl_max(inst)
    assert max_violation(inst, sol.vars) <= 1e-8
    assert float(np.min(harvested_energy(inst, sol.vars))) >= 0.12 - 1e-8


def test_dl_floor_starves_information_power():
    """A floor near the harvest ceiling pushes nearly all energy into DC."""
    inst = make_instance(e_min=0.12)
    ceiling = solve_dl_max(make_instance()).dl_sum_rate
    sol = solve_dl_max(inst)
    assert sol.dl_sum_rate < ceiling


# ---------------------------------------------------------------------------
# uplink solver


def test_ul_two_users_corner_value():
    """All DC energy in the weak user's slot, strong user takes the UL frame."""
    inst = make_instance()
    sol = solve_ul_max(inst)
    assert sol.ul_sum_rate == pytest.approx(math.log2(5.0), rel=1e-10)
    assert max_violation(inst, sol.vars) <= 1e-9


def test_ul_total_dc_energy_at_cap():
    inst = make_instance()
    sol = solve_ul_max(inst)
    s_max = min(inst.max_led_power, inst.max_dc_offset**2)
    assert float(np.sum(sol.vars.dc_energy)) == pytest.approx(s_max, abs=1e-9)


def test_ul_single_user_harvests_nothing():
    inst = SliptInstance(
        vlc_gain=np.array([1.0]),
        rf_power_gain=np.array([1.0]),
        max_dc_offset=2.0,
        vlc_noise_power=DL_NOISE,
        rf_noise_power=UL_NOISE,
    )
    sol = solve_ul_max(inst)
    assert sol.ul_sum_rate == 0.0


def test_ul_symmetric_users_split_invariant_value():
    """For tied users the rate is flat in the DC split: log2(1 + gbar * S)."""
    inst = make_instance(gains=(0.8, 0.8), rf=(1.2, 1.2))
    sol = solve_ul_max(inst)
    gbar = float(inst.ul_snr_per_joule()[0])
    s_max = min(inst.max_led_power, inst.max_dc_offset**2)
    assert sol.ul_sum_rate == pytest.approx(math.log2(1.0 + gbar * s_max), rel=1e-10)


def test_slot_recovery_consistent():
    """a_k^2 tau_k and P_k tau_k reproduce the substituted energies."""
    inst = make_instance()
    for sol in (solve_dl_max(inst), solve_ul_max(inst)):
        live = sol.vars.dl_shares > 1e-12
        assert np.allclose(
            sol.slot_dc_offsets[live] ** 2 * sol.vars.dl_shares[live],
            sol.vars.dc_energy[live],
            atol=1e-9,
        )
        assert np.allclose(
            sol.slot_led_power[live] * sol.vars.dl_shares[live],
            sol.vars.data_energy[live],
            atol=1e-9,
        )


def test_infeasible_error_is_value_error():
    assert issubclass(InfeasibleError, ValueError)


# ---------------------------------------------------------------------------
# dual backend


def test_dual_backend_returns_feasible_point():
    inst = make_instance()
    sol = solve_dl_max(inst, backend="dual", max_outer=300, cross_check=False)
    assert max_violation(inst, sol.vars) <= 1e-5
    assert sol.backend == "dual"


def test_dual_backend_cross_check_protects_objective():
    inst = make_instance()
    exact = solve_dl_max(inst)
    guarded = solve_dl_max(inst, backend="dual", max_outer=300)
    assert guarded.dl_sum_rate <= exact.dl_sum_rate + 1e-6
    assert guarded.dl_sum_rate >= 0.9 * exact.dl_sum_rate


# ---------------------------------------------------------------------------
# projection


def test_project_feasible_from_random_points():
    inst = make_instance()
    rng = np.random.default_rng(8)
    for _ in range(25):
        x = rng.uniform(-1.0, 6.0, size=8)
        v = SubstitutedVars(
            dl_shares=project_feasible(inst, x)[0:2],
            ul_shares=project_feasible(inst, x)[2:4],
            dc_energy=project_feasible(inst, x)[4:6],
            data_energy=project_feasible(inst, x)[6:8],
        )
        assert max_violation(inst, v) <= 1e-6


def test_project_feasible_fixes_nothing_at_feasible_point():
    inst = make_instance()
    v = feasible_vars(inst)
    x = np.concatenate([v.dl_shares, v.ul_shares, v.dc_energy, v.data_energy])
    xp = project_feasible(inst, x)
    assert np.allclose(xp, x, atol=1e-9)


# ---------------------------------------------------------------------------
# trade-off front


def test_corner_weights_delegate_to_single_objective():
    inst = make_instance()
    dl = solve_dl_max(inst)
    ul = solve_ul_max(inst)
    p_dl = solve_moop_point(inst, (1.0, 0.0), corners=(dl, ul))
    p_ul = solve_moop_point(inst, (0.0, 1.0), corners=(dl, ul))
    assert p_dl.dl_sum_rate == pytest.approx(dl.dl_sum_rate, rel=1e-12)
    assert p_ul.ul_sum_rate == pytest.approx(ul.ul_sum_rate, rel=1e-12)
    assert p_dl.epigraph == 0.0
    assert p_ul.epigraph == 0.0


def test_balanced_point_sits_between_corners():
    inst = make_instance()
    dl = solve_dl_max(inst)
    ul = solve_ul_max(inst)
    mid = solve_moop_point(inst, (0.5, 0.5), corners=(dl, ul))
    assert mid.converged
    assert ul.dl_sum_rate - 1e-6 <= mid.dl_sum_rate <= dl.dl_sum_rate + 1e-6
    assert dl.ul_sum_rate - 1e-6 <= mid.ul_sum_rate <= ul.ul_sum_rate + 1e-6
    assert mid.epigraph > 0.0
    assert mid.vars is not None
    assert max_violation(inst, mid.vars) <= 1e-6


def test_utopia_points_are_negated_corner_rates():
    inst = make_instance()
    g1, g2 = utopia_points(inst)
    assert g1 == pytest.approx(-math.log2(3.5), rel=1e-10)
    assert g2 == pytest.approx(-math.log2(5.0), rel=1e-10)


def test_front_monotone_and_nondominated():
    inst = make_instance()
    front = pareto_front(inst, n_points=7)
    assert len(front) == 7
    assert all(p.converged for p in front)
    dl = [p.dl_sum_rate for p in front]
    ul = [p.ul_sum_rate for p in front]
    # weights sweep from UL-only to DL-only
    assert all(a <= b + 1e-9 for a, b in zip(dl, dl[1:]))
    assert all(a >= b - 1e-9 for a, b in zip(ul, ul[1:]))
    for p in front:
        for q in front:
            if q is p:
                continue
            dominates = (
                q.dl_sum_rate >= p.dl_sum_rate + 1e-9
                and q.ul_sum_rate >= p.ul_sum_rate + 1e-9
            )
            assert not dominates


def test_front_points_carry_feasible_vars():
    inst = make_instance()
    front = pareto_front(inst, n_points=5)
    for p in front:
        assert p.vars is not None
        assert max_violation(inst, p.vars) <= 1e-6


# ---------------------------------------------------------------------------
# global-offset projection


def test_enforce_global_offset_mode():
    inst = make_instance()
    sol = solve_ul_max(inst)
    fixed = enforce_global_offset(inst, sol)
    assert "global_offset_mode" in fixed.warnings
    b = fixed.vars.dc_energy
    tau = fixed.vars.dl_shares
    total = float(np.sum(b))
    # every live slot now runs the same DC offset sqrt(total)
    live = tau > 1e-12
    assert np.allclose(b[live] / tau[live], total, rtol=1e-9)
    assert max_violation(inst, fixed.vars) <= 1e-6


# ---------------------------------------------------------------------------
# randomized feasibility sweep


@settings(max_examples=25, deadline=None)
@given(seed=integers(min_value=0, max_value=10_000))
def test_solvers_return_feasible_points(seed):
    rng = np.random.default_rng(seed)
    p_max = float(rng.uniform(2.0, 8.0))
    i_max = math.sqrt(p_max * float(rng.uniform(0.55, 1.2)))
    inst = make_instance(
        gains=tuple(rng.uniform(0.3, 1.5, size=2)),
        rf=tuple(rng.exponential(1.0, size=2) + 1e-3),
        p_max=p_max,
        i_max=i_max,
    )
    for sol in (solve_dl_max(inst), solve_ul_max(inst)):
        assert max_violation(inst, sol.vars) <= 1e-7
        assert sol.converged
