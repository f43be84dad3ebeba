"""Joint downlink/uplink allocation for lightwave-powered users.

Downlink: the LED serves users in TDMA slots tau_dl with information power
P_k on top of a DC bias; users harvest the DC light and also decode. Uplink:
each user spends the energy harvested during the other users' downlink slots
on its RF TDMA slot tau_ul. After substituting per-slot DC energy
b_k = a_k^2 tau_dl_k and information energy Pt_k = P_k tau_dl_k, both sum
rates become jointly concave perspective sums and the constraint set is a
polytope:

    sum tau_dl = 1,  sum tau_ul = 1,  sum(Pt + b) = p_max,
    A^2 Pt_k <= b_k,  b_k <= I_max^2 tau_dl_k,  b, Pt, tau >= 0,
    harvest: eta g_k^2 sum_{i != k} b_i >= e_min  for every user.

The uplink objective uses the energy a user collects while the other users'
slots are lit, sum_{i != k} b_i; with a common DC offset a across slots this
equals a^2 - b_k, which is the fixed-offset evaluation `ul_sum_rate` exposes.

Solvers: exact alternating block steps (time shares by dual bisection, power
split by capped water-filling, DC energies by marginal equalization), an
as-printed dual-gradient backend, and a projected-gradient fallback used to
cross-validate every returned solution. The two-objective trade-off is solved
as a weighted min-max (epigraph bisection plus projected supergradient
feasibility search).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import lsq_linear

from lightharvest.kernels import LN2, clamp, f_aux, f_inverse, rate_term

__all__ = [
    "InfeasibleError",
    "SliptInstance",
    "SubstitutedVars",
    "SliptSolution",
    "ParetoPoint",
    "dl_sum_rate",
    "ul_sum_rate",
    "harvested_energy",
    "solve_dl_max",
    "solve_ul_max",
    "utopia_points",
    "solve_moop_point",
    "pareto_front",
    "enforce_global_offset",
]

_EQ_TOL = 1e-9          # internal target for equality constraints
_FEAS_TOL = 1e-5        # contract tolerance on returned solutions
_ACTIVE_TOL = 1e-6      # slack threshold when recovering duals


class InfeasibleError(ValueError):
    """Raised when the requested instance admits no feasible allocation."""


@dataclass(frozen=True)
class SliptInstance:
    """Problem data for one downlink/uplink trade-off instance."""

    vlc_gain: np.ndarray
    rf_power_gain: np.ndarray
    harvest_efficiency: float = 0.2
    max_led_power: float = 5.0        # p_max, shared by DC and information power
    max_dc_offset: float = 4.0        # I_max, amplitude cap on any slot's DC offset
    peak_amplitude_ratio: float = 1.0  # A, information swing per unit DC bias
    vlc_noise_power: float = 3e-14
    rf_noise_power: float = 1e-9
    min_harvest_per_user: float = 0.0  # e_min, joules per frame
    dc_offset: float = 2.0            # a, fixed offset used by the uplink evaluator

    def __post_init__(self):
        g = np.asarray(self.vlc_gain, dtype=float)
        h2 = np.asarray(self.rf_power_gain, dtype=float)
        if g.ndim != 1 or g.shape != h2.shape or g.size == 0:
            raise ValueError("gains must be matching 1-D arrays with at least one user")
        if np.any(g < 0.0) or np.any(h2 < 0.0):
            raise ValueError("gains must be nonnegative")
        if not 0.0 < self.harvest_efficiency <= 1.0:
            raise ValueError("harvest efficiency must lie in (0, 1]")
        if min(self.max_led_power, self.max_dc_offset, self.peak_amplitude_ratio) <= 0.0:
            raise ValueError("power caps and amplitude ratio must be positive")
        if self.vlc_noise_power <= 0.0 or self.rf_noise_power <= 0.0:
            raise ValueError("noise powers must be positive")
        if self.min_harvest_per_user < 0.0:
            raise ValueError("per-user harvest floor must be nonnegative")
        if not 0.0 <= self.dc_offset <= self.max_dc_offset:
            raise ValueError("DC offset must lie in [0, I_max]")
        object.__setattr__(self, "vlc_gain", g)
        object.__setattr__(self, "rf_power_gain", h2)

    @property
    def user_count(self) -> int:
        return self.vlc_gain.size

    def dl_snr_per_watt(self) -> np.ndarray:
        """Downlink SNR coefficient per watt of slot information power."""
        return math.e * self.vlc_gain**2 / (2.0 * math.pi * self.vlc_noise_power)

    def ul_snr_per_joule(self) -> np.ndarray:
        """Uplink SNR coefficient per joule of harvested DC energy."""
        return (
            self.harvest_efficiency
            * self.rf_power_gain
            * self.vlc_gain**2
            / self.rf_noise_power
        )

    def harvest_requirements(self) -> np.ndarray:
        """DC energy the other slots must carry for each user, e_min/(eta g_k^2)."""
        if self.min_harvest_per_user == 0.0:
            return np.zeros(self.user_count)
        g2 = self.vlc_gain**2
        req = np.full(self.user_count, np.inf)
        pos = g2 > 0.0
        req[pos] = self.min_harvest_per_user / (self.harvest_efficiency * g2[pos])
        return req

    def dc_energy_bounds(self) -> tuple:
        """(S_min, S_max): range of total DC energy compatible with the power budget."""
        a2 = self.peak_amplitude_ratio**2
        s_min = self.max_led_power * a2 / (1.0 + a2)
        s_max = min(self.max_led_power, self.max_dc_offset**2)
        return s_min, s_max


@dataclass(frozen=True)
class SubstitutedVars:
    """Substituted decision variables: time shares and per-slot energies."""

    dl_shares: np.ndarray    # tau_dl
    ul_shares: np.ndarray    # tau_ul
    dc_energy: np.ndarray    # b_k = a_k^2 tau_dl_k
    data_energy: np.ndarray  # Pt_k = P_k tau_dl_k

    def __post_init__(self):
        arrays = {}
        shape = None
        for name in ("dl_shares", "ul_shares", "dc_energy", "data_energy"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if shape is None:
                shape = arr.shape
            if arr.ndim != 1 or arr.shape != shape:
                raise ValueError("variable blocks must be matching 1-D arrays")
            arrays[name] = arr
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def user_count(self) -> int:
        return self.dl_shares.size

    def constraint_violations(self, instance: SliptInstance) -> dict:
        """Worst violation per constraint family (nonnegative numbers)."""
        b, pt = self.dc_energy, self.data_energy
        total_dc = float(np.sum(b))
        req = instance.harvest_requirements()
        harvest_slack = (total_dc - b) - req  # in DC-energy units
        return {
            "dl_share_sum": abs(float(np.sum(self.dl_shares)) - 1.0),
            "ul_share_sum": abs(float(np.sum(self.ul_shares)) - 1.0),
            "power_budget": abs(float(np.sum(b + pt)) - instance.max_led_power),
            "nonnegativity": max(
                0.0,
                -float(
                    min(
                        self.dl_shares.min(),
                        self.ul_shares.min(),
                        b.min(),
                        pt.min(),
                    )
                ),
            ),
            "data_energy_cap": max(
                0.0, float(np.max(instance.peak_amplitude_ratio**2 * pt - b))
            ),
            "dc_energy_cap": max(
                0.0, float(np.max(b - instance.max_dc_offset**2 * self.dl_shares))
            ),
            "harvest": max(0.0, float(np.max(-harvest_slack)) if harvest_slack.size else 0.0),
        }

    def is_feasible(self, instance: SliptInstance, tol: float = _FEAS_TOL) -> bool:
        return max(self.constraint_violations(instance).values()) <= tol


@dataclass(frozen=True)
class SliptSolution:
    vars: SubstitutedVars
    slot_dc_offsets: np.ndarray   # a_k = sqrt(b_k / tau_dl_k), 0 on empty slots
    slot_led_power: np.ndarray    # P_k = Pt_k / tau_dl_k, 0 on empty slots
    dl_sum_rate: float
    ul_sum_rate: float
    duals: dict
    kkt_residual: float
    converged: bool
    backend: str
    iterations: int
    objective: str
    warnings: tuple = ()


@dataclass(frozen=True)
class ParetoPoint:
    weights: tuple
    dl_sum_rate: float
    ul_sum_rate: float
    epigraph: float
    converged: bool
    vars: SubstitutedVars = None


def dl_sum_rate(instance: SliptInstance, shares: SubstitutedVars) -> float:
    """Downlink sum rate; slots with zero share contribute zero."""
    y = instance.dl_snr_per_watt() * shares.data_energy
    return float(np.sum(rate_term(np.maximum(shares.dl_shares, 0.0), y)))


def ul_sum_rate(instance: SliptInstance, shares: SubstitutedVars, dc_energy_total=None) -> float:
    """Uplink sum rate at the given variables.

    With the default dc_energy_total=None the fixed-offset form is evaluated:
    user k transmits with harvested energy proportional to a^2 - b_k, where a
    is the instance's DC offset; b_k > a^2 is rejected as infeasible. Passing
    dc_energy_total = sum(b) evaluates the self-consistent form in which each
    user harvests the other slots' DC energy sum_{i != k} b_i; the two agree
    exactly when sum(b) = a^2.
    """
    b = shares.dc_energy
    if dc_energy_total is None:
        total = instance.dc_offset**2
        if np.any(b > total + 1e-9 * max(1.0, total)):
            raise InfeasibleError("slot DC energy exceeds the squared DC offset")
    else:
        total = float(dc_energy_total)
    y = instance.ul_snr_per_joule() * np.maximum(total - b, 0.0)
    return float(np.sum(rate_term(np.maximum(shares.ul_shares, 0.0), y)))


def harvested_energy(instance: SliptInstance, shares: SubstitutedVars) -> np.ndarray:
    """Energy each user harvests during the other users' downlink slots."""
    b = shares.dc_energy
    return instance.harvest_efficiency * instance.vlc_gain**2 * (np.sum(b) - b)


# ---------------------------------------------------------------------------
# feasibility


def check_feasible(instance: SliptInstance):
    """Raise InfeasibleError when no allocation can satisfy the constraint set."""
    s_min, s_max = instance.dc_energy_bounds()
    if s_min > s_max + 1e-12:
        raise InfeasibleError(
            "power budget exceeds what DC bias plus information swing can absorb"
        )
    req = instance.harvest_requirements()
    if not np.any(req > 0.0):
        return
    if np.any(np.isinf(req)):
        raise InfeasibleError("a user with zero optical gain cannot meet the harvest floor")
    if instance.user_count == 1:
        raise InfeasibleError("a single user harvests nothing during its own slot")
    # need some total S in [s_min, s_max] with b_k <= S - req_k and sum b = S;
    # the slack function is concave piecewise linear in S, so checking its
    # breakpoints (clipped to the range) is exact
    cap_i2 = instance.max_dc_offset**2
    candidates = [s_min, s_max]
    for r in req:
        for point in (r, r + cap_i2):
            if s_min < point < s_max:
                candidates.append(point)

    def slack(s):
        caps = np.minimum(cap_i2, np.maximum(s - req, 0.0))
        return float(np.sum(caps)) - s

    if max(slack(s) for s in candidates) < -1e-12:
        raise InfeasibleError("harvest floor unattainable within the power budget")


# ---------------------------------------------------------------------------
# exact block steps


def _bounded_simplex_allocation(y: np.ndarray, lower=None) -> np.ndarray:
    """Maximize sum rate_term(tau, y) over the simplex with lower bounds.

    Shares follow tau_k = max(lower_k, y_k / (z - 1)) for the dual level z
    found by bisection; the residual of the unit sum is removed by rescaling
    the free part only, so the bounds stay intact.
    """
    y = np.asarray(y, dtype=float)
    k = y.size
    lb = np.zeros(k) if lower is None else np.asarray(lower, dtype=float)
    lb_sum = float(np.sum(lb))
    if lb_sum > 1.0 + 1e-9:
        raise InfeasibleError("lower bounds on time shares exceed the frame")
    free = 1.0 - lb_sum
    if not np.any(y > 0.0):
        return lb + free / k
    if free <= 1e-15:
        return lb / lb_sum if lb_sum > 0 else np.full(k, 1.0 / k)
    y_sum = float(np.sum(y))
    z_lo = 1.0
    z_hi = 1.0 + 2.0 * y_sum / max(free, 1e-12) + 1.0
    for _ in range(200):
        z = 0.5 * (z_lo + z_hi)
        tau = np.maximum(lb, y / (z - 1.0))
        if float(np.sum(tau)) >= 1.0:
            z_lo = z
        else:
            z_hi = z
        if z_hi - z_lo <= 1e-14 * z_hi:
            break
    z = 0.5 * (z_lo + z_hi)
    tau = np.maximum(lb, y / (z - 1.0))
    over = tau - lb
    over_sum = float(np.sum(over))
    if over_sum > 0.0:
        tau = lb + over * (free / over_sum)
    return tau


def _water_fill(tau: np.ndarray, gamma: np.ndarray, budget: float, caps: np.ndarray) -> np.ndarray:
    """Maximize sum rate_term(tau, gamma * p) over {sum p = budget, 0 <= p <= caps}.

    Marginal rates gamma tau / ((tau + gamma p) ln2) are equalized at a water
    level found by bisection; the residual is spread over unsaturated slots.
    """
    k = tau.size
    if budget <= 0.0:
        return np.zeros(k)
    caps = np.asarray(caps, dtype=float)
    total_cap = float(np.sum(caps))
    if total_cap <= budget + 1e-15:
        return caps.copy()
    active = (tau > 0.0) & (gamma > 0.0)
    if not np.any(active):
        # rate is flat in p; park the budget wherever the caps allow
        p = np.minimum(caps, budget / max(k, 1))
        deficit = budget - float(np.sum(p))
        room = caps - p
        while deficit > 1e-15 and np.any(room > 0):
            add = np.minimum(room, deficit / max(np.count_nonzero(room > 0), 1))
            p += add
            deficit = budget - float(np.sum(p))
            room = caps - p
        return p

    def shares(level):
        with np.errstate(divide="ignore"):
            raw = tau * (1.0 / (level * LN2) - np.where(gamma > 0, 1.0 / gamma, np.inf))
        raw = np.where(active, raw, 0.0)
        return clamp(raw, 0.0, caps)

    w_hi = float(np.max(gamma[active])) / LN2 * (1.0 + 1e-12)
    w_lo = w_hi * 1e-18
    while float(np.sum(shares(w_lo))) < budget:
        w_lo *= 0.5
        if w_lo < 1e-300:
            break
    for _ in range(200):
        w = math.sqrt(w_lo * w_hi) if w_lo > 0 else 0.5 * (w_lo + w_hi)
        if float(np.sum(shares(w))) >= budget:
            w_lo = w
        else:
            w_hi = w
        if w_hi - w_lo <= 1e-15 * w_hi:
            break
    p = shares(w_lo)
    # spread the bisection residual over slots that are strictly inside
    residual = budget - float(np.sum(p))
    inside = (p > 0.0) & (p < caps)
    for _ in range(3):
        n_in = int(np.count_nonzero(inside))
        if n_in == 0 or abs(residual) < 1e-15:
            break
        p = clamp(p + np.where(inside, residual / n_in, 0.0), 0.0, caps)
        residual = budget - float(np.sum(p))
        inside = (p > 0.0) & (p < caps)
    # rate-flat slots absorb whatever the marginal-positive slots cannot hold
    residual = budget - float(np.sum(p))
    if residual > 1e-15:
        room = caps - p
        for idx in np.argsort(-room):
            take = min(room[idx], residual)
            p[idx] += take
            residual -= take
            if residual <= 1e-15:
                break
    return p


def _equalized_fill(target: float, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Point with coordinates clamp(theta, lower, upper) summing to target."""
    if target < float(np.sum(lower)) - 1e-9 or target > float(np.sum(upper)) + 1e-9:
        raise InfeasibleError("no feasible split of the DC energy budget")
    theta_lo = float(np.min(lower))
    theta_hi = float(np.max(upper))
    for _ in range(200):
        theta = 0.5 * (theta_lo + theta_hi)
        if float(np.sum(clamp(theta, lower, upper))) < target:
            theta_lo = theta
        else:
            theta_hi = theta
        if theta_hi - theta_lo <= 1e-15 * max(abs(theta_hi), 1.0):
            break
    b = clamp(0.5 * (theta_lo + theta_hi), lower, upper)
    residual = target - float(np.sum(b))
    inside = (b > lower) & (b < upper)
    for _ in range(3):
        n_in = int(np.count_nonzero(inside))
        if n_in == 0 or abs(residual) < 1e-15:
            break
        b = clamp(b + np.where(inside, residual / n_in, 0.0), lower, upper)
        residual = target - float(np.sum(b))
        inside = (b > lower) & (b < upper)
    return b


def _dl_power_step(instance: SliptInstance, tau_dl: np.ndarray, w_tol: float = None):
    """Exact (b, Pt) step for the downlink objective with tau_dl fixed.

    The information budget W = sum(Pt) is searched by golden section (the
    value function is concave in W) down to width w_tol; at each W the split
    is a capped water fill and the DC energies take the equalized
    minimum-slack completion.
    """
    p_max = instance.max_led_power
    if w_tol is None:
        w_tol = 1e-12 * max(p_max, 1.0)
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    req = instance.harvest_requirements()
    gamma = instance.dl_snr_per_watt()

    def caps_b(s):
        return np.minimum(i2 * tau_dl, np.maximum(s - req, 0.0))

    def feasible(w):
        s = p_max - w
        if s < -1e-12 or a2 * w > s + 1e-12:
            return False
        caps = caps_b(s)
        if float(np.sum(caps)) < s - 1e-12:
            return False
        return float(np.sum(caps / a2)) >= w - 1e-12

    w_cap = p_max / (1.0 + a2)
    if not np.any(req > 0.0):
        # without a harvest floor the DC caps at total s are min(i2 tau, s),
        # so the only extra condition is sum(min(i2 tau, s)) >= s, whose
        # satisfied region is s <= s_upper
        cap_slack_sum = float(np.sum(np.minimum(i2 * tau_dl, p_max))) - p_max
        if cap_slack_sum >= 0.0:
            w_lo = 0.0
        else:
            s_lo, s_hi = 0.0, p_max
            for _ in range(80):
                s_mid = 0.5 * (s_lo + s_hi)
                if float(np.sum(np.minimum(i2 * tau_dl, s_mid))) >= s_mid:
                    s_lo = s_mid
                else:
                    s_hi = s_mid
                if s_hi - s_lo <= 1e-14 * p_max:
                    break
            w_lo = p_max - s_lo
        w_hi = w_cap
        if w_lo > w_hi + 1e-12:
            raise InfeasibleError("downlink power step found no feasible budget split")
        w_lo = min(w_lo, w_hi)
    else:
        # the feasible W set is an interval; locate it by scanning + bisection
        grid = np.linspace(0.0, w_cap, 65)
        ok = [w for w in grid if feasible(w)]
        if not ok:
            raise InfeasibleError("downlink power step found no feasible budget split")
        w_lo_seed, w_hi_seed = min(ok), max(ok)

        def edge(inside, outside):
            for _ in range(80):
                mid = 0.5 * (inside + outside)
                if feasible(mid):
                    inside = mid
                else:
                    outside = mid
                if abs(inside - outside) <= 1e-14 * max(p_max, 1.0):
                    break
            return inside

        w_lo = edge(w_lo_seed, 0.0) if w_lo_seed > 0.0 and not feasible(0.0) else 0.0
        w_hi = edge(w_hi_seed, w_cap) if w_hi_seed < w_cap and not feasible(w_cap) else w_cap

    def value_and_point(w):
        s = p_max - w
        caps_p = caps_b(s) / a2
        pt = _water_fill(tau_dl, gamma, w, caps_p)
        b = _equalized_fill(s, a2 * pt, caps_b(s))
        val = float(np.sum(rate_term(tau_dl, gamma * pt)))
        return val, pt, b

    # golden-section search on the concave budget section, reusing one
    # interior evaluation per shrink
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = w_lo, w_hi
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = value_and_point(x1)[0]
    f2 = value_and_point(x2)[0]
    for _ in range(200):
        if hi - lo <= w_tol:
            break
        if f1 < f2:
            lo = x1
            x1, f1 = x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = value_and_point(x2)[0]
        else:
            hi = x2
            x2, f2 = x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = value_and_point(x1)[0]
    _, pt, b = value_and_point(0.5 * (lo + hi))
    return pt, b


def _ul_dc_step(instance: SliptInstance, tau_ul: np.ndarray, total_dc: float) -> np.ndarray:
    """Exact DC energy split for the uplink objective with tau_ul fixed.

    The sum of slot DC energies is pinned at total_dc; the split equalizes
    each user's marginal rate loss, giving the clamped affine form
    b_k = S + tau_k/gamma_k - tau_k/(theta ln2) with theta found by bisection.
    """
    gamma = instance.ul_snr_per_joule()
    req = instance.harvest_requirements()
    caps = np.maximum(total_dc - req, 0.0)
    if float(np.sum(caps)) < total_dc - 1e-9:
        raise InfeasibleError("harvest floor leaves no room for the DC budget")

    def split(theta):
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = total_dc + np.where(
                (tau_ul > 0) & (gamma > 0),
                tau_ul / gamma - tau_ul / (theta * LN2),
                total_dc,  # zero-share or zero-gain slots park at their cap
            )
        return clamp(raw, 0.0, caps)

    theta_hi = max(float(np.max(gamma)) / LN2, 1.0) * 2.0
    theta_lo = theta_hi * 1e-24
    while float(np.sum(split(theta_hi))) < total_dc:
        theta_hi *= 4.0
        if theta_hi > 1e200:
            break
    for _ in range(220):
        theta = math.sqrt(theta_lo * theta_hi)
        if float(np.sum(split(theta))) < total_dc:
            theta_lo = theta
        else:
            theta_hi = theta
        if theta_hi - theta_lo <= 1e-14 * theta_hi:
            break
    b = split(theta_hi)
    residual = total_dc - float(np.sum(b))
    inside = (b > 0.0) & (b < caps)
    for _ in range(3):
        n_in = int(np.count_nonzero(inside))
        if n_in == 0 or abs(residual) < 1e-15:
            break
        b = clamp(b + np.where(inside, residual / n_in, 0.0), 0.0, caps)
        residual = total_dc - float(np.sum(b))
        inside = (b > 0.0) & (b < caps)
    return b


# ---------------------------------------------------------------------------
# projection and projected-gradient fallback


def _simplex_project(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total}."""
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _pack(v: SubstitutedVars) -> np.ndarray:
    return np.concatenate([v.dl_shares, v.ul_shares, v.dc_energy, v.data_energy])


def _unpack(x: np.ndarray, k: int) -> SubstitutedVars:
    return SubstitutedVars(
        dl_shares=x[0:k].copy(),
        ul_shares=x[k : 2 * k].copy(),
        dc_energy=x[2 * k : 3 * k].copy(),
        data_energy=x[3 * k : 4 * k].copy(),
    )


def project_feasible(
    instance: SliptInstance, x: np.ndarray, max_sweeps: int = 3000, tol: float = 1e-12
) -> np.ndarray:
    """Cyclic projection onto the constraint polytope, then exact equalities.

    Alternating projections over the two share simplexes, the power-budget
    simplex on (b, Pt), the pairwise amplitude and slot caps, and the harvest
    halfspaces. A final rescaling lands the three equality constraints at
    machine precision.
    """
    k = instance.user_count
    p_max = instance.max_led_power
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    req = instance.harvest_requirements()
    x = x.copy()

    def violation(x):
        v = _unpack(x, k)
        worst = max(v.constraint_violations(instance).values())
        return worst

    for _ in range(max_sweeps):
        x[0:k] = _simplex_project(x[0:k])
        x[k : 2 * k] = _simplex_project(x[k : 2 * k])
        power = _simplex_project(x[2 * k : 4 * k] / p_max) * p_max
        x[2 * k : 4 * k] = power
        # amplitude cap: A^2 Pt_k - b_k <= 0 on the pair (b_k, Pt_k)
        b = x[2 * k : 3 * k]
        pt = x[3 * k : 4 * k]
        viol = a2 * pt - b
        hit = viol > 0.0
        if np.any(hit):
            scale = viol[hit] / (a2 * a2 + 1.0)
            b[hit] += scale
            pt[hit] -= scale * a2
        # slot cap: b_k - I^2 tau_dl_k <= 0 on the pair (tau_dl_k, b_k)
        tau = x[0:k]
        viol = b - i2 * tau
        hit = viol > 0.0
        if np.any(hit):
            scale = viol[hit] / (i2 * i2 + 1.0)
            b[hit] -= scale
            tau[hit] += scale * i2
        # harvest: sum_{i != k} b_i >= req_k
        if np.any(req > 0.0) and k > 1:
            for j in range(k):
                if not np.isfinite(req[j]):
                    continue
                others = np.arange(k) != j
                deficit = req[j] - float(np.sum(b[others]))
                if deficit > 0.0:
                    b[others] += deficit / (k - 1)
        if violation(x) <= tol:
            break
    # exact equalities: rescale shares and the power block
    for sl in (slice(0, k), slice(k, 2 * k)):
        block = np.maximum(x[sl], 0.0)
        s = float(np.sum(block))
        x[sl] = block / s if s > 0 else np.full(k, 1.0 / k)
    power = np.maximum(x[2 * k : 4 * k], 0.0)
    s = float(np.sum(power))
    x[2 * k : 4 * k] = power * (p_max / s) if s > 0 else _feasible_power_seed(instance, x[0:k])
    return x


def _feasible_power_seed(instance: SliptInstance, tau_dl: np.ndarray) -> np.ndarray:
    k = instance.user_count
    a2 = instance.peak_amplitude_ratio**2
    s_min, s_max = instance.dc_energy_bounds()
    s = min(s_max, max(s_min, instance.max_led_power * a2 / (1.0 + a2)))
    b = np.full(k, s / k)
    pt = np.full(k, (instance.max_led_power - s) / k)
    return np.concatenate([b, pt])


def _dl_gradient(instance: SliptInstance, x: np.ndarray) -> np.ndarray:
    k = instance.user_count
    tau = x[0:k]
    pt = x[3 * k : 4 * k]
    gamma = instance.dl_snr_per_watt()
    grad = np.zeros_like(x)
    t = np.maximum(tau, 1e-12)
    z = 1.0 + gamma * pt / t
    grad[0:k] = np.log2(z) + (1.0 / z - 1.0) / LN2
    grad[3 * k : 4 * k] = gamma * t / ((t + gamma * pt) * LN2)
    return grad


def _ul_gradient(instance: SliptInstance, x: np.ndarray) -> np.ndarray:
    k = instance.user_count
    tau = x[k : 2 * k]
    b = x[2 * k : 3 * k]
    gamma = instance.ul_snr_per_joule()
    harvested = np.maximum(float(np.sum(b)) - b, 0.0)
    grad = np.zeros_like(x)
    t = np.maximum(tau, 1e-12)
    z = 1.0 + gamma * harvested / t
    grad[k : 2 * k] = np.log2(z) + (1.0 / z - 1.0) / LN2
    marginals = gamma * t / ((t + gamma * harvested) * LN2)
    grad[2 * k : 3 * k] = float(np.sum(marginals)) - marginals
    return grad


def _dl_value(instance: SliptInstance, x: np.ndarray) -> float:
    return dl_sum_rate(instance, _unpack(x, instance.user_count))


def _ul_value(instance: SliptInstance, x: np.ndarray) -> float:
    v = _unpack(x, instance.user_count)
    return ul_sum_rate(instance, v, dc_energy_total=float(np.sum(v.dc_energy)))


def _pgd_maximize(instance, value_fn, grad_fn, x0, iterations=800, step0=None):
    """Projected gradient ascent with backtracking on the projected step."""
    scale = max(1.0, instance.max_led_power)
    if step0 is None:
        step0 = 0.25 * scale
    x = project_feasible(instance, x0.copy(), max_sweeps=300)
    best_x = x.copy()
    best_val = value_fn(instance, x)
    stall = 0
    for _ in range(iterations):
        grad = grad_fn(instance, x)
        g_norm = float(np.max(np.abs(grad)))
        if g_norm == 0.0:
            break
        base = value_fn(instance, x)
        step = step0 / g_norm
        accepted = False
        for _ in range(25):
            xn = project_feasible(instance, x + step * grad, max_sweeps=60)
            val = value_fn(instance, xn)
            if val > base + 1e-14:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x = xn
        if val > best_val + 1e-12:
            best_val = val
            best_x = x.copy()
            stall = 0
        else:
            stall += 1
            if stall >= 8:
                break
    best_x = project_feasible(instance, best_x, max_sweeps=400)
    return best_x, value_fn(instance, best_x)


# ---------------------------------------------------------------------------
# dual recovery


def _recover_duals(instance: SliptInstance, v: SubstitutedVars, objective: str):
    """Multipliers at the returned point by bounded least squares.

    Builds the stationarity system of the active constraints in the variable
    blocks the objective touches and solves for the multipliers (inequality
    ones bounded below by zero). Returns (duals dict, normalized residual).
    """
    k = instance.user_count
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    req = instance.harvest_requirements()
    tau_dl, tau_ul = v.dl_shares, v.ul_shares
    b, pt = v.dc_energy, v.data_energy
    x = _pack(v)

    # slots with a vanishing time share sit at the perspective function's
    # nondifferentiable origin; their optimality is directional, so their
    # stationarity rows are excluded
    if objective == "dl":
        grad = _dl_gradient(instance, x)
        live = tau_dl > 1e-9
        rows = [("tau_dl", i) for i in range(k) if live[i]]
        rows += [("b", i) for i in range(k) if live[i]]
        rows += [("pt", i) for i in range(k) if live[i]]
    else:
        grad = _ul_gradient(instance, x)
        live = tau_ul > 1e-9
        rows = [("tau_ul", i) for i in range(k) if live[i]]
        rows += [("b", i) for i in range(k)]

    # columns: equality duals (free) then inequality duals (>= 0)
    cols = []
    if objective == "dl":
        cols.append(("time_dl", None, False))
    else:
        cols.append(("time_ul", None, False))
    cols.append(("power", None, False))
    for i in range(k):
        cols.append(("data_cap", i, True))
    for i in range(k):
        cols.append(("dc_cap", i, True))
    for i in range(k):
        cols.append(("harvest", i, True))
    for name, arr in (("tau_dl", tau_dl), ("tau_ul", tau_ul), ("b", b), ("pt", pt)):
        for i in range(k):
            cols.append((f"nn_{name}", i, True))

    total_b = float(np.sum(b))
    slack = {
        "data_cap": b - a2 * pt,
        "dc_cap": i2 * tau_dl - b,
        "harvest": (total_b - b) - req,
        "nn_tau_dl": tau_dl,
        "nn_tau_ul": tau_ul,
        "nn_b": b,
        "nn_pt": pt,
    }
    scale = max(1.0, float(np.max(np.abs(grad))))

    def active(name, i):
        if name in ("time_dl", "time_ul", "power"):
            return True
        s = slack[name][i]
        ref = max(1.0, instance.max_led_power)
        return s <= _ACTIVE_TOL * ref

    live_cols = [(n, i, pos) for (n, i, pos) in cols if active(n, i)]
    a_mat = np.zeros((len(rows), len(live_cols)))
    rhs = np.zeros(len(rows))
    for r, (blk, i) in enumerate(rows):
        if blk == "tau_dl":
            rhs[r] = grad[i]
        elif blk == "tau_ul":
            rhs[r] = grad[k + i]
        elif blk == "b":
            rhs[r] = grad[2 * k + i]
        else:
            rhs[r] = grad[3 * k + i]
        for c, (name, j, _pos) in enumerate(live_cols):
            val = 0.0
            if name == "time_dl" and blk == "tau_dl":
                val = 1.0
            elif name == "time_ul" and blk == "tau_ul":
                val = 1.0
            elif name == "power" and blk in ("b", "pt"):
                val = 1.0
            elif name == "data_cap" and j is not None:
                if blk == "pt" and j == i:
                    val = a2
                elif blk == "b" and j == i:
                    val = -1.0
            elif name == "dc_cap" and j is not None:
                if blk == "b" and j == i:
                    val = 1.0
                elif blk == "tau_dl" and j == i:
                    val = -i2
            elif name == "harvest" and j is not None:
                if blk == "b" and j != i:
                    val = -1.0
            elif name.startswith("nn_") and j == i and name == f"nn_{blk}":
                val = -1.0
            a_mat[r, c] = val
    lower = np.array([0.0 if pos else -np.inf for (_n, _i, pos) in live_cols])
    upper = np.full(len(live_cols), np.inf)
    if len(live_cols):
        # trf_linear emits spurious invalid-multiply warnings on systems with
        # mixed free/bounded columns; the residual below vouches for the result
        with np.errstate(invalid="ignore", over="ignore"):
            res = lsq_linear(a_mat, rhs, bounds=(lower, upper))
        residual = float(np.max(np.abs(a_mat @ res.x - rhs))) / scale
        values = res.x
    else:
        residual = float(np.max(np.abs(rhs))) / scale
        values = np.array([])
    duals = {"data_cap": np.zeros(k), "dc_cap": np.zeros(k), "harvest": np.zeros(k)}
    for (name, i, _pos), val in zip(live_cols, values):
        if name in ("time_dl", "time_ul", "power"):
            duals[name] = float(val)
        elif name in duals and i is not None:
            duals[name][i] = float(val)
    duals.setdefault("power", 0.0)
    return duals, residual


# ---------------------------------------------------------------------------
# solvers


def _complete_ul_shares(instance: SliptInstance, b: np.ndarray) -> np.ndarray:
    y = instance.ul_snr_per_joule() * np.maximum(float(np.sum(b)) - b, 0.0)
    return _bounded_simplex_allocation(y)


def _recovered(v: SubstitutedVars):
    tau = v.dl_shares
    with np.errstate(divide="ignore", invalid="ignore"):
        offsets = np.where(tau > 1e-12, np.sqrt(np.maximum(v.dc_energy, 0.0) / np.maximum(tau, 1e-300)), 0.0)
        powers = np.where(tau > 1e-12, v.data_energy / np.maximum(tau, 1e-300), 0.0)
    return offsets, powers


def _build_solution(instance, v, objective, backend, iterations, converged, warnings=()):
    offsets, powers = _recovered(v)
    duals, residual = _recover_duals(instance, v, "dl" if objective == "dl" else "ul")
    dl = dl_sum_rate(instance, v)
    ul = ul_sum_rate(instance, v, dc_energy_total=float(np.sum(v.dc_energy)))
    return SliptSolution(
        vars=v,
        slot_dc_offsets=offsets,
        slot_led_power=powers,
        dl_sum_rate=dl,
        ul_sum_rate=ul,
        duals=duals,
        kkt_residual=residual,
        converged=converged,
        backend=backend,
        iterations=iterations,
        objective=objective,
        warnings=tuple(warnings),
    )


def _initial_point(instance: SliptInstance) -> SubstitutedVars:
    k = instance.user_count
    tau = np.full(k, 1.0 / k)
    power = _feasible_power_seed(instance, tau)
    x = np.concatenate([tau, tau, power])
    return _unpack(project_feasible(instance, x), k)


def _try_face_jump(instance, tau, pt, b, val):
    """Trial closure of decaying time shares against an exact face re-solve.

    The alternating iteration approaches a low-dimensional face of the share
    simplex geometrically, which is slow to traverse step by step; near-tied
    channel gains make the crawl arbitrarily long while the destination stays
    a vertex. Closing small shares outright (and, separately, each live share
    on its own) and re-running the exact power step prices the face directly.
    A jump is kept only on strict improvement of the exactly evaluated value,
    so ties -- symmetric instances -- keep the symmetric iterate and a wrong
    closure costs one trial evaluation and nothing else.
    """
    gamma = instance.dl_snr_per_watt()
    scale = float(np.max(tau))
    best = (tau, pt, b, val)
    live = tau > 0.0
    seen = {tuple(live)}
    candidates = [tau >= frac * scale for frac in (0.3, 0.1, 0.03, 0.01, 0.003, 0.001)]
    if int(np.sum(live)) > 1:
        for i in np.flatnonzero(live):
            drop = live.copy()
            drop[i] = False
            candidates.append(drop)
    for keep in candidates:
        key = tuple(keep)
        if key in seen or not keep.any():
            continue
        seen.add(key)
        tau_c = np.where(keep, tau, 0.0)
        tau_c = tau_c / float(np.sum(tau_c))
        try:
            pt_c, b_c = _dl_power_step(instance, tau_c)
        except InfeasibleError:
            continue
        val_c = float(np.sum(rate_term(tau_c, gamma * pt_c)))
        if val_c > best[3] + 1e-12 * max(1.0, abs(best[3])):
            best = (tau_c, pt_c, b_c, val_c)
    return best


def solve_dl_max(
    instance: SliptInstance,
    backend: str = "exact",
    max_outer: int = 200,
    tol: float = 1e-11,
    cross_check: bool = True,
    fallback_iterations: int = 600,
    penalty_weight: float = 1e-3,
    dual_step: float = 0.1,
) -> SliptSolution:
    """Maximize the downlink sum rate over the substituted polytope.

    Alternates an exact time-share step (dual bisection with the slot-cap
    lower bounds), an exact power-split step (capped water filling over a
    concave budget section), and the equalized DC completion, then validates
    the result against the projected-gradient fallback. The uplink shares of
    the returned point are the best response to the downlink optimum, which
    pins the corner of the trade-off region deterministically.
    """
    check_feasible(instance)
    warnings = []
    if backend == "dual":
        v0, iters = _dual_gradient_backend(
            instance, "dl", max_outer, penalty_weight, dual_step
        )
        v = v0
        converged = True
    else:
        v = _initial_point(instance)
        gamma = instance.dl_snr_per_watt()
        i2 = instance.max_dc_offset**2
        p_max = instance.max_led_power
        tau = v.dl_shares
        pt, b = v.data_energy, v.dc_energy
        iters = 0
        converged = False
        last_val = -np.inf
        flat_count = 0
        delta = np.inf
        for iters in range(1, max_outer + 1):
            # coarse budget search while the iterate still moves, exact near
            # the fixed point; winner-take-all optima otherwise crawl
            w_tol = (1e-7 if delta > 1e-6 else 1e-12) * max(p_max, 1.0)
            pt_new, b_new = _dl_power_step(instance, tau, w_tol=w_tol)
            tau_new = _bounded_simplex_allocation(gamma * pt_new, lower=b_new / i2)
            delta = max(
                float(np.max(np.abs(tau_new - tau))),
                float(np.max(np.abs(pt_new - pt))),
                float(np.max(np.abs(b_new - b))),
            )
            tau, pt, b = tau_new, pt_new, b_new
            val = float(np.sum(rate_term(tau, gamma * pt)))
            if iters % 8 == 0:
                # shares migrating toward a face do so geometrically; try
                # closing them outright and keep the jump only if the exact
                # re-solve on the face is strictly better
                tau, pt, b, val = _try_face_jump(instance, tau, pt, b, val)
            flat_count = flat_count + 1 if val - last_val < 1e-12 * max(1.0, abs(val)) else 0
            last_val = val
            if delta < tol or flat_count >= 3:
                converged = True
                break
        # snap crawling shares to the vertex they approach, then rebuild the
        # power split exactly at the snapped shares
        if np.any((tau > 0.0) & (tau < 1e-9)):
            tau = np.where(tau < 1e-9, 0.0, tau)
            tau = tau / float(np.sum(tau))
            pt, b = _dl_power_step(instance, tau)
        v = SubstitutedVars(
            dl_shares=tau,
            ul_shares=_complete_ul_shares(instance, b),
            dc_energy=b,
            data_energy=pt,
        )
    primary_val = dl_sum_rate(instance, v)
    if cross_check:
        x_fb, fb_val = _pgd_maximize(
            instance, _dl_value, _dl_gradient, _pack(v), iterations=fallback_iterations
        )
        if fb_val > primary_val * (1.0 + 1e-3) + 1e-12:
            # re-evaluate after a full projection; the raw iterate can sit
            # slightly outside the polytope and inflate the comparison
            vb = _unpack(project_feasible(instance, x_fb), instance.user_count)
            cand = SubstitutedVars(
                dl_shares=vb.dl_shares,
                ul_shares=_complete_ul_shares(instance, vb.dc_energy),
                dc_energy=vb.dc_energy,
                data_energy=vb.data_energy,
            )
            if dl_sum_rate(instance, cand) > primary_val * (1.0 + 1e-3) + 1e-12:
                v = cand
                warnings.append("fallback_override")
    return _build_solution(instance, v, "dl", backend, iters, converged, warnings)


def solve_ul_max(
    instance: SliptInstance,
    backend: str = "exact",
    max_outer: int = 200,
    tol: float = 1e-11,
    cross_check: bool = True,
    fallback_iterations: int = 600,
    penalty_weight: float = 1e-3,
    dual_step: float = 0.1,
) -> SliptSolution:
    """Maximize the uplink sum rate over the substituted polytope.

    The uplink rate grows with every slot's DC energy (each joule feeds every
    other user), so the total DC energy sits at its cap. Under the optimal
    proportional share completion the value collapses to
    log2(1 + sum(gamma_ul * (S - b))), linear in the split b, so the greedy
    fill of the smallest-gamma slots is the exact optimum of the reduced
    problem; it seeds the alternation between the exact share step and the
    equalized marginal-loss step, which then verifies the vertex instead of
    crawling toward it. Every returned solution is validated against the
    projected-gradient fallback; on disagreement above 1e-3 relative the
    fallback point is returned and a warning recorded. Downlink shares and
    information power of the returned point are the best response given the
    uplink optimum.
    """
    check_feasible(instance)
    warnings = []
    k = instance.user_count
    s_min, s_max = instance.dc_energy_bounds()
    total_dc = s_max
    if backend == "dual":
        v0, iters = _dual_gradient_backend(
            instance, "ul", max_outer, penalty_weight, dual_step
        )
        v = v0
        converged = True
    else:
        req = instance.harvest_requirements()
        caps = np.maximum(total_dc - req, 0.0)
        gamma = instance.ul_snr_per_joule()
        # greedy fill by ascending gamma: each joule parked in slot k costs
        # gamma_k inside the reduced log, so the cheapest slots absorb the
        # budget first (ties resolved by index for determinism)
        b = np.zeros(k)
        remaining = total_dc
        for j in np.argsort(gamma, kind="stable"):
            b[j] = min(float(caps[j]), remaining)
            remaining -= b[j]
        if remaining > 1e-9 * max(total_dc, 1.0):
            raise InfeasibleError("harvest floor leaves no room for the DC budget")
        tau_ul = _complete_ul_shares(instance, b)
        iters = 0
        converged = False
        last_val = -np.inf
        flat_count = 0
        for iters in range(1, max_outer + 1):
            b_new = _ul_dc_step(instance, tau_ul, total_dc)
            tau_new = _complete_ul_shares(instance, b_new)
            delta = max(
                float(np.max(np.abs(tau_new - tau_ul))),
                float(np.max(np.abs(b_new - b))),
            )
            tau_ul, b = tau_new, b_new
            val = float(np.sum(rate_term(tau_ul, gamma * np.maximum(total_dc - b, 0.0))))
            flat_count = flat_count + 1 if val - last_val < 1e-12 * max(1.0, abs(val)) else 0
            last_val = val
            if delta < tol or flat_count >= 3:
                converged = True
                break
        v = _complete_dl_blocks(instance, tau_ul, b)
    primary_val = ul_sum_rate(instance, v, dc_energy_total=float(np.sum(v.dc_energy)))
    if cross_check:
        x_fb, fb_val = _pgd_maximize(
            instance, _ul_value, _ul_gradient, _pack(v), iterations=fallback_iterations
        )
        if fb_val > primary_val * (1.0 + 1e-3) + 1e-12:
            # re-evaluate after a full projection; the raw iterate can sit
            # slightly outside the polytope and inflate the comparison
            vb = _unpack(project_feasible(instance, x_fb), k)
            cand = _complete_dl_blocks(instance, vb.ul_shares, vb.dc_energy)
            cand_val = ul_sum_rate(instance, cand, dc_energy_total=float(np.sum(cand.dc_energy)))
            if cand_val > primary_val * (1.0 + 1e-3) + 1e-12:
                v = cand
                warnings.append("fallback_override")
    return _build_solution(instance, v, "ul", backend, iters, converged, warnings)


def _complete_dl_blocks(instance: SliptInstance, tau_ul, b) -> SubstitutedVars:
    """Best-response downlink blocks for a fixed uplink point."""
    total = float(np.sum(b))
    k = instance.user_count
    if total <= 0.0:
        tau_dl = np.full(k, 1.0 / k)
    else:
        tau_dl = b / total
    left = instance.max_led_power - total
    caps = b / instance.peak_amplitude_ratio**2
    pt = _water_fill(tau_dl, instance.dl_snr_per_watt(), left, caps)
    return SubstitutedVars(dl_shares=tau_dl, ul_shares=tau_ul, dc_energy=b, data_energy=pt)


def _dual_gradient_backend(instance, objective, max_iter, penalty_weight, dual_step):
    """As-printed dual gradient iteration (clamped closed forms, 1/sqrt(t) steps).

    Kept as a faithful secondary backend; the exact path supersedes it and the
    cross-check safeguards its output. The uplink DC closed form transcribes
    the published update including its appended squared-offset term.
    """
    k = instance.user_count
    a2 = instance.peak_amplitude_ratio**2
    i2 = instance.max_dc_offset**2
    p_max = instance.max_led_power
    eta = instance.harvest_efficiency
    g2 = instance.vlc_gain**2
    gamma_dl = instance.dl_snr_per_watt()
    gamma_ul = instance.ul_snr_per_joule()
    zeta = 1.0
    psi = 1.0
    nu = np.zeros(k)
    omega = np.zeros(k)
    mu = np.zeros(k)
    lam = 1.0
    tau_dl = np.full(k, 1.0 / k)
    tau_ul = np.full(k, 1.0 / k)
    power = _feasible_power_seed(instance, tau_dl)
    b, pt = power[:k].copy(), power[k:].copy()
    best = None
    prev_val = None
    for t in range(1, max_iter + 1):
        beta = dual_step / math.sqrt(t)
        if objective == "dl":
            args = np.maximum(zeta - omega * i2, 0.0)
            tau_dl = np.array(
                [
                    clamp(gamma_dl[i] * pt[i] / max(f_inverse(args[i]) - 1.0, 1e-12), 0.0, 1.0)
                    if args[i] > 0
                    else 1.0
                    for i in range(k)
                ]
            )
            denom = omega - psi - nu / a2 - (np.sum(eta * mu * g2) - eta * mu * g2)
            b = np.where(denom > 0, clamp(penalty_weight / np.maximum(denom, 1e-300) - 1.0, 0.0, p_max), p_max)
            level = np.maximum(psi + nu, 1e-12)
            pt = clamp(tau_dl * (1.0 / (level * LN2) - 1.0 / np.maximum(gamma_dl, 1e-300)), 0.0, p_max)
            zeta = max(0.0, zeta + beta * (float(np.sum(tau_dl)) - 1.0))
        else:
            total = float(np.sum(b))
            y = gamma_ul * np.maximum(total - b, 0.0)
            z = f_inverse(lam) if lam > 0 else 1.0
            tau_ul = clamp(y / max(z - 1.0, 1e-12), 0.0, 1.0)
            denom = omega - psi - nu / a2 - (np.sum(eta * mu * g2) - eta * mu * g2)
            with np.errstate(divide="ignore"):
                raw = tau_ul * (1.0 / np.maximum(gamma_ul, 1e-300) + 1.0 / np.where(denom != 0, denom, np.inf))
            b = clamp(raw, 0.0, p_max) + instance.dc_offset**2
            lam = max(0.0, lam + beta * (float(np.sum(tau_ul)) - 1.0))
        psi = psi + beta * (float(np.sum(pt + b)) - p_max)
        nu = np.maximum(0.0, nu - beta * (b / a2 - pt))
        omega = np.maximum(0.0, omega - beta * (i2 * tau_dl - b))
        harvest = eta * g2 * (np.sum(b) - b)
        mu = np.maximum(0.0, mu - beta * (harvest - instance.min_harvest_per_user))
        x = np.concatenate([tau_dl, tau_ul, b, pt])
        # cheap projection per iterate; only candidates that actually reach
        # the polytope may claim the incumbent, so stalled projections cannot
        # report an infeasible (inflated) value as the best point
        x = project_feasible(instance, x, max_sweeps=80)
        v = _unpack(x, k)
        if max(np.max(np.atleast_1d(w)) for w in v.constraint_violations(instance).values()) > 1e-6:
            continue
        val = dl_sum_rate(instance, v) if objective == "dl" else ul_sum_rate(
            instance, v, dc_energy_total=float(np.sum(v.dc_energy))
        )
        if best is None or val > best[0]:
            best = (val, v, t)
        if prev_val is not None and abs(val - prev_val) <= 1e-6 * max(1.0, abs(prev_val)):
            break
        prev_val = val
    if best is None:
        x = project_feasible(instance, np.concatenate([tau_dl, tau_ul, b, pt]))
        return _unpack(x, k), max_iter
    return best[1], best[2]


# ---------------------------------------------------------------------------
# trade-off front


def utopia_points(instance: SliptInstance, corners=None):
    """Per-objective minima (G1*, G2*) = (-max DL rate, -max UL rate)."""
    if corners is None:
        corners = (solve_dl_max(instance), solve_ul_max(instance))
    dl_corner, ul_corner = corners
    return (-dl_corner.dl_sum_rate, -ul_corner.ul_sum_rate)


def solve_moop_point(
    instance: SliptInstance,
    weights,
    corners=None,
    inner_iterations: int = 500,
    bisection_steps: int = 40,
) -> ParetoPoint:
    """One point of the weighted min-max trade-off.

    The smallest epigraph level t with w_i (G_i - G_i*) <= t equals the
    negated maximum of min_i w_i (G_i - G_i*), a concave max-min over the
    feasible polytope, maximized here by annealed softmin smoothing with
    monotone projected ascent from the corner midpoint and from both corner
    iterates. inner_iterations caps the line-search evaluations per smoothing
    level; bisection_steps caps the number of levels (the temperature decays
    geometrically to a floor, so the cap rarely binds). Zero weights drop
    their objective, which degenerates to the corresponding single-objective
    corner.
    """
    w1, w2 = float(weights[0]), float(weights[1])
    if w1 < 0 or w2 < 0 or w1 + w2 <= 0:
        raise ValueError("weights must be nonnegative and not both zero")
    if corners is None:
        corners = (solve_dl_max(instance), solve_ul_max(instance))
    dl_corner, ul_corner = corners
    if w2 == 0.0:
        return ParetoPoint(
            weights=(w1, w2),
            dl_sum_rate=dl_corner.dl_sum_rate,
            ul_sum_rate=dl_corner.ul_sum_rate,
            epigraph=0.0,
            converged=dl_corner.converged,
            vars=dl_corner.vars,
        )
    if w1 == 0.0:
        return ParetoPoint(
            weights=(w1, w2),
            dl_sum_rate=ul_corner.dl_sum_rate,
            ul_sum_rate=ul_corner.ul_sum_rate,
            epigraph=0.0,
            converged=ul_corner.converged,
            vars=ul_corner.vars,
        )
    k = instance.user_count
    dl_star = dl_corner.dl_sum_rate
    ul_star = ul_corner.ul_sum_rate

    def weighted_gaps(x):
        v = _unpack(x, k)
        s1 = w1 * (dl_sum_rate(instance, v) - dl_star)
        s2 = w2 * (ul_sum_rate(instance, v, dc_energy_total=float(np.sum(v.dc_energy))) - ul_star)
        return s1, s2

    gap_scale = max(w1 * dl_star, w2 * ul_star, 1e-9)

    def soft_min(sa, sb, mu):
        m = min(sa, sb)
        return m - mu * math.log(math.exp(-(sa - m) / mu) + math.exp(-(sb - m) / mu))

    def ascend(x_start, iterations):
        # maximizes min(s1, s2), a concave max-min over a polytope: both
        # rates are perspective-concave in the substituted variables and all
        # constraints are linear. The kink is smoothed with a softmin whose
        # temperature anneals geometrically; each level runs monotone
        # projected ascent with a backtracking line search, because a free
        # supergradient step can overshoot and the projection then smears
        # the overflow across users and drags the iterate off the face
        # where the optimum lives
        x = x_start.copy()
        s1, s2 = weighted_gaps(x)
        best_x, best_min = x.copy(), min(s1, s2)
        scale = max(1.0, instance.max_led_power)
        mu = 0.1
        levels = 0
        stalled = True
        while levels < bisection_steps and mu >= 1e-6:
            mu_eff = mu * gap_scale
            step = 0.3 * scale
            value = soft_min(s1, s2, mu_eff)
            stalled = False
            evals = 0
            x_prev = None
            while evals < iterations:
                d = clamp((s1 - s2) / mu_eff, -700.0, 700.0)
                a1 = 1.0 / (1.0 + math.exp(d))
                grad = a1 * w1 * _dl_gradient(instance, x) + (1.0 - a1) * w2 * _ul_gradient(instance, x)
                g_norm = float(np.max(np.abs(grad)))
                if g_norm == 0.0:
                    stalled = True
                    break
                x_before = x
                moved = False
                while evals < iterations:
                    x_try = project_feasible(instance, x + (step / g_norm) * grad, max_sweeps=40)
                    evals += 1
                    s1t, s2t = weighted_gaps(x_try)
                    # improvements far below the objective scale only churn
                    # the budget; treating them as stalls ends the level
                    if soft_min(s1t, s2t, mu_eff) > value + 1e-12 * gap_scale:
                        x, s1, s2 = x_try, s1t, s2t
                        value = soft_min(s1, s2, mu_eff)
                        if min(s1, s2) > best_min:
                            best_min = min(s1, s2)
                            best_x = x.copy()
                        moved = True
                        step = min(step * 1.5, 0.3 * scale)
                        break
                    step *= 0.5
                    # steps this small move the epigraph orders of magnitude
                    # below the solve tolerance; treat the level as done
                    if step < 1e-8 * scale:
                        break
                if not moved:
                    stalled = True
                    break
                # projected gradient steps zigzag along the equalization
                # ridge; extrapolating through the iterate two moves back
                # walks the ridge itself and collapses the crawl
                if x_prev is not None and evals < iterations:
                    ridge = x - x_prev
                    for beta in (4.0, 1.0):
                        x_try = project_feasible(instance, x + beta * ridge, max_sweeps=40)
                        evals += 1
                        s1t, s2t = weighted_gaps(x_try)
                        if soft_min(s1t, s2t, mu_eff) > value + 1e-12 * gap_scale:
                            x, s1, s2 = x_try, s1t, s2t
                            value = soft_min(s1, s2, mu_eff)
                            if min(s1, s2) > best_min:
                                best_min = min(s1, s2)
                                best_x = x.copy()
                            break
                        if evals >= iterations:
                            break
                x_prev = x_before
            mu *= 0.25
            levels += 1
        return best_min, best_x, stalled

    x_warm = 0.5 * (_pack(dl_corner.vars) + _pack(ul_corner.vars))
    x_warm = project_feasible(instance, x_warm, max_sweeps=300)
    # corner iterates sit on the faces where single-objective optima live;
    # ascending from them as well keeps a stalled interior chain from
    # deciding the point
    best_min, x_best, stalled = ascend(x_warm, inner_iterations)
    for x_alt in (_pack(dl_corner.vars), _pack(ul_corner.vars)):
        alt_min, x_alt_best, alt_stalled = ascend(x_alt, inner_iterations)
        if alt_min > best_min:
            best_min, x_best, stalled = alt_min, x_alt_best, alt_stalled
    x_final = project_feasible(instance, x_best, max_sweeps=400)
    v = _unpack(x_final, k)
    dl_val = dl_sum_rate(instance, v)
    ul_val = ul_sum_rate(instance, v, dc_energy_total=float(np.sum(v.dc_energy)))
    achieved = max(w1 * (dl_star - dl_val), w2 * (ul_star - ul_val))
    return ParetoPoint(
        weights=(w1, w2),
        dl_sum_rate=dl_val,
        ul_sum_rate=ul_val,
        epigraph=achieved,
        converged=stalled,
        vars=v,
    )


def pareto_front(instance: SliptInstance, n_points: int = 11, **kwargs):
    """Sampled trade-off front over a uniform weight grid.

    Returns mutually nondominated points sorted by downlink rate; the two
    corner weights delegate to the single-objective solvers exactly.
    """
    if n_points < 2:
        raise ValueError("a front needs at least the two corner points")
    corners = (solve_dl_max(instance), solve_ul_max(instance))
    points = []
    for w1 in np.linspace(0.0, 1.0, n_points):
        points.append(
            solve_moop_point(instance, (float(w1), float(1.0 - w1)), corners=corners, **kwargs)
        )
    keep = []
    for p in points:
        dominated = any(
            q is not p
            and q.dl_sum_rate >= p.dl_sum_rate
            and q.ul_sum_rate >= p.ul_sum_rate
            and (q.dl_sum_rate > p.dl_sum_rate or q.ul_sum_rate > p.ul_sum_rate)
            for q in points
        )
        if not dominated:
            keep.append(p)
    return sorted(keep, key=lambda p: p.dl_sum_rate)


def enforce_global_offset(instance: SliptInstance, solution: SliptSolution) -> SliptSolution:
    """Project a solution onto the common-offset coupling b_k = a^2 tau_dl_k.

    The common squared offset preserves the solution's total DC energy, so
    the power budget stays exact; information energies are re-capped and the
    rates recomputed. Recovered slot offsets of the result are all equal.
    """
    v = solution.vars
    total = float(np.sum(v.dc_energy))
    b = total * v.dl_shares
    caps = b / instance.peak_amplitude_ratio**2
    pt = np.minimum(v.data_energy, caps)
    deficit = instance.max_led_power - total - float(np.sum(pt))
    if deficit > 1e-12:
        room = caps - pt
        n = int(np.count_nonzero(room > 0))
        if n:
            pt = np.minimum(pt + np.where(room > 0, deficit / n, 0.0), caps)
    v2 = SubstitutedVars(dl_shares=v.dl_shares, ul_shares=v.ul_shares, dc_energy=b, data_energy=pt)
    offsets, powers = _recovered(v2)
    duals, residual = _recover_duals(instance, v2, "dl" if solution.objective == "dl" else "ul")
    return replace(
        solution,
        vars=v2,
        slot_dc_offsets=offsets,
        slot_led_power=powers,
        dl_sum_rate=dl_sum_rate(instance, v2),
        ul_sum_rate=ul_sum_rate(instance, v2, dc_energy_total=total),
        duals=duals,
        kkt_residual=residual,
        warnings=solution.warnings + ("global_offset_mode",),
    )
