"""Uplink TDMA time allocation for users powered by harvested light energy.

Each user harvests DC light energy during the whole frame and spends it on
its RF uplink slot. With the LED DC power at its cap, the achievable uplink
sum rate over a unit frame is sum_k tau_k log2(1 + y_k / tau_k) with
y_k = eta g_k^2 |h_k|^2 p_max / sigma^2, maximized over the simplex
sum_k tau_k = 1. The problem is concave; the dual variable of the simplex
constraint is found by bisection (exact, parameter free) or, alternatively,
by a projected subgradient iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lightharvest.kernels import clamp, f_aux, f_inverse, rate_term

__all__ = [
    "WpcnInstance",
    "WpcnSolution",
    "ul_sum_rate",
    "solve_time_allocation",
    "equal_time_baseline",
    "brute_force_oracle",
]


@dataclass(frozen=True)
class WpcnInstance:
    """One uplink allocation problem.

    vlc_gain and rf_power_gain are per-user arrays; max_led_power bounds the
    squared DC offset and is assumed tight at the optimum, so it enters the
    rate coefficients directly.
    """

    vlc_gain: np.ndarray
    rf_power_gain: np.ndarray
    harvest_efficiency: float = 0.2
    max_led_power: float = 5.0
    rf_noise_power: float = 1e-9

    def __post_init__(self):
        g = np.asarray(self.vlc_gain, dtype=float)
        h2 = np.asarray(self.rf_power_gain, dtype=float)
        if g.ndim != 1 or g.shape != h2.shape or g.size == 0:
            raise ValueError("gains must be matching 1-D arrays with at least one user")
        if np.any(g < 0.0) or np.any(h2 < 0.0):
            raise ValueError("gains must be nonnegative")
        if not 0.0 < self.harvest_efficiency <= 1.0:
            raise ValueError("harvest efficiency must lie in (0, 1]")
        if self.max_led_power <= 0.0 or self.rf_noise_power <= 0.0:
            raise ValueError("powers must be positive")
        object.__setattr__(self, "vlc_gain", g)
        object.__setattr__(self, "rf_power_gain", h2)

    @property
    def user_count(self) -> int:
        return self.vlc_gain.size

    def snr_coefficients(self) -> np.ndarray:
        """Per-user y_k = eta g_k^2 |h_k|^2 p_max / sigma^2."""
        return (
            self.harvest_efficiency
            * self.vlc_gain**2
            * self.rf_power_gain
            * self.max_led_power
            / self.rf_noise_power
        )


@dataclass(frozen=True)
class WpcnSolution:
    time_shares: np.ndarray
    dual: float
    sum_rate: float
    backend: str
    iterations: int
    converged: bool
    degenerate: bool = False


def ul_sum_rate(instance: WpcnInstance, time_shares) -> float:
    """Uplink sum rate at the given shares; zero-share users contribute 0."""
    tau = np.asarray(time_shares, dtype=float)
    if tau.shape != (instance.user_count,):
        raise ValueError("share vector has wrong length")
    if np.any(tau < -1e-12) or tau.sum() > 1.0 + 1e-9:
        raise ValueError("shares must be nonnegative and sum to at most 1")
    tau = np.maximum(tau, 0.0)
    return float(np.sum(rate_term(tau, instance.snr_coefficients())))


def _shares_at_dual(y: np.ndarray, lam: float) -> np.ndarray:
    z = f_inverse(lam)
    if z <= 1.0:
        return np.where(y > 0.0, 1.0, 0.0)
    return clamp(y / (z - 1.0), 0.0, 1.0)


def _solve_bisection(y: np.ndarray, tol: float, max_iter: int):
    # sum of shares is nonincreasing in the dual; find the largest dual whose
    # share sum still reaches 1, then normalize away the residual
    lam_lo = 0.0
    lam_hi = f_aux(2.0 + float(np.sum(y)))
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        lam_mid = 0.5 * (lam_lo + lam_hi)
        total = float(np.sum(_shares_at_dual(y, lam_mid)))
        if total >= 1.0:
            lam_lo = lam_mid
        else:
            lam_hi = lam_mid
        if lam_hi - lam_lo <= tol * max(1.0, lam_hi):
            break
    lam = lam_lo if lam_lo > 0.0 else 0.5 * (lam_lo + lam_hi)
    tau = _shares_at_dual(y, lam)
    return tau, lam, iterations


def _solve_subgradient(y: np.ndarray, tol: float, max_iter: int, step0: float = 1.0):
    # dual update lam <- [lam - alpha_t (1 - sum tau)]+ with alpha_t = step0/sqrt(t).
    # The pinned unit step scale suits coefficients of order one; for very
    # small y the dual optimum is far below the first steps and the schedule
    # stalls, which the bisection backend does not suffer from.
    lam = 0.0
    best = None
    iterations = 0
    for t in range(1, max_iter + 1):
        iterations = t
        tau = _shares_at_dual(y, lam)
        gap = 1.0 - float(np.sum(tau))
        if best is None or abs(gap) < abs(best[2]):
            best = (tau, lam, gap)
        if abs(gap) < tol:
            break
        lam = max(0.0, lam - step0 / np.sqrt(t) * gap)
    tau, lam, gap = best
    return tau, lam, iterations, abs(gap) < tol


def solve_time_allocation(
    instance: WpcnInstance,
    backend: str = "bisection",
    tol: float = 1e-12,
    max_iter: int = 5000,
) -> WpcnSolution:
    """Optimal TDMA shares on the simplex.

    Shares satisfy tau_k = clamp(y_k / (f_inverse(dual) - 1), 0, 1) at the
    returned dual and sum to 1 (a final normalization removes the bisection
    residual; it perturbs the stationarity by the same vanishing amount).
    Users with y_k = 0 receive zero time. When every y_k is zero the problem
    is degenerate: shares default to the uniform split and the flag is set.
    """
    y = instance.snr_coefficients()
    k = instance.user_count
    if not np.any(y > 0.0):
        tau = np.full(k, 1.0 / k)
        return WpcnSolution(
            time_shares=tau,
            dual=0.0,
            sum_rate=0.0,
            backend=backend,
            iterations=0,
            converged=True,
            degenerate=True,
        )
    if backend == "bisection":
        tau, lam, iterations = _solve_bisection(y, tol, max_iter=200)
        converged = True
    elif backend == "subgradient":
        tau, lam, iterations, converged = _solve_subgradient(y, max(tol, 1e-6), max_iter)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    total = float(np.sum(tau))
    if total > 0.0:
        tau = tau / total
    return WpcnSolution(
        time_shares=tau,
        dual=float(lam),
        sum_rate=float(np.sum(rate_term(tau, y))),
        backend=backend,
        iterations=iterations,
        converged=converged,
    )


def equal_time_baseline(instance: WpcnInstance) -> WpcnSolution:
    """Uniform share baseline tau_k = 1/K."""
    k = instance.user_count
    tau = np.full(k, 1.0 / k)
    y = instance.snr_coefficients()
    return WpcnSolution(
        time_shares=tau,
        dual=float("nan"),
        sum_rate=float(np.sum(rate_term(tau, y))),
        backend="equal",
        iterations=0,
        converged=True,
        degenerate=not np.any(y > 0.0),
    )


def brute_force_oracle(instance: WpcnInstance, grid_step: float = 1e-3):
    """Simplex grid search for tests; refuses more than three users.

    Returns (best sum rate, best shares). The grid enumerates shares with the
    given step on each free coordinate and assigns the remainder to the last
    user, so every evaluated point lies exactly on the simplex.
    """
    k = instance.user_count
    if k > 3:
        raise ValueError("brute force oracle supports at most 3 users")
    if not 0.0 < grid_step <= 0.5:
        raise ValueError("grid step must lie in (0, 0.5]")
    y = instance.snr_coefficients()
    n = int(round(1.0 / grid_step))
    ticks = np.linspace(0.0, 1.0, n + 1)
    if k == 1:
        best_tau = np.array([1.0])
        return float(np.sum(rate_term(best_tau, y))), best_tau
    if k == 2:
        t1 = ticks
        t2 = 1.0 - t1
        rates = rate_term(t1, y[0]) + rate_term(t2, y[1])
        i = int(np.argmax(rates))
        best_tau = np.array([t1[i], t2[i]])
        return float(rates[i]), best_tau
    best_rate = -np.inf
    best_tau = None
    for a in ticks:
        t2 = ticks[ticks <= 1.0 - a + 1e-12]
        t3 = 1.0 - a - t2
        t3 = np.maximum(t3, 0.0)
        rates = rate_term(a, y[0]) + rate_term(t2, y[1]) + rate_term(t3, y[2])
        i = int(np.argmax(rates))
        if rates[i] > best_rate:
            best_rate = float(rates[i])
            best_tau = np.array([a, t2[i], t3[i]])
    return best_rate, best_tau
