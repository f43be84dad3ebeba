"""Scalar kernels shared by every allocation solver in this package.

The uplink and downlink problems all reduce to sums of perspective terms
tau * log2(1 + y / tau). Their stationarity condition is expressed through
the auxiliary function f(z) = log2(z) + (1/ln2)(1/z - 1), which is zero at
z = 1 and strictly increasing for z > 1, so time shares follow from its
inverse and a one dimensional dual search.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["clamp", "rate_term", "rate_term_slope", "f_aux", "f_inverse"]

LN2 = math.log(2.0)

# beyond this ratio log2(1 + y/tau) is computed in split form to dodge overflow
_HUGE_RATIO = 1e15


def clamp(value, lower, upper):
    """Clamp value (scalar or array) into [lower, upper]."""
    if np.any(np.asarray(lower) > np.asarray(upper)):
        raise ValueError("clamp: lower bound exceeds upper bound")
    return np.minimum(np.maximum(value, lower), upper)


def rate_term(tau, snr_numerator):
    """Perspective rate tau * log2(1 + y / tau), continuously extended to 0 at tau = 0.

    Both arguments may be scalars or arrays (broadcast together); they must be
    nonnegative. The extension at tau = 0 is the limit value 0 regardless of y.
    """
    tau_arr = np.asarray(tau, dtype=float)
    y_arr = np.asarray(snr_numerator, dtype=float)
    if np.any(tau_arr < 0.0) or np.any(y_arr < 0.0):
        raise ValueError("rate_term: negative argument")
    tau_b, y_b = np.broadcast_arrays(tau_arr, y_arr)
    out = np.zeros(tau_b.shape, dtype=float)
    pos = tau_b > 0.0
    if np.any(pos):
        t = tau_b[pos]
        y = y_b[pos]
        ratio = np.where(t > 0, y / t, 0.0)
        safe = ratio < _HUGE_RATIO
        val = np.empty_like(t)
        val[safe] = t[safe] * np.log1p(ratio[safe]) / LN2
        if np.any(~safe):
            # tau * (log2 y - log2 tau); the +1 inside the log is negligible here
            val[~safe] = t[~safe] * (np.log2(y[~safe]) - np.log2(t[~safe]))
        out[pos] = val
    if np.isscalar(tau) and np.isscalar(snr_numerator):
        return float(out)
    return out


def rate_term_slope(tau, snr_numerator):
    """d/dtau of rate_term, which equals f_aux(1 + y/tau) for tau > 0."""
    tau_arr = np.asarray(tau, dtype=float)
    y_arr = np.asarray(snr_numerator, dtype=float)
    if np.any(tau_arr <= 0.0):
        raise ValueError("rate_term_slope: tau must be positive")
    z = 1.0 + y_arr / tau_arr
    out = np.log2(z) + (1.0 / z - 1.0) / LN2
    if np.isscalar(tau) and np.isscalar(snr_numerator):
        return float(out)
    return out


def f_aux(z):
    """Auxiliary stationarity function f(z) = log2(z) + (1/ln2)(1/z - 1), z >= 1."""
    # scalar fast path: this sits in the inner loop of f_inverse, where the
    # array wrappers below cost an order of magnitude more than the math;
    # np.log1p (not math.log1p, which differs by an ulp on ~1% of inputs)
    # keeps the result bit-identical to the array path
    if type(z) is float or type(z) is int:
        if z < 1.0:
            raise ValueError("f_aux: argument below 1")
        u = z - 1.0
        return max((float(np.log1p(u)) - u / z) / LN2, 0.0)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 1.0):
        raise ValueError("f_aux: argument below 1")
    # written in u = z - 1 so every intermediate stays at the scale of the
    # small terms: the naive 1/z - 1 rounds at ulp(1), which near z = 1 is
    # orders above the function value itself; clamp the residual cancellation
    u = z_arr - 1.0
    out = np.maximum((np.log1p(u) - u / z_arr) / LN2, 0.0)
    if np.isscalar(z):
        return float(out)
    return out


def f_inverse(lam, abs_tol=0.0):
    """Inverse of f_aux on [1, inf): unique z >= 1 with f_aux(z) = lam.

    Bracketing bisection; the bracket grows geometrically before the bisection
    starts. lam must be nonnegative. f_inverse(0) = 1 exactly. The default
    tolerance of zero bisects to floating point resolution: f is quadratically
    flat at z = 1, so any slack in z costs two orders more in the relative
    error of the roundtrip f_aux(f_inverse(lam)) at small lam.
    """
    lam = float(lam)
    if lam < 0.0:
        raise ValueError("f_inverse: negative argument")
    if lam == 0.0:
        return 1.0
    lo, hi = 1.0, 2.0
    while f_aux(hi) < lam:
        lo = hi
        hi *= 2.0
        if not math.isfinite(hi):
            raise OverflowError("f_inverse: bracket exceeded float range")
    # width can start around 1e300, so the loop runs until absolute or
    # floating point resolution is reached, whichever comes first
    for _ in range(1200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f_aux(mid) < lam:
            lo = mid
        else:
            hi = mid
        if hi - lo <= abs_tol:
            break
    return 0.5 * (lo + hi)
