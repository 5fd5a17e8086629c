"""Stable special-function kernels: integer-order Bessel J, Poissonian
Franck-Condon weights, and the truncation bounds every series in the
library must obtain from here."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SERIES_X_MAX = 0.5    # below this, the power series is cheaper and exact
_RESCALE = 1e-250      # overflow guard for the downward recurrence


@dataclass(frozen=True)
class SeriesCutoffs:
    """Truncation orders for one (vibrational, Bessel) sum pair."""

    n_cut: int
    m_cut: int

    def __post_init__(self) -> None:
        if self.n_cut < 0 or self.m_cut < 0:
            raise ValueError("cutoffs must be >= 0")


def _series_jm(m: int, x: float) -> float:
    # Ascending power series; reliable for small |x| where no cancellation
    # builds up. m >= 0, x >= 0. Subnormal x can round x/2 to zero, so
    # the zero branch tests the halved argument.
    if x / 2.0 == 0.0:
        return 1.0 if m == 0 else 0.0
    log_lead = m * math.log(x / 2.0) - math.lgamma(m + 1)
    if log_lead < -745.0:
        return 0.0
    term = math.exp(log_lead)
    total = term
    u = (x / 2.0) ** 2
    k = 0
    while abs(term) > 1e-20 * max(1.0, abs(total)) and k < 60:
        k += 1
        term *= -u / (k * (m + k))
        total += term
    return total


def _miller_row(x: float, m_max: int) -> np.ndarray:
    # Downward recurrence from above the turning point, normalized with
    # J_0 + 2*sum J_{2k} = 1. Stable for every order; forward recurrence
    # would blow up for m > x.
    out = np.zeros(m_max + 1)
    start = max(m_max, int(x)) + 40
    start += int(3.0 * math.sqrt(start))
    if start % 2:
        start += 1
    jkp1 = 0.0
    jk = 1e-250
    norm = 2.0 * jk if start % 2 == 0 else 0.0
    for k in range(start, 0, -1):
        jkm1 = (2.0 * k / x) * jk - jkp1
        jkp1 = jk
        jk = jkm1
        kk = k - 1
        if kk <= m_max:
            out[kk] = jk
        if kk == 0:
            norm += jk
        elif kk % 2 == 0:
            norm += 2.0 * jk
        if abs(jk) > 1e250:
            jk *= _RESCALE
            jkp1 *= _RESCALE
            norm *= _RESCALE
            out[max(kk, 0):] *= _RESCALE
    out /= norm
    return out


def bessel_j_row(x: float, m_max: int) -> np.ndarray:
    """J_0(x) .. J_{m_max}(x) for x >= 0, as one array."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if x < 0:
        raise ValueError("bessel_j_row requires x >= 0; use bessel_j for signs")
    if x >= 1e6:
        raise ValueError(f"|x| must be < 1e6, got {x}")
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    if x < _SERIES_X_MAX:
        return np.array([_series_jm(m, x) for m in range(m_max + 1)])
    return _miller_row(x, m_max)


def bessel_j(m: int, x: float) -> float:
    """Bessel function of the first kind J_m(x), integer order.

    Negative orders and arguments via J_{-m}(x) = (-1)^m J_m(x) and
    J_m(-x) = (-1)^m J_m(x). Absolute accuracy 1e-12 or better for
    |x| < 1e6.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if abs(x) >= 1e6:
        raise ValueError(f"|x| must be < 1e6, got {x}")
    m = int(m)
    sign = 1.0
    if m < 0:
        m = -m
        if m % 2:
            sign = -sign
    if x < 0:
        x = -x
        if m % 2:
            sign = -sign
    if x < _SERIES_X_MAX:
        return sign * _series_jm(m, x)
    return sign * float(_miller_row(x, m)[m])


def fc_weight(n: int, lambda_: float) -> float:
    """Poissonian Franck-Condon weight s_n = exp(-lambda^2) lambda^(2n) / n!.

    Evaluated in log space so no intermediate overflows up to n = 1e4.
    """
    n = int(n)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    lambda_ = float(lambda_)
    if not math.isfinite(lambda_):
        raise ValueError(f"lambda_ must be finite, got {lambda_!r}")
    s = lambda_ * lambda_
    if s == 0.0:
        return 1.0 if n == 0 else 0.0
    log_w = -s + n * math.log(s) - math.lgamma(n + 1)
    if log_w < -745.0:
        return 0.0
    return math.exp(log_w)


def bessel_cutoff(x: float, eps: float) -> int:
    """Smallest M with sum_{|m|>M} J_m(x)^2 < eps.

    Uses the closure identity sum_m J_m(x)^2 = 1, so the tail is computed
    as 1 minus a cumulative sum; past |m| > |x| the tail decays faster
    than geometrically, which makes the scan terminate quickly.  The
    computed tail saturates at rounding noise near a few ulps of 1; eps
    values below that floor are treated as met once the noise floor is
    reached, since the true tail there is far smaller still.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    x = abs(float(x))
    if x == 0.0:
        return 0
    floor = 4.0 * np.finfo(float).eps
    k = int(x) + 24
    for _ in range(60):
        row = bessel_j_row(x, k)
        weights = row * row
        cum = np.cumsum(np.concatenate(([weights[0]], 2.0 * weights[1:])))
        tails = 1.0 - cum
        if tails[-1] < 0.01 * eps or tails[-1] <= floor:
            hits = np.nonzero((tails < eps) | (tails <= floor))[0]
            return int(hits[0])
        k += 24 + k // 2
    raise RuntimeError(f"bessel_cutoff did not converge for x={x}, eps={eps}")


def fc_cutoff(lambda_: float, eps: float) -> int:
    """Smallest N with the Poisson tail sum_{n>N} s_n < eps.

    The same rounding floor as bessel_cutoff applies when eps is below
    the resolution of 1 minus the running sum.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    s = float(lambda_) ** 2
    if s == 0.0:
        return 0
    floor = 4.0 * np.finfo(float).eps
    cum = 0.0
    w = math.exp(-s)
    for n in range(100000):
        cum += w
        tail = 1.0 - cum
        if tail < eps or tail <= floor:
            return n
        w *= s / (n + 1)
    raise RuntimeError(f"fc_cutoff did not converge for lambda={lambda_}, eps={eps}")
