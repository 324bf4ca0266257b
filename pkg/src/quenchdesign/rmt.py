"""Closed-form random-matrix predictions for the quench protocols.

GUE spectra here use the normalisation P(H) ~ exp(-(d/2) Tr H^2), whose
semicircle lives on [-2, 2]; times are in the matching units.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ParameterError

_QUADRATURE_CUTOFF = 30.0


def _j1_series(x: float) -> float:
    half = x / 2
    term = half
    terms = [term]
    m = 0
    while abs(term) > 1e-18 * max(1.0, abs(terms[0])):
        m += 1
        term *= -(half * half) / (m * (m + 1))
        terms.append(term)
    return math.fsum(terms)


def _j1_quadrature(x: float) -> float:
    # J1(x) = (1/2pi) int_0^{2pi} cos(tau - x sin tau) dtau; the integrand is
    # smooth and periodic, so the trapezoid rule converges exponentially
    n = 2 * int(math.ceil(x)) + 48
    tau = 2 * math.pi * np.arange(n) / n
    return math.fsum(np.cos(tau - x * np.sin(tau))) / n


def _j1_asymptotic(x: float) -> float:
    # Hankel expansion with mu = 4 nu^2 = 4, truncated at the smallest term
    mu = 4.0
    p_terms, q_terms = [1.0], []
    term, k = 1.0, 0
    while True:
        k += 1
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8 * x)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17:
            break
        term = nxt
        sign = -1 if (k // 2) % 2 else 1
        (q_terms if k % 2 else p_terms).append(sign * term)
    P, Q = math.fsum(p_terms), math.fsum(q_terms)
    chi = x - 0.75 * math.pi
    return math.sqrt(2 / (math.pi * x)) * (P * math.cos(chi) - Q * math.sin(chi))


def bessel_j1(x: float) -> float:
    """Bessel function of the first kind, order one."""
    x = float(x)
    if x < 0:
        return -bessel_j1(-x)
    if x <= 1.0:
        return _j1_series(x)
    if x <= _QUADRATURE_CUTOFF:
        return _j1_quadrature(x)
    return _j1_asymptotic(x)


def r1(t: float) -> float:
    """Disconnected GUE form-factor amplitude J1(2t)/t, with r1(0) = 1."""
    t = abs(float(t))
    if t < 1e-8:
        return 1.0 - t * t / 2
    return bessel_j1(2 * t) / t


def sff_model(t: float, d: int) -> float:
    """Smoothed GUE form factor: d^2 r1(t)^2 plus a linear ramp saturating at d."""
    if d < 2:
        raise ParameterError("sff_model needs d >= 2")
    t = abs(float(t))
    return d * d * r1(t) ** 2 + d * min(t / (2 * d), 1.0)


def sff_dip_time(d: int, points: int = 20000) -> float:
    """Location of the global minimum of ``sff_model`` on (0, 2d]."""
    grid = np.geomspace(1e-2, 2 * d, points)
    vals = np.array([sff_model(t, d) for t in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
    for _ in range(100):
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        if sff_model(a, d) < sff_model(b, d):
            hi = b
        else:
            lo = a
    return float((lo + hi) / 2)


class SffTable:
    """Measured form factor on a grid, linearly interpolated."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


SffLike = Callable[[float], float]


def _sff_or_model(sff: SffLike | None, d: int) -> SffLike:
    return (lambda t: sff_model(t, d)) if sff is None else sff


def fp1_single_quench(t: float, t_s: float, d: int, sff: SffLike | None = None,
                      exact: bool = True) -> float:
    """Leading-order F^(1)(t; t_s) for a single quench at t_s.

    ``exact`` keeps the d^6/(d^2-1)^3 and d^8/(d^2-1)^3 prefactors instead of
    their large-d limits.  ``sff`` defaults to ``sff_model``.
    """
    if not 0 <= t_s <= t:
        raise ParameterError(f"need 0 <= t_s <= t, got t_s={t_s}, t={t}")
    R = _sff_or_model(sff, d)
    d2 = d * d
    corr = (R(t - t_s) / d2) ** 2 * (R(t_s) / d2) ** 2
    if exact:
        den = (d2 - 1) ** 3
        return d ** 6 / den + d ** 8 / den * corr
    return 1.0 + d2 * corr


def fp1_multi_quench(durations, d: int, sff: SffLike | None = None) -> float:
    """1 + d^2 prod_j (R2(t_j)/d^2)^2 over the m+1 segment durations."""
    durations = list(durations)
    if any(tj < 0 for tj in durations):
        raise ParameterError("segment durations must be non-negative")
    R = _sff_or_model(sff, d)
    d2 = d * d
    prod = 1.0
    for tj in durations:
        prod *= (R(tj) / d2) ** 2
    return 1.0 + d2 * prod


def quench_count_bound(d: int, r2_at_dt: float, epsilon: float) -> float:
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    d2 = d * d
    if not 0 < r2_at_dt < d2:
        raise ParameterError("need 0 < R2(dt) < d^2 for the bound to exist")
    return math.log(d2 / epsilon) / (2 * math.log(d2 / r2_at_dt)) - 1


def quench_count_for_error(d: int, r2_at_dt: float, epsilon: float) -> int:
    """Smallest integer m strictly above the equal-segment quench bound."""
    return math.floor(quench_count_bound(d, r2_at_dt, epsilon)) + 1


def _ceil_clean(x: float) -> int:
    r = round(x)
    if abs(x - r) < 1e-9:
        return int(r)
    return math.ceil(x)


def amplification_count(epsilon0: float, epsilon: float, variant: str = "composition") -> int:
    """Number of extra quenches needed to push a design error down to epsilon.

    ``composition``: ceil(log(1/eps)/log(1/eps0) - 1) from operator-norm errors
    multiplying under composition.  ``convolution``: ceil(2 log(1/eps)/log(1/delta) - 1)
    from squaring the frame-potential excess at every convolution
    (``epsilon0`` plays the role of delta there).
    """
    if not 0 < epsilon0 < 1:
        raise ParameterError("need 0 < epsilon0 < 1")
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    ratio = math.log(1 / epsilon) / math.log(1 / epsilon0)
    if variant == "composition":
        if epsilon > epsilon0:
            raise ParameterError("composition variant needs epsilon <= epsilon0")
        return max(0, _ceil_clean(ratio - 1))
    if variant == "convolution":
        return max(0, _ceil_clean(2 * ratio - 1))
    raise ParameterError(f"unknown variant {variant!r}")
