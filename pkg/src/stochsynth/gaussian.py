"""Gaussian measure numerics for diagonal-covariance kernels.

The building blocks here are 1-D normal CDF evaluations, rectangle masses
of diagonal Gaussians, and sharp extremal rectangle masses over a box of
Gaussians (a mean box crossed with a standard-deviation box).  Extrema are
located in closed form per dimension:

* over the mean, the mass of [a, b] is unimodal with peak at the rectangle
  midpoint, so the maximiser is the midpoint clamped into the mean interval
  and the minimiser is the mean endpoint farther from the midpoint;
* over the standard deviation, the mass is monotone decreasing when the
  mean lies inside [a, b] and otherwise has a single interior maximum at
  s*^2 = (beta^2 - alpha^2) / (2 ln(beta/alpha)) with alpha = a - m,
  beta = b - m, so it suffices to check the endpoints and s*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .intervals import Box, Interval

_SQRT2 = math.sqrt(2.0)

# Padding applied to extremal masses over non-degenerate parameter boxes so
# that containment of sampled masses survives floating-point rounding.
_ROUNDING_GUARD = 1e-14


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF built from one-sided erfc.

    The two branches make the reflection identity Phi(z) + Phi(-z) = 1 hold
    by construction, which keeps downstream mass bounds monotone.
    """
    if z >= 0.0:
        return 1.0 - 0.5 * math.erfc(z / _SQRT2)
    return 0.5 * math.erfc(-z / _SQRT2)


@dataclass(frozen=True)
class DiagGauss:
    """Gaussian on R^n with mean m and diagonal covariance diag(s^2)."""

    m: tuple[float, ...]
    s: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.m) != len(self.s):
            raise ValueError("mean and std dimension mismatch")
        if any(si <= 0.0 for si in self.s):
            raise ValueError("standard deviations must be strictly positive")

    @property
    def n(self) -> int:
        return len(self.m)


def _mass_1d(m: float, s: float, a: float, b: float) -> float:
    hi = std_normal_cdf((b - m) / s) if b != math.inf else 1.0
    lo = std_normal_cdf((a - m) / s) if a != -math.inf else 0.0
    return max(0.0, hi - lo)


def rect_mass(g: DiagGauss, R: Box) -> float:
    """Probability that g assigns to the axis-aligned rectangle R."""
    if R.n != g.n:
        raise ValueError("rectangle dimension mismatch")
    p = 1.0
    for mi, si, d in zip(g.m, g.s, R.dims):
        p *= _mass_1d(mi, si, d.lo, d.hi)
        if p == 0.0:
            return 0.0
    return min(1.0, p)


@dataclass(frozen=True)
class GaussSet:
    """Box of diagonal Gaussians: all N(m, diag(s^2)) with m in M, s in S."""

    M: Box
    S: Box

    def __post_init__(self) -> None:
        if self.M.n != self.S.n:
            raise ValueError("mean box and std box dimension mismatch")
        if any(d.lo <= 0.0 for d in self.S.dims):
            raise ValueError("std box must have strictly positive lower bounds")

    @property
    def n(self) -> int:
        return self.M.n

    def contains(self, g: DiagGauss) -> bool:
        return self.M.contains(g.m) and self.S.contains(g.s)


def _sigma_candidates(m: float, s_lo: float, s_hi: float, a: float, b: float) -> list[float]:
    cands = [s_lo, s_hi]
    alpha, beta = a - m, b - m
    if (0.0 < alpha < beta) or (alpha < beta < 0.0):
        s2 = (beta * beta - alpha * alpha) / (2.0 * math.log(beta / alpha))
        if s2 > 0.0:
            s_star = math.sqrt(s2)
            if s_lo < s_star < s_hi:
                cands.append(s_star)
    return cands


def _extremal_mass_1d(
    m_lo: float, m_hi: float, s_lo: float, s_hi: float, a: float, b: float
) -> tuple[float, float]:
    """Min and max of the [a, b] mass over m in [m_lo, m_hi], s in [s_lo, s_hi]."""
    if a >= b:
        return 0.0, 0.0
    if a == -math.inf and b == math.inf:
        return 1.0, 1.0
    if a == -math.inf or b == math.inf:
        # One-sided mass is monotone in both m and s: corners suffice.
        vals = [_mass_1d(m, s, a, b) for m in (m_lo, m_hi) for s in (s_lo, s_hi)]
        return min(vals), max(vals)

    mid = 0.5 * (a + b)
    m_max = min(max(mid, m_lo), m_hi)
    m_min = m_lo if (mid - m_lo) >= (m_hi - mid) else m_hi

    hi = max(_mass_1d(m_max, s, a, b) for s in _sigma_candidates(m_max, s_lo, s_hi, a, b))
    lo = min(_mass_1d(m_min, s, a, b) for s in _sigma_candidates(m_min, s_lo, s_hi, a, b))

    if m_lo < m_hi or s_lo < s_hi:
        lo = max(0.0, lo - _ROUNDING_GUARD)
        hi = min(1.0, hi + _ROUNDING_GUARD)
    return lo, hi


def rect_mass_bounds(G: GaussSet, R: Box) -> Interval:
    """Sharp bounds on rect_mass(g, R) over all Gaussians g in G.

    The mass factorises over dimensions and the parameter box is a product,
    so per-dimension extrema multiply into the exact joint extrema.
    """
    if R.n != G.n:
        raise ValueError("rectangle dimension mismatch")
    lo = 1.0
    hi = 1.0
    for Mi, Si, d in zip(G.M.dims, G.S.dims, R.dims):
        lo_i, hi_i = _extremal_mass_1d(Mi.lo, Mi.hi, Si.lo, Si.hi, d.lo, d.hi)
        lo *= lo_i
        hi *= hi_i
    return Interval(max(0.0, lo), min(1.0, hi))


def exact_row(
    g: DiagGauss, cells: Sequence[Box], domain: Box
) -> list[float]:
    """Cell masses of g plus the out-of-domain remainder appended last."""
    row = [rect_mass(g, cell) for cell in cells]
    row.append(max(0.0, 1.0 - rect_mass(g, domain)))
    return row
