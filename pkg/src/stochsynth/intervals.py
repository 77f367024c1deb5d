"""Interval arithmetic with outward rounding.

Every operation returns an interval guaranteed to contain the exact real
result for all points of the operand intervals.  Directed rounding is
emulated with `math.nextafter`; transcendental functions get an extra ulp
of padding because libm is only faithfully rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

_INF = math.inf

# libm guarantees ~1 ulp on sin/cos/exp/tanh; two nextafter steps cover that.
_TRANS_ULPS = 2


def _down(x: float) -> float:
    if x == -_INF:
        return x
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    if x == _INF:
        return x
    return math.nextafter(x, _INF)


def _down_n(x: float, n: int) -> float:
    for _ in range(n):
        x = _down(x)
    return x


def _up_n(x: float, n: int) -> float:
    for _ in range(n):
        x = _up(x)
    return x


class IntervalError(ValueError):
    """Invalid interval construction or undefined interval operation."""


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] on the extended real line."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise IntervalError("interval bound is NaN")
        if self.lo > self.hi:
            raise IntervalError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __repr__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def iadd(a: Interval, b: Interval) -> Interval:
    return Interval(_down(a.lo + b.lo), _up(a.hi + b.hi))


def isub(a: Interval, b: Interval) -> Interval:
    return Interval(_down(a.lo - b.hi), _up(a.hi - b.lo))


def ineg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def imul(a: Interval, b: Interval) -> Interval:
    cands = []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            p = x * y
            if math.isnan(p):  # 0 * inf
                p = 0.0
            cands.append(p)
    return Interval(_down(min(cands)), _up(max(cands)))


def idiv(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        raise IntervalError(f"division by interval containing zero: {b}")
    inv = Interval(_down(1.0 / b.hi), _up(1.0 / b.lo))
    return imul(a, inv)


def ipow(a: Interval, n: int) -> Interval:
    """Integer power; even exponents account for the sign-symmetric range."""
    if n == 0:
        return Interval(1.0, 1.0)
    if n < 0:
        return idiv(Interval(1.0, 1.0), ipow(a, -n))
    if n % 2 == 1:
        return Interval(_down(a.lo**n), _up(a.hi**n))
    lo_n, hi_n = abs(a.lo) ** n, abs(a.hi) ** n
    if a.lo >= 0.0:
        return Interval(_down(lo_n), _up(hi_n))
    if a.hi <= 0.0:
        return Interval(_down(hi_n), _up(lo_n))
    return Interval(0.0, _up(max(lo_n, hi_n)))


def iabs(a: Interval) -> Interval:
    if a.lo >= 0.0:
        return a
    if a.hi <= 0.0:
        return ineg(a)
    return Interval(0.0, max(-a.lo, a.hi))


def iexp(a: Interval) -> Interval:
    return Interval(max(0.0, _down_n(math.exp(a.lo), _TRANS_ULPS)), _up_n(math.exp(a.hi), _TRANS_ULPS))


def itanh(a: Interval) -> Interval:
    lo = _down_n(math.tanh(a.lo), _TRANS_ULPS)
    hi = _up_n(math.tanh(a.hi), _TRANS_ULPS)
    return Interval(max(-1.0, lo), min(1.0, hi))


_TWO_PI = 2.0 * math.pi


def _has_point(a: Interval, base: float) -> bool:
    # Is base + 2*pi*k inside [a.lo, a.hi] for some integer k?
    if a.width >= _TWO_PI:
        return True
    k = math.ceil((a.lo - base) / _TWO_PI)
    # Guard against rounding in the argument reduction itself.
    for kk in (k - 1, k, k + 1):
        v = base + _TWO_PI * kk
        if a.lo - 1e-9 <= v <= a.hi + 1e-9:
            return True
    return False


def isin(a: Interval) -> Interval:
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)):
        return Interval(-1.0, 1.0)
    hi = 1.0 if _has_point(a, math.pi / 2) else _up_n(max(math.sin(a.lo), math.sin(a.hi)), _TRANS_ULPS)
    lo = -1.0 if _has_point(a, -math.pi / 2) else _down_n(min(math.sin(a.lo), math.sin(a.hi)), _TRANS_ULPS)
    return Interval(max(-1.0, lo), min(1.0, hi))


def icos(a: Interval) -> Interval:
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)):
        return Interval(-1.0, 1.0)
    hi = 1.0 if _has_point(a, 0.0) else _up_n(max(math.cos(a.lo), math.cos(a.hi)), _TRANS_ULPS)
    lo = -1.0 if _has_point(a, math.pi) else _down_n(min(math.cos(a.lo), math.cos(a.hi)), _TRANS_ULPS)
    return Interval(max(-1.0, lo), min(1.0, hi))


def ihull(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: one Interval per dimension."""

    dims: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if len(self.dims) < 1:
            raise IntervalError("box needs at least one dimension")

    @staticmethod
    def from_bounds(bounds: Iterable[Sequence[float]]) -> "Box":
        return Box(tuple(Interval(float(lo), float(hi)) for lo, hi in bounds))

    @staticmethod
    def from_point(point: Sequence[float]) -> "Box":
        return Box(tuple(Interval.point(float(v)) for v in point))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(d.mid for d in self.dims)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(d.width for d in self.dims)

    @property
    def max_width(self) -> float:
        return max(d.width for d in self.dims)

    def volume(self) -> float:
        v = 1.0
        for d in self.dims:
            v *= d.width
        return v

    def contains(self, point: Sequence[float]) -> bool:
        return all(d.contains(x) for d, x in zip(self.dims, point))

    def bisect(self, axis: int) -> tuple["Box", "Box"]:
        d = self.dims[axis]
        m = d.mid
        left = Box(self.dims[:axis] + (Interval(d.lo, m),) + self.dims[axis + 1 :])
        right = Box(self.dims[:axis] + (Interval(m, d.hi),) + self.dims[axis + 1 :])
        return left, right

    def __repr__(self) -> str:
        return "x".join(repr(d) for d in self.dims)
