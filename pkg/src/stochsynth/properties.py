"""Probabilistic property specifications and their text grammar.

Property strings:

    SAFE(prop, horizon)
    REACH(prop, horizon)
    REACH_AVOID(target_prop, avoid_prop, horizon)

with horizon a nonnegative integer or `inf`, optionally followed by a
probability threshold, e.g. ``REACH(goal, inf) >= 0.9``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum


class PropertyKind(Enum):
    SAFE = "SAFE"
    REACH = "REACH"
    REACH_AVOID = "REACH_AVOID"


class PropertyError(ValueError):
    pass


_THRESH_OPS = ("<=", "<", ">=", ">")


@dataclass(frozen=True)
class PropertySpec:
    kind: PropertyKind
    target: frozenset[str]
    avoid: frozenset[str]
    horizon: int | None  # None means unbounded
    threshold: tuple[str, float] | None = None

    def __post_init__(self) -> None:
        if self.horizon is not None and self.horizon < 0:
            raise PropertyError("horizon must be nonnegative")
        if self.kind is PropertyKind.REACH_AVOID:
            if self.target & self.avoid:
                raise PropertyError("target and avoid propositions must be disjoint")
        if self.threshold is not None:
            op, rho = self.threshold
            if op not in _THRESH_OPS:
                raise PropertyError(f"threshold operator must be one of {_THRESH_OPS}")
            if not 0.0 <= rho <= 1.0:
                raise PropertyError("threshold probability must be in [0, 1]")

    @property
    def bounded(self) -> bool:
        return self.horizon is not None

    def props_used(self) -> frozenset[str]:
        return self.target | self.avoid

    def __str__(self) -> str:
        hz = "inf" if self.horizon is None else str(self.horizon)
        if self.kind is PropertyKind.REACH_AVOID:
            body = f"REACH_AVOID({', '.join(sorted(self.target))}, {', '.join(sorted(self.avoid))}, {hz})"
        else:
            body = f"{self.kind.value}({', '.join(sorted(self.target))}, {hz})"
        if self.threshold is not None:
            body += f" {self.threshold[0]} {self.threshold[1]!r}"
        return body


_PROP_RE = re.compile(
    r"^\s*(SAFE|REACH|REACH_AVOID)\s*\(\s*([^)]*?)\s*\)\s*(?:(<=|<|>=|>)\s*([-+0-9.eE]+)\s*)?$"
)


def parse_property(text: str) -> PropertySpec:
    m = _PROP_RE.match(text)
    if m is None:
        raise PropertyError(
            f"cannot parse property {text!r}; expected SAFE(p, T), REACH(p, T) or "
            "REACH_AVOID(p, q, T) with T a nonnegative integer or 'inf', "
            "optionally followed by '>= rho' (or <=, <, >)"
        )
    kind = PropertyKind(m.group(1))
    args = [a.strip() for a in m.group(2).split(",")] if m.group(2).strip() else []
    expected = 3 if kind is PropertyKind.REACH_AVOID else 2
    if len(args) != expected:
        raise PropertyError(f"{kind.value} takes {expected} arguments, got {len(args)}")

    hz_text = args[-1]
    if hz_text.lower() in ("inf", "infinity"):
        horizon: int | None = None
    else:
        try:
            horizon = int(hz_text)
        except ValueError as exc:
            raise PropertyError(f"horizon must be an integer or 'inf', got {hz_text!r}") from exc

    threshold = None
    if m.group(3) is not None:
        rho = float(m.group(4))
        if not math.isfinite(rho):
            raise PropertyError("threshold probability must be finite")
        threshold = (m.group(3), rho)

    if kind is PropertyKind.REACH_AVOID:
        target, avoid = frozenset({args[0]}), frozenset({args[1]})
    else:
        target, avoid = frozenset({args[0]}), frozenset()
    for name in target | avoid:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name):
            raise PropertyError(f"invalid proposition name {name!r}")
    return PropertySpec(kind=kind, target=target, avoid=avoid, horizon=horizon, threshold=threshold)


def check_props_known(prop: PropertySpec, known: frozenset[str]) -> None:
    unknown = prop.props_used() - known
    if unknown:
        raise PropertyError(
            f"unknown proposition(s) {sorted(unknown)}; known propositions: {sorted(known)}"
        )


def verdict(p_lo: float, p_hi: float, op: str, rho: float) -> str:
    """Three-valued comparison of the whole interval [p_lo, p_hi] against rho."""
    sat_lo = _cmp(p_lo, op, rho)
    sat_hi = _cmp(p_hi, op, rho)
    if op in (">=", ">"):
        if sat_lo:
            return "yes"
        if not sat_hi:
            return "no"
    else:
        if sat_hi:
            return "yes"
        if not sat_lo:
            return "no"
    return "unknown"


def _cmp(value: float, op: str, rho: float) -> bool:
    if op == "<=":
        return value <= rho
    if op == "<":
        return value < rho
    if op == ">=":
        return value >= rho
    if op == ">":
        return value > rho
    raise PropertyError(f"unknown operator {op!r}")
