"""Controlled stochastic system definition and config-file loading.

A system is the discrete-time dynamics

    x' = f(x, u) + b(x) * w + theta1 * xi

with f given per state dimension as an expression AST, b a per-dimension
standard deviation expression (diagonal noise), w i.i.d. standard normal,
and xi a bounded disturbance of intensity theta1.  The working space W is
a bounded box; leaving it traps the trajectory in the sink state.
Labelled regions must tile W with pairwise-disjoint interiors so that a
rectangular partition can respect them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Sequence

import yaml

from .expr import ExprAST, eval_interval, eval_point, free_vars, parse_expression
from .intervals import Box, Interval

IN_PROP = "in"


class ConfigError(ValueError):
    """Invalid system configuration; message names the offending key."""


@dataclass(frozen=True)
class LabelRegion:
    region: Box
    props: frozenset[str]


@dataclass(frozen=True)
class SystemSpec:
    n: int
    p: int
    f: tuple[ExprAST, ...]
    b_diag: tuple[ExprAST, ...]
    theta1: float
    theta2: float | None
    W: Box
    U: Box
    L_u: float
    labels: tuple[LabelRegion, ...]
    ap: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ConfigError("state and input dimensions must be at least 1")
        if len(self.f) != self.n or len(self.b_diag) != self.n:
            raise ConfigError("f and b must have one expression per state dimension")
        if self.W.n != self.n or self.U.n != self.p:
            raise ConfigError("W/U dimension mismatch")
        for box in (self.W, self.U):
            for d in box.dims:
                if not (d.lo > -float("inf") and d.hi < float("inf")):
                    raise ConfigError("W and U must be bounded")
        if self.theta1 < 0.0:
            raise ConfigError("theta1 must be nonnegative")
        if self.theta2 is not None and self.theta2 <= self.theta1:
            raise ConfigError("theta2 must exceed theta1")
        if self.L_u <= 0.0:
            raise ConfigError("L_u must be positive")
        for j, expr in enumerate(self.b_diag):
            if any(kind == "u" for kind, _ in free_vars(expr)):
                raise ConfigError(f"b[{j}] must not reference inputs (diffusion is b(x))")
            rng = eval_interval(expr, self.W, self.U)
            if rng.lo <= 0.0:
                raise ConfigError(
                    f"b[{j}] must interval-evaluate strictly positive on W, got {rng}"
                )
        self._check_labels()

    def _check_labels(self) -> None:
        if not self.labels:
            raise ConfigError("at least one label region is required")
        vol_w = self.W.volume()
        total = 0.0
        for idx, lab in enumerate(self.labels):
            if lab.region.n != self.n:
                raise ConfigError(f"labels[{idx}].region dimension mismatch")
            for d, wd in zip(lab.region.dims, self.W.dims):
                if d.lo < wd.lo - 1e-12 or d.hi > wd.hi + 1e-12:
                    raise ConfigError(f"labels[{idx}].region not contained in W")
            total += lab.region.volume()
        for i in range(len(self.labels)):
            for j in range(i + 1, len(self.labels)):
                if _interiors_overlap(self.labels[i].region, self.labels[j].region):
                    raise ConfigError(f"labels[{i}] and labels[{j}] overlap with interiors")
        if vol_w > 0.0 and abs(total - vol_w) > 1e-9 * vol_w:
            raise ConfigError(
                f"label regions must cover W (region volume {total}, W volume {vol_w})"
            )

    @property
    def all_props(self) -> frozenset[str]:
        props: set[str] = set()
        for lab in self.labels:
            props |= lab.props
        return frozenset(props | self.ap | {IN_PROP})

    def drift_at(self, x: Sequence[float], u: Sequence[float]) -> tuple[float, ...]:
        return tuple(eval_point(e, x, u) for e in self.f)

    def noise_std_at(self, x: Sequence[float]) -> tuple[float, ...]:
        return tuple(eval_point(e, x, ()) for e in self.b_diag)


def _interiors_overlap(a: Box, b: Box) -> bool:
    for da, db in zip(a.dims, b.dims):
        if min(da.hi, db.hi) - max(da.lo, db.lo) <= 1e-12:
            return False
    return True


def estimate_input_lipschitz(
    spec: SystemSpec, samples: int = 200, seed: int = 0
) -> float:
    """Sampled finite-difference estimate of the input-Lipschitz constant of f.

    A sanity check for the user-supplied L_u, not a certified bound.
    """
    import numpy as np

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        x = [d.lo + rng.random() * d.width for d in spec.W.dims]
        u1 = [d.lo + rng.random() * d.width for d in spec.U.dims]
        u2 = [d.lo + rng.random() * d.width for d in spec.U.dims]
        du = max(abs(a - b) for a, b in zip(u1, u2))
        if du < 1e-12:
            continue
        df = max(abs(a - b) for a, b in zip(spec.drift_at(x, u1), spec.drift_at(x, u2)))
        best = max(best, df / du)
    return best


@dataclass(frozen=True)
class SynthesisParams:
    eta: float
    rho: float
    k: float

    def __post_init__(self) -> None:
        if self.eta <= 0.0 or self.rho <= 0.0 or self.k <= 0.0:
            raise ConfigError("eta, rho and k must all be positive")


def _require(doc: dict[str, Any], key: str) -> Any:
    if key not in doc:
        raise ConfigError(f"missing required config key '{key}'")
    return doc[key]


def _as_box(value: Any, key: str, dims: int | None = None) -> Box:
    try:
        box = Box.from_bounds(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{key}' is not a list of [lo, hi] pairs: {exc}") from exc
    if dims is not None and box.n != dims:
        raise ConfigError(f"config key '{key}' must have {dims} dimension(s), got {box.n}")
    return box


def parse_config(doc: dict[str, Any]) -> tuple[SystemSpec, SynthesisParams]:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a key/value mapping")
    n = int(_require(doc, "n"))
    p = int(_require(doc, "p"))
    f_texts = _require(doc, "f")
    b_texts = _require(doc, "b")
    if not isinstance(f_texts, list) or len(f_texts) != n:
        raise ConfigError(f"config key 'f' must be a list of {n} expression(s)")
    if not isinstance(b_texts, list) or len(b_texts) != n:
        raise ConfigError(f"config key 'b' must be a list of {n} expression(s)")
    f = tuple(parse_expression(str(t), n, p) for t in f_texts)
    b = tuple(parse_expression(str(t), n, p) for t in b_texts)
    W = _as_box(_require(doc, "W"), "W", n)
    U = _as_box(_require(doc, "U"), "U", p)

    labels = []
    for idx, item in enumerate(_require(doc, "labels")):
        if not isinstance(item, dict) or "region" not in item:
            raise ConfigError(f"labels[{idx}] must be a mapping with 'region' and 'props'")
        region = _as_box(item["region"], f"labels[{idx}].region", n)
        props = frozenset(str(s) for s in item.get("props", []))
        if IN_PROP in props:
            raise ConfigError(f"labels[{idx}]: proposition '{IN_PROP}' is implicit")
        labels.append(LabelRegion(region, props))

    theta2 = doc.get("theta2")
    spec = SystemSpec(
        n=n,
        p=p,
        f=f,
        b_diag=b,
        theta1=float(doc.get("theta1", 0.0)),
        theta2=None if theta2 is None else float(theta2),
        W=W,
        U=U,
        L_u=float(_require(doc, "L_u")),
        labels=tuple(labels),
        ap=frozenset(str(s) for s in doc.get("ap", [])),
    )
    params = SynthesisParams(
        eta=float(_require(doc, "eta")),
        rho=float(_require(doc, "rho")),
        k=float(_require(doc, "k")),
    )
    return spec, params


def load_config(path: str) -> tuple[SystemSpec, SynthesisParams, str]:
    """Load a YAML system config; returns (spec, params, sha256 of the bytes)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    spec, params = parse_config(doc)
    return spec, params, digest
