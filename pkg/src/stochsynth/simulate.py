"""Concrete closed-loop simulation and Monte Carlo validation.

The discrete policy is refined to a concrete controller by playing, at any
state x, the action point assigned to the cell containing x.  Trajectories
follow x' = f(x, u) + b(x) * w + theta1 * xi with w standard normal and an
optional bounded disturbance xi; they stop (freeze) on first exit from the
working space.

Randomness is reproducible by construction: every trajectory derives its
own counter-based Philox stream from (seed, trajectory index) and normals
are produced by the inverse-CDF transform of 53-bit uniforms, so results
are identical for a fixed seed regardless of execution order or batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .expr import EvaluationError, compile_point
from .intervals import Interval
from .partition import ControlGrid, Partition
from .properties import PropertyKind, PropertySpec
from .system import SystemSpec

# 99.5th percentile of the standard normal: two-sided 99% confidence.
_Z99 = 2.5758293035489004

XI_MODES = ("zero", "corner", "uniform")


@dataclass(frozen=True)
class Controller:
    """Cell-wise constant feedback refined from a discrete policy."""

    partition: Partition
    grid: ControlGrid
    policy: np.ndarray  # 0-based action index per state (sink included)

    def action_index(self, x: Sequence[float]) -> int:
        state = self.partition.locate(x)
        if state == self.partition.sink_id:
            return 0  # trajectory is stopped anyway; fixed default
        return int(self.policy[state - 1])

    def __call__(self, x: Sequence[float]) -> tuple[float, ...]:
        return self.grid.actions[self.action_index(x)]


@dataclass(frozen=True)
class Trajectory:
    states: tuple[tuple[float, ...], ...]  # x_0 .. x_T
    inputs: tuple[tuple[float, ...], ...]  # u_0 .. u_{T-1}
    stop_index: int  # first exit from W, else T


@dataclass(frozen=True)
class McEstimate:
    successes: int
    N: int
    p_emp: float
    ci_lo: float
    ci_hi: float
    seed: int
    truncated: bool = False  # unbounded property evaluated at a finite horizon


@lru_cache(maxsize=64)
def _compiled_dynamics(spec: SystemSpec):
    fc = tuple(compile_point(e) for e in spec.f)
    bc = tuple(compile_point(e) for e in spec.b_diag)
    return fc, bc


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory, derived from (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def _uniforms(rng: np.random.Generator, count: int) -> list[float]:
    """Uniforms on the open interval (0, 1); safe input for the inverse CDF."""
    raw = rng.integers(0, 1 << 53, size=count).astype(float)
    return ((raw + 0.5) * 2.0**-53).tolist()


def _normals(rng: np.random.Generator, count: int) -> list[float]:
    return ndtri(np.array(_uniforms(rng, count))).tolist()


def _corner_direction(spec: SystemSpec, direction: tuple[float, ...] | None) -> tuple[float, ...]:
    d = direction if direction is not None else (1.0,) * spec.n
    if len(d) != spec.n:
        raise ValueError("corner direction dimension mismatch")
    scale = max(abs(v) for v in d)
    if scale == 0.0:
        return (0.0,) * spec.n
    return tuple(v / scale for v in d)


def _xi_from_noise(z: Sequence[float], mag: float) -> tuple[float, ...]:
    """Disturbance point in the unit max-norm ball: random direction, scaled."""
    scale = max(abs(v) for v in z)
    if scale == 0.0:
        return tuple(0.0 for _ in z)
    return tuple(mag * v / scale for v in z)


def _apply_step(
    spec: SystemSpec,
    fc,
    bc,
    x: Sequence[float],
    u: Sequence[float],
    w: Sequence[float],
    xi: Sequence[float],
) -> tuple[float, ...]:
    th = spec.theta1
    out = []
    for i in range(spec.n):
        v = fc[i](x, u) + bc[i](x, u) * w[i] + th * xi[i]
        if not math.isfinite(v):
            raise EvaluationError(f"trajectory diverged: state component {i + 1} is {v}")
        out.append(v)
    return tuple(out)


def simulate_step(
    spec: SystemSpec,
    x: Sequence[float],
    u: Sequence[float],
    rng: np.random.Generator,
    xi_mode: str = "zero",
    xi_direction: tuple[float, ...] | None = None,
) -> tuple[float, ...]:
    """One step of x' = f(x, u) + b(x) * w + theta1 * xi.

    Per step the stream yields n normals for w, and in 'uniform' mode a
    further n normals plus one uniform for the disturbance direction and
    magnitude; 'zero' and 'corner' draw nothing extra.
    """
    fc, bc = _compiled_dynamics(spec)
    w = _normals(rng, spec.n)
    if xi_mode == "zero":
        xi: tuple[float, ...] = (0.0,) * spec.n
    elif xi_mode == "corner":
        xi = _corner_direction(spec, xi_direction)
    elif xi_mode == "uniform":
        z = _normals(rng, spec.n)
        mag = _uniforms(rng, 1)[0]
        xi = _xi_from_noise(z, mag)
    else:
        raise ValueError(f"xi_mode must be one of {XI_MODES}, got {xi_mode!r}")
    return _apply_step(spec, fc, bc, x, u, w, xi)


def run_trajectory(
    spec: SystemSpec,
    ctrl: Controller,
    x0: Sequence[float],
    T: int,
    rng: np.random.Generator,
    xi_mode: str = "zero",
    xi_direction: tuple[float, ...] | None = None,
) -> Trajectory:
    """Simulate T steps; freeze the state after the first exit from W.

    The whole noise block is drawn up front (identical stream to stepwise
    draws) so the loop is pure float arithmetic.
    """
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if xi_mode not in XI_MODES:
        raise ValueError(f"xi_mode must be one of {XI_MODES}, got {xi_mode!r}")
    fc, bc = _compiled_dynamics(spec)
    n = spec.n
    x = tuple(float(v) for v in x0)
    states = [x]
    inputs: list[tuple[float, ...]] = []
    default_u = ctrl.grid.actions[0]
    locate = ctrl.partition.locate
    sink = ctrl.partition.sink_id
    stop: int | None = 0 if locate(x) == sink else None

    per_step = n if xi_mode in ("zero", "corner") else 2 * n + 1
    block: list[float] = _uniforms(rng, T * per_step) if T > 0 else []
    corner = _corner_direction(spec, xi_direction) if xi_mode == "corner" else None
    zero_xi = (0.0,) * n

    for t in range(T):
        if stop is not None:
            states.append(states[-1])
            inputs.append(default_u)
            continue
        base = t * per_step
        w = ndtri(np.array(block[base : base + n])).tolist()
        if xi_mode == "zero":
            xi: tuple[float, ...] = zero_xi
        elif xi_mode == "corner":
            xi = corner  # type: ignore[assignment]
        else:
            z = ndtri(np.array(block[base + n : base + 2 * n])).tolist()
            xi = _xi_from_noise(z, block[base + 2 * n])
        u = ctrl(x)
        x = _apply_step(spec, fc, bc, x, u, w, xi)
        states.append(x)
        inputs.append(u)
        if locate(x) == sink:
            stop = t + 1
    return Trajectory(
        states=tuple(states), inputs=tuple(inputs), stop_index=T if stop is None else stop
    )


def evaluate_property(traj: Trajectory, part: Partition, prop: PropertySpec) -> bool:
    """Does the trajectory's label trace satisfy the property?

    Unbounded horizons are evaluated at the trajectory length; the caller
    is responsible for choosing a long-enough simulation horizon.
    """
    T = len(traj.states) - 1
    horizon = T if prop.horizon is None else min(prop.horizon, T)
    if prop.kind is PropertyKind.SAFE:
        for t in range(horizon + 1):
            labels = part.state_labels(part.locate(traj.states[t]))
            if not prop.target <= labels:
                return False
        return True
    for t in range(horizon + 1):
        labels = part.state_labels(part.locate(traj.states[t]))
        if prop.avoid and prop.avoid <= labels:
            return False
        if prop.target <= labels:
            return True
    return False


def wilson_interval(successes: int, N: int, z: float = _Z99) -> tuple[float, float]:
    """Two-sided Wilson score interval (99% by default)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    p = successes / N
    z2 = z * z
    denom = 1.0 + z2 / N
    center = (p + z2 / (2.0 * N)) / denom
    half = z * math.sqrt(p * (1.0 - p) / N + z2 / (4.0 * N * N)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def monte_carlo(
    spec: SystemSpec,
    ctrl: Controller,
    x0: Sequence[float],
    prop: PropertySpec,
    N: int,
    seed: int,
    xi_mode: str = "zero",
    xi_direction: tuple[float, ...] | None = None,
    horizon: int | None = None,
) -> McEstimate:
    """Estimate the satisfaction probability over N independent trajectories.

    Trajectory i uses the stream derived from (seed, i), so the estimate is
    reproducible and independent of evaluation order.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if horizon is None:
        horizon = prop.horizon
    if horizon is None:
        raise ValueError("an explicit simulation horizon is required for unbounded properties")
    truncated = prop.horizon is None
    successes = 0
    for i in range(N):
        rng = trajectory_rng(seed, i)
        traj = run_trajectory(spec, ctrl, x0, horizon, rng, xi_mode, xi_direction)
        if evaluate_property(traj, ctrl.partition, prop):
            successes += 1
    p = successes / N
    ci_lo, ci_hi = wilson_interval(successes, N)
    return McEstimate(
        successes=successes,
        N=N,
        p_emp=p,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        seed=seed,
        truncated=truncated,
    )


def soundness_check(est: McEstimate, interval: Interval) -> str:
    """Compare a Monte Carlo estimate against a synthesized interval.

    pass:          the confidence interval overlaps [p_lo, p_hi] and the
                   point estimate lies within the interval widened by the
                   Wilson half-width;
    fail:          either condition is violated;
    inconclusive:  conditions hold but the confidence interval is wider
                   than the synthesized interval, so it carries no evidence.
    """
    half = 0.5 * (est.ci_hi - est.ci_lo)
    overlap = est.ci_hi >= interval.lo and est.ci_lo <= interval.hi
    inside = interval.lo - half <= est.p_emp <= interval.hi + half
    if not (overlap and inside):
        return "fail"
    if est.ci_hi - est.ci_lo > interval.hi - interval.lo:
        return "inconclusive"
    return "pass"
