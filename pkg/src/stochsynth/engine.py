"""Robust value iteration over interval MDPs.

Each backup extremizes the expected continuation value over the row's
transition polytope {p : lo <= p <= hi, sum p = 1} using the order-based
allocation: every state keeps its lower bound and the remaining budget is
poured greedily in value order (ascending for the adversarial minimum,
descending for the optimistic maximum), ties broken by state index.

The synthesized policy is stationary and deterministic.  For unbounded
properties the reported pessimistic values are the optimal fixed point and
the greedy policy attains them; for bounded horizons both interval
endpoints are re-evaluated under the extracted stationary policy so that
the interval is sound for the controller that is actually deployed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .abstraction import Imdp, SparseRow
from .intervals import Interval
from .properties import PropertyKind, PropertySpec, verdict

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000


class EngineError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual


def validate(imdp: Imdp, max_reports: int = 100) -> list[str]:
    """Structural well-formedness diagnostics; empty list means ok."""
    issues: list[str] = []

    def report(msg: str) -> bool:
        issues.append(msg)
        return len(issues) >= max_reports

    for a in range(imdp.num_actions):
        if len(imdp.rows[a]) != imdp.num_cells:
            if report(f"action {a}: expected {imdp.num_cells} rows, got {len(imdp.rows[a])}"):
                return issues
        for i, row in enumerate(imdp.rows[a], start=1):
            if np.any(row.lo < -0.0) or np.any(row.hi > 1.0 + 1e-15):
                if report(f"entry out of [0,1] at (state {i}, action {a})"):
                    return issues
            if np.any(row.lo > row.hi):
                if report(f"lo > hi at (state {i}, action {a})"):
                    return issues
            if np.any(row.cols < 1) or np.any(row.cols > imdp.num_states):
                if report(f"column index out of range at (state {i}, action {a})"):
                    return issues
            if row.sum_lo() > 1.0 + 1e-9:
                if report(f"sum of lower bounds exceeds 1 at (state {i}, action {a}): {row.sum_lo()}"):
                    return issues
            if row.sum_hi() < 1.0 - 1e-9:
                if report(f"sum of upper bounds below 1 at (state {i}, action {a}): {row.sum_hi()}"):
                    return issues
    if len(imdp.labels) != imdp.num_states:
        issues.append("label count does not match state count")
    elif imdp.labels[-1]:
        issues.append("sink state must carry no propositions")
    return issues


def _allocate(order: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Order-based extreme point: fill lower bounds, pour the rest in order."""
    p = lo.astype(float).copy()
    budget = 1.0 - math.fsum(p)
    if budget < -1e-9:
        raise EngineError(f"infeasible row: sum of lower bounds {math.fsum(lo)} > 1")
    for idx in order:
        if budget <= 0.0:
            break
        room = hi[idx] - lo[idx]
        give = room if room < budget else budget
        p[idx] += give
        budget -= give
    if budget > 1e-9:
        raise EngineError(f"infeasible row: sum of upper bounds {math.fsum(hi)} < 1")
    # Balance the last poured entry so the weights sum to one exactly.
    total = math.fsum(p)
    if total != 1.0:
        drift = 1.0 - total
        for idx in reversed(order):
            cand = p[idx] + drift
            if lo[idx] - 1e-12 <= cand <= hi[idx] + 1e-12:
                p[idx] = cand
                break
    return p


def extremal_distribution(
    lo: Sequence[float],
    hi: Sequence[float],
    values: Sequence[float],
    mode: str,
) -> np.ndarray:
    """Distribution in the row polytope extremizing the expected value.

    mode 'minimize' sorts states by ascending value, 'maximize' descending;
    ties break by ascending state index either way.
    """
    lo_a = np.asarray(lo, dtype=float)
    hi_a = np.asarray(hi, dtype=float)
    v = np.asarray(values, dtype=float)
    if mode == "minimize":
        order = np.lexsort((np.arange(len(v)), v))
    elif mode == "maximize":
        order = np.lexsort((np.arange(len(v)), -v))
    else:
        raise ValueError(f"mode must be 'minimize' or 'maximize', got {mode!r}")
    return _allocate(order, lo_a, hi_a)


def _row_backup(row: SparseRow, values: np.ndarray, minimize: bool) -> float:
    v = values[row.cols - 1]
    if minimize:
        order = np.lexsort((row.cols, v))
    else:
        order = np.lexsort((row.cols, -v))
    p = _allocate(order, row.lo, row.hi)
    return float(p @ v)


@dataclass(frozen=True)
class SynthesisResult:
    p_lo: np.ndarray
    p_hi: np.ndarray
    policy: np.ndarray  # 0-based action index per state, sink fixed to 0
    iterations: int
    residual: float
    prop: PropertySpec

    def interval(self, state_id: int) -> Interval:
        return Interval(float(self.p_lo[state_id - 1]), float(self.p_hi[state_id - 1]))


def _prop_sets(imdp: Imdp, prop: PropertySpec) -> tuple[np.ndarray, np.ndarray]:
    """(target_or_safe, avoid) membership masks over all states."""
    main = np.array([prop.target <= labels for labels in imdp.labels])
    avoid = np.array([bool(prop.avoid) and prop.avoid <= labels for labels in imdp.labels])
    # A state matching both counts as avoid: fail before success.
    main &= ~avoid
    return main, avoid


def _sweep(
    imdp: Imdp,
    v: np.ndarray,
    frozen_one: np.ndarray,
    frozen_zero: np.ndarray,
    minimize: bool,
    policy: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    """One Jacobi sweep; returns (new values, greedy action per state)."""
    nv = v.copy()
    greedy = np.zeros(imdp.num_states, dtype=np.int64)
    for i in range(1, imdp.num_states):  # sink (last state) keeps its value
        idx = i - 1
        if frozen_one[idx] or frozen_zero[idx]:
            continue
        if policy is not None:
            nv[idx] = _row_backup(imdp.rows[policy[idx]][idx], v, minimize)
            continue
        best = -1.0
        best_a = 0
        for a in range(imdp.num_actions):
            val = _row_backup(imdp.rows[a][idx], v, minimize)
            if val > best:  # strict: ties keep the lowest action index
                best = val
                best_a = a
        nv[idx] = best
        greedy[idx] = best_a
    return nv, greedy


def _iterate(
    imdp: Imdp,
    prop: PropertySpec,
    minimize: bool,
    policy: np.ndarray | None,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, int, float]:
    main, avoid = _prop_sets(imdp, prop)
    n = imdp.num_states
    if prop.kind is PropertyKind.SAFE:
        v = np.where(main, 1.0, 0.0)
        frozen_one = np.zeros(n, dtype=bool)
        frozen_zero = ~main
    else:
        v = np.where(main, 1.0, 0.0)
        frozen_one = main
        frozen_zero = avoid.copy()
        if prop.kind is PropertyKind.REACH:
            frozen_zero[:] = False
    # The sink never satisfies a proposition: it stays at its initial value,
    # which is 0 unless the property set is vacuous.
    greedy = np.zeros(n, dtype=np.int64)
    residual = 0.0
    iterations = 0
    if prop.bounded:
        for _ in range(prop.horizon or 0):
            nv, greedy = _sweep(imdp, v, frozen_one, frozen_zero, minimize, policy)
            residual = float(np.max(np.abs(nv - v))) if len(v) else 0.0
            v = nv
            iterations += 1
        return v, greedy, iterations, residual
    while True:
        nv, greedy = _sweep(imdp, v, frozen_one, frozen_zero, minimize, policy)
        residual = float(np.max(np.abs(nv - v)))
        v = nv
        iterations += 1
        if residual < tol:
            return v, greedy, iterations, residual
        if iterations >= max_iter:
            raise EngineError(
                f"value iteration did not converge in {max_iter} sweeps", residual=residual
            )


def interval_value_iteration(
    imdp: Imdp,
    prop: PropertySpec,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SynthesisResult:
    """Synthesize a robust stationary policy and its satisfaction interval."""
    issues = validate(imdp)
    if issues:
        raise EngineError("interval MDP is not well formed: " + "; ".join(issues[:3]))
    known = frozenset().union(*imdp.labels) if imdp.labels else frozenset()
    unknown = prop.props_used() - known
    if unknown:
        raise EngineError(
            f"property references unknown proposition(s) {sorted(unknown)}; "
            f"known: {sorted(known)}"
        )

    v_star, greedy, iters, residual = _iterate(imdp, prop, True, None, tol, max_iter)
    policy = greedy.copy()
    policy[-1] = 0  # sink action is arbitrary but fixed

    if prop.bounded:
        p_lo, _, it_lo, res_lo = _iterate(imdp, prop, True, policy, tol, max_iter)
        p_hi, _, it_hi, res_hi = _iterate(imdp, prop, False, policy, tol, max_iter)
        iters += it_lo + it_hi
        residual = max(res_lo, res_hi)
    else:
        p_lo = v_star
        check, _, it_chk, _ = _iterate(imdp, prop, True, policy, tol, max_iter)
        iters += it_chk
        if float(np.max(p_lo - check)) > 1e3 * tol:
            # Greedy tie produced a non-progressing action; fall back to the
            # policy's own sound value.
            p_lo = check
        p_hi, _, it_hi, res_hi = _iterate(imdp, prop, False, policy, tol, max_iter)
        iters += it_hi
        residual = max(residual, res_hi)

    p_hi = np.maximum(p_lo, p_hi)
    return SynthesisResult(
        p_lo=p_lo, p_hi=p_hi, policy=policy, iterations=iters, residual=residual, prop=prop
    )


def satisfaction_interval(result: SynthesisResult, q0: int) -> tuple[Interval, str | None]:
    """Interval for the initial state plus the three-valued threshold verdict."""
    interval = result.interval(q0)
    if result.prop.threshold is None:
        return interval, None
    op, rho = result.prop.threshold
    return interval, verdict(interval.lo, interval.hi, op, rho)
