"""Interval-MDP abstraction of the concrete stochastic system.

For every (cell, action) pair the one-step transition kernels attainable
from points of the cell form a set of diagonal Gaussians.  That set is
over-approximated by finitely many Gaussian boxes (mean box x std box)
obtained by bisecting the cell until the drift inclusion function is
resolved to the requested mean precision k.  Extremal rectangle masses of
the Gaussian boxes then give sound per-entry lower/upper transition
probabilities; all out-of-domain mass is lumped into the sink column.

Alongside the operational bounds, a reference record stores the
lattice-snapped reference kernels and their discretized rows, which back
the completeness certificate radii.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .gaussian import DiagGauss, GaussSet, rect_mass, rect_mass_bounds
from .intervals import Box, Interval
from .metrics import ws_radius
from .partition import ControlGrid, Partition
from .system import SystemSpec
from .expr import eval_interval

# Entries whose upper bound falls below this floor are dropped from the
# sparse rows; their mass is folded into the sink upper bound.
SPARSE_FLOOR = 1e-12

_MAX_BISECT_DEPTH = 60


class AbstractionError(RuntimeError):
    pass


def overapprox_transition_set(
    spec: SystemSpec,
    part: Partition,
    cell_id: int,
    action: Sequence[float],
    k: float,
) -> list[GaussSet]:
    """Cover the kernels reachable from a cell under one action by Gaussian boxes.

    The source cell is bisected along its widest axis until the drift's
    interval image is narrower than k in every dimension, so each returned
    mean box has max-norm radius at most k around an attained mean.  The
    std boxes carry the diffusion's interval image exactly.  A positive
    disturbance intensity theta1 widens every mean box by theta1 to cover
    the pointwise-bounded disturbance realizations.
    """
    if k <= 0.0:
        raise AbstractionError("precision k must be positive")
    u_box = Box.from_point(action)
    cell = part.cell_box(cell_id)
    out: list[GaussSet] = []
    stack: list[tuple[Box, int]] = [(cell, 0)]
    while stack:
        box, depth = stack.pop()
        mean_dims = tuple(eval_interval(e, box, u_box) for e in spec.f)
        width = max(d.width for d in mean_dims)
        if width > k:
            if depth >= _MAX_BISECT_DEPTH:
                raise AbstractionError(
                    f"bisection depth limit reached in cell {cell_id}: requested mean "
                    f"precision {k}, achieved width {width}"
                )
            axis = max(range(spec.n), key=lambda d: box.dims[d].width)
            left, right = box.bisect(axis)
            stack.append((right, depth + 1))
            stack.append((left, depth + 1))
            continue
        std_dims = tuple(eval_interval(e, box, u_box) for e in spec.b_diag)
        if spec.theta1 > 0.0:
            mean_dims = tuple(
                Interval(d.lo - spec.theta1, d.hi + spec.theta1) for d in mean_dims
            )
        out.append(GaussSet(M=Box(mean_dims), S=Box(std_dims)))
    return out


@dataclass(frozen=True)
class SparseRow:
    """Per-entry transition probability bounds over the listed columns.

    Columns are 1-based state ids (the sink included); omitted columns are
    implicitly [0, 0].
    """

    cols: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def sum_lo(self) -> float:
        return float(self.lo.sum())

    def sum_hi(self) -> float:
        return float(self.hi.sum())

    def dense(self, num_states: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros(num_states)
        hi = np.zeros(num_states)
        lo[self.cols - 1] = self.lo
        hi[self.cols - 1] = self.hi
        return lo, hi


def row_bounds(
    spec: SystemSpec, part: Partition, gauss_sets: Iterable[GaussSet]
) -> SparseRow:
    """Entrywise min/max cell masses over a union of Gaussian boxes.

    The sink column is bounded through the complement of the whole working
    space, never through 1 minus the per-cell sums, so interval slack is
    not double counted.
    """
    sets = list(gauss_sets)
    if not sets:
        raise AbstractionError("no Gaussian boxes supplied")
    ncells = part.num_cells
    lo = np.zeros(ncells + 1)
    hi = np.zeros(ncells + 1)
    lo[:] = math.inf
    for g in sets:
        for j in range(ncells):
            b = rect_mass_bounds(g, part.cells[j])
            lo[j] = min(lo[j], b.lo)
            hi[j] = max(hi[j], b.hi)
        w_mass = rect_mass_bounds(g, spec.W)
        lo[ncells] = min(lo[ncells], max(0.0, 1.0 - w_mass.hi))
        hi[ncells] = max(hi[ncells], min(1.0, 1.0 - w_mass.lo))

    keep = hi >= SPARSE_FLOOR
    keep[ncells] = True
    dropped = float(hi[~keep].sum())
    if dropped > 0.0:
        hi[ncells] = min(1.0, hi[ncells] + dropped)
    lo[~keep] = 0.0

    cols = np.flatnonzero(keep) + 1
    row = SparseRow(cols=cols.astype(np.int64), lo=lo[keep].copy(), hi=hi[keep].copy())
    if row.sum_lo() > 1.0 + 1e-9 or row.sum_hi() < 1.0 - 1e-9:
        raise AbstractionError(
            f"infeasible row bounds (sum lo {row.sum_lo()}, sum hi {row.sum_hi()}); "
            "this indicates a numerics bug"
        )
    return row


def _lattice_floor(value: float, step: float) -> float:
    """step * floor(value/step), snapping up when value sits on the lattice."""
    q = value / step
    f = math.floor(q)
    if q - f > 1.0 - 1e-9:
        f += 1
    return step * f


def snap_reference(
    m: Sequence[float], s2: Sequence[float], eta: float
) -> tuple[tuple[float, ...], tuple[float, ...], tuple[bool, ...]]:
    """Snap a kernel's mean to the eta-lattice and variance to the eta^2-lattice.

    A variance whose lattice floor is zero is kept exact instead (a snapped
    reference must stay a nondegenerate Gaussian); the returned mask says
    which dimensions were actually snapped.
    """
    if eta <= 0.0:
        raise AbstractionError("eta must be positive")
    m_l = tuple(_lattice_floor(v, eta) for v in m)
    s_l = []
    snapped = []
    eta2 = eta * eta
    for v in s2:
        if v <= 0.0:
            raise AbstractionError("variance must be positive")
        fl = _lattice_floor(v, eta2)
        if fl <= 0.0:
            s_l.append(v)
            snapped.append(False)
        else:
            s_l.append(fl)
            snapped.append(True)
    return m_l, tuple(s_l), tuple(snapped)


@dataclass(frozen=True)
class ReferenceKernel:
    """A lattice-snapped kernel, its discretized row, and its covering radius."""

    mean: tuple[float, ...]
    var: tuple[float, ...]
    var_snapped: tuple[bool, ...]
    row: tuple[float, ...]  # cell masses then sink mass
    w1_bound: float  # upper bound on W1 from any covered kernel to this reference


@dataclass(frozen=True)
class RefRecord:
    """Reference kernels per (cell, action) plus the covering radii."""

    eta: float
    ws: float
    tv: float
    entries: dict[tuple[int, int], tuple[ReferenceKernel, ...]] = field(default_factory=dict)


def _reference_kernels(
    spec: SystemSpec, part: Partition, gauss_sets: Sequence[GaussSet], eta: float
) -> tuple[ReferenceKernel, ...]:
    refs: dict[tuple[tuple[float, ...], tuple[float, ...]], ReferenceKernel] = {}
    eta2 = eta * eta
    for g in gauss_sets:
        mean_floors = []
        for d in g.M.dims:
            lo_f = _lattice_floor(d.lo, eta)
            hi_f = _lattice_floor(d.hi, eta)
            count = int(round((hi_f - lo_f) / eta)) + 1
            mean_floors.append([lo_f + eta * i for i in range(count)])
        var_floors = []
        for d in g.S.dims:
            v_lo, v_hi = d.lo * d.lo, d.hi * d.hi
            lo_f = _lattice_floor(v_lo, eta2)
            hi_f = _lattice_floor(v_hi, eta2)
            vals = []
            count = int(round((hi_f - lo_f) / eta2)) + 1
            for i in range(count):
                v = lo_f + eta2 * i
                vals.append(v if v > 0.0 else v_lo)
            var_floors.append(sorted(set(vals)))

        total = 1
        for mf in mean_floors:
            total *= len(mf)
        for vf in var_floors:
            total *= len(vf)
        if total > 100_000:
            raise AbstractionError(
                f"reference enumeration would produce {total} kernels; "
                "decrease k or increase eta"
            )

        for mean in _product(mean_floors):
            for var in _product(var_floors):
                key = (mean, var)
                if key in refs:
                    continue
                std = tuple(math.sqrt(v) for v in var)
                ref_g = DiagGauss(m=mean, s=std)
                row = [rect_mass(ref_g, cell) for cell in part.cells]
                row.append(max(0.0, 1.0 - rect_mass(ref_g, spec.W)))
                # Worst-case parameter distance from any kernel of this box.
                dm2 = sum(
                    max(abs(d.lo - mu), abs(d.hi - mu)) ** 2
                    for d, mu in zip(g.M.dims, mean)
                )
                ds2 = sum(
                    max(abs(d.lo - sd), abs(d.hi - sd)) ** 2
                    for d, sd in zip(g.S.dims, std)
                )
                refs[key] = ReferenceKernel(
                    mean=mean,
                    var=var,
                    var_snapped=tuple(v > 0.0 and _lattice_floor(v, eta2) > 0.0 for v in var),
                    row=tuple(row),
                    w1_bound=math.sqrt(dm2 + ds2),
                )
    return tuple(refs[k] for k in sorted(refs))


def _product(lists: Sequence[Sequence[float]]) -> Iterable[tuple[float, ...]]:
    if not lists:
        yield ()
        return
    head, tail = lists[0], lists[1:]
    for v in head:
        for rest in _product(tail):
            yield (v,) + rest


@dataclass(frozen=True)
class Imdp:
    """Finite-state interval MDP with an absorbing sink as the last state."""

    num_states: int  # cells plus sink
    n: int
    actions: tuple[tuple[float, ...], ...]
    labels: tuple[frozenset[str], ...]  # per state, sink last with empty labels
    rows: tuple[tuple[SparseRow, ...], ...]  # rows[a][i] for cell i (0-based)
    eta: float
    rho: float

    @property
    def num_cells(self) -> int:
        return self.num_states - 1

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    @property
    def sink_id(self) -> int:
        return self.num_states

    def row(self, action_idx: int, state_id: int) -> SparseRow:
        """Row of 1-based state `state_id`; the sink row is the unit self-loop."""
        if state_id == self.sink_id:
            one = np.array([1.0])
            return SparseRow(cols=np.array([self.sink_id], dtype=np.int64), lo=one, hi=one.copy())
        return self.rows[action_idx][state_id - 1]


def _build_one_row(
    args: tuple[SystemSpec, Partition, float, float, int, tuple[float, ...]],
) -> tuple[SparseRow, tuple[ReferenceKernel, ...]]:
    spec, part, k, eta, cell_id, action = args
    gsets = overapprox_transition_set(spec, part, cell_id, action, k)
    row = row_bounds(spec, part, gsets)
    refs = _reference_kernels(spec, part, gsets, eta)
    return row, refs


def default_worker_count() -> int:
    raw = os.environ.get("STOCHSYNTH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_imdp(
    spec: SystemSpec,
    part: Partition,
    grid: ControlGrid,
    k: float,
    workers: int | None = None,
) -> tuple[Imdp, RefRecord]:
    """Assemble the interval MDP and the reference record for all (cell, action).

    Rows are independent, so they are mapped over a worker pool when
    workers > 1; the merge is ordered, making the result identical for any
    worker count.
    """
    if workers is None:
        workers = default_worker_count()
    eta = part.eta_effective
    tasks = [
        (spec, part, k, eta, cell_id, action)
        for action in grid.actions
        for cell_id in range(1, part.num_cells + 1)
    ]
    if workers > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(processes=workers) as pool:
            results = pool.map(_build_one_row, tasks, chunksize=8)
    else:
        results = [_build_one_row(t) for t in tasks]

    ws, tv = ws_radius(spec.n, eta)
    rows: list[tuple[SparseRow, ...]] = []
    entries: dict[tuple[int, int], tuple[ReferenceKernel, ...]] = {}
    it = iter(results)
    for a_idx in range(grid.num_actions):
        action_rows = []
        for cell_id in range(1, part.num_cells + 1):
            row, refs = next(it)
            action_rows.append(row)
            entries[(cell_id, a_idx)] = refs
        rows.append(tuple(action_rows))

    labels = tuple(part.labels) + (frozenset(),)
    imdp = Imdp(
        num_states=part.num_states,
        n=spec.n,
        actions=grid.actions,
        labels=labels,
        rows=tuple(rows),
        eta=eta,
        rho=grid.rho,
    )
    record = RefRecord(eta=eta, ws=ws, tv=tv, entries=entries)
    return imdp, record
