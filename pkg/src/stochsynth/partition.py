"""Rectangular state-space partitions and finite control grids.

Cells come from per-axis cut sets: the global eta-lattice (multiples of
eta) restricted to the working space, merged with every label-region
boundary.  This keeps every cell edge at most eta while guaranteeing each
cell lies inside exactly one label region, even when region boundaries are
not commensurate with the lattice.

Cell membership is half-open, [cut_i, cut_{i+1}), except that the
outermost upper face of W is closed; points outside W map to the sink
state.  States are 1-based; the sink is state N+1.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .intervals import Box, Interval
from .system import IN_PROP, SystemSpec

SINK_LABELS: frozenset[str] = frozenset()


class PartitionError(ValueError):
    pass


def _axis_cuts(w: Interval, regions: Sequence[Interval], eta: float) -> list[float]:
    cuts = {w.lo, w.hi}
    # Global lattice q = eta * m restricted to the interior of this axis.
    m0 = math.ceil(w.lo / eta)
    m1 = math.floor(w.hi / eta)
    for m in range(m0, m1 + 1):
        v = eta * m
        if w.lo < v < w.hi:
            cuts.add(v)
    for r in regions:
        for v in (r.lo, r.hi):
            if w.lo < v < w.hi:
                cuts.add(v)
    merged: list[float] = []
    tol = 1e-9 * max(eta, 1.0)
    for v in sorted(cuts):
        if merged and v - merged[-1] <= tol:
            continue
        merged.append(v)
    # Keep the exact upper face of W.
    if merged[-1] != w.hi:
        if w.hi - merged[-1] <= tol:
            merged[-1] = w.hi
        else:
            merged.append(w.hi)
    return merged


@dataclass(frozen=True)
class Partition:
    """Indexed rectangular partition of the working space plus sink state."""

    n: int
    eta: float  # requested grid size
    eta_effective: float  # maximum cell edge actually realized
    cuts: tuple[tuple[float, ...], ...]  # per-axis sorted cut points
    cells: tuple[Box, ...]
    labels: tuple[frozenset[str], ...]  # per cell, including the implicit 'in'
    region_index: tuple[int, ...]  # per cell, index into spec.labels

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_states(self) -> int:
        """Cells plus the sink."""
        return len(self.cells) + 1

    @property
    def sink_id(self) -> int:
        return len(self.cells) + 1

    def axis_counts(self) -> tuple[int, ...]:
        return tuple(len(c) - 1 for c in self.cuts)

    def cell_box(self, state_id: int) -> Box:
        return self.cells[state_id - 1]

    def cell_center(self, state_id: int) -> tuple[float, ...]:
        return self.cells[state_id - 1].center

    def state_labels(self, state_id: int) -> frozenset[str]:
        if state_id == self.sink_id:
            return SINK_LABELS
        return self.labels[state_id - 1]

    def lattice_coord(self, state_id: int) -> tuple[int, ...]:
        """Per-axis segment indices of a cell (inverse of the cell id)."""
        idx = state_id - 1
        counts = self.axis_counts()
        coord = []
        for count in reversed(counts):
            coord.append(idx % count)
            idx //= count
        return tuple(reversed(coord))

    def cell_id(self, coord: Sequence[int]) -> int:
        counts = self.axis_counts()
        idx = 0
        for c, count in zip(coord, counts):
            if not 0 <= c < count:
                raise PartitionError(f"lattice coordinate {tuple(coord)} out of range")
            idx = idx * count + c
        return idx + 1

    def locate(self, x: Sequence[float]) -> int:
        """State id of the cell containing x, or the sink id if x is outside W."""
        coord = []
        for d, axis in enumerate(self.cuts):
            v = float(x[d])
            if v < axis[0] or v > axis[-1]:
                return self.sink_id
            if v == axis[-1]:
                coord.append(len(axis) - 2)
            else:
                coord.append(bisect.bisect_right(axis, v) - 1)
        return self.cell_id(coord)

    def locate_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized locate for an (m, n) array of points."""
        xs = np.asarray(xs, dtype=float)
        m = xs.shape[0]
        counts = self.axis_counts()
        inside = np.ones(m, dtype=bool)
        idx = np.zeros(m, dtype=np.int64)
        for d, axis in enumerate(self.cuts):
            arr = np.asarray(axis)
            col = xs[:, d]
            inside &= (col >= arr[0]) & (col <= arr[-1])
            c = np.searchsorted(arr, col, side="right") - 1
            c = np.where(col == arr[-1], len(arr) - 2, c)
            c = np.clip(c, 0, counts[d] - 1)
            idx = idx * counts[d] + c
        return np.where(inside, idx + 1, self.sink_id)


def build_partition(spec: SystemSpec, eta: float) -> Partition:
    """Partition W into boxes of edge at most eta that respect label regions."""
    if eta <= 0.0:
        raise PartitionError("eta must be positive")
    axis_cuts = []
    for d in range(spec.n):
        regions_d = [lab.region.dims[d] for lab in spec.labels]
        axis_cuts.append(_axis_cuts(spec.W.dims[d], regions_d, eta))

    eta_eff = 0.0
    for cuts in axis_cuts:
        for a, b in zip(cuts, cuts[1:]):
            eta_eff = max(eta_eff, b - a)

    counts = [len(c) - 1 for c in axis_cuts]
    cells: list[Box] = []
    labels: list[frozenset[str]] = []
    region_index: list[int] = []
    coord = [0] * spec.n
    total = 1
    for c in counts:
        total *= c
    for flat in range(total):
        rem = flat
        for d in range(spec.n - 1, -1, -1):
            coord[d] = rem % counts[d]
            rem //= counts[d]
        box = Box(
            tuple(
                Interval(axis_cuts[d][coord[d]], axis_cuts[d][coord[d] + 1])
                for d in range(spec.n)
            )
        )
        center = box.center
        owner = None
        for ridx, lab in enumerate(spec.labels):
            if lab.region.contains(center):
                if owner is not None:
                    raise PartitionError(
                        f"cell {box} center lies in two label regions ({owner}, {ridx}); "
                        "regions must have disjoint interiors"
                    )
                owner = ridx
        if owner is None:
            raise PartitionError(f"cell {box} is not covered by any label region")
        cells.append(box)
        labels.append(frozenset(spec.labels[owner].props) | {IN_PROP})
        region_index.append(owner)

    return Partition(
        n=spec.n,
        eta=eta,
        eta_effective=eta_eff,
        cuts=tuple(tuple(c) for c in axis_cuts),
        cells=tuple(cells),
        labels=tuple(labels),
        region_index=tuple(region_index),
    )


@dataclass(frozen=True)
class ControlGrid:
    """Finite action set covering the control box U with radius at most rho."""

    rho: float
    actions: tuple[tuple[float, ...], ...]

    @property
    def num_actions(self) -> int:
        return len(self.actions)


def build_control_grid(spec: SystemSpec, rho: float) -> ControlGrid:
    """Centers of the rho-lattice segments of U (one action per segment)."""
    if rho <= 0.0:
        raise PartitionError("rho must be positive")
    per_axis: list[list[float]] = []
    for d in spec.U.dims:
        if d.width == 0.0:
            per_axis.append([d.lo])
            continue
        cuts = _axis_cuts(d, [], rho)
        per_axis.append([0.5 * (a + b) for a, b in zip(cuts, cuts[1:])])
    actions: list[tuple[float, ...]] = []
    idx = [0] * len(per_axis)
    while True:
        actions.append(tuple(per_axis[d][idx[d]] for d in range(len(per_axis))))
        d = len(per_axis) - 1
        while d >= 0:
            idx[d] += 1
            if idx[d] < len(per_axis[d]):
                break
            idx[d] = 0
            d -= 1
        if d < 0:
            break
    return ControlGrid(rho=rho, actions=tuple(actions))
