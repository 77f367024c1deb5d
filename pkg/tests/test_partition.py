import numpy as np
import pytest

from stochsynth.partition import PartitionError, build_control_grid, build_partition
from stochsynth.system import parse_config

BASE = {
    "n": 1,
    "p": 1,
    "f": ["0.5*x1 + u1"],
    "b": ["0.2"],
    "theta1": 0.0,
    "L_u": 1.0,
    "W": [[0.0, 1.0]],
    "U": [[-1.0, 1.0]],
    "labels": [{"region": [[0.0, 1.0]], "props": []}],
    "eta": 0.25,
    "rho": 1.0,
    "k": 0.1,
}


def make(doc_overrides):
    doc = dict(BASE)
    doc.update(doc_overrides)
    return parse_config(doc)


def test_uniform_1d():
    spec, params = make({})
    part = build_partition(spec, 0.25)
    assert part.num_cells == 4
    assert part.num_states == 5
    assert part.sink_id == 5
    assert part.eta_effective == pytest.approx(0.25)


def test_2d_split_regions():
    spec, _ = make(
        {
            "n": 2,
            "f": ["0.5*x1", "0.5*x2"],
            "b": ["0.2", "0.2"],
            "W": [[0.0, 1.0], [0.0, 1.0]],
            "labels": [
                {"region": [[0.0, 0.5], [0.0, 1.0]], "props": ["left"]},
                {"region": [[0.5, 1.0], [0.0, 1.0]], "props": ["right"]},
            ],
        }
    )
    part = build_partition(spec, 0.25)
    assert part.num_cells == 16
    for state in range(1, 17):
        labels = part.state_labels(state)
        assert ("left" in labels) != ("right" in labels)
        assert "in" in labels


def test_cut_set_respects_region_boundary():
    spec, _ = make(
        {
            "labels": [
                {"region": [[0.0, 0.3]], "props": ["a"]},
                {"region": [[0.3, 1.0]], "props": ["b"]},
            ]
        }
    )
    part = build_partition(spec, 0.25)
    assert part.cuts[0] == pytest.approx((0.0, 0.25, 0.3, 0.5, 0.75, 1.0))
    assert part.num_cells == 5
    assert part.eta_effective == pytest.approx(0.25)
    # every cell lies in exactly one region
    for state in range(1, 6):
        labels = part.state_labels(state)
        assert ("a" in labels) != ("b" in labels)


def test_locate_half_open_convention():
    spec, _ = make({})
    part = build_partition(spec, 0.25)
    assert part.locate((0.3,)) == 2
    assert part.locate((1.5,)) == part.sink_id
    assert part.locate((0.25,)) == 2  # shared face belongs to the upper cell
    assert part.locate((0.0,)) == 1
    assert part.locate((1.0,)) == 4  # outermost upper face is closed
    assert part.locate((-0.01,)) == part.sink_id


def test_locate_many_matches_scalar():
    spec, _ = make({})
    part = build_partition(spec, 0.25)
    rng = np.random.default_rng(3)
    xs = rng.uniform(-0.5, 1.5, size=(500, 1))
    vec = part.locate_many(xs)
    for x, sid in zip(xs, vec):
        assert part.locate(x) == sid


def test_cover_volume_and_center_identity(benchmark, benchmark_partition):
    spec, _ = benchmark
    part = benchmark_partition
    total = sum(cell.volume() for cell in part.cells)
    assert total == pytest.approx(spec.W.volume(), rel=1e-12)
    for state in range(1, part.num_cells + 1):
        assert part.locate(part.cell_center(state)) == state


def test_lattice_coord_round_trip():
    spec, _ = make(
        {
            "n": 2,
            "f": ["0.5*x1", "0.5*x2"],
            "b": ["0.2", "0.2"],
            "W": [[0.0, 1.0], [0.0, 0.5]],
            "labels": [{"region": [[0.0, 1.0], [0.0, 0.5]], "props": []}],
        }
    )
    part = build_partition(spec, 0.25)
    assert part.num_cells == 8
    for state in range(1, part.num_cells + 1):
        assert part.cell_id(part.lattice_coord(state)) == state


def test_invalid_eta():
    spec, _ = make({})
    with pytest.raises(PartitionError):
        build_partition(spec, 0.0)


def test_control_grid_examples():
    spec, _ = make({})
    grid = build_control_grid(spec, 1.0)
    assert grid.actions == ((-0.5,), (0.5,))

    spec2, _ = make(
        {
            "p": 2,
            "f": ["0.5*x1 + u1 + 0*u2"],
            "U": [[-1.0, 1.0], [-1.0, 1.0]],
        }
    )
    grid2 = build_control_grid(spec2, 1.0)
    assert grid2.num_actions == 4

    spec3, _ = make({"U": [[0.0, 0.0]]})
    grid3 = build_control_grid(spec3, 0.7)
    assert grid3.actions == ((0.0,),)


def test_control_grid_covering_radius():
    spec, _ = make({"U": [[-1.0, 1.0]]})
    for rho in (1.0, 0.8, 0.3):
        grid = build_control_grid(spec, rho)
        for u in np.linspace(-1.0, 1.0, 2001):
            dist = min(abs(u - a[0]) for a in grid.actions)
            assert dist <= rho + 1e-12
