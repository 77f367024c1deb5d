import pytest

from stochsynth.abstraction import build_imdp
from stochsynth.partition import build_control_grid, build_partition
from stochsynth.system import parse_config

BENCHMARK_DOC = {
    "n": 1,
    "p": 1,
    "f": ["0.9*x1 + u1"],
    "b": ["0.3"],
    "theta1": 0.0,
    "theta2": 2.0,
    "L_u": 1.0,
    "W": [[-2.0, 2.0]],
    "U": [[-1.0, 1.0]],
    "labels": [
        {"region": [[-2.0, -1.0]], "props": ["bad"]},
        {"region": [[-1.0, 1.0]], "props": []},
        {"region": [[1.0, 2.0]], "props": ["goal"]},
    ],
    "eta": 0.25,
    "rho": 0.5,
    "k": 0.05,
}


@pytest.fixture(scope="session")
def benchmark():
    spec, params = parse_config(BENCHMARK_DOC)
    return spec, params


@pytest.fixture(scope="session")
def benchmark_partition(benchmark):
    spec, params = benchmark
    return build_partition(spec, params.eta)


@pytest.fixture(scope="session")
def benchmark_grid(benchmark):
    spec, params = benchmark
    return build_control_grid(spec, params.rho)


@pytest.fixture(scope="session")
def benchmark_imdp(benchmark, benchmark_partition, benchmark_grid):
    spec, params = benchmark
    return build_imdp(spec, benchmark_partition, benchmark_grid, params.k)
