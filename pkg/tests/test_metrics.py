import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog
from scipy.special import ndtri

from stochsynth.gaussian import DiagGauss
from stochsynth.metrics import discrete_w1, gauss_w1_bounds, ws_radius

# Quantile-coupling oracle for 1-D W1: integral over u of
# |F1^{-1}(u) - F2^{-1}(u)| = |dm + ds * z(u)|.
_EPS = 1e-7
_U_GRID = np.linspace(_EPS, 1.0 - _EPS, 200_001)
_Z_GRID = ndtri(_U_GRID)
# Mass of |z| clipped off each tail: integral of |z(u)| du over [0, eps].
_TAIL_Z = float(np.exp(-0.5 * ndtri(_EPS) ** 2) / np.sqrt(2 * np.pi))


def w1_quantile_oracle(m1, s1, m2, s2):
    """Numeric quantile-coupling integral with analytic tail correction.

    Accurate to a few 1e-6; callers allow 2e-5 of slack.
    """
    body = float(np.trapezoid(np.abs((m1 - m2) + (s1 - s2) * _Z_GRID), _U_GRID))
    tail = 2.0 * _EPS * abs(m1 - m2) + 2.0 * abs(s1 - s2) * _TAIL_Z
    return body + tail


def lp_transport(p, q, cost):
    """Optimal transport between discrete distributions via linear programming."""
    n, m = len(p), len(q)
    c = np.asarray(cost, dtype=float).reshape(n * m)
    A_eq = []
    b_eq = []
    for i in range(n):
        row = np.zeros(n * m)
        row[i * m : (i + 1) * m] = 1.0
        A_eq.append(row)
        b_eq.append(p[i])
    for j in range(m):
        row = np.zeros(n * m)
        row[j::m] = 1.0
        A_eq.append(row)
        b_eq.append(q[j])
    res = linprog(c, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs")
    assert res.success, res.message
    return float(res.fun)


def test_translation_is_exact():
    got = gauss_w1_bounds(DiagGauss((0.0,), (1.0,)), DiagGauss((1.0,), (1.0,)))
    assert got.lo == pytest.approx(1.0, abs=1e-12)
    assert got.hi == pytest.approx(1.0, abs=1e-12)
    oracle = w1_quantile_oracle(0.0, 1.0, 1.0, 1.0)
    assert got.lo - 2e-5 <= oracle <= got.hi + 2e-5


def test_scale_change_sandwich():
    got = gauss_w1_bounds(DiagGauss((0.0,), (1.0,)), DiagGauss((0.0,), (2.0,)))
    assert got.lo == 0.0
    assert got.hi == pytest.approx(1.0, abs=1e-12)
    true_w1 = (2.0 - 1.0) * math.sqrt(2.0 / math.pi)
    assert got.lo <= true_w1 <= got.hi
    oracle = w1_quantile_oracle(0.0, 1.0, 0.0, 2.0)
    assert oracle == pytest.approx(true_w1, abs=2e-5)


def test_identity_is_zero():
    g = DiagGauss((0.3, -1.0), (0.5, 2.0))
    got = gauss_w1_bounds(g, g)
    assert got.lo == 0.0 and got.hi == 0.0


def test_sandwich_random_pairs():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        m1, m2 = rng.uniform(-3, 3, size=2)
        s1, s2 = rng.uniform(0.1, 3, size=2)
        got = gauss_w1_bounds(DiagGauss((m1,), (s1,)), DiagGauss((m2,), (s2,)))
        oracle = w1_quantile_oracle(m1, s1, m2, s2)
        assert got.lo - 2e-5 <= oracle <= got.hi + 2e-5


def test_multivariate_bounds():
    g1 = DiagGauss((0.0, 0.0), (1.0, 1.0))
    g2 = DiagGauss((3.0, 4.0), (1.0, 2.0))
    got = gauss_w1_bounds(g1, g2)
    assert got.lo == pytest.approx(4.0)  # max-norm mean gap
    assert got.hi == pytest.approx(math.sqrt(9.0 + 16.0 + 1.0))


def test_discrete_w1_examples():
    assert discrete_w1((0.2, 0.8), (0.2, 0.8)) == 0.0
    assert discrete_w1((1.0, 0.0), (0.0, 1.0)) == 1.0
    assert discrete_w1((0.5, 0.5, 0.0), (0.25, 0.25, 0.5)) == pytest.approx(0.5)


def test_discrete_w1_mismatched_support():
    with pytest.raises(ValueError):
        discrete_w1((1.0, 0.0), (0.5, 0.25, 0.25))


def test_discrete_w1_equals_lp_transport():
    rng = np.random.default_rng(23)
    cost = 1.0 - np.eye(3)
    for _ in range(60):
        p = rng.dirichlet((1.0, 1.0, 1.0))
        q = rng.dirichlet((1.0, 1.0, 1.0))
        assert discrete_w1(p, q) == pytest.approx(lp_transport(p, q, cost), abs=1e-9)


simplex3 = st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3).map(
    lambda w: tuple(v / sum(w) for v in w)
)


@given(simplex3, simplex3, simplex3)
def test_discrete_w1_metric_properties(p, q, r):
    assert discrete_w1(p, q) == pytest.approx(discrete_w1(q, p), abs=1e-15)
    assert discrete_w1(p, p) == 0.0
    assert discrete_w1(p, r) <= discrete_w1(p, q) + discrete_w1(q, r) + 1e-12


def test_ws_radius_values():
    ws, tv = ws_radius(2, 0.1)
    assert ws == pytest.approx(0.4, abs=1e-12)
    assert tv == pytest.approx(0.8, abs=1e-12)
    ws1, tv1 = ws_radius(1, 0.01)
    assert ws1 == pytest.approx(0.03414213562373095, abs=1e-15)
    assert tv1 == pytest.approx(0.0682842712474619, abs=1e-15)


def test_ws_radius_vanishes_with_eta():
    ws, tv = ws_radius(3, 1e-12)
    assert ws < 1e-11 and tv < 1e-11
    with pytest.raises(ValueError):
        ws_radius(1, 0.0)
