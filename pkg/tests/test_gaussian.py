import math

import mpmath
import numpy as np
import pytest

from stochsynth.gaussian import (
    DiagGauss,
    GaussSet,
    rect_mass,
    rect_mass_bounds,
    std_normal_cdf,
)
from stochsynth.intervals import Box

mpmath.mp.dps = 40


def phi_oracle(z: float) -> float:
    return float(0.5 * mpmath.erfc(-mpmath.mpf(z) / mpmath.sqrt(2)))


def test_cdf_values_against_high_precision_oracle():
    assert std_normal_cdf(0.0) == 0.5
    for z in (-3.7, -1.0, -0.2, 0.3, 1.0, 2.5, 4.0):
        assert std_normal_cdf(z) == pytest.approx(phi_oracle(z), abs=1e-14)
    assert std_normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-14)


def test_cdf_limits():
    assert std_normal_cdf(-math.inf) == 0.0
    assert std_normal_cdf(math.inf) == 1.0
    assert std_normal_cdf(-40.0) == 0.0
    assert std_normal_cdf(40.0) == 1.0


def test_cdf_reflection_identity():
    rng = np.random.default_rng(5)
    for z in rng.normal(scale=3.0, size=10_000):
        assert abs(std_normal_cdf(z) + std_normal_cdf(-z) - 1.0) <= 1e-15


def test_cdf_monotone_sampled():
    zs = np.sort(np.random.default_rng(6).uniform(-8, 8, size=5000))
    vals = [std_normal_cdf(z) for z in zs]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_rect_mass_normalization():
    g = DiagGauss(m=(0.0,), s=(1.0,))
    full = Box.from_bounds([[-math.inf, math.inf]])
    assert rect_mass(g, full) == 1.0


def test_rect_mass_oracle_values():
    g = DiagGauss(m=(0.0,), s=(1.0,))
    box = Box.from_bounds([[-1.0, 1.0]])
    expected = phi_oracle(1.0) - phi_oracle(-1.0)
    assert rect_mass(g, box) == pytest.approx(expected, abs=1e-14)

    g2 = DiagGauss(m=(0.0, 0.0), s=(1.0, 1.0))
    box2 = Box.from_bounds([[-1.0, 1.0], [-1.0, 1.0]])
    assert rect_mass(g2, box2) == pytest.approx(expected**2, abs=1e-14)


def test_rect_mass_shift_scale():
    g = DiagGauss(m=(2.0,), s=(0.5,))
    box = Box.from_bounds([[1.0, 3.0]])
    assert rect_mass(g, box) == pytest.approx(phi_oracle(2.0) - phi_oracle(-2.0), abs=1e-14)


def _oracle_bounds_1d(m_lo, m_hi, s_lo, s_hi, a, b, rounds=4, grid=96):
    """Zoom-grid search for the extremal 1-D mass over (m, s)."""

    def mass(m, s):
        return std_normal_cdf((b - m) / s) - std_normal_cdf((a - m) / s)

    def refine(selector):
        lo_m, hi_m, lo_s, hi_s = m_lo, m_hi, s_lo, s_hi
        best = None
        for _ in range(rounds):
            ms = np.linspace(lo_m, hi_m, grid)
            ss = np.linspace(lo_s, hi_s, grid)
            vals = [(mass(m, s), m, s) for m in ms for s in ss]
            best = selector(vals)
            _, bm, bs = best
            dm = (hi_m - lo_m) / (grid - 1) if hi_m > lo_m else 0.0
            ds = (hi_s - lo_s) / (grid - 1) if hi_s > lo_s else 0.0
            lo_m, hi_m = max(m_lo, bm - dm), min(m_hi, bm + dm)
            lo_s, hi_s = max(s_lo, bs - ds), min(s_hi, bs + ds)
        return best[0]

    return refine(min), refine(max)


def test_rect_mass_bounds_mean_box():
    G = GaussSet(M=Box.from_bounds([[-0.5, 0.5]]), S=Box.from_bounds([[1.0, 1.0]]))
    R = Box.from_bounds([[-1.0, 1.0]])
    got = rect_mass_bounds(G, R)
    lo_expect = phi_oracle(1.5) - phi_oracle(-0.5)  # farthest mean endpoint
    hi_expect = phi_oracle(1.0) - phi_oracle(-1.0)  # mean at the midpoint
    assert got.lo == pytest.approx(lo_expect, abs=1e-12)
    assert got.hi == pytest.approx(hi_expect, abs=1e-12)
    o_lo, o_hi = _oracle_bounds_1d(-0.5, 0.5, 1.0, 1.0, -1.0, 1.0)
    assert got.lo == pytest.approx(o_lo, abs=1e-6)
    assert got.hi == pytest.approx(o_hi, abs=1e-6)


def test_rect_mass_bounds_std_box():
    G = GaussSet(M=Box.from_bounds([[0.0, 0.0]]), S=Box.from_bounds([[1.0, 2.0]]))
    R = Box.from_bounds([[-1.0, 1.0]])
    got = rect_mass_bounds(G, R)
    # Mean inside the rectangle: mass is monotone decreasing in s.
    assert got.lo == pytest.approx(phi_oracle(0.5) - phi_oracle(-0.5), abs=1e-12)
    assert got.hi == pytest.approx(phi_oracle(1.0) - phi_oracle(-1.0), abs=1e-12)
    o_lo, o_hi = _oracle_bounds_1d(0.0, 0.0, 1.0, 2.0, -1.0, 1.0)
    assert got.lo == pytest.approx(o_lo, abs=1e-6)
    assert got.hi == pytest.approx(o_hi, abs=1e-6)


def test_rect_mass_bounds_far_mean_box():
    G = GaussSet(M=Box.from_bounds([[5.0, 6.0]]), S=Box.from_bounds([[1.0, 1.0]]))
    R = Box.from_bounds([[-1.0, 1.0]])
    got = rect_mass_bounds(G, R)
    assert got.hi == pytest.approx(phi_oracle(-4.0) - phi_oracle(-6.0), abs=1e-12)
    assert got.lo == pytest.approx(phi_oracle(-5.0) - phi_oracle(-7.0), abs=1e-12)


def test_rect_mass_bounds_interior_sigma_peak():
    # Rectangle strictly on one side of every admissible mean: the interior
    # critical sigma is the maximiser.
    G = GaussSet(M=Box.from_bounds([[0.0, 0.0]]), S=Box.from_bounds([[0.2, 5.0]]))
    R = Box.from_bounds([[0.3, 1.7]])
    got = rect_mass_bounds(G, R)
    o_lo, o_hi = _oracle_bounds_1d(0.0, 0.0, 0.2, 5.0, 0.3, 1.7, rounds=6)
    assert got.lo == pytest.approx(o_lo, abs=1e-6)
    assert got.hi == pytest.approx(o_hi, abs=1e-6)
    # the peak is strictly better than both sigma endpoints
    edge = max(
        rect_mass(DiagGauss((0.0,), (0.2,)), R), rect_mass(DiagGauss((0.0,), (5.0,)), R)
    )
    assert got.hi > edge + 1e-3


def test_rect_mass_bounds_random_against_zoom_oracle():
    rng = np.random.default_rng(12)
    for _ in range(25):
        m_lo = rng.uniform(-2, 2)
        m_hi = m_lo + rng.uniform(0, 1.5)
        s_lo = rng.uniform(0.1, 1.5)
        s_hi = s_lo + rng.uniform(0, 1.5)
        a = rng.uniform(-3, 2)
        b = a + rng.uniform(0.05, 3)
        got = rect_mass_bounds(
            GaussSet(M=Box.from_bounds([[m_lo, m_hi]]), S=Box.from_bounds([[s_lo, s_hi]])),
            Box.from_bounds([[a, b]]),
        )
        o_lo, o_hi = _oracle_bounds_1d(m_lo, m_hi, s_lo, s_hi, a, b)
        assert got.lo == pytest.approx(o_lo, abs=1e-6)
        assert got.hi == pytest.approx(o_hi, abs=1e-6)


def test_rect_mass_bounds_soundness_sampled():
    # Sampled kernels never fall outside the returned bounds (sound side,
    # no tolerance): 10^5 samples across random parameter boxes.
    rng = np.random.default_rng(21)
    total = 0
    while total < 100_000:
        m_lo = rng.uniform(-2, 2)
        m_hi = m_lo + rng.uniform(0, 1.0)
        s_lo = rng.uniform(0.1, 1.2)
        s_hi = s_lo + rng.uniform(0, 1.0)
        a = rng.uniform(-3, 2)
        b = a + rng.uniform(0.05, 3)
        G = GaussSet(M=Box.from_bounds([[m_lo, m_hi]]), S=Box.from_bounds([[s_lo, s_hi]]))
        R = Box.from_bounds([[a, b]])
        bounds = rect_mass_bounds(G, R)
        ms = rng.uniform(m_lo, m_hi, size=500)
        ss = rng.uniform(s_lo, s_hi, size=500)
        for m, s in zip(ms, ss):
            mass = rect_mass(DiagGauss((m,), (s,)), R)
            assert bounds.lo <= mass <= bounds.hi
        total += 500


def test_rect_mass_bounds_2d_product():
    G = GaussSet(
        M=Box.from_bounds([[-0.5, 0.5], [0.0, 0.0]]),
        S=Box.from_bounds([[1.0, 1.0], [1.0, 2.0]]),
    )
    R = Box.from_bounds([[-1.0, 1.0], [-1.0, 1.0]])
    got = rect_mass_bounds(G, R)
    d1 = rect_mass_bounds(
        GaussSet(M=Box.from_bounds([[-0.5, 0.5]]), S=Box.from_bounds([[1.0, 1.0]])),
        Box.from_bounds([[-1.0, 1.0]]),
    )
    d2 = rect_mass_bounds(
        GaussSet(M=Box.from_bounds([[0.0, 0.0]]), S=Box.from_bounds([[1.0, 2.0]])),
        Box.from_bounds([[-1.0, 1.0]]),
    )
    assert got.lo == pytest.approx(d1.lo * d2.lo, rel=1e-12)
    assert got.hi == pytest.approx(d1.hi * d2.hi, rel=1e-12)


def test_rect_mass_bounds_degenerate_rectangle():
    G = GaussSet(M=Box.from_bounds([[0.0, 1.0]]), S=Box.from_bounds([[0.5, 1.0]]))
    R = Box.from_bounds([[0.5, 0.5]])
    got = rect_mass_bounds(G, R)
    assert got.lo == 0.0 and got.hi == 0.0


def test_diag_gauss_validation():
    with pytest.raises(ValueError):
        DiagGauss(m=(0.0,), s=(0.0,))
    with pytest.raises(ValueError):
        GaussSet(M=Box.from_bounds([[0, 1]]), S=Box.from_bounds([[0.0, 1.0]]))
