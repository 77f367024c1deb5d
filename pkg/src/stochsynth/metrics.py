"""Distance bounds between transition measures.

Wasserstein-1 distances are taken with the max-norm ground metric on R^n.
For two diagonal Gaussians the distance is sandwiched between the max-norm
mean gap and the 2-Wasserstein-style Euclidean bound; on a finite state set
with the discrete metric it collapses to half the L1 distance.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .gaussian import DiagGauss
from .intervals import Interval


def gauss_w1_bounds(g1: DiagGauss, g2: DiagGauss) -> Interval:
    """Lower/upper bounds on W1(g1, g2) for diagonal Gaussians."""
    if g1.n != g2.n:
        raise ValueError("dimension mismatch")
    mean_gap = max(abs(a - b) for a, b in zip(g1.m, g2.m))
    mean_sq = sum((a - b) ** 2 for a, b in zip(g1.m, g2.m))
    std_sq = sum((a - b) ** 2 for a, b in zip(g1.s, g2.s))
    upper = math.sqrt(mean_sq + std_sq)
    return Interval(mean_gap, max(mean_gap, upper))


def discrete_w1(p: Sequence[float], q: Sequence[float]) -> float:
    """W1 under the discrete metric: half the L1 distance."""
    pa = np.asarray(p, dtype=float)
    qa = np.asarray(q, dtype=float)
    if pa.shape != qa.shape:
        raise ValueError(f"support mismatch: {pa.shape} vs {qa.shape}")
    return 0.5 * float(np.abs(pa - qa).sum())


def ws_radius(n: int, eta: float) -> tuple[float, float]:
    """Reference-covering radii (ws, tv) for grid size eta in dimension n."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    if n < 1:
        raise ValueError("dimension must be at least 1")
    ws = (math.sqrt(2.0 * n) + 2.0) * eta
    return ws, 2.0 * ws
