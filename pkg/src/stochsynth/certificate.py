"""Completeness certificate for the abstraction parameters.

An abstraction built with grid sizes (eta, rho) and mean precision k is
robustly complete for a disturbance gap theta2 - theta1 when

    2*eta + ws(eta) + L_u * rho + k  <=  theta2 - theta1,

where ws(eta) = (sqrt(2n) + 2) * eta is half the total-variation covering
radius of the reference kernels.  The certificate records both sides of
the inequality; `suggest_parameters` inverts it with a third of the gap
budgeted to each parameter group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .metrics import ws_radius
from .system import SystemSpec


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class CompletenessCertificate:
    eta: float
    rho: float
    k: float
    n: int
    L_u: float
    ws: float
    tv: float
    lhs: float
    gap: float
    holds: bool


def certificate_lhs(n: int, eta: float, rho: float, k: float, L_u: float) -> float:
    ws, tv = ws_radius(n, eta)
    return 2.0 * eta + 0.5 * tv + L_u * rho + k


def check_certificate(
    spec: SystemSpec, eta: float, rho: float, k: float
) -> CompletenessCertificate:
    if spec.theta2 is None:
        raise CertificateError("no disturbance gap target: config does not set theta2")
    ws, tv = ws_radius(spec.n, eta)
    lhs = 2.0 * eta + 0.5 * tv + spec.L_u * rho + k
    gap = spec.theta2 - spec.theta1
    return CompletenessCertificate(
        eta=eta,
        rho=rho,
        k=k,
        n=spec.n,
        L_u=spec.L_u,
        ws=ws,
        tv=tv,
        lhs=lhs,
        gap=gap,
        holds=lhs <= gap,
    )


def suggest_parameters(spec: SystemSpec) -> tuple[float, float, float]:
    """Parameters (eta, rho, k) that satisfy the certificate inequality.

    A third of the gap goes to the eta terms, a third to the control grid,
    and a third (less a 1% margin) to the mean precision.
    """
    if spec.theta2 is None:
        raise CertificateError("no disturbance gap target: config does not set theta2")
    gap = spec.theta2 - spec.theta1
    if gap <= 0.0:
        raise CertificateError("disturbance gap must be positive")
    eta = gap / (3.0 * (math.sqrt(2.0 * spec.n) + 4.0))
    rho = gap / (3.0 * spec.L_u)
    k = (gap / 3.0) * 0.99
    return eta, rho, k
