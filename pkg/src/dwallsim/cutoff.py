"""Smooth localisation functions psi_R and their tabulated derivatives.

psi is built from the degree-7 smoothstep s(u) = -20u^7 + 70u^6 - 84u^5 + 35u^4
on u = (x/R + 1)/2, which vanishes to 4th order at u = 0.  Hence
sqrt(psi) = u^2 sqrt(g(u)) with g(u) = 35 - 84u + 70u^2 - 20u^3 > 0 on [0, 1],
so sqrt(psi) has three bounded derivatives.  Scaling is exact:
||d^k psi_R||_inf = R^-k ||d^k psi_1||_inf because psi_R(x) = psi_1(x/R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import Grid1D


def _smoothstep(u: np.ndarray):
    """s, s', s'', s''' of the degree-7 smoothstep on [0, 1]."""
    s = u**4 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)))
    s1 = 140.0 * u**3 * (1.0 - u) ** 3
    s2 = 420.0 * u**2 * (1.0 - u) ** 2 * (1.0 - 2.0 * u)
    s3 = 840.0 * u * (1.0 - u) * (1.0 - 5.0 * u + 5.0 * u**2)
    return s, s1, s2, s3


def _sqrt_smoothstep(u: np.ndarray):
    """phi = sqrt(s) = u^2 sqrt(g) and its three u-derivatives.

    Written through g(u) = 35 - 84u + 70u^2 - 20u^3 (decreasing from 35 to 1
    on [0,1]) so everything stays regular at u = 0.
    """
    g = 35.0 + u * (-84.0 + u * (70.0 - 20.0 * u))
    g1 = -84.0 + u * (140.0 - 60.0 * u)
    g2 = 140.0 - 120.0 * u
    g3 = -120.0
    q = np.sqrt(g)
    q1 = g1 / (2.0 * q)
    q2 = g2 / (2.0 * q) - g1 * g1 / (4.0 * g * q)
    q3 = g3 / (2.0 * q) - 3.0 * g1 * g2 / (4.0 * g * q) + 3.0 * g1**3 / (8.0 * g * g * q)
    phi = u * u * q
    p1 = 2.0 * u * q + u * u * q1
    p2 = 2.0 * q + 4.0 * u * q1 + u * u * q2
    p3 = 6.0 * q1 + 6.0 * u * q2 + u * u * q3
    return phi, p1, p2, p3


@dataclass(frozen=True)
class Cutoff:
    """Tabulated psi_R and derivatives on a grid.

    With orientation +1, psi == 0 left of center-R and == 1 right of center+R;
    orientation -1 mirrors this.  1 - psi(x) = psi(2*center - x) pointwise.
    """

    R: float
    center: float
    orientation: int
    grid: Grid1D
    psi: np.ndarray
    sqrt_psi: np.ndarray
    dpsi: np.ndarray
    d2psi: np.ndarray
    dsqrt: np.ndarray
    d2sqrt: np.ndarray
    d3sqrt: np.ndarray

    def complement(self) -> "Cutoff":
        """The mirrored cutoff 1 - psi, i.e. opposite orientation."""
        return make_cutoff(self.R, self.center, -self.orientation, self.grid)


def make_cutoff(R: float, center: float, orientation: int, grid: Grid1D) -> Cutoff:
    """Build the smoothstep cutoff psi_R(orientation * (x - center)) on the grid."""
    if not R >= 1.0:
        raise ValidationError("R", "cutoff scale must be >= 1")
    if orientation not in (-1, 1):
        raise ValidationError("orientation", "must be +1 or -1")
    x = grid.x
    u = (orientation * (x - center) / R + 1.0) / 2.0
    inside = (u > 0.0) & (u < 1.0)
    uu = np.clip(u, 0.0, 1.0)

    s, s1, s2, s3 = _smoothstep(uu)
    phi, p1, p2, p3 = _sqrt_smoothstep(uu)

    psi = np.where(u >= 1.0, 1.0, np.where(u <= 0.0, 0.0, s))
    sq = np.where(u >= 1.0, 1.0, np.where(u <= 0.0, 0.0, phi))
    # d/dx = orientation/(2R) d/du; outside the transition all derivatives vanish
    c = orientation / (2.0 * R)
    zero = np.zeros_like(x)
    arrays = dict(
        psi=psi,
        sqrt_psi=sq,
        dpsi=np.where(inside, c * s1, zero),
        d2psi=np.where(inside, c * c * s2, zero),
        dsqrt=np.where(inside, c * p1, zero),
        d2sqrt=np.where(inside, c * c * p2, zero),
        d3sqrt=np.where(inside, c**3 * p3, zero),
    )
    for a in arrays.values():
        a.flags.writeable = False
    return Cutoff(R=float(R), center=float(center), orientation=orientation, grid=grid, **arrays)


def cutoff_pair(R: float, grid: Grid1D, center: float = 0.0) -> tuple[Cutoff, Cutoff]:
    """The partition pair (psi_R(x-c), psi_R(-(x-c))) used to split energies."""
    return (make_cutoff(R, center, +1, grid), make_cutoff(R, center, -1, grid))
