"""Uniform 1D grids, sphere-valued fields, and discrete calculus.

Difference operators are centered 2nd order in the interior with one-sided
2nd-order stencils at the boundary; quadrature is trapezoid throughout.
Boundary-condition handling (ghost nodes) lives in the integrator, not here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooSmallError, ValidationError

UNIT_NORM_ATOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid x_i = x_min + i*dx, i = 0..n-1."""

    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        if not self.dx > 0:
            raise ValidationError("dx", "must be > 0")
        if self.n < 3:
            raise GridTooSmallError("grid needs at least 3 points")

    @classmethod
    def symmetric(cls, extent: float, n: int) -> "Grid1D":
        """Grid on [-extent, extent] with n points."""
        if n < 3:
            raise GridTooSmallError("grid needs at least 3 points")
        return cls(-extent, 2.0 * extent / (n - 1), n)

    @property
    def x(self) -> np.ndarray:
        xs = self.x_min + self.dx * np.arange(self.n)
        xs.flags.writeable = False
        return xs

    @property
    def x_max(self) -> float:
        return self.x_min + self.dx * (self.n - 1)

    @property
    def length(self) -> float:
        return self.dx * (self.n - 1)


@dataclass(frozen=True)
class SpinField:
    """Sphere-valued field m(x_i) on a grid.

    `values` must already be unit norm to 1e-12 (use :meth:`projected` to
    normalize raw data).  `source`, when present, is an analytic profile the
    gauge action can re-sample exactly; see walls.AnalyticProfile.
    """

    grid: Grid1D
    values: np.ndarray
    source: object | None = None
    norm_atol: float = field(default=UNIT_NORM_ATOL, repr=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.n, 3):
            raise ValidationError("values", f"expected shape {(self.grid.n, 3)}, got {v.shape}")
        err = np.abs(np.sqrt((v * v).sum(axis=1)) - 1.0).max()
        if err > self.norm_atol:
            raise ValidationError("values", f"max | |m|-1 | = {err:.3e} exceeds {self.norm_atol:.1e}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def projected(cls, grid: Grid1D, values: np.ndarray, source=None) -> "SpinField":
        """Construct after node-wise renormalization onto the sphere."""
        v = np.asarray(values, dtype=float)
        r = np.sqrt((v * v).sum(axis=1))
        if not np.all(np.isfinite(r)) or r.min() <= 0.0:
            raise ValidationError("values", "cannot project zero or non-finite vectors")
        return cls(grid, v / r[:, None], source=source)


def project_unit(values: np.ndarray) -> np.ndarray:
    """Node-wise renormalization of a (n,3) array onto the unit sphere."""
    v = np.asarray(values, dtype=float)
    return v / np.sqrt((v * v).sum(axis=1))[:, None]


def _check_n(values: np.ndarray, least: int):
    if values.shape[0] < least:
        raise GridTooSmallError(f"need at least {least} nodes, got {values.shape[0]}")


def diff1(values: np.ndarray, dx: float) -> np.ndarray:
    """First derivative: centered interior, one-sided 2nd order at the ends."""
    v = np.asarray(values, dtype=float)
    _check_n(v, 3)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return out


def diff2(values: np.ndarray, dx: float) -> np.ndarray:
    """Second derivative: centered interior, one-sided 2nd order at the ends.

    The 4-point one-sided stencil needs n >= 4; for n == 3 the (1st-order)
    3-point stencil is used at the ends.
    """
    v = np.asarray(values, dtype=float)
    _check_n(v, 3)
    out = np.empty_like(v)
    inv = 1.0 / (dx * dx)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv
    if v.shape[0] >= 4:
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) * inv
    else:
        out[0] = (v[0] - 2.0 * v[1] + v[2]) * inv
        out[-1] = out[0]
    return out


def _restriction_slice(grid: Grid1D, restriction) -> slice:
    a, b = restriction
    lo = int(np.searchsorted(grid.x, a - 1e-12 * max(1.0, abs(a))))
    hi = int(np.searchsorted(grid.x, b + 1e-12 * max(1.0, abs(b)), side="right"))
    if hi - lo < 2:
        raise GridTooSmallError("restriction interval covers fewer than 2 nodes")
    return slice(lo, hi)


def integrate(values: np.ndarray, grid: Grid1D, weight=None, restriction=None) -> float:
    """Trapezoid quadrature of a scalar field, optionally psi-weighted.

    `weight` may be a Cutoff (its tabulated psi is used) or an (n,) array.
    `restriction` = (a, b) integrates over grid nodes inside [a, b] only.
    """
    f = np.asarray(values, dtype=float)
    if f.shape[0] != grid.n:
        raise ValidationError("values", "field/grid size mismatch")
    if weight is not None:
        psi = getattr(weight, "psi", weight)
        f = f * np.asarray(psi, dtype=float)
    sl = _restriction_slice(grid, restriction) if restriction is not None else slice(None)
    f = f[sl]
    return float((f.sum() - 0.5 * (f[0] + f[-1])) * grid.dx)


_ORDER_NAMES = {"L2": 0, "H1": 1, "H2": 2, 0: 0, 1: 1, 2: 2}


def sobolev_norm(values: np.ndarray, order, grid: Grid1D, weight=None, restriction=None) -> float:
    """Discrete L2/H1/H2 norm of a scalar or 3-vector field.

    With `weight` this is the norm of H^k(psi dx); with `restriction` the
    quadrature runs over the sub-interval only.
    """
    if order not in _ORDER_NAMES:
        raise ValidationError("order", "must be one of L2/H1/H2 or 0/1/2")
    k = _ORDER_NAMES[order]
    v = np.asarray(values, dtype=float)
    sq = (v * v).sum(axis=1) if v.ndim == 2 else v * v
    total = integrate(sq, grid, weight=weight, restriction=restriction)
    if k >= 1:
        d = diff1(v, grid.dx)
        sq = (d * d).sum(axis=1) if d.ndim == 2 else d * d
        total += integrate(sq, grid, weight=weight, restriction=restriction)
    if k >= 2:
        d = diff2(v, grid.dx)
        sq = (d * d).sum(axis=1) if d.ndim == 2 else d * d
        total += integrate(sq, grid, weight=weight, restriction=restriction)
    return float(np.sqrt(total))


def calh_size(m: SpinField, s: int = 1) -> float:
    """Discrete analogue of the adapted-Sobolev size: ||m2|| + ||m3|| + |m|_{H^s dot}.

    Realized for s = 1, 2 with difference quotients in place of the Fourier
    seminorm; finite for fields approaching +-e1 at the ends.
    """
    if s not in (1, 2):
        raise ValidationError("s", "only s = 1, 2 are realized discretely")
    g, v = m.grid, m.values
    n2 = np.sqrt(integrate(v[:, 1] * v[:, 1], g))
    n3 = np.sqrt(integrate(v[:, 2] * v[:, 2], g))
    d = diff1(v, g.dx) if s == 1 else diff2(v, g.dx)
    hs = np.sqrt(integrate((d * d).sum(axis=1), g))
    return float(n2 + n3 + hs)


def resample_cubic(values: np.ndarray, grid: Grid1D, points: np.ndarray) -> np.ndarray:
    """Catmull-Rom cubic interpolation of grid data at off-grid points.

    Requires every point to fall in [x_1, x_{n-2}] so the 4-point stencil is
    available; callers map violations to RegridOutOfRangeError.
    """
    v = np.asarray(values, dtype=float)
    pts = np.asarray(points, dtype=float)
    s = (pts - grid.x_min) / grid.dx
    i = np.clip(np.floor(s).astype(int), 1, grid.n - 3)
    t = s - i
    if np.any(s < 1.0 - 1e-12) or np.any(s > grid.n - 2.0 + 1e-12):
        raise IndexError("interpolation stencil out of range")
    f0, f1, f2, f3 = v[i - 1], v[i], v[i + 1], v[i + 2]
    tt = t if v.ndim == 1 else t[:, None]
    a = 2.0 * f1
    b = f2 - f0
    c = 2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3
    d = -f0 + 3.0 * f1 - 3.0 * f2 + f3
    return 0.5 * (a + tt * (b + tt * (c + tt * d)))
