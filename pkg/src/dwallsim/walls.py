"""Explicit wall profiles, their moving frame, and the gauge action.

Sign conventions (sigma = (sigma1, sigma2), G = Gamma, c = cos(gamma x),
s = sin(gamma x), with sin theta*(sigma1 x) = sech(Gx) and
cos theta*(sigma1 x) = sigma1 tanh(Gx)):

    w = ( sigma1 tanh(Gx),  sigma2 sech(Gx) c,  -sigma2 sech(Gx) s )
    n = ( -sech(Gx),  sigma1 sigma2 tanh(Gx) c,  -sigma1 sigma2 tanh(Gx) s )
    p = ( 0,  sigma2 s,  sigma2 c )

These satisfy dE(w) = beta* w, the first-order wall ODE
dx w = sigma1 G w x (e1 x w) - gamma e1 x w, unit energy E(w) = 2G, and make
the precessing gauge below an exact LLG solution; the winding sign of the
third component is forced by those identities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import RegridOutOfRangeError
from .grid import Grid1D, SpinField, project_unit, resample_cubic
from .model import Gauge, ModelParams, WallSign, rotation_matrix


def theta_star(x, Gamma: float):
    """Wall angle theta*(x) = 2 arctan(exp(-Gamma x)), decreasing from pi to 0."""
    with np.errstate(over="ignore"):
        return 2.0 * np.arctan(np.exp(-Gamma * np.asarray(x, dtype=float)))


def beta_star(x, Gamma: float):
    """Lagrange multiplier 2 Gamma^2 sin^2 theta*(x) of the static wall."""
    return 2.0 * Gamma**2 / np.cosh(Gamma * np.asarray(x, dtype=float)) ** 2


@dataclass(frozen=True)
class AnalyticProfile:
    """A closed-form vector profile together with a pending gauge.

    sample(x) evaluates R_phi base(x - y); composing gauges therefore stays
    exact, with no interpolation.
    """

    base: object  # callable x -> (len(x), 3)
    gauge: Gauge = Gauge(0.0, 0.0)

    def shifted(self, g: Gauge) -> "AnalyticProfile":
        return replace(self, gauge=g.compose(self.gauge))

    def sample(self, x: np.ndarray) -> np.ndarray:
        v = self.base(np.asarray(x, dtype=float) - self.gauge.y)
        if self.gauge.phi != 0.0:
            v = v @ rotation_matrix(self.gauge.phi).T
        return v


def _wall_base(sigma: WallSign, params: ModelParams):
    s1, s2, gam, G = sigma.sigma1, sigma.sigma2, params.gamma, params.Gamma

    def fn(x):
        st = 1.0 / np.cosh(G * x)
        ct = s1 * np.tanh(G * x)
        c, s = np.cos(gam * x), np.sin(gam * x)
        return np.stack([ct, s2 * st * c, -s2 * st * s], axis=-1)

    return fn


def _frame_n_base(sigma: WallSign, params: ModelParams):
    s12, gam, G = sigma.sigma1 * sigma.sigma2, params.gamma, params.Gamma

    def fn(x):
        st = 1.0 / np.cosh(G * x)
        t = np.tanh(G * x)
        c, s = np.cos(gam * x), np.sin(gam * x)
        return np.stack([-st, s12 * t * c, -s12 * t * s], axis=-1)

    return fn


def _frame_p_base(sigma: WallSign, params: ModelParams):
    s2, gam = sigma.sigma2, params.gamma

    def fn(x):
        c, s = np.cos(gam * x), np.sin(gam * x)
        z = np.zeros_like(np.asarray(x, dtype=float))
        return np.stack([z, s2 * s, s2 * c], axis=-1)

    return fn


def wall_profile(sigma: WallSign, params: ModelParams, grid: Grid1D) -> SpinField:
    """The explicit wall w*^sigma sampled on the grid (analytic source attached)."""
    src = AnalyticProfile(_wall_base(sigma, params))
    return SpinField(grid, src.sample(grid.x), source=src)


def moving_frame(sigma: WallSign, params: ModelParams, grid: Grid1D):
    """Orthonormal frame (w*, n*, p*) along the wall, from the closed forms.

    n* is evaluated singularity-free (never dividing by sin theta*), using
    w x (e1 x w) = e1 - m1 w.
    """
    out = []
    for base in (_wall_base(sigma, params), _frame_n_base(sigma, params), _frame_p_base(sigma, params)):
        src = AnalyticProfile(base)
        out.append(SpinField(grid, src.sample(grid.x), source=src))
    return tuple(out)


def wall_arrays(sigma: WallSign, params: ModelParams, x: np.ndarray, gauge: Gauge | None = None):
    """Closed-form (g.w, dx(g.w), e1 x (g.w)) evaluated at the points x.

    Used by the modulation solver, which needs the shifted wall, its spatial
    derivative, and the rotation generator without any resampling.
    """
    g = gauge or Gauge(0.0, 0.0)
    xi = np.asarray(x, dtype=float) - g.y
    s1, s2, gam, G = sigma.sigma1, sigma.sigma2, params.gamma, params.Gamma
    st = 1.0 / np.cosh(G * xi)
    t = np.tanh(G * xi)
    c, s = np.cos(gam * xi), np.sin(gam * xi)
    w = np.stack([s1 * t, s2 * st * c, -s2 * st * s], axis=-1)
    n = np.stack([-st, s1 * s2 * t * c, -s1 * s2 * t * s], axis=-1)
    z = np.zeros_like(xi)
    p = np.stack([z, s2 * s, s2 * c], axis=-1)
    dw = -st[:, None] * (s1 * G * n + gam * p)
    e1xw = st[:, None] * p
    if g.phi != 0.0:
        R = rotation_matrix(g.phi).T
        w, dw, e1xw = w @ R, dw @ R, e1xw @ R
    return w, dw, e1xw


def gauge_apply(g: Gauge, f: SpinField) -> SpinField:
    """Act with g = (y, phi): translate by y, rotate by phi about e1.

    Fields carrying an analytic source are regenerated exactly at the shifted
    coordinates; generic fields are resampled with Catmull-Rom cubic
    interpolation and reprojected onto the sphere.
    """
    if g.y == 0.0 and g.phi == 0.0:
        return f
    if f.source is not None:
        src = f.source.shifted(g)
        return SpinField(f.grid, src.sample(f.grid.x), source=src)
    try:
        v = resample_cubic(f.values, f.grid, f.grid.x - g.y)
    except IndexError as exc:
        raise RegridOutOfRangeError(
            f"translation by {g.y} needs samples outside the grid and the field has no analytic source"
        ) from exc
    if g.phi != 0.0:
        v = v @ rotation_matrix(g.phi).T
    return SpinField(f.grid, project_unit(v))


def precessing_gauge(sigma: WallSign, params: ModelParams, t: float) -> Gauge:
    """Gauge g*^sigma(t) of the exact precessing-wall solution.

    y(t) = -sigma1 (alpha/Gamma) int_0^t h and
    phi(t) = (-1 + sigma1 alpha gamma / Gamma) int_0^t h; the integral is
    exact for the closed-form field families.  The phase-sign exponent is
    sigma1: together with the profile above this makes t -> g(t).w*^sigma an
    exact LLG solution (checked directly in the tests).
    """
    I = params.applied_field.integral(0.0, t)
    y = -params.alpha / params.Gamma * I
    phi = (-1.0 + sigma.sigma1 * params.alpha * params.gamma / params.Gamma) * I
    return Gauge(sigma.sigma1 * y, phi)


def two_wall_profile(
    gp: Gauge,
    gm: Gauge,
    params: ModelParams,
    grid: Grid1D,
    sign_plus: WallSign = WallSign(1, 1),
    sign_minus: WallSign = WallSign(-1, 1),
) -> np.ndarray:
    """Superposition P = gp.w*^+ + gm.w*^- + e1 (a 3-vector field, not unit norm)."""
    if not (gp.y > 0.0 > gm.y):
        warnings.warn("two-wall profile expects gp.y > 0 > gm.y", stacklevel=2)
    wp, _, _ = wall_arrays(sign_plus, params, grid.x, gp)
    wm, _, _ = wall_arrays(sign_minus, params, grid.x, gm)
    out = wp + wm
    out[:, 0] += 1.0
    return out


def wall_tail_envelope(x, Gamma: float):
    """Reference envelope exp(-Gamma x) for the right tail of w - e1 and derivatives."""
    return np.exp(-Gamma * np.asarray(x, dtype=float))
