"""Explicit time integration of the LLG flow with sphere projection.

The right-hand side is m x H - alpha m x (m x H); it is tangent to the sphere
for any |m|, so stages are evaluated unprojected and only the completed step
is renormalized.  The stiffness comes from -dxx (dt ~ dx^2); RK4 is the
default, Heun is kept as a cross-check scheme.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .energy import dissipation_D, effective_field, energy_total, forcing_F
from .errors import BlowupError, CflViolationWarning, NanDetectedError, ValidationError
from .grid import SpinField, calh_size
from .model import ModelParams

SCHEMES = ("RK4_PROJECT", "HEUN_PROJECT")
BOUNDARIES = ("NEUMANN", "CLAMP_E1")
_BC_CODE = {"NEUMANN": 0, "CLAMP_E1": 1}

# advisory parabolic stability factor for dt <= C * dx^2 / sqrt(1 + alpha^2)
_STABILITY_FACTOR = {"RK4_PROJECT": 0.6, "HEUN_PROJECT": 0.4}

BLOWUP_GROWTH_FACTOR = 1e3


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: float | None = None  # None = AUTO: dt = cfl * dx^2
    cfl: float = 0.2
    scheme: str = "RK4_PROJECT"
    boundary: str = "NEUMANN"
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValidationError("t_end", "must be > 0")
        if self.dt is not None and not self.dt > 0:
            raise ValidationError("dt", "must be > 0 or AUTO")
        if not self.cfl > 0:
            raise ValidationError("cfl", "must be > 0")
        if self.scheme not in SCHEMES:
            raise ValidationError("scheme", f"must be one of {SCHEMES}")
        if self.boundary not in BOUNDARIES:
            raise ValidationError("boundary", f"must be one of {BOUNDARIES}")
        if self.snapshot_stride < 1:
            raise ValidationError("snapshot_stride", "must be >= 1")

    def resolve_dt(self, dx: float) -> float:
        return self.cfl * dx * dx if self.dt is None else self.dt


@dataclass
class Trajectory:
    """Recorded snapshots plus named scalar series (energy, D, F, hcal1)."""

    times: np.ndarray
    snapshots: list
    series: dict
    params: ModelParams
    config: SimConfig


def llg_rhs(m: SpinField, params: ModelParams, t: float = 0.0) -> np.ndarray:
    """Reference right-hand side m x H - alpha m x (m x H), H from the energy module.

    Uses the core one-sided boundary stencils; the stepping kernels apply the
    configured ghost handling instead, which only differs at the two end nodes.
    """
    v = m.values
    H = effective_field(m, params, t)
    a = np.cross(v, H)
    return a - params.alpha * np.cross(v, a)


@numba.njit(cache=True)
def _rhs_kernel(m, out, dx, gamma, alpha, h, bc):
    n = m.shape[0]
    inv2dx = 1.0 / (2.0 * dx)
    invdx2 = 1.0 / (dx * dx)
    for i in range(n):
        if bc == 1 and (i == 0 or i == n - 1):
            out[i, 0] = 0.0
            out[i, 1] = 0.0
            out[i, 2] = 0.0
            continue
        # NEUMANN mirrors the ghost node (x_-1 := x_1), CLAMP only hits the ends
        jm = 1 if i == 0 else i - 1
        jp = n - 2 if i == n - 1 else i + 1
        m0, m1, m2 = m[i, 0], m[i, 1], m[i, 2]
        mxx0 = (m[jm, 0] - 2.0 * m0 + m[jp, 0]) * invdx2
        mxx1 = (m[jm, 1] - 2.0 * m1 + m[jp, 1]) * invdx2
        mxx2 = (m[jm, 2] - 2.0 * m2 + m[jp, 2]) * invdx2
        mx1 = (m[jp, 1] - m[jm, 1]) * inv2dx
        mx2 = (m[jp, 2] - m[jm, 2]) * inv2dx
        H0 = mxx0 + h
        H1 = mxx1 - 2.0 * gamma * mx2 - m1
        H2 = mxx2 + 2.0 * gamma * mx1 - m2
        a0 = m1 * H2 - m2 * H1
        a1 = m2 * H0 - m0 * H2
        a2 = m0 * H1 - m1 * H0
        b0 = m1 * a2 - m2 * a1
        b1 = m2 * a0 - m0 * a2
        b2 = m0 * a1 - m1 * a0
        out[i, 0] = a0 - alpha * b0
        out[i, 1] = a1 - alpha * b1
        out[i, 2] = a2 - alpha * b2


@numba.njit(cache=True)
def _axpy(m, k, c, out):
    n = m.shape[0]
    for i in range(n):
        out[i, 0] = m[i, 0] + c * k[i, 0]
        out[i, 1] = m[i, 1] + c * k[i, 1]
        out[i, 2] = m[i, 2] + c * k[i, 2]


@numba.njit(cache=True)
def _rk4_step(m, dx, gamma, alpha, h0, h1, h2, dt, bc, k1, k2, k3, k4, tmp):
    # h0/h1/h2 = field at t, t + dt/2, t + dt
    _rhs_kernel(m, k1, dx, gamma, alpha, h0, bc)
    _axpy(m, k1, 0.5 * dt, tmp)
    _rhs_kernel(tmp, k2, dx, gamma, alpha, h1, bc)
    _axpy(m, k2, 0.5 * dt, tmp)
    _rhs_kernel(tmp, k3, dx, gamma, alpha, h1, bc)
    _axpy(m, k3, dt, tmp)
    _rhs_kernel(tmp, k4, dx, gamma, alpha, h2, bc)
    c = dt / 6.0
    n = m.shape[0]
    for i in range(n):
        o0 = m[i, 0] + c * (k1[i, 0] + 2.0 * (k2[i, 0] + k3[i, 0]) + k4[i, 0])
        o1 = m[i, 1] + c * (k1[i, 1] + 2.0 * (k2[i, 1] + k3[i, 1]) + k4[i, 1])
        o2 = m[i, 2] + c * (k1[i, 2] + 2.0 * (k2[i, 2] + k3[i, 2]) + k4[i, 2])
        r = 1.0 / math.sqrt(o0 * o0 + o1 * o1 + o2 * o2)
        m[i, 0] = o0 * r
        m[i, 1] = o1 * r
        m[i, 2] = o2 * r


@numba.njit(cache=True)
def _heun_step(m, dx, gamma, alpha, h0, h2, dt, bc, k1, k2, tmp):
    _rhs_kernel(m, k1, dx, gamma, alpha, h0, bc)
    _axpy(m, k1, dt, tmp)
    _rhs_kernel(tmp, k2, dx, gamma, alpha, h2, bc)
    c = 0.5 * dt
    n = m.shape[0]
    for i in range(n):
        o0 = m[i, 0] + c * (k1[i, 0] + k2[i, 0])
        o1 = m[i, 1] + c * (k1[i, 1] + k2[i, 1])
        o2 = m[i, 2] + c * (k1[i, 2] + k2[i, 2])
        r = 1.0 / math.sqrt(o0 * o0 + o1 * o1 + o2 * o2)
        m[i, 0] = o0 * r
        m[i, 1] = o1 * r
        m[i, 2] = o2 * r


class _Workspace:
    def __init__(self, n):
        self.bufs = [np.empty((n, 3)) for _ in range(5)]


def _check_cfl(dt: float, dx: float, params: ModelParams, scheme: str):
    bound = _STABILITY_FACTOR[scheme] * dx * dx / math.sqrt(1.0 + params.alpha**2)
    if dt > bound * (1.0 + 1e-12):
        warnings.warn(
            f"dt = {dt:.3e} exceeds the advisory stability bound {bound:.3e} for {scheme}",
            CflViolationWarning,
            stacklevel=3,
        )


def step(
    m: SpinField,
    params: ModelParams,
    t: float,
    dt: float,
    scheme: str = "RK4_PROJECT",
    boundary: str = "NEUMANN",
    _ws: _Workspace | None = None,
) -> SpinField:
    """One explicit step followed by node-wise renormalization."""
    if scheme not in SCHEMES:
        raise ValidationError("scheme", f"must be one of {SCHEMES}")
    _check_cfl(dt, m.grid.dx, params, scheme)
    ws = _ws or _Workspace(m.grid.n)
    work = np.array(m.values)  # kernels update in place
    hfun = params.applied_field
    bc = _BC_CODE[boundary]
    if scheme == "RK4_PROJECT":
        k1, k2, k3, k4, tmp = ws.bufs
        _rk4_step(
            work, m.grid.dx, params.gamma, params.alpha,
            float(hfun(t)), float(hfun(t + 0.5 * dt)), float(hfun(t + dt)),
            dt, bc, k1, k2, k3, k4, tmp,
        )
    else:
        k1, k2, tmp = ws.bufs[:3]
        _heun_step(
            work, m.grid.dx, params.gamma, params.alpha,
            float(hfun(t)), float(hfun(t + dt)), dt, bc, k1, k2, tmp,
        )
    if not np.isfinite(work).all():
        raise NanDetectedError(f"NaN after step at t = {t!r}")
    return SpinField(m.grid, work)


def run(m0: SpinField, params: ModelParams, cfg: SimConfig) -> Trajectory:
    """Advance to t_end recording snapshots and the E/D/F/hcal1 series.

    Deterministic for a fixed config.  Raises NanDetectedError on NaN and
    BlowupError (with the partial trajectory attached) when the discrete
    H^1 size exceeds 1e3 x its initial value.
    """
    dx = m0.grid.dx
    dt = cfg.resolve_dt(dx)
    _check_cfl(dt, dx, params, cfg.scheme)
    n_steps = max(1, int(math.ceil(cfg.t_end / dt - 1e-12)))
    bc = _BC_CODE[cfg.boundary]
    hfun = params.applied_field

    ws = _Workspace(m0.grid.n)
    k1, k2, k3, k4, tmp = ws.bufs
    work = np.array(m0.values)

    times = [0.0]
    snapshots = [m0]
    series: dict[str, list] = {"energy": [], "dissipation": [], "forcing": [], "hcal1": []}

    def record(f: SpinField):
        series["energy"].append(energy_total(f, params).total)
        series["dissipation"].append(dissipation_D(f, params))
        series["forcing"].append(forcing_F(f, params))
        series["hcal1"].append(calh_size(f, 1))

    record(m0)
    h1_initial = series["hcal1"][0]

    t = 0.0
    for k in range(n_steps):
        dtk = min(dt, cfg.t_end - t)
        if cfg.scheme == "RK4_PROJECT":
            _rk4_step(
                work, dx, params.gamma, params.alpha,
                float(hfun(t)), float(hfun(t + 0.5 * dtk)), float(hfun(t + dtk)),
                dtk, bc, k1, k2, k3, k4, tmp,
            )
        else:
            _heun_step(work, dx, params.gamma, params.alpha, float(hfun(t)), float(hfun(t + dtk)), dtk, bc, k1, k2, tmp)
        t += dtk
        last = k == n_steps - 1
        if (k + 1) % cfg.snapshot_stride == 0 or last:
            if not np.isfinite(work).all():
                raise NanDetectedError(f"NaN detected at t = {t:.6g} (step {k + 1})")
            snap = SpinField(m0.grid, work.copy())
            times.append(t)
            snapshots.append(snap)
            record(snap)
            if series["hcal1"][-1] > BLOWUP_GROWTH_FACTOR * h1_initial:
                partial = Trajectory(np.array(times), snapshots, {k_: np.array(v) for k_, v in series.items()}, params, cfg)
                raise BlowupError(f"discrete H^1 size blew up at t = {t:.6g}", trajectory=partial, index=len(times) - 1)

    return Trajectory(np.array(times), snapshots, {k_: np.array(v) for k_, v in series.items()}, params, cfg)


@dataclass(frozen=True)
class MonitorStatus:
    ok: bool
    reason: str | None = None
    index: int | None = None


def blowup_monitor(traj: Trajectory) -> MonitorStatus:
    """Flag NaNs or discrete-H^1 growth beyond 1e3 x initial in a trajectory."""
    h1 = np.asarray(traj.series["hcal1"], dtype=float)
    if len(h1) == 0:
        raise ValidationError("trajectory", "empty trajectory")
    bad = ~np.isfinite(h1)
    for name in ("energy", "dissipation", "forcing"):
        bad |= ~np.isfinite(np.asarray(traj.series[name], dtype=float))
    if bad.any():
        return MonitorStatus(False, "NAN", int(np.argmax(bad)))
    grow = h1 > BLOWUP_GROWTH_FACTOR * h1[0]
    if grow.any():
        return MonitorStatus(False, "H1_GROWTH", int(np.argmax(grow)))
    return MonitorStatus(True)
