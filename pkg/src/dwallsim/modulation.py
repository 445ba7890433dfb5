"""Decomposition m = g+.w*+ + g-.w*- + e1 + eps with four orthogonality conditions.

The gauges are found as the fixed point of G(m, p) = p - A^{-1} F(m, p): near
the two-wall profile the Jacobian of F in the gauges is A + O(tails + |eps|),
so G is a contraction.  A finite-difference Newton step is used as a fallback
when the contraction stalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegridOutOfRangeError, SeparationTooSmallError, ValidationError
from .grid import Grid1D, SpinField, integrate, resample_cubic, sobolev_norm
from .model import Gauge, ModelParams, WallSign, rotation_matrix
from .walls import precessing_gauge, wall_arrays

SIGNS_DEFAULT = (WallSign(1, 1), WallSign(-1, 1))
E1 = np.array([1.0, 0.0, 0.0])


@dataclass
class ModulationState:
    g_plus: Gauge
    g_minus: Gauge
    eps: np.ndarray
    ortho_residual: np.ndarray
    eps_h1: float
    eps_h2: float
    iterations: int
    converged: bool
    displacement_ratio: float
    grid: Grid1D
    signs: tuple[WallSign, WallSign]

    def profile(self, params: ModelParams) -> np.ndarray:
        """The fitted two-wall profile P; the input field is P + eps bit-wise."""
        wp, _, _ = wall_arrays(self.signs[0], params, self.grid.x, self.g_plus)
        wm, _, _ = wall_arrays(self.signs[1], params, self.grid.x, self.g_minus)
        out = wp + wm
        out[:, 0] += 1.0
        return out


def matrix_A(params: ModelParams):
    """The 4x4 gauge-response matrix A and its inverse.

    A = (2/Gamma) blockdiag(B, B) with B = [[1, gamma], [-gamma, -1]];
    B^2 = Gamma^2 I gives A^{-1} = (1/(2 Gamma)) blockdiag(B, B), det A = 16.
    """
    gam, G = params.gamma, params.Gamma
    B = np.array([[1.0, gam], [-gam, -1.0]])
    A = np.zeros((4, 4))
    A[:2, :2] = A[2:, 2:] = (2.0 / G) * B
    Ainv = np.zeros((4, 4))
    Ainv[:2, :2] = Ainv[2:, 2:] = B / (2.0 * G)
    return A, Ainv


def _templates(gp: Gauge, gm: Gauge, params: ModelParams, grid: Grid1D, signs):
    wp, dwp, e1wp = wall_arrays(signs[0], params, grid.x, gp)
    wm, dwm, e1wm = wall_arrays(signs[1], params, grid.x, gm)
    P = wp + wm
    P[:, 0] += 1.0
    return P, dwp, e1wp, dwm, e1wm


def _check_range(gp: Gauge, gm: Gauge, grid: Grid1D):
    for name, y in (("g_plus", gp.y), ("g_minus", gm.y)):
        if not (grid.x_min < y < grid.x_max):
            raise RegridOutOfRangeError(f"{name} center y = {y} outside grid [{grid.x_min}, {grid.x_max}]")


def orthogonality_bar_F(values: np.ndarray, gp: Gauge, gm: Gauge, params: ModelParams, grid: Grid1D,
                        signs=SIGNS_DEFAULT) -> np.ndarray:
    """The linear form: projections of a field onto the four symmetry directions."""
    _, dwp, e1wp, dwm, e1wm = _templates(gp, gm, params, grid, signs)
    v = np.asarray(values, dtype=float)
    return np.array(
        [
            integrate((v * dwp).sum(axis=1), grid),
            integrate((v * e1wp).sum(axis=1), grid),
            integrate((v * dwm).sum(axis=1), grid),
            integrate((v * e1wm).sum(axis=1), grid),
        ]
    )


def orthogonality_F(m, gp: Gauge, gm: Gauge, params: ModelParams, grid: Grid1D | None = None,
                    signs=SIGNS_DEFAULT) -> np.ndarray:
    """F(m, g+, g-): the four integrals of eps = m - P against the symmetry directions."""
    if isinstance(m, SpinField):
        grid = m.grid
        v = m.values
    else:
        if grid is None:
            raise ValidationError("grid", "required when m is a plain array")
        v = np.asarray(m, dtype=float)
    _check_range(gp, gm, grid)
    P, dwp, e1wp, dwm, e1wm = _templates(gp, gm, params, grid, signs)
    eps = v - P
    return np.array(
        [
            integrate((eps * dwp).sum(axis=1), grid),
            integrate((eps * e1wp).sum(axis=1), grid),
            integrate((eps * dwm).sum(axis=1), grid),
            integrate((eps * e1wm).sum(axis=1), grid),
        ]
    )


def separation_floor(params: ModelParams) -> float:
    return 8.0 / params.Gamma


def _fd_jacobian(m, p, params, grid, signs, h=1e-6):
    J = np.empty((4, 4))
    for j in range(4):
        dp = np.zeros(4)
        dp[j] = h
        fp = orthogonality_F(m, Gauge(*(p + dp)[:2]), Gauge(*(p + dp)[2:]), params, grid, signs)
        fm = orthogonality_F(m, Gauge(*(p - dp)[:2]), Gauge(*(p - dp)[2:]), params, grid, signs)
        J[:, j] = (fp - fm) / (2.0 * h)
    return J


def decompose_static(
    m,
    gp0: Gauge,
    gm0: Gauge,
    params: ModelParams,
    tol: float = 1e-10,
    max_iter: int = 50,
    signs=SIGNS_DEFAULT,
    newton_fallback: bool = True,
    grid: Grid1D | None = None,
) -> ModulationState:
    """Solve F(m, g+, g-) = 0 by the contraction p <- p - A^{-1} F(m, p).

    Returns the best iterate with converged=False instead of raising when the
    tolerance is not met.  `tol` bounds the max-abs of the four orthogonality
    integrals.  `m` may be a SpinField or a raw (n,3) array (e.g. an exact
    two-wall profile, which is off the sphere by the interaction error).
    """
    if isinstance(m, SpinField):
        grid, v = m.grid, m.values
    else:
        if grid is None:
            raise ValidationError("grid", "required when m is a plain array")
        v = np.asarray(m, dtype=float)
    if gp0.y - gm0.y < separation_floor(params):
        raise SeparationTooSmallError(
            f"initial separation {gp0.y - gm0.y:.3f} below floor {separation_floor(params):.3f}"
        )
    _, Ainv = matrix_A(params)
    p = np.array([gp0.y, gp0.phi, gm0.y, gm0.phi])
    best_p, best_res = p.copy(), math.inf
    prev_disp = None
    ratio = math.nan
    stalls = 0
    iterations = 0
    converged = False
    for _ in range(max_iter):
        F = orthogonality_F(v, Gauge(*p[:2]), Gauge(*p[2:]), params, grid, signs)
        res = float(np.abs(F).max())
        if res < best_res:
            best_res, best_p = res, p.copy()
        if res < tol:
            converged = True
            break
        if stalls >= 2 and newton_fallback:
            J = _fd_jacobian(v, p, params, grid, signs)
            try:
                dp = np.linalg.solve(J, F)
            except np.linalg.LinAlgError:
                dp = Ainv @ F
        else:
            dp = Ainv @ F
        p = p - dp
        iterations += 1
        disp = float(np.abs(dp).max())
        if prev_disp is not None and prev_disp > 0:
            ratio = disp / prev_disp
            stalls = stalls + 1 if ratio > 0.9 else 0
        prev_disp = disp
    else:
        F = orthogonality_F(v, Gauge(*p[:2]), Gauge(*p[2:]), params, grid, signs)
        res = float(np.abs(F).max())
        if res < best_res:
            best_res, best_p = res, p.copy()

    p = best_p
    gp, gm = Gauge(p[0], p[1]), Gauge(p[2], p[3])
    if not gp.y > gm.y:
        converged = False
    P, *_ = _templates(gp, gm, params, grid, signs)
    eps = v - P
    F = orthogonality_F(v, gp, gm, params, grid, signs)
    return ModulationState(
        g_plus=gp,
        g_minus=gm,
        eps=eps,
        ortho_residual=F,
        eps_h1=sobolev_norm(eps, 1, grid),
        eps_h2=sobolev_norm(eps, 2, grid),
        iterations=iterations,
        converged=converged,
        displacement_ratio=ratio,
        grid=grid,
        signs=signs,
    )


def initial_gauge_guess(m: SpinField, signs=SIGNS_DEFAULT) -> tuple[Gauge, Gauge]:
    """Coarse gauges from the m1 zero crossings and the transverse phase there.

    The + wall is the rightmost ascending crossing of m1, the - wall the
    leftmost descending one; the rotation angle comes from atan2 of (m3, m2)
    at the crossing, where the unrotated wall points along sigma2 e2.
    """
    x, v = m.grid.x, m.values
    m1 = v[:, 0]
    sgn = np.sign(m1)
    flips = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    if len(flips) < 2:
        raise ValidationError("m", "could not locate two wall transitions")

    def refine(i):
        t = m1[i] / (m1[i] - m1[i + 1])
        return x[i] + t * m.grid.dx, i if t < 0.5 else i + 1

    yp, ip = refine(flips[-1])
    ym, im = refine(flips[0])
    phip = math.atan2(signs[0].sigma2 * v[ip, 2], signs[0].sigma2 * v[ip, 1])
    phim = math.atan2(signs[1].sigma2 * v[im, 2], signs[1].sigma2 * v[im, 1])
    return Gauge(yp, phip), Gauge(ym, phim)


def _unwrap_towards(phi: float, ref: float) -> float:
    k = round((phi - ref) / (2.0 * math.pi))
    return phi - 2.0 * math.pi * k


@dataclass
class ModulationSeries:
    times: np.ndarray
    states: list
    y_plus: np.ndarray
    phi_plus: np.ndarray
    y_minus: np.ndarray
    phi_minus: np.ndarray
    eps_h1: np.ndarray
    eps_h2: np.ndarray
    residual_max: np.ndarray
    failed_index: int | None = None

    @property
    def converged(self) -> bool:
        return self.failed_index is None


def decompose_trajectory(
    traj,
    params: ModelParams,
    tol: float = 1e-10,
    gp0: Gauge | None = None,
    gm0: Gauge | None = None,
    signs=SIGNS_DEFAULT,
    max_iter: int = 50,
) -> ModulationSeries:
    """Decompose every snapshot, warm-starting each solve from the previous gauges.

    Phases are unwrapped continuously (no 2 pi jumps between snapshots).  On a
    failed solve one re-seed from the precessing-gauge prediction is attempted;
    if that also fails the series is truncated and the snapshot index flagged.
    """
    if gp0 is None or gm0 is None:
        gp0, gm0 = initial_gauge_guess(traj.snapshots[0], signs)
    states = []
    failed = None
    gp, gm = gp0, gm0
    for k, snap in enumerate(traj.snapshots):
        st = decompose_static(snap, gp, gm, params, tol=tol, max_iter=max_iter, signs=signs)
        if not st.converged and k > 0:
            t_prev, t_now = traj.times[k - 1], traj.times[k]
            dp = precessing_gauge(signs[0], params, t_now).as_array() - precessing_gauge(signs[0], params, t_prev).as_array()
            dm = precessing_gauge(signs[1], params, t_now).as_array() - precessing_gauge(signs[1], params, t_prev).as_array()
            seed_p = Gauge(gp.y + dp[0], gp.phi + dp[1])
            seed_m = Gauge(gm.y + dm[0], gm.phi + dm[1])
            st = decompose_static(snap, seed_p, seed_m, params, tol=tol, max_iter=max_iter, signs=signs)
        if not st.converged:
            failed = k
            break
        if states:
            st.g_plus = Gauge(st.g_plus.y, _unwrap_towards(st.g_plus.phi, states[-1].g_plus.phi))
            st.g_minus = Gauge(st.g_minus.y, _unwrap_towards(st.g_minus.phi, states[-1].g_minus.phi))
        states.append(st)
        gp, gm = st.g_plus, st.g_minus

    nk = len(states)
    return ModulationSeries(
        times=np.asarray(traj.times[:nk]),
        states=states,
        y_plus=np.array([s.g_plus.y for s in states]),
        phi_plus=np.array([s.g_plus.phi for s in states]),
        y_minus=np.array([s.g_minus.y for s in states]),
        phi_minus=np.array([s.g_minus.phi for s in states]),
        eps_h1=np.array([s.eps_h1 for s in states]),
        eps_h2=np.array([s.eps_h2 for s in states]),
        residual_max=np.array([float(np.abs(s.ortho_residual).max()) for s in states]),
        failed_index=failed,
    )


def frame_coefficients(eta: np.ndarray, sigma: WallSign, params: ModelParams, grid: Grid1D):
    """Coefficients (mu, nu, rho) of eta in the wall frame (w*, n*, p*), node-wise.

    For unit-norm m = w* + eta the sphere constraint forces mu = -|eta|^2 / 2.
    """
    from .walls import moving_frame

    w, n, p = moving_frame(sigma, params, grid)
    e = np.asarray(eta, dtype=float)
    mu = (e * w.values).sum(axis=1)
    nu = (e * n.values).sum(axis=1)
    rho = (e * p.values).sum(axis=1)
    return mu, nu, rho


def _shifted_field_values(values: np.ndarray, grid: Grid1D, shift: float) -> np.ndarray:
    """values(x + shift) on the grid, cubic off-grid, zero where unavailable."""
    pts = grid.x + shift
    lo, hi = grid.x_min + grid.dx, grid.x_max - 2.0 * grid.dx
    ok = (pts >= lo) & (pts <= hi)
    out = np.zeros_like(values)
    if ok.any():
        out[ok] = resample_cubic(values, grid, pts[ok])
    return out


def almost_orth_residual(state: ModulationState, cutoffs, params: ModelParams) -> np.ndarray:
    """Localized kernel projections |int sqrt(psi+-) (nu,rho)(eta+-) sin theta* dx|.

    eta+- = (-g+-).m - w*+- is formed in the frame where each wall sits at the
    origin; `cutoffs` = (plus, minus) must be built in those frames (covering
    the wall, i.e. orientation +1 centered at -y+ and orientation -1 centered
    at -y-).  Returns [[nu+, rho+], [nu-, rho-]] magnitudes.
    """
    grid = state.grid
    m_vals = state.profile(params) + state.eps
    st = 1.0 / np.cosh(params.Gamma * grid.x)
    out = np.empty((2, 2))
    for row, (sigma, g, cut) in enumerate(
        ((state.signs[0], state.g_plus, cutoffs[0]), (state.signs[1], state.g_minus, cutoffs[1]))
    ):
        shifted = _shifted_field_values(m_vals, grid, g.y)
        if g.phi != 0.0:
            shifted = shifted @ rotation_matrix(-g.phi).T
        w0, _, _ = wall_arrays(sigma, params, grid.x)
        eta = shifted - w0
        _, nu, rho = frame_coefficients(eta, sigma, params, grid)
        out[row, 0] = abs(integrate(cut.sqrt_psi * nu * st, grid))
        out[row, 1] = abs(integrate(cut.sqrt_psi * rho * st, grid))
    return out
