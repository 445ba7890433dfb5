"""Model parameters, wall signs, gauge group, and the applied field h(t).

The gauge group G = R x R/2piZ acts on fields by translation along the wire
and rotation about the easy axis e1.  Angles are stored unwrapped on the real
line; the quotient distance is only applied in :func:`gauge_norm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WallSign:
    """Sign pair sigma = (sigma1, sigma2) selecting a wall branch."""

    sigma1: int
    sigma2: int

    def __post_init__(self):
        if self.sigma1 not in (-1, 1):
            raise ValidationError("sigma1", "must be +1 or -1")
        if self.sigma2 not in (-1, 1):
            raise ValidationError("sigma2", "must be +1 or -1")


@dataclass(frozen=True)
class Gauge:
    """Group element (y, phi): translate by y, then rotate by phi about e1."""

    y: float
    phi: float

    def compose(self, other: "Gauge") -> "Gauge":
        """Return self*other, i.e. the gauge with (self*other).f = self.(other.f)."""
        return Gauge(self.y + other.y, self.phi + other.phi)

    def inverse(self) -> "Gauge":
        return Gauge(-self.y, -self.phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.y, self.phi])


def angle_dist(phi: float) -> float:
    """Distance of phi to 2*pi*Z."""
    r = math.fmod(phi, TWO_PI)
    if r < 0:
        r += TWO_PI
    return min(r, TWO_PI - r)


def gauge_norm(g: Gauge) -> float:
    """Quotient norm |y| + dist(phi, 2piZ); zero iff g acts as the identity."""
    return abs(g.y) + angle_dist(g.phi)


def gauge_dist(a: Gauge, b: Gauge) -> float:
    return gauge_norm(Gauge(a.y - b.y, a.phi - b.phi))


def rotation_matrix(phi: float) -> np.ndarray:
    """Rotation by phi about e1."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


class AppliedField:
    """Applied field intensity h(t) along e1.

    Supports the three config families (constant, piecewise-constant,
    linear ramp) with exact time integrals, plus arbitrary callables
    integrated by composite Simpson.
    """

    def __init__(self, kind: str, data: tuple, fn=None):
        self.kind = kind
        self.data = data
        self._fn = fn

    @classmethod
    def constant(cls, value: float) -> "AppliedField":
        return cls("constant", (float(value),))

    @classmethod
    def piecewise(cls, points) -> "AppliedField":
        """Left-closed steps: h(t) = v_k for t in [t_k, t_{k+1}), last value held.

        For t below the first breakpoint the first value is used.
        """
        pts = tuple((float(t), float(v)) for t, v in points)
        if not pts:
            raise ValidationError("field.values", "piecewise needs at least one point")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ValidationError("field.values", "breakpoints must be increasing")
        return cls("piecewise", pts)

    @classmethod
    def ramp(cls, t0: float, v0: float, t1: float, v1: float) -> "AppliedField":
        """v0 for t <= t0, linear to v1 at t1, v1 afterwards."""
        if not t1 > t0:
            raise ValidationError("field.values", "ramp needs t1 > t0")
        return cls("ramp", (float(t0), float(v0), float(t1), float(v1)))

    @classmethod
    def from_callable(cls, fn) -> "AppliedField":
        return cls("callable", (), fn=fn)

    def __call__(self, t):
        if self.kind == "constant":
            return self.data[0] * np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else self.data[0]
        if self.kind == "piecewise":
            ts = np.array([p[0] for p in self.data])
            vs = np.array([p[1] for p in self.data])
            idx = np.clip(np.searchsorted(ts, np.asarray(t, dtype=float), side="right") - 1, 0, len(vs) - 1)
            out = vs[idx]
            return out if np.ndim(t) else float(out)
        if self.kind == "ramp":
            t0, v0, t1, v1 = self.data
            tt = np.clip(np.asarray(t, dtype=float), t0, t1)
            out = v0 + (v1 - v0) * (tt - t0) / (t1 - t0)
            return out if np.ndim(t) else float(out)
        return self._fn(t)

    def integral(self, t0: float, t1: float) -> float:
        """Integral of h over [t0, t1], exact for the closed-form families."""
        if t1 < t0:
            return -self.integral(t1, t0)
        if self.kind == "constant":
            return self.data[0] * (t1 - t0)
        if self.kind == "piecewise":
            total = 0.0
            pts = self.data
            for k, (tk, vk) in enumerate(pts):
                seg_a = tk if k > 0 else -math.inf
                seg_b = pts[k + 1][0] if k + 1 < len(pts) else math.inf
                a = max(t0, seg_a)
                b = min(t1, seg_b)
                if b > a:
                    total += vk * (b - a)
            return total
        if self.kind == "ramp":
            ta, va, tb, vb = self.data

            def anti(t):
                # antiderivative with anti(ta) = 0
                if t <= ta:
                    return va * (t - ta)
                if t >= tb:
                    return 0.5 * (va + vb) * (tb - ta) + vb * (t - tb)
                return va * (t - ta) + 0.5 * (vb - va) * (t - ta) ** 2 / (tb - ta)

            return anti(t1) - anti(t0)
        # composite Simpson for generic callables
        if t1 == t0:
            return 0.0
        n = 2 * max(50, int(200 * (t1 - t0)))
        s = np.linspace(t0, t1, n + 1)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return float(np.dot(w, self._fn(s)) * (t1 - t0) / (3.0 * n))

    def __eq__(self, other):
        return (
            isinstance(other, AppliedField)
            and self.kind == other.kind
            and self.data == other.data
            and self._fn is other._fn
        )

    def __repr__(self):
        return f"AppliedField({self.kind!r}, {self.data!r})"


@dataclass(frozen=True)
class ModelParams:
    """Damping alpha > 0, DMI strength |gamma| < 1, and the applied field."""

    alpha: float
    gamma: float
    applied_field: AppliedField = field(default_factory=lambda: AppliedField.constant(0.0))
    Gamma: float = 0.0  # derived, set in __post_init__

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("alpha", "must be > 0")
        if not abs(self.gamma) < 1:
            raise ValidationError("gamma", "must satisfy |gamma| < 1")
        object.__setattr__(self, "Gamma", math.sqrt(1.0 - self.gamma**2))

    def h(self, t):
        return self.applied_field(t)
