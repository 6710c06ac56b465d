"""Model transverse geometries: metric, connection, curvature, exponential map.

Three model local leaf spaces are provided, all with closed-form geometry:

* ``FlatTorus`` -- flat q-torus, coordinates modulo per-axis periods;
* ``RoundSphere`` -- round 2-sphere of radius r, chart (theta, phi) on the
  band theta in [theta0, pi - theta0] (polar caps excluded so Christoffel
  symbols stay bounded);
* ``HyperbolicPatch`` -- rectangle in the upper half-plane with the
  constant-curvature -1 metric (dx^2 + dy^2)/y^2.

Sign conventions (fixed once, validated downstream by curvature cross-checks):

* curvature      R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
* covariant      R_{abcd} = g(R(d_a, d_b) d_c, d_d)
* sectional      K(X,Y) = R(X,Y,Y,X) / (|X|^2 |Y|^2 - g(X,Y)^2),
                 normalized so the unit sphere has K = +1
* Ricci (form)   Ric_{bc} = g^{ad} R_{abcd}, so the unit 2-sphere has Ric = g.

All pointwise queries are pure, vectorized over leading axes, and safe to
evaluate concurrently; geometry objects are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, StepTooLargeError

__all__ = [
    "TransverseGeometry",
    "FlatTorus",
    "RoundSphere",
    "HyperbolicPatch",
    "LocalGeometry",
    "build_geometry",
    "geometry_at",
    "exp_map",
]


@dataclass(frozen=True)
class LocalGeometry:
    """All pointwise geometric data at one chart point (closed forms, no FD)."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray          # gamma[c, a, b] = Gamma^c_{ab}
    riemann: np.ndarray        # covariant R_{abcd}
    ricci: np.ndarray          # bilinear form Ric_{ab}
    sectional: Callable[[np.ndarray, np.ndarray], float]


class TransverseGeometry:
    """Base class for the model geometry catalog.

    Subclasses fill in ``metric``, ``christoffel`` and ``exp`` with closed
    forms; curvature comes from the constant-curvature formula
    R_{abcd} = K (g_{bc} g_{ad} - g_{ac} g_{bd}).
    """

    kind: str
    dim: int
    curvature_constant: float
    chart_bounds: np.ndarray      # (q, 2)
    periodic: tuple[bool, ...]    # per-axis boundary tag
    injectivity_cap: float

    # -- pointwise closed forms -------------------------------------------

    def metric(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def metric_inv(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.inv(self.metric(points))

    def christoffel(self, points: np.ndarray) -> np.ndarray:
        """Gamma^c_{ab}, indexed [..., c, a, b]."""
        raise NotImplementedError

    def sqrt_det(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.metric(points)))

    def riemann(self, points: np.ndarray) -> np.ndarray:
        """Fully covariant R_{abcd}, indexed [..., a, b, c, d]."""
        g = self.metric(points)
        K = self.curvature_constant
        return K * (
            np.einsum("...bc,...ad->...abcd", g, g)
            - np.einsum("...ac,...bd->...abcd", g, g)
        )

    def ricci(self, points: np.ndarray) -> np.ndarray:
        """Ricci as a bilinear form, Ric_{bc} = g^{ad} R_{abcd}."""
        return np.einsum(
            "...ad,...abcd->...bc", self.metric_inv(points), self.riemann(points)
        )

    def sectional(self, point: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        g = self.metric(point)
        R = self.riemann(point)
        num = np.einsum("...abcd,...a,...b,...c,...d->...", R, X, Y, Y, X)
        gXX = np.einsum("...ab,...a,...b->...", g, X, X)
        gYY = np.einsum("...ab,...a,...b->...", g, Y, Y)
        gXY = np.einsum("...ab,...a,...b->...", g, X, Y)
        den = gXX * gYY - gXY**2
        return num / den

    # -- chart bookkeeping -------------------------------------------------

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """True where the point lies in the (closed) chart box.

        Periodic axes are unconstrained (lift coordinates are allowed).
        """
        points = np.asarray(points, dtype=float)
        ok = np.ones(points.shape[:-1], dtype=bool)
        for a in range(self.dim):
            if self.periodic[a]:
                continue
            lo, hi = self.chart_bounds[a]
            ok &= (points[..., a] >= lo - tol) & (points[..., a] <= hi + tol)
        return ok

    def require_valid(self, points: np.ndarray) -> None:
        if not np.all(self.contains(points)):
            raise DomainError(f"point outside {self.kind} chart domain")

    def norm(self, points: np.ndarray, v: np.ndarray) -> np.ndarray:
        g = self.metric(points)
        return np.sqrt(np.einsum("...ab,...a,...b->...", g, v, v))

    # -- exponential map ---------------------------------------------------

    def exp(self, points: np.ndarray, v: np.ndarray, reduce: bool = True) -> np.ndarray:
        """Endpoint of the geodesic from ``points`` with initial velocity ``v``.

        ``reduce`` wraps periodic coordinates back into the fundamental chart
        box; pass ``reduce=False`` to stay on a continuous lift (needed by the
        heat flow so winding data survives the update).
        """
        raise NotImplementedError

    def check_cap(self, points: np.ndarray, v: np.ndarray) -> None:
        n = self.norm(points, v)
        if np.any(n > self.injectivity_cap):
            raise StepTooLargeError(
                f"exp step |v| = {float(np.max(n)):.3g} exceeds injectivity cap "
                f"{self.injectivity_cap:.3g} for {self.kind}; shrink dt"
            )


class FlatTorus(TransverseGeometry):
    """Flat torus R^q / (P_1 Z x ... x P_q Z) with the Euclidean metric."""

    kind = "flat_torus"

    def __init__(self, periods: Sequence[float], injectivity_cap: float | None = None):
        periods = tuple(float(p) for p in periods)
        if len(periods) < 1:
            raise ConfigurationError("periods: need at least one axis")
        if any(p <= 0 for p in periods):
            raise ConfigurationError(f"periods: must be positive, got {periods}")
        self.periods = periods
        self.dim = len(periods)
        self.curvature_constant = 0.0
        self.chart_bounds = np.array([[0.0, p] for p in periods])
        self.periodic = tuple(True for _ in periods)
        self.injectivity_cap = (
            min(periods) / 4.0 if injectivity_cap is None else float(injectivity_cap)
        )

    def metric(self, points):
        points = np.asarray(points, dtype=float)
        q = self.dim
        out = np.zeros(points.shape[:-1] + (q, q))
        out[...] = np.eye(q)
        return out

    def metric_inv(self, points):
        return self.metric(points)

    def christoffel(self, points):
        points = np.asarray(points, dtype=float)
        q = self.dim
        return np.zeros(points.shape[:-1] + (q, q, q))

    def sqrt_det(self, points):
        points = np.asarray(points, dtype=float)
        return np.ones(points.shape[:-1])

    def riemann(self, points):
        points = np.asarray(points, dtype=float)
        q = self.dim
        return np.zeros(points.shape[:-1] + (q,) * 4)

    def exp(self, points, v, reduce=True):
        points = np.asarray(points, dtype=float)
        v = np.asarray(v, dtype=float)
        self.check_cap(points, v)
        out = points + v
        if reduce:
            out = out % np.array(self.periods)
        return out


class RoundSphere(TransverseGeometry):
    """Round 2-sphere of radius r, chart (theta, phi), polar caps excluded."""

    kind = "round_sphere"

    def __init__(self, radius: float = 1.0, cap_angle: float = 0.3,
                 injectivity_cap: float | None = None):
        radius = float(radius)
        cap_angle = float(cap_angle)
        if radius <= 0:
            raise ConfigurationError(f"radius: must be positive, got {radius}")
        if not 0.0 < cap_angle < np.pi / 2:
            raise ConfigurationError(
                f"cap_angle: must lie in (0, pi/2), got {cap_angle}"
            )
        self.radius = radius
        self.cap_angle = cap_angle
        self.dim = 2
        self.curvature_constant = 1.0 / radius**2
        self.chart_bounds = np.array(
            [[cap_angle, np.pi - cap_angle], [0.0, 2 * np.pi]]
        )
        self.periodic = (False, True)
        self.injectivity_cap = (
            radius * np.pi / 2 if injectivity_cap is None else float(injectivity_cap)
        )

    def contains(self, points, tol=1e-9):
        ok = super().contains(points, tol)
        theta = np.asarray(points, dtype=float)[..., 0]
        ok &= (theta > tol) & (theta < np.pi - tol)   # poles are never valid
        return ok

    def metric(self, points):
        points = np.asarray(points, dtype=float)
        theta = points[..., 0]
        out = np.zeros(points.shape[:-1] + (2, 2))
        out[..., 0, 0] = self.radius**2
        out[..., 1, 1] = (self.radius * np.sin(theta)) ** 2
        return out

    def metric_inv(self, points):
        points = np.asarray(points, dtype=float)
        theta = points[..., 0]
        out = np.zeros(points.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0 / self.radius**2
        out[..., 1, 1] = 1.0 / (self.radius * np.sin(theta)) ** 2
        return out

    def sqrt_det(self, points):
        theta = np.asarray(points, dtype=float)[..., 0]
        return self.radius**2 * np.abs(np.sin(theta))

    def christoffel(self, points):
        points = np.asarray(points, dtype=float)
        theta = points[..., 0]
        out = np.zeros(points.shape[:-1] + (2, 2, 2))
        out[..., 0, 1, 1] = -np.sin(theta) * np.cos(theta)   # Gamma^th_{ph ph}
        cot = np.cos(theta) / np.sin(theta)
        out[..., 1, 0, 1] = cot                              # Gamma^ph_{th ph}
        out[..., 1, 1, 0] = cot
        return out

    def embed(self, points):
        points = np.asarray(points, dtype=float)
        theta, phi = points[..., 0], points[..., 1]
        r = self.radius
        return np.stack(
            [r * np.sin(theta) * np.cos(phi),
             r * np.sin(theta) * np.sin(phi),
             r * np.cos(theta)], axis=-1)

    def exp(self, points, v, reduce=True):
        points = np.asarray(points, dtype=float)
        v = np.asarray(v, dtype=float)
        self.require_valid(points)
        self.check_cap(points, v)
        r = self.radius
        theta, phi = points[..., 0], points[..., 1]
        p3 = self.embed(points)
        e_theta = np.stack(
            [r * np.cos(theta) * np.cos(phi),
             r * np.cos(theta) * np.sin(phi),
             -r * np.sin(theta)], axis=-1)
        e_phi = np.stack(
            [-r * np.sin(theta) * np.sin(phi),
             r * np.sin(theta) * np.cos(phi),
             np.zeros_like(theta)], axis=-1)
        v3 = v[..., 0, None] * e_theta + v[..., 1, None] * e_phi
        s = np.linalg.norm(v3, axis=-1)            # = |v|_g (isometric embedding)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(s[..., None] > 0, v3 / np.where(s == 0, 1.0, s)[..., None], 0.0)
        x = np.cos(s / r)[..., None] * p3 + (r * np.sin(s / r))[..., None] * unit
        theta_new = np.arccos(np.clip(x[..., 2] / r, -1.0, 1.0))
        phi_raw = np.arctan2(x[..., 1], x[..., 0])
        # keep phi on the lift closest to the first-order prediction
        phi_pred = phi + v[..., 1]
        phi_new = phi_raw + 2 * np.pi * np.round((phi_pred - phi_raw) / (2 * np.pi))
        out = np.stack([theta_new, phi_new], axis=-1)
        if reduce:
            out[..., 1] %= 2 * np.pi
        return out


class HyperbolicPatch(TransverseGeometry):
    """Rectangle in the upper half-plane with metric (dx^2 + dy^2)/y^2 (K = -1)."""

    kind = "hyperbolic_patch"

    def __init__(self, x_bounds: Sequence[float], y_bounds: Sequence[float],
                 injectivity_cap: float | None = None):
        x_bounds = (float(x_bounds[0]), float(x_bounds[1]))
        y_bounds = (float(y_bounds[0]), float(y_bounds[1]))
        if not x_bounds[0] < x_bounds[1]:
            raise ConfigurationError(f"x_bounds: need lo < hi, got {x_bounds}")
        if not 0.0 < y_bounds[0] < y_bounds[1]:
            raise ConfigurationError(
                f"y_bounds: rectangle must lie in the upper half-plane, got {y_bounds}"
            )
        self.x_bounds = x_bounds
        self.y_bounds = y_bounds
        self.dim = 2
        self.curvature_constant = -1.0
        self.chart_bounds = np.array([x_bounds, y_bounds])
        self.periodic = (False, False)
        self.injectivity_cap = 1.0 if injectivity_cap is None else float(injectivity_cap)

    def contains(self, points, tol=1e-9):
        ok = super().contains(points, tol)
        ok &= np.asarray(points, dtype=float)[..., 1] > tol
        return ok

    def metric(self, points):
        points = np.asarray(points, dtype=float)
        y = points[..., 1]
        out = np.zeros(points.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0 / y**2
        out[..., 1, 1] = 1.0 / y**2
        return out

    def metric_inv(self, points):
        points = np.asarray(points, dtype=float)
        y = points[..., 1]
        out = np.zeros(points.shape[:-1] + (2, 2))
        out[..., 0, 0] = y**2
        out[..., 1, 1] = y**2
        return out

    def sqrt_det(self, points):
        y = np.asarray(points, dtype=float)[..., 1]
        return 1.0 / y**2

    def christoffel(self, points):
        points = np.asarray(points, dtype=float)
        y = points[..., 1]
        inv_y = 1.0 / y
        out = np.zeros(points.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, 1] = -inv_y      # Gamma^x_{xy}
        out[..., 0, 1, 0] = -inv_y
        out[..., 1, 0, 0] = inv_y       # Gamma^y_{xx}
        out[..., 1, 1, 1] = -inv_y      # Gamma^y_{yy}
        return out

    def exp(self, points, v, reduce=True):
        # Work at the basepoint i: w -> (w - x)/y maps z to i isometrically and
        # scales velocities by 1/y; a rotation about i sends the direction to
        # vertical, where the geodesic is w(t) = i e^{st}.
        points = np.asarray(points, dtype=float)
        v = np.asarray(v, dtype=float)
        self.check_cap(points, v)
        x, y = points[..., 0], points[..., 1]
        s = np.hypot(v[..., 0], v[..., 1]) / y     # hyperbolic speed
        alpha = np.arctan2(v[..., 1], v[..., 0])
        th = (np.pi / 2 - alpha) / 2.0             # Moebius K_th rotates by 2*th
        w1 = 1j * np.exp(s)
        c, sn = np.cos(th), np.sin(th)
        w2 = (c * w1 - sn) / (sn * w1 + c)
        z = y * w2 + x
        out = np.stack([np.real(z), np.imag(z)], axis=-1)
        return np.where((s == 0)[..., None], points, out)


_GEOMETRY_KINDS = {
    "flat_torus": FlatTorus,
    "round_sphere": RoundSphere,
    "hyperbolic_patch": HyperbolicPatch,
}


def build_geometry(spec: dict) -> TransverseGeometry:
    """Build a catalog geometry from a plain-dict description.

    Expected keys: ``kind`` plus the constructor parameters of the model
    (``periods``; ``radius``/``cap_angle``; ``x_bounds``/``y_bounds``), and
    optionally ``injectivity_cap``.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _GEOMETRY_KINDS:
        raise ConfigurationError(
            f"kind: expected one of {sorted(_GEOMETRY_KINDS)}, got {kind!r}"
        )
    cls = _GEOMETRY_KINDS[kind]
    try:
        return cls(**spec)
    except TypeError as exc:
        raise ConfigurationError(f"invalid parameters for {kind}: {exc}") from exc


def geometry_at(geom: TransverseGeometry, point) -> LocalGeometry:
    """All closed-form pointwise data at one interior chart point."""
    point = np.asarray(point, dtype=float)
    geom.require_valid(point)
    return LocalGeometry(
        point=point,
        g=geom.metric(point),
        g_inv=geom.metric_inv(point),
        gamma=geom.christoffel(point),
        riemann=geom.riemann(point),
        ricci=geom.ricci(point),
        sectional=lambda X, Y: geom.sectional(point, X, Y),
    )


def exp_map(geom: TransverseGeometry, point, v, reduce: bool = True) -> np.ndarray:
    """Endpoint of the unit-time geodesic from ``point`` with velocity ``v``."""
    return geom.exp(np.asarray(point, dtype=float), np.asarray(v, dtype=float),
                    reduce=reduce)
