"""Phase-space group law, scaling, kinetic distance, cylinders, and the
velocity-compression change of variables with its two velocity metrics.

Points are z = (t, x, v). The (non-commutative) product appends the right
factor's motion to the left factor's frame:

    compose(a, b) = (a.t + b.t, b.x + a.x + b.t * a.v, a.v + b.v)

so pure velocity offsets commute with evaluation along drift lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .params_profiles import ModelParams

__all__ = [
    "Point",
    "origin",
    "compose",
    "inverse",
    "offset_from",
    "dilate",
    "kdistance",
    "knorm",
    "Cylinder",
    "CovMap",
    "dGS",
    "da",
]


@dataclass(frozen=True, eq=False)
class Point:
    """Phase-space point (t, x, v); x and v are read-only float arrays."""

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float)
        v = np.array(self.v, dtype=float)
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError("x and v must be 1-d arrays of equal length")
        x.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def d(self) -> int:
        return self.v.shape[0]

    def allclose(self, other: "Point", tol: float = 1e-12) -> bool:
        return (
            abs(self.t - other.t) <= tol
            and bool(np.all(np.abs(self.x - other.x) <= tol))
            and bool(np.all(np.abs(self.v - other.v) <= tol))
        )

    def __repr__(self) -> str:
        return f"Point(t={self.t!r}, x={self.x.tolist()!r}, v={self.v.tolist()!r})"


def origin(d: int) -> Point:
    return Point(0.0, np.zeros(d), np.zeros(d))


def compose(a: Point, b: Point) -> Point:
    """Group product; the right factor's time advances along the left velocity."""
    return Point(a.t + b.t, b.x + a.x + b.t * a.v, a.v + b.v)


def inverse(z: Point) -> Point:
    return Point(-z.t, -z.x + z.t * z.v, -z.v)


def offset_from(base: Point, z: Point) -> Point:
    """inverse(base) o z: the coordinates of z in the frame anchored at base."""
    return compose(inverse(base), z)


def dilate(z: Point, r: float, s: float) -> Point:
    """Kinetic scaling (r^{2s} t, r^{1+2s} x, r v)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return Point(r ** (2.0 * s) * z.t, r ** (1.0 + 2.0 * s) * z.x, r * z.v)


# ---------------------------------------------------------------------------
# kinetic distance: exact minimax over the auxiliary velocity w


def _hull_coords(points: list[np.ndarray]) -> np.ndarray:
    """Coordinates of the given points in an orthonormal basis of their
    affine hull (anchored at points[0]); shape (len(points), dim<=2)."""
    p0 = points[0]
    basis: list[np.ndarray] = []
    for p in points[1:]:
        u = p - p0
        for b in basis:
            u = u - (u @ b) * b
        n = np.linalg.norm(u)
        if n > 1e-13:
            basis.append(u / n)
    if not basis:
        return np.zeros((len(points), 1))
    B = np.stack(basis, axis=0)
    return np.array([(p - p0) @ B.T for p in points])


def _disks_intersect(centers: np.ndarray, radii: np.ndarray, slack: float) -> bool:
    """Do three closed disks in the plane share a common point?

    Candidate points: the centers, each center projected onto each other
    circle, and pairwise circle-circle intersection points. One of these
    always witnesses a nonempty intersection of finitely many disks.
    """
    cands = [centers[i] for i in range(len(centers))]
    for i in range(len(centers)):
        for j in range(len(centers)):
            if i == j:
                continue
            delta = centers[i] - centers[j]
            dd = np.linalg.norm(delta)
            if dd > 1e-300:
                cands.append(centers[j] + radii[j] * delta / dd)
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            c1, c2 = centers[i], centers[j]
            r1, r2 = radii[i], radii[j]
            delta = c2 - c1
            dd = np.linalg.norm(delta)
            if dd <= 1e-300:
                continue
            a = (dd * dd + r1 * r1 - r2 * r2) / (2.0 * dd)
            h2 = r1 * r1 - a * a
            if h2 < 0.0:
                continue
            h = math.sqrt(h2)
            u = delta / dd
            perp = np.array([-u[1], u[0]])
            base = c1 + a * u
            cands.append(base + h * perp)
            cands.append(base - h * perp)
    for p in cands:
        if all(np.linalg.norm(p - centers[k]) <= radii[k] + slack for k in range(len(centers))):
            return True
    return False


def kdistance(z1: Point, z2: Point, s: float, tol: float = 1e-11) -> float:
    """Scaling-adapted left-invariant distance between phase points.

    min over auxiliary velocity w of
      max(|dt|^{1/2s}, |dx - dt w|^{1/(1+2s)}, |v1 - w|, |v2 - w|),
    computed exactly: the level-set feasibility problem is three disks in
    the (at most 2-d) affine hull of {v1, v2, dx/dt}; monotone bisection
    on the level closes the minimax to absolute tolerance tol.
    """
    if z1.d != z2.d:
        raise ValueError("dimension mismatch")
    dt = z1.t - z2.t
    dx = z1.x - z2.x
    A = abs(dt) ** (1.0 / (2.0 * s)) if dt != 0.0 else 0.0
    lo = 0.5 * float(np.linalg.norm(z1.v - z2.v))
    if dt == 0.0:
        xterm = float(np.linalg.norm(dx)) ** (1.0 / (1.0 + 2.0 * s))
        return max(xterm, lo)
    adt = abs(dt)
    pw = 1.0 + 2.0 * s
    c = dx / dt
    if float(np.linalg.norm(c)) > 1e30:
        # auxiliary center out of float range: the w-shift dt*w cannot move
        # |dx - dt*w| at this scale, so the dt=0 value is exact to tolerance
        return max(A, float(np.linalg.norm(dx)) ** (1.0 / pw), lo)
    coords = _hull_coords([z1.v, z2.v, c])
    if coords.shape[1] == 1:
        coords = np.concatenate([coords, np.zeros((3, 1))], axis=1)
    p1, p2, pc = coords

    def feasible(m: float) -> bool:
        radii = np.array([m, m, m**pw / adt])
        slack = 1e-12 * (1.0 + m)
        return _disks_intersect(np.stack([p1, p2, pc]), radii, slack)

    if feasible(lo):
        return max(A, lo)
    mid = 0.5 * (p1 + p2)
    hi = max(lo, (adt * float(np.linalg.norm(pc - mid))) ** (1.0 / pw), 1e-300)
    for _ in range(64):
        if feasible(hi):
            break
        hi *= 2.0
    for _ in range(200):
        if hi - lo <= tol * max(1.0, hi):
            break
        m = 0.5 * (lo + hi)
        if feasible(m):
            hi = m
        else:
            lo = m
    return max(A, hi)


def knorm(z: Point, s: float) -> float:
    """Distance to the group origin."""
    return kdistance(z, origin(z.d), s)


@dataclass(frozen=True)
class Cylinder:
    """Scaling-adapted cylinder: past-in-time slab, slanted spatial tube,
    velocity ball. Membership is open except at the final time."""

    center: Point
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def contains(self, z: Point, s: float) -> bool:
        z0, r = self.center, self.radius
        dt = z.t - z0.t
        if not (-(r ** (2.0 * s)) < dt <= 0.0):
            return False
        if np.linalg.norm(z.x - z0.x - dt * z0.v) >= r ** (1.0 + 2.0 * s):
            return False
        return bool(np.linalg.norm(z.v - z0.v) < r)

    def shrink(self, factor: float) -> "Cylinder":
        return Cylinder(self.center, self.radius * factor)


# ---------------------------------------------------------------------------
# change of variables adapted to a large base velocity


@dataclass(frozen=True)
class CovMap:
    """Frame change anchored at z0: time slows by |v0|^{-gamma-2s} and the
    velocity component along v0 compresses by 1/|v0|; identity below |v0|=2."""

    params: ModelParams
    z0: Point

    @cached_property
    def v0(self) -> np.ndarray:
        return self.z0.v

    @cached_property
    def v0_norm(self) -> float:
        return float(np.linalg.norm(self.v0))

    @cached_property
    def active(self) -> bool:
        return self.v0_norm >= 2.0

    @cached_property
    def v0_hat(self) -> np.ndarray:
        if not self.active:
            return np.zeros(self.z0.d)
        return self.v0 / self.v0_norm

    @cached_property
    def time_scale(self) -> float:
        if not self.active:
            return 1.0
        return self.v0_norm ** (-(self.params.gamma + 2.0 * self.params.s))

    @property
    def det_compression(self) -> float:
        """Determinant of the velocity compression: 1/|v0| when active."""
        return 1.0 / self.v0_norm if self.active else 1.0

    def compress(self, w: np.ndarray) -> np.ndarray:
        """Shrink the component along v0 by 1/|v0| (vectorized over rows)."""
        if not self.active:
            return np.asarray(w, dtype=float)
        w = np.asarray(w, dtype=float)
        mu = w @ self.v0_hat
        return w + np.multiply.outer(mu * (1.0 / self.v0_norm - 1.0), self.v0_hat)

    def stretch(self, w: np.ndarray) -> np.ndarray:
        """Inverse of compress."""
        if not self.active:
            return np.asarray(w, dtype=float)
        w = np.asarray(w, dtype=float)
        mu = w @ self.v0_hat
        return w + np.multiply.outer(mu * (self.v0_norm - 1.0), self.v0_hat)

    def forward(self, z: Point) -> Point:
        zeta = Point(self.time_scale * z.t, self.time_scale * self.compress(z.x),
                     self.compress(z.v))
        return compose(self.z0, zeta)

    def backward(self, zbar: Point) -> Point:
        zeta = offset_from(self.z0, zbar)
        return Point(zeta.t / self.time_scale, self.stretch(zeta.x) / self.time_scale,
                     self.stretch(zeta.v))

    def base_velocity(self, v: np.ndarray) -> np.ndarray:
        """v0 + compress(v): where a transformed probe velocity sits originally."""
        return self.v0 + self.compress(v)

    def ellipsoid_radius_along(self, sigma: np.ndarray, R: float) -> np.ndarray:
        """Largest rho with rho*sigma inside the compressed ball of radius R."""
        sigma = np.asarray(sigma, dtype=float)
        if not self.active:
            return np.broadcast_to(np.asarray(R, dtype=float), sigma.shape[:-1]).copy()
        mu = sigma @ self.v0_hat
        return R / np.sqrt(1.0 + (self.v0_norm**2 - 1.0) * mu**2)

    def ellipsoid_contains(self, center: np.ndarray, v: np.ndarray, R: float) -> bool:
        return bool(np.linalg.norm(self.stretch(np.asarray(v) - np.asarray(center))) < R)


def dGS(v1: np.ndarray, v2: np.ndarray) -> float:
    """Lifted paraboloid distance: sqrt(|v1-v2|^2 + (|v1|^2-|v2|^2)^2/4)."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    gap = 0.5 * (v1 @ v1 - v2 @ v2)
    return math.sqrt(float(np.sum((v1 - v2) ** 2)) + gap * gap)


def da(M: CovMap, v1: np.ndarray, v2: np.ndarray) -> float:
    """Anisotropic distance |stretch(v1 - v2)| for points of the unit
    compressed ball around v0; rejects arguments outside it."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    for v in (v1, v2):
        if np.linalg.norm(M.stretch(v - M.v0)) > 1.0 + 1e-12:
            raise ValueError("da is only defined inside the unit compressed ball at v0")
    return float(np.linalg.norm(M.stretch(v1 - v2)))
