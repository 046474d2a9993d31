"""Shared numerical machinery: hyperplane quadrature, principal-value ring
integrals, power-law fits, stratified Monte Carlo, deterministic seeding.

All routines are pure and deterministic for fixed inputs; randomness only
enters through counter-based generators keyed by derive_seed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "PVResult",
    "FitResult",
    "derive_seed",
    "rng_for",
    "sphere_grid",
    "gauss_legendre",
    "dyadic_panels",
    "integrate_hyperplane",
    "pv_ring_integral",
    "fit_power_law",
    "mc_integrate",
    "MCResult",
    "StratifiedSampler",
    "BallShellSampler",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and cutoffs shared by the quadrature routines."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    max_refinements: int = 12
    radial_cutoff: float = 12.0

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.radial_cutoff <= 0:
            raise ValueError("radial_cutoff must be positive")


class QuadResult(NamedTuple):
    value: float
    error_est: float
    converged: bool


class PVResult(NamedTuple):
    value: np.ndarray | float
    residuals: np.ndarray
    converged: bool


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    n_points: int


def derive_seed(root: int, *parts) -> int:
    """Stable 64-bit seed derived from a root seed and arbitrary labels."""
    h = hashlib.sha256(repr((int(root),) + tuple(str(p) for p in parts)).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(root: int, *parts) -> np.random.Generator:
    """Counter-based generator keyed by (root, parts); order-independent use."""
    return np.random.Generator(np.random.Philox(key=derive_seed(root, *parts)))


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def dyadic_panels(lo: float, hi: float, per_octave: int = 1) -> np.ndarray:
    """Geometric breakpoints lo..hi, per_octave panels per factor of 2.

    Returns an array of breakpoints (ascending, first = lo, last = hi).
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    n = max(1, math.ceil(per_octave * math.log2(hi / lo)))
    return hi * (lo / hi) ** (np.arange(n, -1, -1) / n)


def panel_nodes(breaks: np.ndarray, nq: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on each panel of a breakpoint ladder."""
    x, w = gauss_legendre(nq)
    a, b = breaks[:-1], breaks[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return nodes, wts


def sphere_grid(d: int, n: int, symmetric: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Quasi-uniform unit directions with equal weights summing to |S^{d-1}|.

    d=3 uses a Fibonacci lattice, d=2 equally spaced angles. With
    symmetric=True the set is exactly antipodal: node i + n/2 is -node i
    (n must be even), which principal-value pairing relies on.
    """
    if d == 2:
        if symmetric and n % 2:
            raise ValueError("symmetric grid needs even n")
        th = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        if symmetric:
            # enforce exact antipodes against roundoff in cos/sin
            half = np.stack([np.cos(th[: n // 2]), np.sin(th[: n // 2])], axis=-1)
            pts = np.concatenate([half, -half], axis=0)
        else:
            pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return pts, np.full(n, 2.0 * math.pi / n)
    if d == 3:
        if symmetric:
            if n % 2:
                raise ValueError("symmetric grid needs even n")
            m = n // 2
            i = np.arange(m)
            z = (i + 0.5) / m  # upper hemisphere only
            phi = i * math.pi * (3.0 - math.sqrt(5.0))
            r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
            half = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
            pts = np.concatenate([half, -half], axis=0)
            return pts, np.full(n, 4.0 * math.pi / n)
        i = np.arange(n)
        z = 1.0 - (2.0 * i + 1.0) / n
        phi = i * math.pi * (3.0 - math.sqrt(5.0))
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
        return pts, np.full(n, 4.0 * math.pi / n)
    raise ValueError("d must be 2 or 3")


def _plane_basis(e: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane through 0 perpendicular to e."""
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    d = e.shape[0]
    # pick the axis least aligned with e to seed Gram-Schmidt
    k = int(np.argmin(np.abs(e)))
    b1 = np.eye(d)[k] - e[k] * e
    b1 /= np.linalg.norm(b1)
    if d == 2:
        return b1[None, :]
    b2 = np.cross(e, b1)
    return np.stack([b1, b2])


def integrate_hyperplane(
    g: Callable[[np.ndarray], np.ndarray],
    e: np.ndarray,
    d: int,
    spec: QuadratureSpec = QuadratureSpec(),
    scale: float = 1.0,
) -> QuadResult:
    """Integral of g over the hyperplane through the origin perpendicular to e.

    g must accept an (n, d) array and return (n,). The plane is
    parametrized polar (d=3) or as a signed line (d=2); radial panels are
    graded toward 0 so moderately singular weights |w|^kappa, kappa > -1,
    converge. Refinement doubles the radial octave density and the angular
    count until the change is below tolerance.
    """
    basis = _plane_basis(np.asarray(e, dtype=float))
    r_hi = spec.radial_cutoff * scale
    r_lo = r_hi * 1e-14

    def attempt(per_octave: int, n_ang: int, nq: int) -> float:
        rr, wr = panel_nodes(dyadic_panels(r_lo, r_hi, per_octave), nq)
        if d == 2:
            pts = rr[:, None] * basis[0][None, :]
            vals = g(pts) + g(-pts)
            return float(np.sum(wr * vals))
        th = 2.0 * math.pi * (np.arange(n_ang) + 0.5) / n_ang
        dirs = np.cos(th)[:, None] * basis[0][None, :] + np.sin(th)[:, None] * basis[1][None, :]
        pts = rr[:, None, None] * dirs[None, :, :]
        vals = g(pts.reshape(-1, d)).reshape(rr.shape[0], n_ang)
        wa = 2.0 * math.pi / n_ang
        return float(np.sum((wr * rr)[:, None] * vals) * wa)

    per_octave, n_ang, nq = 1, 32, 12
    prev = attempt(per_octave, n_ang, nq)
    err = math.inf
    for _ in range(spec.max_refinements):
        per_octave += 1
        n_ang *= 2
        nq = min(nq + 4, 24)
        cur = attempt(per_octave, n_ang, nq)
        err = abs(cur - prev)
        prev = cur
        if err <= spec.rel_tol * max(abs(cur), spec.abs_tol / spec.rel_tol):
            return QuadResult(cur, err, True)
    return QuadResult(prev, err, False)


def pv_ring_integral(
    g: Callable[[np.ndarray], np.ndarray],
    center: np.ndarray,
    eps: float,
    R: float,
    d: int,
    spec: QuadratureSpec = QuadratureSpec(),
    n_dirs: int = 256,
    vector_dim: int = 0,
) -> PVResult:
    """Principal-value integral of g over the annulus eps < |v - center| < R.

    Nodes are antipodally paired: contributions are accumulated as
    g(center + w) + g(center - w) over half the direction set, which is
    what makes odd singular parts cancel exactly. Dyadic radial shells run
    from R down to eps; shell sums are the residual ladder, and a geometric
    tail estimate extrapolates eps -> 0 when the ladder contracts.

    vector_dim > 0 integrates a vector-valued g (shape (n, vector_dim)).
    """
    center = np.asarray(center, dtype=float)
    if not 0.0 <= eps < R:
        raise ValueError("need 0 <= eps < R")
    dirs, wd = sphere_grid(d, n_dirs, symmetric=True)
    half = dirs[: n_dirs // 2]
    whalf = wd[: n_dirs // 2]
    eps_eff = max(eps, R * 1e-9)
    breaks = dyadic_panels(eps_eff, R, per_octave=1)[::-1]  # descending
    shape = (vector_dim,) if vector_dim else ()
    shells = []
    x, w = gauss_legendre(8)
    for k in range(len(breaks) - 1):
        b, a = breaks[k], breaks[k + 1]  # a < b
        rr = 0.5 * (a + b) + 0.5 * (b - a) * x
        wr = 0.5 * (b - a) * w
        pts = center[None, None, :] + rr[:, None, None] * half[None, :, :]
        mirr = center[None, None, :] - rr[:, None, None] * half[None, :, :]
        flat = np.concatenate([pts.reshape(-1, d), mirr.reshape(-1, d)], axis=0)
        vals = np.asarray(g(flat))
        n_half = rr.shape[0] * half.shape[0]
        paired = (vals[:n_half] + vals[n_half:]).reshape(rr.shape[0], half.shape[0], *shape)
        jac = (rr ** (d - 1) * wr)[:, None] if not vector_dim else (rr ** (d - 1) * wr)[:, None, None]
        wdir = whalf[None, :] if not vector_dim else whalf[None, :, None]
        shells.append(np.sum(paired * jac * wdir, axis=(0, 1)))
    shells_arr = np.array(shells)
    total = shells_arr.sum(axis=0)
    mags = np.linalg.norm(shells_arr.reshape(len(shells), -1), axis=1)
    # geometric extrapolation of the core below eps_eff: after pairing the
    # integrand is integrable, so shell sums contract as the radius shrinks
    converged = True
    if len(mags) >= 3 and mags[-2] > 0.0:
        q = mags[-1] / mags[-2]
        if q < 0.9:
            total = total + shells_arr[-1] * (q / (1.0 - q))
        else:
            ref = max(float(mags.max()), 1e-300)
            converged = mags[-1] <= spec.rel_tol * ref + spec.abs_tol
    value = total if vector_dim else float(total)
    return PVResult(value, mags, converged)


def fit_power_law(points: Sequence[tuple[float, float]]) -> FitResult:
    """Least-squares exponent of y = c x^p through log-log regression.

    Requires strictly positive x and y. r_squared is 1 for an exact fit,
    including the degenerate case of constant log-y.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("power-law fit needs positive coordinates")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    A = np.stack([lx, np.ones_like(lx)], axis=-1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    return FitResult(float(coef[0]), float(coef[1]), r2, len(pts))


class StratifiedSampler:
    """Protocol-ish base: subclasses define strata and per-stratum sampling.

    sample(k, rng, n) returns (points (n, dim), weights (n,)) where weights
    are 1/(n * density) so that sum over strata of sum(g * w) estimates the
    integral.
    """

    n_strata: int = 1

    def sample(self, k: int, rng: np.random.Generator, n: int):  # pragma: no cover
        raise NotImplementedError


class BallShellSampler(StratifiedSampler):
    """Uniform center ball stratified into equal-volume radial shells."""

    def __init__(self, center: np.ndarray, radius: float, d: int, n_strata: int = 8):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.d = d
        self.n_strata = n_strata
        # equal-volume breakpoints: r_k = R (k/n)^{1/d}
        self.breaks = self.radius * (np.arange(n_strata + 1) / n_strata) ** (1.0 / d)
        vol_ball = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * self.radius**d
        self.shell_vol = vol_ball / n_strata

    def sample(self, k: int, rng: np.random.Generator, n: int):
        a, b = self.breaks[k], self.breaks[k + 1]
        u = rng.random(n)
        r = (a**self.d + u * (b**self.d - a**self.d)) ** (1.0 / self.d)
        x = rng.normal(size=(n, self.d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        pts = self.center[None, :] + r[:, None] * x
        w = np.full(n, self.shell_vol / n)
        return pts, w


class MCResult(NamedTuple):
    value: float
    std_error: float
    n_samples: int


def mc_integrate(
    g: Callable[[np.ndarray], np.ndarray],
    sampler: StratifiedSampler,
    n_per_stratum: int,
    seed: int,
) -> MCResult:
    """Stratified Monte Carlo with per-stratum counter-based seeding.

    The generator for stratum k is keyed by (seed, k), so the result is
    identical for identical (sampler, n, seed) regardless of evaluation
    order or parallel scheduling.
    """
    total = 0.0
    var = 0.0
    n_tot = 0
    for k in range(sampler.n_strata):
        rng = rng_for(seed, "stratum", k)
        pts, w = sampler.sample(k, rng, n_per_stratum)
        vals = np.asarray(g(pts)) * w
        total += float(vals.sum())
        var += float(vals.var(ddof=1)) * len(vals) if len(vals) > 1 else 0.0
        n_tot += len(vals)
    return MCResult(total, math.sqrt(max(var, 0.0)), n_tot)
