"""Model parameters, analytic velocity profiles, and hydrodynamic metadata.

Everything downstream (geometry, kernel, verifier) consumes these types.
Profiles are velocity-only: f = f(v). All operations are pure.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import betaln, gammaln

__all__ = [
    "ModelParams",
    "GaussianComponent",
    "CompactBump",
    "Profile",
    "HydroBounds",
    "DecayEnvelope",
    "HydroResult",
    "make_inverse_power_params",
    "hydro_quantities",
    "decay_envelope",
    "hydro_gate",
]

KERNEL_MODES = ("model", "carleman")


@dataclass(frozen=True)
class ModelParams:
    """Dimension, singularity order, potential exponent and kernel constants.

    Attributes
    ----------
    d : int
        Spatial/velocity dimension, 2 or 3.
    s : float
        Fractional singularity order, in (0, 1).
    gamma : float
        Potential exponent, > -d.
    kernel_mode : str
        "model" (angular factor identically 1) or "carleman"
        (closed-form angular factor, capped at ``a_cap``).
    c_b : float
        Lower-order bilinear constant, > 0.
    b_norm : float
        Overall normalization of the angular cross-section, > 0.
    a_cap : float
        Ceiling applied to the carleman angular factor, which is
        unbounded as the hyperplane variable goes to 0.
    """

    d: int
    s: float
    gamma: float
    kernel_mode: str = "model"
    c_b: float = 1.0
    b_norm: float = 1.0
    a_cap: float = 1e4

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must be in (0,1), got {self.s}")
        if not self.gamma > -self.d:
            raise ValueError(f"gamma must exceed -d = {-self.d}, got {self.gamma}")
        if self.kernel_mode not in KERNEL_MODES:
            raise ValueError(f"kernel_mode must be one of {KERNEL_MODES}")
        if self.c_b <= 0 or self.b_norm <= 0 or self.a_cap <= 0:
            raise ValueError("c_b, b_norm, a_cap must be positive")

    @property
    def kappa(self) -> float:
        """Hyperplane moment exponent gamma + 2s + 1."""
        return self.gamma + 2.0 * self.s + 1.0

    @property
    def ellipticity_ok(self) -> bool:
        """True iff gamma + 2s lies in [0, 2], the range the uniform estimates need."""
        return 0.0 <= self.gamma + 2.0 * self.s <= 2.0


def make_inverse_power_params(p_exp: float, d: int, **kwargs) -> ModelParams:
    """Parameters induced by an inverse-power-law interaction exponent.

    gamma = (p_exp - 2d + 1)/(p_exp - 1), s = 1/(p_exp - 1).

    Parameters
    ----------
    p_exp : float
        Interaction exponent, must be > 2 (otherwise s >= 1).
    d : int
        Dimension.
    """
    if p_exp <= 2:
        raise ValueError(f"p_exp must be > 2, got {p_exp}")
    gamma = (p_exp - 2 * d + 1) / (p_exp - 1)
    s = 1.0 / (p_exp - 1)
    return ModelParams(d=d, s=s, gamma=gamma, **kwargs)


@dataclass(frozen=True)
class GaussianComponent:
    """Isotropic Gaussian bump: mass * N(drift, T * I)."""

    mass: float
    temperature: float
    drift: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.temperature <= 0:
            raise ValueError("mass and temperature must be positive")
        object.__setattr__(self, "drift", tuple(float(u) for u in self.drift))

    @property
    def d(self) -> int:
        return len(self.drift)

    def density(self, v: np.ndarray) -> np.ndarray:
        u = np.asarray(self.drift)
        dv = v - u
        q = np.sum(dv * dv, axis=-1)
        norm = self.mass * (2.0 * math.pi * self.temperature) ** (-self.d / 2.0)
        return norm * np.exp(-q / (2.0 * self.temperature))


@dataclass(frozen=True)
class CompactBump:
    """Compactly supported bump A*(1 - |v-c|^2/R^2)_+^k, C^{k-1} at the edge."""

    center: tuple[float, ...]
    radius: float
    amplitude: float
    order: int = 4

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.amplitude <= 0:
            raise ValueError("radius and amplitude must be positive")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def d(self) -> int:
        return len(self.center)

    def density(self, v: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        q = np.sum((v - c) ** 2, axis=-1) / self.radius**2
        return self.amplitude * np.clip(1.0 - q, 0.0, None) ** self.order

    def mass(self) -> float:
        # A R^d omega_{d-1} (1/2) B(d/2, k+1), omega_{d-1} = 2 pi^{d/2}/Gamma(d/2)
        d, k = self.d, self.order
        omega = 2.0 * math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0))
        return self.amplitude * self.radius**d * omega * 0.5 * math.exp(betaln(d / 2.0, k + 1))

    def second_moment(self) -> float:
        # mass |c|^2 + A R^{d+2} omega (1/2) B((d+2)/2, k+1) by the parallel axis rule
        d, k = self.d, self.order
        omega = 2.0 * math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0))
        central = (
            self.amplitude * self.radius ** (d + 2) * omega * 0.5 * math.exp(betaln((d + 2) / 2.0, k + 1))
        )
        c2 = sum(ci * ci for ci in self.center)
        return self.mass() * c2 + central


Component = GaussianComponent | CompactBump


@dataclass(frozen=True)
class Profile:
    """Sum of Gaussian components and optional compact bumps; f(v) >= 0."""

    components: tuple[Component, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("Profile needs at least one component")
        dims = {c.d for c in comps}
        if len(dims) != 1:
            raise ValueError(f"mixed component dimensions {dims}")
        object.__setattr__(self, "components", comps)

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def is_gaussian_mixture(self) -> bool:
        return all(isinstance(c, GaussianComponent) for c in self.components)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.components[0].density(v)
        for comp in self.components[1:]:
            out = out + comp.density(v)
        return out

    def gaussians(self) -> list[GaussianComponent]:
        return [c for c in self.components if isinstance(c, GaussianComponent)]

    def bumps(self) -> list[CompactBump]:
        return [c for c in self.components if isinstance(c, CompactBump)]

    def scale(self, cutoff: float = 12.0) -> float:
        """Radius beyond which the profile is negligible (cutoff sigmas)."""
        r = 0.0
        for c in self.components:
            if isinstance(c, GaussianComponent):
                r = max(r, float(np.linalg.norm(c.drift)) + cutoff * math.sqrt(c.temperature))
            else:
                r = max(r, float(np.linalg.norm(c.center)) + c.radius)
        return max(r, 1.0)

    def content_hash(self) -> str:
        payload = repr([(type(c).__name__, tuple(sorted(vars(c).items()))) for c in self.components])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def maxwellian(d: int, mass: float = 1.0, temperature: float = 1.0,
               drift: Iterable[float] | None = None) -> Profile:
    """Convenience constructor for a single-Gaussian profile."""
    u = tuple(drift) if drift is not None else (0.0,) * d
    if len(u) != d:
        raise ValueError("drift length must match d")
    return Profile((GaussianComponent(mass, temperature, u),))


@dataclass(frozen=True)
class HydroBounds:
    """Lower mass bound and upper mass/energy/entropy bounds."""

    m0: float
    M0: float
    E0: float
    H0: float

    def __post_init__(self) -> None:
        if not 0 < self.m0 <= self.M0:
            raise ValueError("need 0 < m0 <= M0")
        if self.E0 < 0:
            raise ValueError("E0 must be >= 0")


class HydroResult(NamedTuple):
    M: float
    E: float
    H: float


def _entropy_closed_single(c: GaussianComponent) -> float:
    # int f ln f = m ln m - m (d/2)(ln(2 pi T) + 1) for one isotropic Gaussian
    m, T, d = c.mass, c.temperature, c.d
    return m * math.log(m) - m * (d / 2.0) * (math.log(2.0 * math.pi * T) + 1.0)


def _entropy_quadrature(f: Profile, rel_tol: float = 1e-8) -> tuple[float, float]:
    """Adaptive product quadrature of f ln f; returns (value, error_est)."""
    d = f.d
    r_max = f.scale()
    if d == 3:
        n_mu, n_phi = 64, 128
        mu, wmu = np.polynomial.legendre.leggauss(n_mu)
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        st = np.sqrt(1.0 - mu**2)
        dirs = np.stack(
            [st[:, None] * np.cos(phi)[None, :],
             st[:, None] * np.sin(phi)[None, :],
             np.broadcast_to(mu[:, None], (n_mu, n_phi))], axis=-1,
        ).reshape(-1, 3)
        wdir = np.repeat(wmu, n_phi) * (2.0 * math.pi / n_phi)
    else:
        n_ang = 256
        th = 2.0 * math.pi * np.arange(n_ang) / n_ang
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        wdir = np.full(n_ang, 2.0 * math.pi / n_ang)

    xg, wg = np.polynomial.legendre.leggauss(16)

    def radial_panel(a: float, b: float) -> float:
        r = 0.5 * (b - a) * xg + 0.5 * (a + b)
        w = 0.5 * (b - a) * wg
        pts = r[:, None, None] * dirs[None, :, :]
        fv = f(pts)
        integrand = np.where(fv > 0.0, fv * np.log(np.where(fv > 0.0, fv, 1.0)), 0.0)
        return float(np.sum(w[:, None] * integrand * wdir[None, :] * r[:, None] ** (d - 1)))

    # split [0, r_max] adaptively, refining the panel with the largest change
    panels = [(0.0, r_max)]
    values = [radial_panel(0.0, r_max)]
    err = math.inf
    for _ in range(60):
        total = sum(values)
        k = int(np.argmax([abs(v) for v in values]))
        a, b = panels[k]
        m = 0.5 * (a + b)
        va, vb = radial_panel(a, m), radial_panel(m, b)
        err = abs(va + vb - values[k])
        panels[k:k + 1] = [(a, m), (m, b)]
        values[k:k + 1] = [va, vb]
        if err <= rel_tol * max(abs(total), 1e-300) + 1e-14:
            break
    return sum(values), err


def hydro_quantities(f: Profile, params: ModelParams) -> HydroResult:
    """Mass, energy and entropy of a profile.

    Closed forms for Gaussian mixtures (mass, energy; entropy only for a
    single Gaussian). Everything else goes through adaptive quadrature at
    relative tolerance 1e-8; non-convergence is reported as a warning
    carrying the achieved error estimate.
    """
    if f.d != params.d:
        raise ValueError("profile dimension does not match params.d")
    M = 0.0
    E = 0.0
    for c in f.components:
        if isinstance(c, GaussianComponent):
            M += c.mass
            u2 = sum(ui * ui for ui in c.drift)
            E += c.mass * (u2 + c.d * c.temperature)
        else:
            M += c.mass()
            E += c.second_moment()
    if f.is_gaussian_mixture and len(f.components) == 1:
        H = _entropy_closed_single(f.components[0])
    else:
        H, err = _entropy_quadrature(f)
        if not err <= 1e-6 * max(abs(H), 1.0):
            warnings.warn(f"entropy quadrature converged to error estimate {err:.3e} only")
    return HydroResult(M, E, H)


def hydro_gate(f: Profile, params: ModelParams, bounds: HydroBounds) -> bool:
    """Deterministic pass/fail of the hydrodynamic bounds for a profile."""
    M, E, H = hydro_quantities(f, params)
    return bounds.m0 <= M <= bounds.M0 and E <= bounds.E0 and H <= bounds.H0


@dataclass(frozen=True)
class DecayEnvelope:
    """Stored envelopes q -> N_q with N_q = sup_v (1+|v|)^q f(v)."""

    values: dict[float, float] = field(default_factory=dict)

    def check(self, f: Profile, v: np.ndarray) -> bool:
        r = np.linalg.norm(np.atleast_2d(v), axis=-1)
        fv = f(np.atleast_2d(v))
        for q, nq in self.values.items():
            if np.any(fv > nq * (1.0 + r) ** (-q) * (1.0 + 1e-9) + 1e-12):
                return False
        return True


def _candidate_points(f: Profile) -> np.ndarray:
    """Deterministic sample set whose max the optimizer result must dominate."""
    d = f.d
    pts = [np.zeros(d)]
    radii = np.linspace(0.0, f.scale(), 33)[1:]
    axes = [np.eye(d)[i] for i in range(d)]
    for c in f.components:
        anchor = np.asarray(c.drift if isinstance(c, GaussianComponent) else c.center)
        n = np.linalg.norm(anchor)
        dirs = axes + ([anchor / n] if n > 0 else [])
        for e in dirs:
            for r in radii:
                pts.append(r * e)
                pts.append(-r * e)
        pts.append(anchor)
    return np.array(pts)


def decay_envelope(f: Profile, q: float) -> float:
    """N_q = sup_v (1+|v|)^q f(v).

    1D bounded optimization along each component axis provides starting
    points; a local polish in R^d follows; the result is floored by the
    max over a deterministic sample grid so it never undershoots samples.
    """
    if q < 0:
        raise ValueError("q must be >= 0")

    def neg_obj(v: np.ndarray) -> float:
        v = np.atleast_2d(v)
        return -float(f(v)[0] * (1.0 + np.linalg.norm(v[0])) ** q)

    best = -math.inf
    best_v = np.zeros(f.d)
    r_hi = f.scale()
    for c in f.components:
        anchor = np.asarray(c.drift if isinstance(c, GaussianComponent) else c.center)
        n = float(np.linalg.norm(anchor))
        e = anchor / n if n > 0 else np.eye(f.d)[0]

        def neg_ray(t: float, e=e) -> float:
            return neg_obj(t * e)

        res = minimize_scalar(neg_ray, bounds=(-r_hi, r_hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best:
            best, best_v = -res.fun, res.x * e
    polish = minimize(neg_obj, best_v, method="Nelder-Mead",
                      options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
    best = max(best, -float(polish.fun))
    cand = _candidate_points(f)
    sampled = float(np.max(f(cand) * (1.0 + np.linalg.norm(cand, axis=-1)) ** q))
    return max(best, sampled)
