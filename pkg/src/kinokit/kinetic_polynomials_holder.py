"""Scaling-weighted Taylor polynomials, sampled Holder seminorms on
cylinders, and increment operators with their inequality checks.

Monomial degrees weight t by 2s, x by 1+2s, v by 1. The expansion at a
base point is written in frame-offset coordinates, so its time coefficient
is the derivative along the drift line, not the plain time derivative.
Sampled seminorms use offsets at exactly known distance from the base
point, so every sampled sup is a certified lower bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._results import CheckResult
from .kinetic_geometry import Cylinder, Point, compose, dilate, knorm, offset_from
from .numerics import rng_for

__all__ = [
    "KMultiIndex",
    "kdeg",
    "KPolynomial",
    "taylor_expansion",
    "SampleSpec",
    "SeminormEstimate",
    "seminorm_est",
    "sup_norm_est",
    "holder_norm_est",
    "weighted_norm_est",
    "increment_x",
    "increment_v",
    "check_interpolation",
    "check_product",
    "check_increment_x_bound",
    "check_increment_v_bound",
]

ScalarField = Callable[[Point], float]


@dataclass(frozen=True)
class KMultiIndex:
    """Monomial exponents (t, x_1..x_d, v_1..v_d)."""

    a0: int
    ax: tuple[int, ...]
    av: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.a0 < 0 or any(a < 0 for a in self.ax) or any(a < 0 for a in self.av):
            raise ValueError("exponents must be nonnegative")
        object.__setattr__(self, "ax", tuple(int(a) for a in self.ax))
        object.__setattr__(self, "av", tuple(int(a) for a in self.av))


def kdeg(m: KMultiIndex, s: float) -> float:
    """Scaling-weighted degree 2s*a0 + (1+2s)*|ax| + |av|."""
    return 2.0 * s * m.a0 + (1.0 + 2.0 * s) * sum(m.ax) + float(sum(m.av))


@dataclass
class KPolynomial:
    """Polynomial in frame-offset coordinates anchored at a base point."""

    anchor: Point
    s: float
    coeffs: dict[KMultiIndex, float] = field(default_factory=dict)

    def degree(self) -> float:
        live = [kdeg(m, self.s) for m, c in self.coeffs.items() if c != 0.0]
        return max(live) if live else -math.inf

    def __call__(self, z: Point) -> float:
        xi = offset_from(self.anchor, z)
        total = 0.0
        for m, c in self.coeffs.items():
            if c == 0.0:
                continue
            term = c * xi.t**m.a0
            for e, val in zip(m.ax, xi.x):
                term *= val**e
            for e, val in zip(m.av, xi.v):
                term *= val**e
            total += term
        return total


def _richardson(diff: Callable[[float], float], h: float) -> float:
    return (4.0 * diff(h / 2.0) - diff(h)) / 3.0


def taylor_expansion(f: ScalarField, z0: Point, alpha: float, s: float,
                     h: float = 1e-3) -> KPolynomial:
    """Expansion holding exactly the monomials of weighted degree < alpha.

    Eligible terms: the constant; v_i if alpha > 1; the drift-line time
    term if alpha > 2s; v_i v_j / 2 if alpha > 2. Spatial monomials never
    appear at the admissible orders. Coefficients come from centered
    finite differences with one Richardson step.
    """
    if not 0.0 < alpha <= 2.0 + 2.0 * s:
        raise ValueError("alpha must lie in (0, 2+2s]")
    if h <= 0:
        raise ValueError("h must be positive")
    if h < 1e-6:
        warnings.warn(
            f"difference step {h:.2e} risks cancellation; "
            f"second-order coefficients carry roundoff near {2.2e-16 / h**2:.2e}"
        )
    d = z0.d
    poly = KPolynomial(anchor=z0, s=s)
    poly.coeffs[KMultiIndex(0, (0,) * d, (0,) * d)] = f(z0)

    def vshift(base: Point, w: np.ndarray) -> Point:
        return Point(base.t, base.x, base.v + w)

    if alpha > 1.0:
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0

            def d1(step: float, e=e) -> float:
                return (f(vshift(z0, step * e)) - f(vshift(z0, -step * e))) / (2.0 * step)

            key = KMultiIndex(0, (0,) * d, tuple(1 if j == i else 0 for j in range(d)))
            poly.coeffs[key] = _richardson(d1, h)
    if alpha > 2.0 * s:
        def dt(step: float) -> float:
            fwd = compose(z0, Point(step, np.zeros(d), np.zeros(d)))
            bwd = compose(z0, Point(-step, np.zeros(d), np.zeros(d)))
            return (f(fwd) - f(bwd)) / (2.0 * step)

        poly.coeffs[KMultiIndex(1, (0,) * d, (0,) * d)] = _richardson(dt, h)
    if alpha > 2.0:
        for i in range(d):
            for j in range(i, d):
                ei = np.zeros(d)
                ei[i] = 1.0
                ej = np.zeros(d)
                ej[j] = 1.0
                if i == j:
                    def d2(step: float, ei=ei) -> float:
                        return (
                            f(vshift(z0, step * ei)) - 2.0 * f(z0) + f(vshift(z0, -step * ei))
                        ) / step**2

                    coeff = 0.5 * _richardson(d2, h)
                else:
                    def d2(step: float, ei=ei, ej=ej) -> float:
                        return (
                            f(vshift(z0, step * (ei + ej)))
                            - f(vshift(z0, step * (ei - ej)))
                            - f(vshift(z0, step * (ej - ei)))
                            + f(vshift(z0, -step * (ei + ej)))
                        ) / (4.0 * step**2)

                    coeff = _richardson(d2, h)
                key = KMultiIndex(
                    0, (0,) * d,
                    tuple((2 if k == i else 0) if i == j else (1 if k in (i, j) else 0)
                          for k in range(d)),
                )
                poly.coeffs[key] = coeff
    return poly


@dataclass(frozen=True)
class SampleSpec:
    """Budget for sampled seminorms; enlarging any count only appends
    samples, so refined estimates never decrease."""

    n_base: int = 3
    n_shells: int = 8
    n_dirs: int = 32
    seed: int = 0
    rho_max_frac: float = 0.5
    fd_step: float = 1e-3


@dataclass
class SeminormEstimate:
    value: float
    alpha: float
    witness: dict | None
    n_samples: int
    shell_sups: list[tuple[float, float]]


_AXIS_CACHE: dict[tuple[int, float], list[Point]] = {}


def _unit_directions(d: int, s: float, n: int, seed: int) -> list[Point]:
    """n phase offsets of unit group norm: deterministic axes first, then a
    seeded stream, each normalized exactly through the scaling."""
    axes = _AXIS_CACHE.get((d, s))
    if axes is None:
        axes = []
        zeros = np.zeros(d)
        for sign in (1.0, -1.0):
            axes.append(Point(sign, zeros, zeros))
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            for sign in (1.0, -1.0):
                axes.append(Point(0.0, sign * e, zeros))
                axes.append(Point(0.0, zeros, 2.0 * sign * e))
        _AXIS_CACHE[(d, s)] = axes
    out = list(axes[:n])
    rng = rng_for(seed, "holder-dirs", d)
    while len(out) < n:
        raw = Point(float(rng.normal()), rng.normal(size=d), rng.normal(size=d))
        nz = knorm(raw, s)
        if nz < 1e-9:
            continue
        out.append(dilate(raw, 1.0 / nz, s))
    return out


def _base_points(Q: Cylinder, s: float, spec: SampleSpec) -> list[Point]:
    bases = [Q.center]
    rng = rng_for(spec.seed, "holder-bases")
    d = Q.center.d
    while len(bases) < spec.n_base:
        raw = Point(-abs(float(rng.normal())), rng.normal(size=d), rng.normal(size=d))
        nz = knorm(raw, s)
        if nz < 1e-9:
            continue
        cand = compose(Q.center, dilate(dilate(raw, 1.0 / nz, s), 0.25 * Q.radius, s))
        if Q.contains(cand, s):
            bases.append(cand)
        else:
            bases.append(Q.center)  # keep the stream prefix-stable
    return bases


def seminorm_est(f: ScalarField, Q: Cylinder, alpha: float, s: float,
                 spec: SampleSpec = SampleSpec()) -> SeminormEstimate:
    """Sampled alpha-seminorm of f on a cylinder.

    Offsets are base o dilate(zeta, rho) with zeta of unit group norm, so
    the distance to the base point is exactly rho and each sampled ratio
    |f - p_base| / rho^alpha is a certified lower bound for the seminorm.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    dirs = _unit_directions(Q.center.d, s, spec.n_dirs, spec.seed)
    rho_max = spec.rho_max_frac * Q.radius
    rhos = [rho_max * 2.0**-j for j in range(spec.n_shells)]
    best = 0.0
    witness = None
    n = 0
    shell_sups: list[tuple[float, float]] = []
    for base in _base_points(Q, s, spec):
        if alpha > 0:
            poly = taylor_expansion(f, base, alpha, s, h=spec.fd_step * Q.radius)
        else:
            poly = KPolynomial(anchor=base, s=s)  # empty: ratios reduce to |f|
        fb_shells = []
        for rho in rhos:
            sup_here = 0.0
            for zeta in dirs:
                z = compose(base, dilate(zeta, rho, s))
                if not Q.contains(z, s):
                    continue
                n += 1
                ratio = abs(f(z) - poly(z)) / rho**alpha if alpha > 0 else abs(f(z))
                sup_here = max(sup_here, ratio)
                if ratio > best:
                    best = ratio
                    witness = {
                        "base": _point_dict(base),
                        "offset": _point_dict(z),
                        "rho": rho,
                        "ratio": ratio,
                    }
            fb_shells.append((rho, sup_here))
        if not shell_sups:
            shell_sups = fb_shells
        else:
            shell_sups = [(r, max(a, b)) for (r, a), (_, b) in zip(shell_sups, fb_shells)]
    return SeminormEstimate(best, alpha, witness, n, shell_sups)


def sup_norm_est(f: ScalarField, Q: Cylinder, s: float,
                 spec: SampleSpec = SampleSpec()) -> float:
    """Sampled sup of |f| over the same offset family seminorm_est uses."""
    est = seminorm_est(f, Q, 0.0, s, spec)
    return max(est.value, abs(f(Q.center)))


def holder_norm_est(f: ScalarField, Q: Cylinder, alpha: float, s: float,
                    spec: SampleSpec = SampleSpec()) -> float:
    return sup_norm_est(f, Q, s, spec) + seminorm_est(f, Q, alpha, s, spec).value


def weighted_norm_est(f: ScalarField, v_mags: list[float], alpha: float, q: float,
                      s: float, spec: SampleSpec = SampleSpec()) -> SeminormEstimate:
    """Decay-weighted norm: sup over unit cylinders centered at |v| grid
    points of (1+|v|)^q * (sup + seminorm) on that cylinder."""
    d = _probe_dim(f)
    best = 0.0
    witness = None
    n = 0
    for mag in v_mags:
        v = np.zeros(d)
        v[0] = mag
        Q = Cylinder(Point(0.0, np.zeros(d), v), 1.0)
        val = (1.0 + mag) ** q * holder_norm_est(f, Q, alpha, s, spec)
        n += 1
        if val > best:
            best = val
            witness = {"v_mag": mag, "weighted_norm": val}
    return SeminormEstimate(best, alpha, witness, n, [])


def _probe_dim(f: ScalarField) -> int:
    d = getattr(f, "d", None)
    if d is None:
        raise ValueError("pass a field with a .d attribute for weighted norms")
    return int(d)


def _point_dict(z: Point) -> dict:
    return {"t": z.t, "x": z.x.tolist(), "v": z.v.tolist()}


def increment_x(f: ScalarField, y: np.ndarray) -> ScalarField:
    """z -> f(z o (0,y,0)) - f(z); a pure spatial shift."""
    y = np.asarray(y, dtype=float)

    def g(z: Point) -> float:
        return f(Point(z.t, z.x + y, z.v)) - f(z)

    g.d = y.shape[0]  # type: ignore[attr-defined]
    return g


def increment_v(f: ScalarField, w: np.ndarray) -> ScalarField:
    """z -> f(z o (0,0,w)) - f(z); a pure velocity shift.

    Composing with (0,0,w) on the right leaves x alone. The slanted
    product is the other order: (0,0,w) o z shears x by t*w.
    """
    w = np.asarray(w, dtype=float)

    def g(z: Point) -> float:
        return f(Point(z.t, z.x, z.v + w)) - f(z)

    g.d = w.shape[0]  # type: ignore[attr-defined]
    return g


def check_interpolation(f: ScalarField, Q: Cylinder, a1: float, a2: float, a3: float,
                        s: float, spec: SampleSpec = SampleSpec(),
                        C_max: float = 10.0) -> CheckResult:
    """Sampled interpolation inequality between three seminorm orders.

    Requires a1 < a2 < a3. Verifies
      [f]_{a2} <= C ([f]_{a1}^theta [f]_{a3}^{1-theta} + r^{a1-a2} [f]_{a1})
    with theta solving a2 = theta a1 + (1-theta) a3; 0/0 passes vacuously.
    """
    if not a1 < a2 < a3:
        raise ValueError("need a1 < a2 < a3")
    theta = (a3 - a2) / (a3 - a1)
    e1 = seminorm_est(f, Q, a1, s, spec)
    e2 = seminorm_est(f, Q, a2, s, spec)
    e3 = seminorm_est(f, Q, a3, s, spec)
    r = Q.radius
    denom = e1.value**theta * e3.value ** (1.0 - theta) + r ** (a1 - a2) * e1.value
    vacuous = denom < 1e-14
    ratio = 0.0 if vacuous else e2.value / denom
    passed = vacuous or (e2.value < 1e-12) or ratio <= C_max
    return CheckResult(
        check_id="holder-interpolation",
        passed=passed,
        measured={"ratio": ratio, "mid_seminorm": e2.value, "denominator": denom,
                  "theta": theta},
        tolerance={"C_max": C_max},
        witnesses=[w for w in (e2.witness,) if w],
        coords={"a1": a1, "a2": a2, "a3": a3, "r": r},
        notes="vacuous (0/0)" if vacuous else "",
    )


def check_product(f: ScalarField, g: ScalarField, Q: Cylinder, alpha: float, s: float,
                  spec: SampleSpec = SampleSpec(), C_max: float = 10.0) -> CheckResult:
    """Sampled product bound ||fg|| <= C ||f|| ||g|| in the alpha norm."""

    def fg(z: Point) -> float:
        return f(z) * g(z)

    nf = holder_norm_est(f, Q, alpha, s, spec)
    ng = holder_norm_est(g, Q, alpha, s, spec)
    nfg = holder_norm_est(fg, Q, alpha, s, spec)
    denom = nf * ng
    vacuous = denom < 1e-14
    ratio = 0.0 if vacuous else nfg / denom
    return CheckResult(
        check_id="holder-product",
        passed=vacuous or ratio <= C_max,
        measured={"ratio": ratio, "norm_f": nf, "norm_g": ng, "norm_fg": nfg},
        tolerance={"C_max": C_max},
        coords={"alpha": alpha, "r": Q.radius},
        notes="vacuous (0/0)" if vacuous else "",
    )


def check_increment_x_bound(f: ScalarField, Q: Cylinder, alpha: float,
                            ys: list[np.ndarray], s: float,
                            spec: SampleSpec = SampleSpec(),
                            C_max: float = 10.0) -> CheckResult:
    """Spatial-increment regularity transfer on the half cylinder.

    For y in the admissible ball, ||increment_y f||_{alpha, Q/2} is tested
    against ||f||_{2s+alpha, Q} * ||(0,y,0)||^{2s}.
    """
    if not 0.0 < alpha <= min(1.0, 2.0 * s):
        raise ValueError("alpha must lie in (0, min(1,2s)]")
    R = Q.radius
    denom_norm = holder_norm_est(f, Q, 2.0 * s + alpha, s, spec)
    inner = Q.shrink(0.5)
    series = []
    worst = 0.0
    for y in ys:
        y = np.asarray(y, dtype=float)
        ylen = float(np.linalg.norm(y))
        if ylen >= 0.5 * R ** (1.0 + 2.0 * s):
            raise ValueError("increment exceeds half the spatial radius of Q")
        ynorm = ylen ** (1.0 / (1.0 + 2.0 * s))  # group norm of (0,y,0)
        num = holder_norm_est(increment_x(f, y), inner, alpha, s, spec)
        denom = denom_norm * ynorm ** (2.0 * s)
        ratio = 0.0 if denom < 1e-14 else num / denom
        worst = max(worst, ratio)
        series.append({"y_len": ylen, "numerator": num, "denominator": denom,
                       "ratio": ratio})
    return CheckResult(
        check_id="holder-increment-x",
        passed=worst <= C_max,
        measured={"worst_ratio": worst},
        series=series,
        tolerance={"C_max": C_max},
        coords={"alpha": alpha, "r": R},
    )


def _grad_x_sup(f: ScalarField, Q: Cylinder, s: float, spec: SampleSpec,
                h: float = 1e-5) -> float:
    """Sampled sup of |grad_x f| over the cylinder by centered differences."""
    est = 0.0
    d = Q.center.d
    pts = _base_points(Q, s, spec) + [
        compose(b, dilate(zeta, 0.25 * Q.radius, s))
        for b in _base_points(Q, s, spec)[:1]
        for zeta in _unit_directions(d, s, spec.n_dirs, spec.seed)
    ]
    for z in pts:
        if not Q.contains(z, s):
            continue
        g2 = 0.0
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            g2 += ((f(Point(z.t, z.x + e, z.v)) - f(Point(z.t, z.x - e, z.v))) / (2 * h)) ** 2
        est = max(est, math.sqrt(g2))
    return est


def check_increment_v_bound(f: ScalarField, Q: Cylinder, alpha: float,
                            ws: list[np.ndarray], s: float,
                            spec: SampleSpec = SampleSpec(),
                            C_max: float = 10.0,
                            grad_x_norm: float | None = None) -> CheckResult:
    """Velocity-increment regularity transfer on the half cylinder.

    Needs 2s + alpha < 1 and alpha <= min(1, 2s). The comparison seminorm
    is ([f]_{2s+alpha, Q} + |w|^{1-alpha} sup|grad_x f|) * ||(0,0,w)||^{2s},
    where ||(0,0,w)|| = |w|/2.
    """
    if not (2.0 * s + alpha < 1.0 and 0.0 < alpha <= min(1.0, 2.0 * s)):
        raise ValueError("need 2s+alpha < 1 and alpha in (0, min(1,2s)]")
    R = Q.radius
    base_semi = seminorm_est(f, Q, 2.0 * s + alpha, s, spec).value
    gx = _grad_x_sup(f, Q, s, spec) if grad_x_norm is None else grad_x_norm
    inner = Q.shrink(0.5)
    series = []
    worst = 0.0
    for w in ws:
        w = np.asarray(w, dtype=float)
        wlen = float(np.linalg.norm(w))
        if wlen >= 0.5 * R:
            raise ValueError("increment exceeds half the velocity radius of Q")
        num = seminorm_est(increment_v(f, w), inner, alpha, s, spec).value
        denom = (base_semi + wlen ** (1.0 - alpha) * gx) * (0.5 * wlen) ** (2.0 * s)
        ratio = 0.0 if denom < 1e-14 else num / denom
        worst = max(worst, ratio)
        series.append({"w_len": wlen, "numerator": num, "denominator": denom,
                       "ratio": ratio})
    return CheckResult(
        check_id="holder-increment-v",
        passed=worst <= C_max,
        measured={"worst_ratio": worst, "grad_x_sup": gx},
        series=series,
        tolerance={"C_max": C_max},
        coords={"alpha": alpha, "r": R},
    )
