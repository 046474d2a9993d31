"""Nonlocal collision kernel built from hyperplane moments of a profile,
its transformed version under the velocity-compression frame change, and
the principal-value functionals the ellipticity checks consume.

The kernel factors as K_f(v, v + rho*sigma) = rho^{-d-2s} J(v, sigma) with
J the kappa-moment of f over the hyperplane through v perpendicular to
sigma (kappa = gamma + 2s + 1). In carleman mode an explicit angular
factor A(|dv|, |w|), capped at params.a_cap, multiplies the moment and the
direction profile picks up a radial dependence; every reduction below
keeps working because A depends on |w| and |dv| only.

Gaussian components use an exact 1-d reduction of the hyperplane moment
(Bessel form in 3-d); compact bumps fall back to generic quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln, hyp1f1, i0e

from .kinetic_geometry import CovMap
from .numerics import (
    PVResult,
    QuadResult,
    QuadratureSpec,
    dyadic_panels,
    gauss_legendre,
    integrate_hyperplane,
    panel_nodes,
    sphere_grid,
)
from .params_profiles import CompactBump, GaussianComponent, ModelParams, Profile

__all__ = [
    "KernelEval",
    "kernel_eval",
    "kernel_cov_eval",
    "cone_direction_integral",
    "direction_profile",
    "transformed_direction_profile",
    "conv_gamma",
    "conv_gamma_closed",
    "apply_L",
    "tail_mass",
    "cancel1",
    "cancel2",
    "cov_pv_discrepancy",
    "CutoffSpec",
    "bump_tail",
]

_CHUNK = 4096


def _reach(f: Profile, v: np.ndarray | float) -> float:
    """Radial extent past which f(v + .) is negligible."""
    r = float(np.linalg.norm(v)) if np.ndim(v) else float(v)
    return r + f.scale() + 1.0


def _feature_width(f: Profile) -> float:
    """Smallest variation scale among the profile's components."""
    w = math.inf
    for c in f.components:
        if isinstance(c, GaussianComponent):
            w = min(w, math.sqrt(c.temperature))
        else:
            w = min(w, c.radius)
    return w if math.isfinite(w) else 1.0


def _pv_breaks(R: float, step: float) -> np.ndarray:
    """Shell boundaries from R down to R*1e-7, in descending order.

    Swept base points cross the profile bulk at radii comparable to |v|,
    so far shells are capped at the feature width; toward zero the width
    relaxes to a dyadic half-octave grading.
    """
    lo_cut = R * 1e-7
    step = max(step, R * 2e-4)
    shrink = 1.0 - 2.0**-0.5
    out = [R]
    lo = R
    while lo > lo_cut:
        lo -= min(step, lo * shrink)
        out.append(lo)
    return np.array(out)


def _band_half_dirs(
    f: Profile, v: np.ndarray, d: int, n_phi: int = 16
) -> tuple[np.ndarray, np.ndarray] | None:
    """Half-space direction grid refined near the equator of v.

    The reflected kernel term re-enters the profile bulk where v.sigma is
    order one, a band of angular width 1/|v| that uniform grids stop
    resolving around |v| = 8. Weights sum to half the sphere area. None
    below the refinement threshold.
    """
    mag = float(np.linalg.norm(v))
    if mag < 8.0:
        return None
    axis = v / mag
    h_t = min(0.95, (f.scale() + 8.0) / mag)
    step = 1.5 * _feature_width(f) / mag
    core = np.arange(0.0, h_t + step, step)
    core[-1] = h_t
    tn, tw = panel_nodes(core, 8)
    on, ow = panel_nodes(dyadic_panels(h_t, 1.0, per_octave=1), 12)
    t = np.concatenate([tn, on])
    wt = np.concatenate([tw, ow])
    if d == 2:
        # work in the angle from the axis; the equator sits at pi/2
        half_pi = 0.5 * math.pi
        h_th = min(1.4, (f.scale() + 8.0) / mag)
        step_th = 1.5 * _feature_width(f) / mag
        core_b = np.arange(half_pi - h_th, half_pi + step_th, step_th)
        core_b[-1] = half_pi
        cn, cw = panel_nodes(core_b, 8)
        ob = np.array([0.0, 0.5 * (half_pi - h_th), half_pi - h_th])
        on2, ow2 = panel_nodes(ob, 16)
        th = np.concatenate([on2, cn])
        wth = np.concatenate([ow2, cw])
        perp = np.array([-axis[1], axis[0]])
        ct, st = np.cos(th), np.sin(th)
        dirs = np.concatenate(
            [
                ct[:, None] * axis[None, :] + st[:, None] * perp[None, :],
                ct[:, None] * axis[None, :] - st[:, None] * perp[None, :],
            ]
        )
        return dirs, np.concatenate([wth, wth])
    e1 = np.zeros(3)
    e1[int(np.argmin(np.abs(axis)))] = 1.0
    u1 = np.cross(axis, e1)
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(axis, u1)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    ring = np.cos(phi)[:, None] * u1[None, :] + np.sin(phi)[:, None] * u2[None, :]
    sin = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
    dirs = t[:, None, None] * axis[None, None, :] + sin[:, None, None] * ring[None, :, :]
    w = np.broadcast_to((2.0 * math.pi * wt / n_phi)[:, None], (len(t), n_phi))
    return dirs.reshape(-1, 3), np.asarray(w).reshape(-1)


def _carleman_factor(params: ModelParams, delta: np.ndarray, rho_w: np.ndarray) -> np.ndarray:
    """Angular factor 2^{d-1} ((|dv|^2+|w|^2)/|w|^2)^{kappa/2}, capped."""
    ratio = (delta**2 + rho_w**2) / np.where(rho_w > 0, rho_w**2, 1.0)
    A = 2.0 ** (params.d - 1) * ratio ** (0.5 * params.kappa)
    A = np.where(rho_w > 0, A, params.a_cap)
    return np.minimum(A, params.a_cap)


# ---------------------------------------------------------------------------
# hyperplane kappa-moments J(v, sigma)


def _window_nodes(lo: np.ndarray, hi: np.ndarray, nq: int) -> tuple[np.ndarray, np.ndarray]:
    """GL nodes row-wise on [lo_i, hi_i]; shapes (n, nq)."""
    x, w = gauss_legendre(nq)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]


_UNIT_LADDER: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _unit_ladder(nq: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Graded nodes/weights on [0, 1] for moment weights singular at 0."""
    got = _UNIT_LADDER.get(nq)
    if got is None:
        got = panel_nodes(dyadic_panels(1e-12, 1.0, per_octave=1), nq)
        _UNIT_LADDER[nq] = got
    return got


def _j_gauss_rows(
    comp: GaussianComponent,
    params: ModelParams,
    vs: np.ndarray,
    sigmas: np.ndarray,
    deltas: np.ndarray | None,
) -> np.ndarray:
    """Hyperplane kappa-moment of one Gaussian component, row-paired.

    3-d reduces to a Bessel-weighted radial integral; 2-d to a line
    integral with the displacement folded into one offset. deltas feeds
    the carleman angular factor; None means model mode.
    """
    kappa = params.kappa
    T = comp.temperature
    sd = math.sqrt(T)
    c = vs - np.asarray(comp.drift)[None, :]
    a = np.einsum("nd,nd->n", c, sigmas)
    b2 = np.einsum("nd,nd->n", c, c) - a**2
    b = np.sqrt(np.clip(b2, 0.0, None))
    n = vs.shape[0]
    out = np.zeros(n)
    width = 12.0 * sd

    def body(rho: np.ndarray, wts: np.ndarray, rows: np.ndarray) -> np.ndarray:
        br = b[rows]
        arg = rho * br[:, None] / T
        vals = rho** (kappa + 1.0) * np.exp(-((rho - br[:, None]) ** 2) / (2.0 * T)) * i0e(arg)
        if deltas is not None:
            vals = vals * _carleman_factor(params, deltas[rows][:, None], rho)
        return np.sum(vals * wts, axis=1)

    def body2(t: np.ndarray, wts: np.ndarray, rows: np.ndarray) -> np.ndarray:
        # both half-lines of the signed line variable, bump at +-b
        br = b[rows]
        vals = t**kappa * (
            np.exp(-((t - br[:, None]) ** 2) / (2.0 * T))
            + np.exp(-((t + br[:, None]) ** 2) / (2.0 * T))
        )
        if deltas is not None:
            vals = vals * _carleman_factor(params, deltas[rows][:, None], t)
        return np.sum(vals * wts, axis=1)

    near = b <= width + 1e-300  # window clips zero: quadrature must cover [0, hi]
    far = ~near

    def near_nodes(br: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if kappa >= 1.0:
            # no radial singularity: three windows anchored to the bump
            lo_b = np.maximum(br - 6.0 * sd, 0.0)
            hi_b = br + 6.0 * sd
            hi = br + width
            n1, w1 = _window_nodes(np.zeros_like(br), lo_b, 8)
            n2, w2 = _window_nodes(lo_b, hi_b, 24)
            # bump overlapping zero: rho = u^2 restores smoothness of rho^(kappa+1)
            z = lo_b <= 0.0
            if np.any(z):
                u, wu = _window_nodes(np.zeros_like(br), np.sqrt(hi_b), 24)
                n2 = np.where(z[:, None], u**2, n2)
                w2 = np.where(z[:, None], 2.0 * u * wu, w2)
            n3, w3 = _window_nodes(hi_b, hi, 8)
            return np.concatenate([n1, n2, n3], axis=1), np.concatenate([w1, w2, w3], axis=1)
        ux, uw = _unit_ladder()
        hi = br + width
        return hi[:, None] * ux[None, :], hi[:, None] * uw[None, :]

    if params.d == 3:
        pref = comp.mass * (2.0 * math.pi * T) ** -1.5 * 2.0 * math.pi * np.exp(
            -(a**2) / (2.0 * T)
        )
        if np.any(far):
            rows = np.flatnonzero(far)
            for k in range(0, len(rows), _CHUNK):
                rr = rows[k : k + _CHUNK]
                nodes, wts = _window_nodes(b[rr] - width, b[rr] + width, 48)
                out[rr] = body(nodes, wts, rr)
        if np.any(near):
            rows = np.flatnonzero(near)
            for k in range(0, len(rows), _CHUNK):
                rr = rows[k : k + _CHUNK]
                nodes, wts = near_nodes(b[rr])
                out[rr] = body(nodes, wts, rr)
        return pref * out
    # d == 2
    pref = comp.mass * (2.0 * math.pi * T) ** -1.0 * np.exp(-(a**2) / (2.0 * T))
    if np.any(far):
        rows = np.flatnonzero(far)
        for k in range(0, len(rows), _CHUNK):
            rr = rows[k : k + _CHUNK]
            nodes, wts = _window_nodes(b[rr] - width, b[rr] + width, 48)
            out[rr] = body2(nodes, wts, rr)
    if np.any(near):
        rows = np.flatnonzero(near)
        for k in range(0, len(rows), _CHUNK):
            rr = rows[k : k + _CHUNK]
            nodes, wts = near_nodes(b[rr])
            out[rr] = body2(nodes, wts, rr)
    return pref * out


def j_generic(
    f: Profile,
    params: ModelParams,
    v: np.ndarray,
    sigma: np.ndarray,
    spec: QuadratureSpec = QuadratureSpec(),
    delta: float | None = None,
) -> QuadResult:
    """Hyperplane kappa-moment by generic adaptive quadrature."""
    v = np.asarray(v, dtype=float)
    kappa = params.kappa

    def g(w: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(w, axis=-1)
        vals = f(v[None, :] + w) * r**kappa
        if delta is not None:
            vals = vals * _carleman_factor(params, np.full_like(r, delta), r)
        return vals

    scale = _reach(f, v) / spec.radial_cutoff
    return integrate_hyperplane(g, sigma, params.d, spec, scale=scale)


def j_rows(
    f: Profile,
    params: ModelParams,
    vs: np.ndarray,
    sigmas: np.ndarray,
    deltas: np.ndarray | None = None,
) -> np.ndarray:
    """Row-paired J(vs[i], sigmas[i]); fast for Gaussian components.

    deltas (same length) switches on the carleman angular factor. Compact
    bumps integrate generically row by row, so keep row counts modest for
    profiles with bumps.
    """
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    sigmas = np.atleast_2d(np.asarray(sigmas, dtype=float))
    if vs.shape[0] == 1 and sigmas.shape[0] > 1:
        vs = np.broadcast_to(vs, sigmas.shape)
    if sigmas.shape[0] == 1 and vs.shape[0] > 1:
        sigmas = np.broadcast_to(sigmas, vs.shape)
    mode_deltas = deltas if params.kernel_mode == "carleman" else None
    out = np.zeros(vs.shape[0])
    for comp in f.components:
        if isinstance(comp, GaussianComponent):
            out += _j_gauss_rows(comp, params, vs, sigmas, mode_deltas)
        else:
            sub = Profile((comp,))
            for i in range(vs.shape[0]):
                dl = None if mode_deltas is None else float(mode_deltas[i])
                out[i] += j_generic(sub, params, vs[i], sigmas[i], delta=dl).value
    return out


def direction_profile(
    f: Profile, params: ModelParams, v: np.ndarray, sigmas: np.ndarray
) -> np.ndarray:
    """J(v, sigma) for one base velocity over a direction grid (model mode)."""
    v = np.asarray(v, dtype=float)
    return j_rows(f, params, np.broadcast_to(v, sigmas.shape), sigmas)


def cone_direction_integral(
    f: Profile,
    params: ModelParams,
    v: np.ndarray,
    sigma: np.ndarray,
    spec: QuadratureSpec | None = None,
) -> float:
    """Direction-resolved nonnegative integrand whose superlevel sets are
    the thickness-measuring cone. Generic quadrature when spec is given."""
    if spec is not None:
        return j_generic(f, params, v, sigma, spec).value
    return float(j_rows(f, params, np.asarray(v)[None, :], np.asarray(sigma)[None, :])[0])


def transformed_direction_profile(
    f: Profile, params: ModelParams, M: CovMap, v: np.ndarray, sigmas: np.ndarray
) -> np.ndarray:
    """Direction profile of the frame-changed kernel at probe velocity v.

    Gbar(sigma) = |v0|^{-1-gamma-2s} |T sigma|^{-d-2s} J(vbar, T sigma / |T sigma|)
    with T the velocity compression; reduces to the plain profile when the
    map is inactive. Model mode only (the carleman factor breaks the exact
    radial separation).
    """
    if params.kernel_mode != "model":
        raise ValueError("transformed direction profile needs model mode")
    vbar = M.base_velocity(np.asarray(v, dtype=float))
    tsig = M.compress(sigmas)
    tlen = np.linalg.norm(tsig, axis=-1)
    that = tsig / tlen[:, None]
    pref = 1.0
    if M.active:
        pref = M.v0_norm ** (-(1.0 + params.gamma + 2.0 * params.s))
    J = j_rows(f, params, np.broadcast_to(vbar, sigmas.shape), that)
    return params.b_norm * pref * tlen ** (-(params.d + 2.0 * params.s)) * J


class KernelEval(NamedTuple):
    value: float
    error_est: float
    converged: bool
    mode: str


def kernel_eval(
    f: Profile,
    params: ModelParams,
    v: np.ndarray,
    v_prime: np.ndarray,
    spec: QuadratureSpec = QuadratureSpec(),
) -> KernelEval:
    """K_f(v, v') through generic adaptive hyperplane quadrature.

    The fast Gaussian reduction never enters here; this is the reference
    route the reductions are validated against.
    """
    v = np.asarray(v, dtype=float)
    v_prime = np.asarray(v_prime, dtype=float)
    delta = v_prime - v
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        raise ValueError("kernel_eval needs v != v_prime")
    sigma = delta / dist
    dl = dist if params.kernel_mode == "carleman" else None
    quad = j_generic(f, params, v, sigma, spec, delta=dl)
    pref = params.b_norm * dist ** (-(params.d + 2.0 * params.s))
    return KernelEval(pref * quad.value, pref * quad.error_est, quad.converged, params.kernel_mode)


def kernel_cov_eval(
    f: Profile,
    params: ModelParams,
    M: CovMap,
    v: np.ndarray,
    w: np.ndarray,
    spec: QuadratureSpec = QuadratureSpec(),
) -> KernelEval:
    """Frame-changed kernel Kbar(v, v + w) by the defining substitution."""
    vbar = M.base_velocity(np.asarray(v, dtype=float))
    wbar = M.compress(np.asarray(w, dtype=float))
    base = kernel_eval(f, params, vbar, vbar + wbar, spec)
    pref = 1.0
    if M.active:
        pref = M.v0_norm ** (-(1.0 + params.gamma + 2.0 * params.s))
    return KernelEval(pref * base.value, pref * base.error_est, base.converged, base.mode)


# ---------------------------------------------------------------------------
# convolution with the potential weight


def conv_gamma_closed(f: Profile, params: ModelParams, v: np.ndarray) -> float:
    """Closed-form (f * |.|^gamma)(v) for Gaussian mixtures via the
    confluent hypergeometric moment formula; bumps are rejected."""
    if not f.is_gaussian_mixture:
        raise ValueError("closed form needs a Gaussian mixture")
    v = np.asarray(v, dtype=float)
    g, d = params.gamma, params.d
    total = 0.0
    for comp in f.gaussians():
        c2 = float(np.sum((v - np.asarray(comp.drift)) ** 2))
        T = comp.temperature
        mom = (
            (2.0 * T) ** (g / 2.0)
            * math.exp(gammaln((d + g) / 2.0) - gammaln(d / 2.0))
            * float(hyp1f1(-g / 2.0, d / 2.0, -c2 / (2.0 * T)))
        )
        total += comp.mass * mom
    return total


def _polar_product_dirs(n_dir: int) -> tuple[np.ndarray, np.ndarray]:
    """Spectral d=3 direction set: GL in the polar cosine, uniform azimuth.

    Off-center smooth integrands converge geometrically here, where a
    quasi-uniform lattice only gains one digit per quadrupling.
    """
    nth = max(6, int(round(math.sqrt(0.5 * n_dir))))
    nph = 2 * nth
    ct, wt = gauss_legendre(nth)
    st = np.sqrt(np.clip(1.0 - ct * ct, 0.0, None))
    ph = 2.0 * math.pi * (np.arange(nph) + 0.5) / nph
    dirs = np.stack(
        [
            (st[:, None] * np.cos(ph)[None, :]).ravel(),
            (st[:, None] * np.sin(ph)[None, :]).ravel(),
            np.broadcast_to(ct[:, None], (nth, nph)).ravel(),
        ],
        axis=-1,
    )
    wd = (2.0 * math.pi / nph) * np.broadcast_to(wt[:, None], (nth, nph)).ravel()
    return dirs, wd


def conv_gamma(
    f: Profile, params: ModelParams, v: np.ndarray, spec: QuadratureSpec = QuadratureSpec()
) -> QuadResult:
    """(f * |.|^gamma)(v) by adaptive polar quadrature, graded at the
    origin so negative exponents gamma > -d converge."""
    v = np.asarray(v, dtype=float)
    d = params.d
    r_hi = _reach(f, v)

    def attempt(per_octave: int, n_dir: int, nq: int) -> float:
        if d == 3:
            dirs, wd = _polar_product_dirs(n_dir)
        else:
            dirs, wd = sphere_grid(d, n_dir)
        rr, wr = panel_nodes(dyadic_panels(r_hi * 1e-12, r_hi, per_octave), nq)
        radial = rr ** (params.gamma + d - 1.0) * wr
        total = 0.0
        for i in range(0, rr.shape[0], 256):
            blk = rr[i : i + 256]
            pts = v[None, None, :] + blk[:, None, None] * dirs[None, :, :]
            vals = f(pts.reshape(-1, d)).reshape(blk.shape[0], -1)
            total += float(np.einsum("r,rk,k->", radial[i : i + 256], vals, wd))
        return total

    prev = attempt(1, 64, 12)
    err = math.inf
    per_octave, n_dir, nq = 1, 64, 12
    for _ in range(spec.max_refinements):
        per_octave += 1
        n_dir = min(2 * n_dir, 8192)
        nq = min(nq + 4, 24)
        cur = attempt(per_octave, n_dir, nq)
        err = abs(cur - prev)
        prev = cur
        if err <= spec.rel_tol * max(abs(cur), spec.abs_tol / spec.rel_tol):
            return QuadResult(cur, err, True)
    return QuadResult(prev, err, False)


# ---------------------------------------------------------------------------
# radial ladders shared by the nonlocal functionals


def _ladder_nodes(lo: float, hi: float, per_octave: int = 2, nq: int = 8):
    return panel_nodes(dyadic_panels(lo, hi, per_octave), nq)


def tail_mass(
    f: Profile,
    params: ModelParams,
    v: np.ndarray,
    r: float,
    n_dirs: int | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Mass of the kernel outside the radius-r ball at v.

    Model mode: the per-direction radial integral separates exactly into
    r^{-2s}/(2s) times the direction profile. Carleman mode integrates the
    radial ladder numerically and caps the remainder with a_cap.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    v = np.asarray(v, dtype=float)
    d = params.d
    if n_dirs is None:
        n_dirs = 2048 if d == 3 else 512
    dirs, wd = sphere_grid(d, n_dirs)
    if params.kernel_mode == "model":
        J = j_rows(f, params, np.broadcast_to(v, dirs.shape), dirs)
        return params.b_norm * float(np.sum(wd * J)) * r ** (-2.0 * params.s) / (2.0 * params.s)
    R_far = max(_reach(f, v) * 4.0, 8.0 * r)
    rr, wr = _ladder_nodes(r, R_far, per_octave=2, nq=8)
    total = 0.0
    for k in range(0, len(rr), 64):
        rho = rr[k : k + 64]
        wts = wr[k : k + 64]
        sig = np.broadcast_to(dirs[None, :, :], (len(rho), n_dirs, d)).reshape(-1, d)
        Jv = j_rows(
            f,
            params,
            np.broadcast_to(v, sig.shape),
            sig,
            deltas=np.repeat(rho, n_dirs),
        ).reshape(len(rho), n_dirs)
        total += float(np.einsum("r,rk,k->", rho ** (-1.0 - 2.0 * params.s) * wts, Jv, wd))
    Jcap = j_rows(f, params, np.broadcast_to(v, dirs.shape), dirs)
    tail = params.a_cap * float(np.sum(wd * Jcap)) * R_far ** (-2.0 * params.s) / (2.0 * params.s)
    return params.b_norm * (total + tail)


def cancel1(
    f: Profile,
    params: ModelParams,
    v: np.ndarray,
    R: float | None = None,
    n_dirs: int = 256,
    spec: QuadratureSpec = QuadratureSpec(),
    extend: bool = False,
    band_refine: bool = False,
) -> PVResult:
    """PV integral of K_f(v, v') - K_f(v', v) over the ball of radius R at v.

    Antipodal pairing turns the integrand into a second difference of the
    direction profile in its base point, which is integrable; dyadic
    shells from R inward form the residual ladder. extend=True adds the
    closed-form exterior contribution (model mode), giving the whole-space
    principal value for rapidly decaying profiles. band_refine switches
    to a direction grid concentrated near the equator of v, needed past
    |v| = 8 where the reflected term's angular band outruns uniform grids.
    """
    v = np.asarray(v, dtype=float)
    d = params.d
    if R is None:
        R = _reach(f, v)
    band = _band_half_dirs(f, v, d) if band_refine else None
    if band is not None:
        half, whalf = band
    else:
        dirs, wd = sphere_grid(d, n_dirs, symmetric=True)
        half, whalf = dirs[: n_dirs // 2], wd[: n_dirs // 2]
    J0 = j_rows(f, params, np.broadcast_to(v, half.shape), half)
    breaks = _pv_breaks(R, _feature_width(f))
    x, wq = gauss_legendre(8)
    shells = []
    carleman = params.kernel_mode == "carleman"
    for k in range(len(breaks) - 1):
        b_hi, b_lo = breaks[k], breaks[k + 1]
        rho = 0.5 * (b_hi + b_lo) + 0.5 * (b_hi - b_lo) * x
        wts = 0.5 * (b_hi - b_lo) * wq
        pts_p = v[None, None, :] + rho[:, None, None] * half[None, :, :]
        pts_m = v[None, None, :] - rho[:, None, None] * half[None, :, :]
        sig = np.broadcast_to(half[None, :, :], pts_p.shape).reshape(-1, d)
        dls = np.repeat(rho, half.shape[0]) if carleman else None
        Jp = j_rows(f, params, pts_p.reshape(-1, d), sig, deltas=dls).reshape(rho.shape[0], -1)
        Jm = j_rows(f, params, pts_m.reshape(-1, d), sig, deltas=dls).reshape(rho.shape[0], -1)
        if carleman:
            J0r = j_rows(f, params, np.broadcast_to(v, sig.shape), sig, deltas=dls).reshape(
                rho.shape[0], -1
            )
        else:
            J0r = J0[None, :]
        paired = 2.0 * J0r - Jp - Jm
        radial = rho ** (-1.0 - 2.0 * params.s) * wts
        shells.append(float(np.einsum("r,rk,k->", radial, paired, whalf)))
    shells_arr = np.array(shells)
    total = float(shells_arr.sum())
    mags = np.abs(shells_arr)
    converged = True
    if len(mags) >= 3 and mags[-2] > 0:
        q = mags[-1] / mags[-2]
        if q < 0.9:
            total += shells_arr[-1] * q / (1.0 - q)
        else:
            converged = mags[-1] <= spec.rel_tol * max(float(mags.max()), 1e-300) + spec.abs_tol
    if extend:
        if carleman:
            raise ValueError("extend requires model mode")
        # exterior: the J(v, .) term integrates in closed form; the
        # reflected term is negligible once R exceeds the profile reach
        ext = 2.0 * float(np.sum(whalf * J0)) * R ** (-2.0 * params.s) / (2.0 * params.s)
        total += ext
    return PVResult(params.b_norm * total, mags, converged)


def cancel2(
    f: Profile,
    params: ModelParams,
    v: np.ndarray,
    r: float,
    n_dirs: int = 256,
    spec: QuadratureSpec = QuadratureSpec(),
    M: CovMap | None = None,
) -> PVResult:
    """Vector PV integral of (K_f(v,v') - K_f(v',v)) (v'-v) over B_r(v).

    The forward-kernel part vanishes exactly by evenness of the direction
    profile; pairing leaves a first difference of the base point, which is
    integrable for s < 1.

    With a frame-change map, v is a probe velocity in map coordinates:
    the base point moves to the corresponding kernel velocity, the ball
    becomes the compression ellipsoid (per-direction radial limits), and
    the moment vector picks up the stretch. The |v0| power of the
    transformed kernel is the caller's to apply.
    """
    v = np.asarray(v, dtype=float)
    d = params.d
    dirs, wd = sphere_grid(d, n_dirs, symmetric=True)
    half, whalf = dirs[: n_dirs // 2], wd[: n_dirs // 2]
    if M is not None:
        if M.active and params.kernel_mode == "carleman":
            raise ValueError("frame-changed ladder needs model mode")
        base = M.base_velocity(v)
        r_sig = M.ellipsoid_radius_along(half, r)
        vecs = M.stretch(half)
    else:
        base = v
        r_sig = np.full(half.shape[0], r)
        vecs = half
    moment = vecs * (whalf * r_sig ** (1.0 - 2.0 * params.s))[:, None]
    breaks = dyadic_panels(1e-7, 1.0, per_octave=2)[::-1]
    x, wq = gauss_legendre(8)
    carleman = params.kernel_mode == "carleman"
    shells = []
    for k in range(len(breaks) - 1):
        b_hi, b_lo = breaks[k], breaks[k + 1]
        tau = 0.5 * (b_hi + b_lo) + 0.5 * (b_hi - b_lo) * x
        wts = 0.5 * (b_hi - b_lo) * wq
        rho = tau[:, None] * r_sig[None, :]
        pts_p = base[None, None, :] + rho[:, :, None] * half[None, :, :]
        pts_m = base[None, None, :] - rho[:, :, None] * half[None, :, :]
        sig = np.broadcast_to(half[None, :, :], pts_p.shape).reshape(-1, d)
        dls = rho.reshape(-1) if carleman else None
        Jp = j_rows(f, params, pts_p.reshape(-1, d), sig, deltas=dls).reshape(rho.shape)
        Jm = j_rows(f, params, pts_m.reshape(-1, d), sig, deltas=dls).reshape(rho.shape)
        diff = Jm - Jp  # reflected-kernel first difference
        radial = tau ** (-2.0 * params.s) * wts
        shells.append(np.einsum("r,rk,kd->d", radial, diff, moment))
    shells_arr = np.array(shells)
    total = shells_arr.sum(axis=0)
    mags = np.linalg.norm(shells_arr, axis=1)
    converged = True
    if len(mags) >= 3 and mags[-2] > 0:
        q = mags[-1] / mags[-2]
        if q < 0.9:
            total = total + shells_arr[-1] * q / (1.0 - q)
        else:
            converged = mags[-1] <= spec.rel_tol * max(float(mags.max()), 1e-300) + spec.abs_tol
    return PVResult(params.b_norm * total, mags, converged)


def cov_pv_discrepancy(
    f: Profile,
    params: ModelParams,
    M: CovMap,
    v: np.ndarray,
    R: float,
    n_dirs: int = 256,
    nq: int = 16,
) -> float:
    """Antisymmetrized kernel mass between the compressed ball and the
    round ball of radius R at the transformed probe velocity.

    The region is the shell between the compression ellipsoid and the
    sphere; per direction it is the radial interval (rho_E(sigma), R),
    empty when the frame change is inactive.
    """
    if params.kernel_mode != "model":
        raise ValueError("discrepancy reduction needs model mode")
    vbar = M.base_velocity(np.asarray(v, dtype=float))
    d = params.d
    if not M.active:
        return 0.0
    dirs, wd = sphere_grid(d, n_dirs, symmetric=True)
    half, whalf = dirs[: n_dirs // 2], wd[: n_dirs // 2]
    rho_e = M.ellipsoid_radius_along(half, R)
    J0 = j_rows(f, params, np.broadcast_to(vbar, half.shape), half)
    x, wq = gauss_legendre(nq)
    rho = 0.5 * (R + rho_e)[:, None] + 0.5 * (R - rho_e)[:, None] * x[None, :]
    wts = 0.5 * (R - rho_e)[:, None] * wq[None, :]
    pts_p = vbar[None, None, :] + rho[:, :, None] * half[:, None, :]
    pts_m = vbar[None, None, :] - rho[:, :, None] * half[:, None, :]
    sig = np.broadcast_to(half[:, None, :], pts_p.shape).reshape(-1, d)
    Jp = j_rows(f, params, pts_p.reshape(-1, d), sig).reshape(rho.shape)
    Jm = j_rows(f, params, pts_m.reshape(-1, d), sig).reshape(rho.shape)
    paired = 2.0 * J0[:, None] - Jp - Jm
    vals = np.sum(rho ** (-1.0 - 2.0 * params.s) * paired * wts, axis=1)
    return params.b_norm * float(np.sum(vals * whalf))


# ---------------------------------------------------------------------------
# frozen-kernel operator


def apply_L(
    f: Profile,
    params: ModelParams,
    g: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    spec: QuadratureSpec = QuadratureSpec(),
    near_radius: float | None = None,
    far_radius: float | None = None,
    n_dirs: int = 256,
) -> QuadResult:
    """Integro-differential operator PV int (g(v') - g(v)) K_f(v, v') dv'.

    Near field: symmetrized second differences of g kill the singularity;
    far field: direct radial ladder with an explicit decay tail for g
    vanishing at infinity. The split radius balances the sup of g against
    its curvature when not supplied.
    """
    v = np.asarray(v, dtype=float)
    d = params.d
    gv = float(np.asarray(g(v[None, :]))[0])
    if near_radius is None:
        h = 1e-3
        eye = np.eye(d)
        curv = 0.0
        for i in range(d):
            trip = np.stack([v + h * eye[i], v, v - h * eye[i]])
            ga, gb, gc = np.asarray(g(trip))
            curv = max(curv, abs(ga - 2.0 * gb + gc) / h**2)
        near_radius = min(max((max(abs(gv), 1e-8) / max(curv, 1e-8)) ** 0.5, 1e-2), 4.0)
    if far_radius is None:
        far_radius = 2.0 * _reach(f, v)
    dirs, wd = sphere_grid(d, n_dirs, symmetric=True)
    half, whalf = dirs[: n_dirs // 2], wd[: n_dirs // 2]
    carleman = params.kernel_mode == "carleman"
    s2 = 2.0 * params.s

    def j_at(rho: np.ndarray) -> np.ndarray:
        # J(v, sigma) resolved per (rho, half-direction), carleman aware
        sig = np.broadcast_to(half[None, :, :], (len(rho), half.shape[0], d)).reshape(-1, d)
        dls = np.repeat(rho, half.shape[0]) if carleman else None
        return j_rows(f, params, np.broadcast_to(v, sig.shape), sig, deltas=dls).reshape(
            len(rho), -1
        )

    # near field
    rr_n, wr_n = _ladder_nodes(near_radius * 1e-8, near_radius, per_octave=2, nq=8)
    pts_p = v[None, None, :] + rr_n[:, None, None] * half[None, :, :]
    pts_m = v[None, None, :] - rr_n[:, None, None] * half[None, :, :]
    gp = np.asarray(g(pts_p.reshape(-1, d))).reshape(len(rr_n), -1)
    gm = np.asarray(g(pts_m.reshape(-1, d))).reshape(len(rr_n), -1)
    second = gp + gm - 2.0 * gv
    Jn = j_at(rr_n)
    near = float(np.einsum("r,rk,k->", rr_n ** (-1.0 - s2) * wr_n, second * Jn, whalf))
    # far field: both hemispheres folded into one paired sum
    rr_f, wr_f = _ladder_nodes(near_radius, far_radius, per_octave=4, nq=8)
    pts_p = v[None, None, :] + rr_f[:, None, None] * half[None, :, :]
    pts_m = v[None, None, :] - rr_f[:, None, None] * half[None, :, :]
    gp = np.asarray(g(pts_p.reshape(-1, d))).reshape(len(rr_f), -1)
    gm = np.asarray(g(pts_m.reshape(-1, d))).reshape(len(rr_f), -1)
    paired = gp + gm - 2.0 * gv
    Jf = j_at(rr_f)
    far = float(np.einsum("r,rk,k->", rr_f ** (-1.0 - s2) * wr_f, paired * Jf, whalf))
    # tail beyond far_radius: g decays, leaving the -g(v) part
    Jtail = j_at(np.array([far_radius]))[0]
    tail = -2.0 * gv * float(np.sum(whalf * Jtail)) * far_radius ** (-s2) / s2
    return QuadResult(params.b_norm * (near + far + tail), abs(params.b_norm * tail), True)


# ---------------------------------------------------------------------------
# far-mass screening pieces


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth radial cutoff: 1 inside |v| <= vn/9, 0 outside |v| >= vn/8."""

    center_norm: float

    def __post_init__(self) -> None:
        if self.center_norm <= 0:
            raise ValueError("center_norm must be positive")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(v), axis=-1)
        lo = self.center_norm / 9.0
        hi = self.center_norm / 8.0
        u = np.clip((r - lo) / (hi - lo), 0.0, 1.0)

        def psi(t: np.ndarray) -> np.ndarray:
            out = np.zeros_like(t)
            pos = t > 0
            out[pos] = np.exp(-1.0 / t[pos])
            return out

        return psi(1.0 - u) / (psi(1.0 - u) + psi(u))


def bump_tail(
    f: Profile,
    params: ModelParams,
    g: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    cutoff: CutoffSpec,
    n_dirs: int = 256,
    n_rad: int = 24,
) -> float:
    """Screened near-origin mass seen from a remote velocity:
    int_{|v'| < vn/8} |g(v')| cutoff(v') K_f(v, v') dv'."""
    v = np.asarray(v, dtype=float)
    d = params.d
    R = cutoff.center_norm / 8.0
    dirs, wd = sphere_grid(d, n_dirs)
    x, wq = gauss_legendre(n_rad)
    rr = 0.5 * R * (x + 1.0)
    wr = 0.5 * R * wq
    pts = rr[:, None, None] * dirs[None, :, :]
    flat = pts.reshape(-1, d)
    delta = flat - v[None, :]
    dist = np.linalg.norm(delta, axis=1)
    sig = delta / dist[:, None]
    dls = dist if params.kernel_mode == "carleman" else None
    J = j_rows(f, params, np.broadcast_to(v, flat.shape), sig, deltas=dls)
    K = params.b_norm * dist ** (-(d + 2.0 * params.s)) * J
    weights = np.abs(np.asarray(g(flat))) * cutoff(flat) * K
    jac = (rr ** (d - 1) * wr)[:, None] * wd[None, :]
    return float(np.sum(weights.reshape(len(rr), n_dirs) * jac))
