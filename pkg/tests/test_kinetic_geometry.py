"""Group operations, the kinetic distance, and the frame-change map."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinokit.kinetic_geometry import (
    CovMap,
    Cylinder,
    Point,
    compose,
    da,
    dGS,
    dilate,
    inverse,
    kdistance,
    knorm,
    offset_from,
    origin,
)
from kinokit.params_profiles import ModelParams

coord = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)


def pts(draw_t, xs, vs):
    return Point(draw_t, np.array(xs), np.array(vs))


@st.composite
def points(draw, d=3):
    t = draw(coord)
    x = np.array([draw(coord) for _ in range(d)])
    v = np.array([draw(coord) for _ in range(d)])
    return Point(t, x, v)


def close(a: Point, b: Point, tol=1e-9) -> bool:
    return (
        abs(a.t - b.t) < tol
        and np.allclose(a.x, b.x, atol=tol)
        and np.allclose(a.v, b.v, atol=tol)
    )


@settings(max_examples=60, deadline=None)
@given(z=points())
def test_inverse_roundtrip(z):
    o = origin(3)
    assert close(compose(inverse(z), z), o, tol=1e-7)
    assert close(compose(z, inverse(z)), o, tol=1e-7)


@settings(max_examples=60, deadline=None)
@given(a=points(), b=points(), c=points())
def test_compose_associative(a, b, c):
    lhs = compose(compose(a, b), c)
    rhs = compose(a, compose(b, c))
    assert close(lhs, rhs, tol=1e-6)


@settings(max_examples=40, deadline=None)
@given(a=points(), z=points())
def test_offset_from_is_left_quotient(a, z):
    w = offset_from(a, z)
    assert close(compose(a, w), z, tol=1e-6)


def test_noncommutative_transport():
    # a velocity then a wait transports position; the other order does not
    shift = Point(0.0, np.zeros(3), np.array([1.0, 0.0, 0.0]))
    wait = Point(1.0, np.zeros(3), np.zeros(3))
    assert np.allclose(compose(shift, wait).x, [1.0, 0.0, 0.0])
    assert np.allclose(compose(wait, shift).x, [0.0, 0.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(z=points(), r=st.floats(0.1, 4.0), s=st.floats(0.15, 0.95))
def test_knorm_homogeneous_under_dilation(z, r, s):
    n0 = knorm(z, s)
    n1 = knorm(dilate(z, r, s), s)
    assert abs(n1 - r * n0) < 1e-6 * max(1.0, r * n0)


@settings(max_examples=30, deadline=None)
@given(z1=points(), z2=points(), g=points(), s=st.floats(0.15, 0.95))
def test_kdistance_left_invariant(z1, z2, g, s):
    d0 = kdistance(z1, z2, s)
    d1 = kdistance(compose(g, z1), compose(g, z2), s)
    assert abs(d0 - d1) < 1e-6 * max(1.0, d0)


@settings(max_examples=30, deadline=None)
@given(z1=points(), z2=points(), s=st.floats(0.15, 0.95))
def test_kdistance_symmetric_nonnegative(z1, z2, s):
    d12 = kdistance(z1, z2, s)
    d21 = kdistance(z2, z1, s)
    assert d12 >= 0.0
    assert abs(d12 - d21) < 1e-7 * max(1.0, d12)
    assert kdistance(z1, z1, s) < 1e-9


def test_pure_velocity_shift_distance():
    z1 = origin(3)
    z2 = Point(0.0, np.zeros(3), np.array([0.8, 0.0, 0.0]))
    for s in (0.25, 0.5, 0.75):
        assert abs(kdistance(z1, z2, s) - 0.4) < 1e-9


def test_kdistance_comparable_to_offset_norm():
    # within a factor 2 of the group-offset norm on generic pairs
    rng = np.random.default_rng(7)
    for _ in range(20):
        z1 = Point(rng.normal(), rng.normal(size=3), rng.normal(size=3))
        z2 = Point(rng.normal(), rng.normal(size=3), rng.normal(size=3))
        dval = kdistance(z1, z2, 0.5)
        nval = knorm(offset_from(z1, z2), 0.5)
        assert dval <= nval + 1e-9
        assert nval <= 2.0 * dval + 1e-9


def test_cylinder_contains_center():
    c = Cylinder(origin(3), 1.0)
    assert c.radius == 1.0


def test_dGS_oracles():
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    assert abs(dGS(e1, e2) - math.sqrt(2.0)) < 1e-12
    assert abs(dGS(e1, 2.0 * e1) - math.sqrt(13.0) / 2.0) < 1e-12
    assert dGS(e1, e1) == 0.0


def test_dGS_clean_formula():
    rng = np.random.default_rng(11)
    for _ in range(50):
        v1, v2 = rng.normal(size=3), rng.normal(size=3)
        expect = math.sqrt(
            float(np.sum((v1 - v2) ** 2))
            + 0.25 * (float(v1 @ v1) - float(v2 @ v2)) ** 2
        )
        assert abs(dGS(v1, v2) - expect) < 1e-12


def _cov(mag: float, gamma=0.0, s=0.25) -> CovMap:
    p = ModelParams(d=3, s=s, gamma=gamma)
    v0 = np.array([mag, 0.0, 0.0])
    return CovMap(p, Point(0.0, np.zeros(3), v0))


def test_covmap_inactive_below_two():
    M = _cov(1.5)
    assert not M.active
    w = np.array([0.3, -0.2, 0.9])
    assert np.allclose(M.compress(w), w)
    assert np.allclose(M.stretch(w), w)
    assert M.time_scale == 1.0
    assert M.det_compression == 1.0


def test_covmap_compress_stretch_inverse():
    M = _cov(8.0)
    rng = np.random.default_rng(3)
    W = rng.normal(size=(16, 3))
    assert np.allclose(M.stretch(M.compress(W)), W, atol=1e-12)
    assert np.allclose(M.compress(M.stretch(W)), W, atol=1e-12)


def test_covmap_stretch_norm_formula():
    # |stretch(sigma)|^2 = 1 + (|v0|^2 - 1)(sigma . v0_hat)^2
    M = _cov(8.0)
    rng = np.random.default_rng(5)
    sig = rng.normal(size=(32, 3))
    sig /= np.linalg.norm(sig, axis=1)[:, None]
    got = np.linalg.norm(M.stretch(sig), axis=1) ** 2
    expect = 1.0 + (64.0 - 1.0) * (sig @ M.v0_hat) ** 2
    assert np.allclose(got, expect, rtol=1e-12)


def test_covmap_time_scale_and_det():
    M = _cov(8.0, gamma=-0.5, s=0.75)
    assert abs(M.time_scale - 8.0 ** -(-0.5 + 1.5)) < 1e-12
    assert abs(M.det_compression - 1.0 / 8.0) < 1e-15


def test_covmap_ellipsoid_radius():
    M = _cov(4.0)
    along = M.ellipsoid_radius_along(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), 1.0)
    assert abs(along[0] - 1.0 / 4.0) < 1e-12  # axis direction compresses
    assert abs(along[1] - 1.0) < 1e-12  # transverse unchanged


def test_covmap_forward_backward_roundtrip():
    M = _cov(8.0)
    z = Point(0.2, np.array([0.1, 0.0, -0.3]), np.array([0.4, 0.2, 0.0]))
    back = M.backward(M.forward(z))
    assert close(back, z, tol=1e-10)


def _ball_points(M: CovMap, n: int, seed: int) -> np.ndarray:
    # v0 + compress(w) for |w| <= 0.95 stays strictly inside da's domain
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(n, 3))
    w *= (0.95 * rng.random(n) ** (1 / 3) / np.linalg.norm(w, axis=1))[:, None]
    return M.z0.v[None, :] + M.compress(w)


def test_da_is_stretched_offset_norm():
    M = _cov(4.0)
    V = _ball_points(M, 12, seed=21)
    for i in range(0, 12, 2):
        v1, v2 = V[i], V[i + 1]
        expect = float(np.linalg.norm(M.stretch(v1 - v2)))
        assert abs(da(M, v1, v2) - expect) < 1e-12


def test_da_rejects_points_outside_ball():
    M = _cov(4.0)
    v_out = M.z0.v + np.array([0.5, 0.0, 0.0])  # stretches to norm 2
    with pytest.raises(ValueError):
        da(M, M.z0.v, v_out)


def test_da_dGS_ratio_band():
    # spot version of the global equivalence: within [1/4, 4] inside the ball
    for mag, seed in ((2.0, 31), (8.0, 32), (32.0, 33)):
        M = _cov(mag)
        V = _ball_points(M, 40, seed=seed)
        for i in range(0, 40, 2):
            r = da(M, V[i], V[i + 1]) / dGS(V[i], V[i + 1])
            assert 0.25 <= r <= 4.0
