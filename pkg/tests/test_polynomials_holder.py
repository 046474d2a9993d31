"""Scaling-weighted polynomials, sampled seminorms, and the calculus checks."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kinokit.kinetic_polynomials_holder as kph
from kinokit.kinetic_geometry import Cylinder, Point, origin
from kinokit.kinetic_polynomials_holder import (
    KMultiIndex,
    KPolynomial,
    SampleSpec,
    increment_v,
    increment_x,
    kdeg,
    seminorm_est,
    sup_norm_est,
    taylor_expansion,
)

D = 3
Q1 = Cylinder(origin(D), 1.0)


def field(fn):
    fn.d = D
    return fn


@field
def f_time(z):
    return z.t


@field
def f_linear(z):
    return 2.0 + 3.0 * z.v[0] - 1.25 * z.v[2]


@field
def f_quad(z):
    return z.v[1] ** 2 + 0.5 * z.v[0] * z.v[2] + z.t


@field
def f_smooth(z):
    return float(np.exp(-z.v @ z.v - z.x @ z.x - z.t * z.t))


def test_multiindex_rejects_negative():
    with pytest.raises(ValueError):
        KMultiIndex(-1, (0,), (0,))
    with pytest.raises(ValueError):
        KMultiIndex(0, (0, -2), (0, 0))


@settings(max_examples=40, deadline=None)
@given(
    a0=st.integers(0, 3),
    ax=st.tuples(st.integers(0, 2), st.integers(0, 2)),
    av=st.tuples(st.integers(0, 2), st.integers(0, 2)),
    s=st.floats(0.1, 0.99),
)
def test_kdeg_formula(a0, ax, av, s):
    m = KMultiIndex(a0, ax, av)
    expect = 2 * s * a0 + (1 + 2 * s) * sum(ax) + sum(av)
    assert abs(kdeg(m, s) - expect) < 1e-12


def test_kdeg_unit_monomials():
    assert kdeg(KMultiIndex(1, (0,), (0,)), 0.25) == 0.5
    assert kdeg(KMultiIndex(0, (1,), (0,)), 0.25) == 1.5
    assert kdeg(KMultiIndex(0, (0,), (1,)), 0.25) == 1.0


def test_kpolynomial_constant_and_degree():
    p = KPolynomial(anchor=origin(D), s=0.5)
    assert p.degree() == -math.inf
    p.coeffs[KMultiIndex(0, (0,) * D, (0,) * D)] = 4.0
    assert p.degree() == 0.0
    z = Point(0.3, np.array([1.0, -2.0, 0.0]), np.array([0.1, 0.0, 0.5]))
    assert p(z) == 4.0


def test_kpolynomial_uses_offset_coordinates():
    # anchored v-monomial reads the velocity offset, not the raw velocity
    anchor = Point(0.0, np.zeros(D), np.array([1.0, 0.0, 0.0]))
    p = KPolynomial(anchor=anchor, s=0.5)
    p.coeffs[KMultiIndex(0, (0,) * D, (1, 0, 0))] = 1.0
    z = Point(0.0, np.zeros(D), np.array([1.7, 0.0, 0.0]))
    assert abs(p(z) - 0.7) < 1e-12


def test_taylor_rejects_bad_alpha():
    with pytest.raises(ValueError):
        taylor_expansion(f_smooth, origin(D), 0.0, 0.5)
    with pytest.raises(ValueError):
        taylor_expansion(f_smooth, origin(D), 3.5, 0.5)  # > 2+2s


def test_taylor_constant_only_below_one():
    p = taylor_expansion(f_linear, origin(D), 0.5, 0.5)
    assert set(p.coeffs) == {KMultiIndex(0, (0,) * D, (0,) * D)}
    assert abs(p.coeffs[KMultiIndex(0, (0,) * D, (0,) * D)] - 2.0) < 1e-12


def test_taylor_reproduces_linear_field():
    p = taylor_expansion(f_linear, origin(D), 2.0, 0.5)
    for v in ([0.3, 0.0, 0.0], [0.0, -0.2, 0.4]):
        z = Point(0.0, np.zeros(D), np.array(v))
        assert abs(p(z) - f_linear(z)) < 1e-9


def test_taylor_never_emits_spatial_terms():
    p = taylor_expansion(f_smooth, origin(D), 2.0 + 1.0, 0.5)
    assert all(sum(m.ax) == 0 for m in p.coeffs)


def test_taylor_time_coefficient_is_transport_derivative():
    # along the drift line, d/dt of x_0 equals the anchor velocity
    @field
    def f_x0(z):
        return z.x[0]

    anchor = Point(0.0, np.zeros(D), np.array([2.0, 0.0, 0.0]))
    p = taylor_expansion(f_x0, anchor, 1.0, 0.25)  # alpha > 2s picks up t term
    t_key = KMultiIndex(1, (0,) * D, (0,) * D)
    assert abs(p.coeffs[t_key] - 2.0) < 1e-7


def test_seminorm_rejects_negative_alpha():
    with pytest.raises(ValueError):
        seminorm_est(f_time, Q1, -0.5, 0.5)


def test_seminorm_time_field_is_one():
    est = seminorm_est(f_time, Q1, 1.0, 0.5)
    assert abs(est.value - 1.0) < 0.05
    assert est.n_samples > 0
    assert est.witness is not None
    assert {"base", "offset", "rho", "ratio"} <= set(est.witness)


def test_seminorm_vanishes_on_exact_expansions():
    assert seminorm_est(f_linear, Q1, 2.0, 0.5).value < 1e-6
    assert seminorm_est(f_quad, Q1, 3.0, 0.5).value < 1e-6


def test_seminorm_alpha_zero_is_sup():
    # same quantity, slightly different sample sets: agree to sampling error
    est = seminorm_est(f_smooth, Q1, 0.0, 0.5)
    sup = sup_norm_est(f_smooth, Q1, 0.5)
    assert abs(est.value - sup) < 1e-6


def test_sup_norm_constant_field():
    @field
    def one(z):
        return 1.0

    assert abs(sup_norm_est(one, Q1, 0.25) - 1.0) < 1e-12


def test_increment_v_of_linear_is_constant():
    w = np.array([0.1, -0.2, 0.05])
    g = increment_v(f_linear, w)
    expect = 3.0 * 0.1 - 1.25 * 0.05
    for v in ([0.0, 0.0, 0.0], [0.5, 0.5, -0.5]):
        z = Point(0.1, np.zeros(D), np.array(v))
        assert abs(g(z) - expect) < 1e-12


def test_increment_x_pure_shift():
    @field
    def f_x(z):
        return z.x[1]

    g = increment_x(f_x, np.array([0.0, 0.25, 0.0]))
    z = Point(0.3, np.array([1.0, 2.0, 3.0]), np.ones(D))
    assert abs(g(z) - 0.25) < 1e-12


def test_interpolation_smooth_field_passes():
    r = kph.check_interpolation(f_smooth, Q1, 0.5, 1.0, 1.5, 0.5)
    assert r.check_id == "holder-interpolation"
    assert bool(r.passed)
    assert r.measured["ratio"] <= 10.0
    assert abs(r.measured["theta"] - 0.5) < 1e-12


def test_product_smooth_fields_pass():
    r = kph.check_product(f_smooth, f_linear, Q1, 0.75, 0.5)
    assert r.check_id == "holder-product"
    assert bool(r.passed)


def test_increment_x_bound_passes():
    ys = [np.array([0.001, 0.0, 0.0]), np.array([0.0, 0.002, -0.001])]
    r = kph.check_increment_x_bound(f_smooth, Q1, 0.75, ys, 0.5)
    assert r.check_id == "holder-increment-x"
    assert bool(r.passed)
    assert r.measured["worst_ratio"] <= 10.0


def test_increment_x_bound_validates_alpha_and_reach():
    with pytest.raises(ValueError):
        kph.check_increment_x_bound(f_smooth, Q1, 1.25, [np.zeros(D)], 0.5)
    with pytest.raises(ValueError):
        kph.check_increment_x_bound(
            f_smooth, Q1, 0.75, [np.array([0.6, 0.0, 0.0])], 0.5
        )


def test_increment_v_bound_passes_and_validates():
    ws = [np.array([0.05, 0.0, 0.0]), np.array([0.0, -0.1, 0.02])]
    r = kph.check_increment_v_bound(f_smooth, Q1, 0.4, ws, 0.25)
    assert r.check_id == "holder-increment-v"
    assert bool(r.passed)
    with pytest.raises(ValueError):
        # 2s + alpha must stay below 1
        kph.check_increment_v_bound(f_smooth, Q1, 0.6, ws, 0.25)


def test_sample_spec_seed_reproducible():
    spec = SampleSpec(n_base=2, n_shells=4, n_dirs=16, seed=9)
    a = seminorm_est(f_smooth, Q1, 1.0, 0.5, spec)
    b = seminorm_est(f_smooth, Q1, 1.0, 0.5, spec)
    assert a.value == b.value
    assert a.n_samples == b.n_samples
