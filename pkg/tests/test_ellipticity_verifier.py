"""Sweep checks: each one runs on a small grid and must certify cleanly."""
from __future__ import annotations

import numpy as np
import pytest

import kinokit.ellipticity_verifier as ev
from kinokit.ellipticity_verifier import SweepGrid
from kinokit.kinetic_geometry import CovMap, Point
from kinokit.params_profiles import ModelParams, maxwellian


@pytest.fixture(scope="module")
def small():
    return SweepGrid(v0_magnitudes=(2.0, 8.0), radii=(0.25,), n_dirs=256)


@pytest.fixture(scope="module")
def tiny():
    return SweepGrid(v0_magnitudes=(2.0, 4.0), radii=(0.25,), n_dirs=256)


def assert_well_formed(r, check_id: str):
    assert r.check_id == check_id
    assert isinstance(r.measured, dict) and r.measured
    assert isinstance(r.tolerance, dict)
    assert isinstance(r.coords, dict)
    assert isinstance(r.errors, list)
    for val in r.measured.values():
        assert np.isfinite(float(val))


def test_sweep_grid_validation():
    with pytest.raises(ValueError):
        SweepGrid(v0_magnitudes=())
    with pytest.raises(ValueError):
        SweepGrid(v0_magnitudes=(4.0, 2.0))
    with pytest.raises(ValueError):
        SweepGrid(radii=(0.5, 0.25))
    with pytest.raises(ValueError):
        SweepGrid(n_dirs=8)


def test_uniformity_helper():
    assert ev._uniformity([1.0, 2.0, 4.0]) == 4.0
    assert ev._uniformity([3.0, 3.0]) == 1.0
    assert ev._uniformity([0.0, 1.0]) > 1e100  # degenerate floor, never passes
    assert ev._uniformity([-1.0, 0.0]) == np.inf


def test_nondeg1(maxwell3, params_a, tiny):
    r = ev.check_nondeg1(maxwell3, params_a, tiny)
    assert_well_formed(r, "nondeg1")
    assert bool(r.passed)
    assert r.measured["lambda_inf"] >= 1e-4
    assert r.measured["uniformity"] <= 10.0


def test_bounded_both_orders(maxwell3, params_a, tiny):
    r1 = ev.check_bounded(maxwell3, params_a, tiny, which=1)
    assert_well_formed(r1, "bounded1")
    assert bool(r1.passed)
    r2 = ev.check_bounded(maxwell3, params_a, tiny, which=2)
    assert_well_formed(r2, "bounded2")
    assert bool(r2.passed)


def test_classK(maxwell3, params_a, tiny):
    r = ev.check_classK(maxwell3, params_a, tiny)
    assert_well_formed(r, "classK")
    assert bool(r.passed)
    assert r.measured["symmetry_residual"] <= 1e-10
    assert r.measured["uniformity_ii"] <= 10.0
    assert r.measured["uniformity_iv"] <= 10.0


def test_cancellation_first(maxwell3, params_a, small):
    r = ev.check_cancellation(maxwell3, params_a, small, which=1)
    assert_well_formed(r, "cancel1")
    assert bool(r.passed)
    assert r.measured["uniformity"] <= 10.0


def test_cancellation_second(maxwell3, params_b, small):
    r = ev.check_cancellation(maxwell3, params_b, small, which=2)
    assert_well_formed(r, "cancel2")
    assert bool(r.passed)


def test_cancellation_second_needs_strong_singularity(maxwell3, params_a, small):
    with pytest.raises(ValueError):
        ev.check_cancellation(maxwell3, params_a, small, which=2)


def test_cone(maxwell3, params_a, tiny):
    r = ev.check_cone(maxwell3, params_a, tiny, v_mags=(4.0, 8.0, 16.0))
    assert_well_formed(r, "cone")
    assert bool(r.passed)
    assert abs(r.measured["fitted_exponent"] + 1.0) <= 0.25
    assert r.measured["r_squared"] >= 0.9


def test_A0_validates_alpha(maxwell3, params_a, tiny):
    with pytest.raises(ValueError):
        ev.check_A0(maxwell3, params_a, tiny, alpha=0.6)  # >= min(1, 2s)


def test_A0(maxwell3, params_a, tiny):
    r = ev.check_A0(maxwell3, params_a, tiny)
    assert_well_formed(r, "A0")
    assert bool(r.passed)


def test_measure_condition(maxwell3, params_a):
    M = CovMap(params_a, Point(0.0, np.zeros(3), np.array([8.0, 0.0, 0.0])))
    z = Point(0.0, np.zeros(3), np.array([8.0, 0.0, 0.0]))
    r = ev.check_measure_condition(maxwell3, params_a, M, z, 0.01)
    assert_well_formed(r, "measure")
    assert bool(r.passed)
    assert 0.0 < r.measured["fraction_min"] <= 1.0


def test_da_equivalence(params_a):
    r = ev.check_da_equivalence(params_a, n_pairs=2000)
    assert_well_formed(r, "da")
    assert bool(r.passed)
    assert 0.25 <= r.measured["ratio_min"] <= r.measured["ratio_max"] <= 4.0


def test_da_equivalence_deterministic(params_a):
    a = ev.check_da_equivalence(params_a, n_pairs=500, seed=7)
    b = ev.check_da_equivalence(params_a, n_pairs=500, seed=7)
    assert a.measured == b.measured


def test_tail_decay(maxwell3, params_a):
    r = ev.check_tail_decay(maxwell3, params_a)
    assert_well_formed(r, "tail_decay")
    assert bool(r.passed)
    expect = params_a.gamma + 2.0 * params_a.s
    assert abs(r.measured["fitted_exponent"] - expect) <= 0.3
    assert r.measured["r_squared"] >= 0.9


def test_cov_pv(maxwell3, params_a):
    r = ev.check_cov_pv(maxwell3, params_a)
    assert_well_formed(r, "cov_pv")
    assert bool(r.passed)
    assert r.measured["fitted_exponent"] >= 2.0 - 2.0 * params_a.s - 0.3


def test_cancel_conv(maxwell3, params_a):
    r = ev.check_cancel_conv(maxwell3, params_a, v_mags=(0.0, 1.0, 2.0, 3.0))
    assert_well_formed(r, "cancel_conv")
    assert bool(r.passed)
    assert r.measured["relative_spread"] <= 0.10
    # the constant itself is pinned by the kernel regression suite
    assert abs(r.measured["ratio_mean"] / 15.9696 - 1.0) < 5e-3


def test_gs_coercivity_2d(maxwell2):
    p = ModelParams(d=2, s=0.25, gamma=0.0)
    r = ev.check_gs_coercivity(maxwell2, p, maxwell2, n_mc=20000)
    assert_well_formed(r, "gs_coercivity")
    assert bool(r.passed)
    assert r.measured["c_3sigma"] > 0.0
    assert r.measured["I2_vs_I3_rel"] <= 1e-8
    assert r.measured["seminorm"] > 0.0


def test_gs_coercivity_seed_reproducible(maxwell2):
    p = ModelParams(d=2, s=0.25, gamma=0.0)
    a = ev.check_gs_coercivity(maxwell2, p, maxwell2, n_mc=5000, seed=3)
    b = ev.check_gs_coercivity(maxwell2, p, maxwell2, n_mc=5000, seed=3)
    assert a.measured["c"] == b.measured["c"]


def test_bilinear_bounds(maxwell3, params_a):
    r = ev.check_bilinear_bounds(maxwell3, maxwell3, params_a, v_mags=(0.0, 2.0))
    assert_well_formed(r, "bilinear")
    assert bool(r.passed)
    assert r.measured["ratio_q2"] <= 10.0
    assert r.measured["ratio_q1"] <= 10.0


def test_transformed_suite_keys_and_passes(maxwell3, params_a, small):
    rs = ev.transformed_suite(maxwell3, params_a, small)
    # s < 1/2 leaves out the second cancellation
    assert set(rs) == {"nondeg1", "bounded1", "bounded2", "cancel1", "classK", "cone"}
    for name, r in rs.items():
        assert bool(r.passed), name


def test_transformed_suite_includes_cancel2_for_strong_s(maxwell3, params_b, small):
    rs = ev.transformed_suite(maxwell3, params_b, small)
    assert "cancel2" in rs
    assert bool(rs["cancel2"].passed)


def test_reference_lambda_positive(maxwell3, params_a):
    lam = ev.reference_lambda(maxwell3, params_a)
    assert 0.0 < lam < 100.0
