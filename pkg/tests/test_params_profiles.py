"""Profiles, hydrodynamic functionals, and parameter validation.

Closed-form anchors: Gaussian entropy m ln m - m (d/2)(ln 2 pi T + 1),
bump mass A R^d omega_{d-1} B(d/2, k+1) / 2, and the inverse-power
exponent map gamma = (p - 2d + 1)/(p - 1), s = 1/(p - 1).
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinokit.params_profiles import (
    CompactBump,
    GaussianComponent,
    HydroBounds,
    ModelParams,
    Profile,
    hydro_gate,
    hydro_quantities,
    make_inverse_power_params,
    maxwellian,
)


def test_maxwellian_pointwise_value():
    f = maxwellian(3)
    v = np.array([[1.0, 0.0, 0.0]])
    expect = (2.0 * math.pi) ** -1.5 * math.exp(-0.5)
    assert abs(float(f(v)[0]) - expect) < 1e-15


def test_maxwellian_moments_closed_form():
    f = maxwellian(3, mass=2.0, temperature=1.5)
    p = ModelParams(d=3, s=0.25, gamma=0.0)
    hy = hydro_quantities(f, p)
    assert abs(hy.M - 2.0) < 1e-12
    # second moment of a centered Gaussian: m d T
    assert abs(hy.E - 2.0 * 3.0 * 1.5) < 1e-12


def test_gaussian_entropy_oracle():
    # m ln m - m (d/2)(ln 2 pi T + 1); standard profile, d = 3
    f = maxwellian(3)
    p = ModelParams(d=3, s=0.25, gamma=0.0)
    hy = hydro_quantities(f, p)
    expect = -1.5 * (math.log(2.0 * math.pi) + 1.0)
    assert abs(hy.H - expect) < 1e-10
    assert abs(expect - (-4.256815599614018)) < 1e-12


def test_drifted_entropy_is_drift_free():
    p = ModelParams(d=3, s=0.25, gamma=0.0)
    still = hydro_quantities(maxwellian(3), p)
    moving = hydro_quantities(maxwellian(3, drift=(2.0, -1.0, 0.5)), p)
    assert abs(still.H - moving.H) < 1e-9


def test_bump_mass_closed_form():
    # int A (1 - |u/R|^2)^k du = A R^d omega_{d-1} B(d/2, k+1) / 2
    A, R, k, d = 0.8, 1.5, 4, 3
    f = Profile((CompactBump(center=(0.0, 0.0, 0.0), radius=R, amplitude=A, order=k),))
    p = ModelParams(d=d, s=0.25, gamma=0.0)
    omega = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    beta = math.gamma(d / 2.0) * math.gamma(k + 1.0) / math.gamma(d / 2.0 + k + 1.0)
    expect = A * R**d * omega * 0.5 * beta
    hy = hydro_quantities(f, p)
    assert abs(hy.M - expect) / expect < 1e-6


def test_mixture_mass_additive(mixture3):
    p = ModelParams(d=3, s=0.25, gamma=0.0)
    hy = hydro_quantities(mixture3, p)
    assert abs(hy.M - 1.0) < 1e-10


def test_hydro_gate_bounds():
    p = ModelParams(d=3, s=0.25, gamma=0.0)
    f = maxwellian(3)
    assert hydro_gate(f, p, HydroBounds(0.1, 10.0, 50.0, 100.0))
    assert not hydro_gate(f, p, HydroBounds(2.0, 10.0, 50.0, 100.0))  # mass below floor
    assert not hydro_gate(f, p, HydroBounds(0.1, 0.5, 50.0, 100.0))  # mass above cap
    assert not hydro_gate(f, p, HydroBounds(0.1, 10.0, 1.0, 100.0))  # energy above cap


@pytest.mark.parametrize(
    "p_exp,d,gamma,s",
    [(5.0, 3, 0.0, 0.25), (3.0, 3, -1.0, 0.5), (4.0, 2, 1.0 / 3.0, 1.0 / 3.0)],
)
def test_inverse_power_exponent_map(p_exp, d, gamma, s):
    mp = make_inverse_power_params(p_exp, d)
    assert abs(mp.gamma - gamma) < 1e-12
    assert abs(mp.s - s) < 1e-12


def test_inverse_power_rejects_low_exponent():
    with pytest.raises(ValueError):
        make_inverse_power_params(2.0, 3)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(d=4, s=0.25, gamma=0.0)
    with pytest.raises(ValueError):
        ModelParams(d=3, s=1.5, gamma=0.0)
    with pytest.raises(ValueError):
        ModelParams(d=3, s=0.25, gamma=-4.0)
    with pytest.raises(ValueError):
        ModelParams(d=3, s=0.25, gamma=0.0, kernel_mode="other")


def test_kappa_definition():
    p = ModelParams(d=3, s=0.25, gamma=0.0)
    assert abs(p.kappa - (p.gamma + 2.0 * p.s + 1.0)) < 1e-15


def test_profile_rejects_mixed_dims():
    with pytest.raises(ValueError):
        Profile(
            (
                GaussianComponent(mass=1.0, temperature=1.0, drift=(0.0, 0.0)),
                GaussianComponent(mass=1.0, temperature=1.0, drift=(0.0, 0.0, 0.0)),
            )
        )


@settings(max_examples=30, deadline=None)
@given(
    mass=st.floats(0.1, 5.0),
    temp=st.floats(0.2, 4.0),
    mag=st.floats(0.0, 6.0),
)
def test_profile_positive_and_bounded(mass, temp, mag):
    f = maxwellian(3, mass=mass, temperature=temp)
    v = np.array([[mag, 0.0, 0.0]])
    val = float(f(v)[0])
    assert val >= 0.0
    assert val <= mass * (2.0 * math.pi * temp) ** -1.5 + 1e-15


@settings(max_examples=20, deadline=None)
@given(temp=st.floats(0.2, 4.0), drift=st.floats(-3.0, 3.0))
def test_scale_covers_support(temp, drift):
    f = Profile((GaussianComponent(mass=1.0, temperature=temp, drift=(drift, 0.0, 0.0)),))
    r = f.scale()
    assert r >= abs(drift) + 12.0 * math.sqrt(temp) - 1e-9
    edge = np.array([[r + 1.0, 0.0, 0.0]])
    assert float(f(edge)[0]) < 1e-20
