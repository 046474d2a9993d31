"""Shared fixtures: the three reference parameter triples and profiles."""
from __future__ import annotations

import numpy as np
import pytest

from kinokit.params_profiles import (
    CompactBump,
    GaussianComponent,
    ModelParams,
    Profile,
    maxwellian,
)

TRIPLES = [(0.0, 0.25), (-0.5, 0.75), (1.0, 0.5)]


@pytest.fixture(scope="session")
def params_a() -> ModelParams:
    return ModelParams(d=3, s=0.25, gamma=0.0)


@pytest.fixture(scope="session")
def params_b() -> ModelParams:
    return ModelParams(d=3, s=0.75, gamma=-0.5)


@pytest.fixture(scope="session")
def params_c() -> ModelParams:
    return ModelParams(d=3, s=0.5, gamma=1.0)


@pytest.fixture(scope="session")
def maxwell3() -> Profile:
    return maxwellian(3)


@pytest.fixture(scope="session")
def maxwell2() -> Profile:
    return maxwellian(2)


@pytest.fixture(scope="session")
def mixture3() -> Profile:
    return Profile(
        (
            GaussianComponent(mass=0.7, temperature=1.0, drift=(0.0, 0.0, 0.0)),
            GaussianComponent(mass=0.3, temperature=0.5, drift=(0.5, 0.0, 0.0)),
        )
    )


@pytest.fixture(scope="session")
def bump3() -> Profile:
    return Profile((CompactBump(center=(0.0, 0.0, 0.0), radius=1.0, amplitude=1.0, order=4),))


def vec(*xs: float) -> np.ndarray:
    return np.array(xs, dtype=float)
