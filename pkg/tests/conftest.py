"""Shared fixtures: canonical layouts and a fast step controller."""

import pytest

from slitsim.forcefield import PhysicsParams, material_intervals
from slitsim.integrator import StepController


@pytest.fixture(scope="session")
def layouts():
    """The three experiments at the documentation geometry l=1, R=0.5."""
    return {e: material_intervals(e, 1.0, 0.5) for e in (1, 2, 3)}


@pytest.fixture(scope="session")
def default_layouts():
    """The three experiments at the default run geometry l=0.1, R=0.5."""
    return {e: material_intervals(e, 0.1, 0.5) for e in (1, 2, 3)}


@pytest.fixture(scope="session")
def default_params():
    return PhysicsParams(kappa=0.0085, v0=1.0, D=10.0, L=20.0, d=0.1)


@pytest.fixture(scope="session")
def free_params():
    return PhysicsParams(kappa=0.0, v0=1.0, D=10.0, L=20.0, d=0.1)


@pytest.fixture(scope="session")
def default_ctrl():
    return StepController(
        h0=0.02, h_min=1e-7, shrink_near=0.05, delta_max=0.025, safety=0.9
    ).validate()
