import pytest
from hypothesis import HealthCheck, settings

from bcsgap.gap_solver import SolverConfig, solve_gap
from bcsgap.potential import RadialPotential

settings.register_profile("bcsgap", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bcsgap")


@pytest.fixture(scope="session")
def gauss30():
    return RadialPotential.gaussian(30.0)


@pytest.fixture(scope="session")
def gap_g30_mu100(gauss30):
    return solve_gap(gauss30, 100.0, SolverConfig())
