import math

import pytest
from scipy.special import ellipe, ellipk

from kam_atlas.portrait import decompose, pendulum_form, standard_form
from kam_atlas.potential import OneDSeries


@pytest.fixture(scope="session")
def pendulum():
    return pendulum_form()


@pytest.fixture(scope="session")
def pendulum_regions(pendulum):
    return decompose(pendulum)


@pytest.fixture(scope="session")
def figure_potential():
    # the five-harmonic portrait benchmark: sin q + (1/2) cos 5q
    return OneDSeries.from_cos_sin({5: 0.5}, {1: 1.0})


@pytest.fixture(scope="session")
def figure_regions(figure_potential):
    return decompose(standard_form(figure_potential))


# Closed-form pendulum actions (independent elliptic-integral oracles for
# the quadrature path; derived from E - cos q = 2(m - sin^2(q/2 + pi/2))).

def pendulum_inner_action(E: float) -> float:
    m = (1.0 + E) / 2.0
    return (2.0 * math.sqrt(2.0) / math.pi) * (ellipe(m) - (1.0 - m) * ellipk(m))


def pendulum_inner_slope(E: float) -> float:
    return math.sqrt(2.0) / (2.0 * math.pi) * ellipk((1.0 + E) / 2.0)


def pendulum_outer_action(E: float) -> float:
    return (2.0 / math.pi) * math.sqrt(E + 1.0) * ellipe(2.0 / (E + 1.0))
