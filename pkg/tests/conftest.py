import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from crowqed.model import ModelParams

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def model_params(draw, damped=False, n_atoms=10, max_g=1.0):
    omega_a = draw(st.floats(0.5, 3.0, **finite))
    delta = draw(st.floats(-3.0, 3.0, **finite))
    g = draw(st.floats(0.0, max_g, **finite))
    kappa = draw(st.floats(0.0, 0.5, **finite)) if damped else 0.0
    gamma = draw(st.floats(0.0, 1.0, **finite)) if damped else 0.0
    return ModelParams(
        omega_c=omega_a + delta, omega_a=omega_a, g=g, kappa=kappa, gamma=gamma, n_atoms=n_atoms
    )


wavenumbers = st.floats(0.0, 2 * math.pi, **finite)
inversions = st.floats(-10.0, 10.0, **finite)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fig4a():
    return ModelParams(omega_c=2.0, omega_a=1.5, g=0.1, n_atoms=10)
