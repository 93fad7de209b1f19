import numpy as np
import pytest

from phonodot.model import SystemParams, TWO_PI
from phonodot.pulses import TimeGrid, square_pulse

GHZ_ANG = TWO_PI * 1e9


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


def make_params(delta_ghz=-3.5, saw_ghz=3.5, g_ghz=0.0, **kw):
    return SystemParams.from_ghz(delta_ghz, saw_ghz, g_ghz, **kw)


def constant_drive(rabi, span=3.05e-9, dt=1e-12):
    """Rise-free square drive starting at t = 0 on a grid from -10 ps."""
    grid = TimeGrid.from_span(-10e-12, span + 30e-12, dt)
    env = square_pulse(grid, 0.0, span, 0.0, 0.0, rabi)
    return grid, env
