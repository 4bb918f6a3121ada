import pathlib

import numpy as np
import pytest

from wpcn.channel import RicianFading, build_channel_model
from wpcn.system import Action, ActionGrid, SystemParams, build_model

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def golden():
    """Oracle values frozen by tests/make_golden.py (mpmath, 80 digits)."""
    values = {}
    for line in (FIXTURES / "channel_golden.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, raw = (part.strip() for part in line.split("=", 1))
        values[name] = float(raw)
    return values


@pytest.fixture(scope="session")
def fading_table1():
    return RicianFading(varrho2=0.125, varsigma2=0.75, doppler_hz=1.34)


@pytest.fixture(scope="session")
def channel_k3(fading_table1):
    return build_channel_model(3, fading_table1, block_duration=0.016,
                               distance=10.0, alpha=2.8)


@pytest.fixture(scope="session")
def params_default():
    return SystemParams.defaults()


@pytest.fixture(scope="session")
def model_default(params_default, channel_k3):
    return build_model(params_default, channel_k3)


def _tiny_actions(params):
    t = params.T
    return [
        Action(0.0, 0.0, 0.0, 0.0),
        Action(t, 0.0, params.Pmax_E, 0.0),          # full-block harvest
        Action(t / 8, 0.0, params.Pmax_E / 4, 0.0),  # light harvest
        Action(0.0, t / 8, 0.0, 0.005),              # short transmit burst
        Action(t / 8, t / 8, params.Pmax_E / 4, 0.005),  # harvest then transmit
    ]


@pytest.fixture(scope="session")
def tiny_model(fading_table1):
    """Two channel states, two battery quanta, five actions; small enough
    for exhaustive pure-policy enumeration."""
    params = SystemParams.defaults(Bmax=2 * 1.6e-5)
    channel = build_channel_model(2, fading_table1, block_duration=0.016,
                                  distance=10.0, alpha=2.8)
    grid = ActionGrid.from_actions(_tiny_actions(params))
    return build_model(params, channel, grid)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(987654321)
