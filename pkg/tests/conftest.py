import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from covol import ObservationGrid, constant_model, piecewise_model, sine_model

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def worked_grids():
    return ObservationGrid([0, 1 / 3, 2 / 3, 1]), ObservationGrid([0, 0.5, 1])


PRESET_MODELS = {
    "constant": lambda: constant_model(1.3, 0.7, 0.4, drift1=0.5, kappa2=1.0),
    "piecewise": lambda: piecewise_model([0.3, 0.7], [1.0, 2.0, 0.5], [0.8, 1.1, 1.5],
                                         [0.2, 0.9, 0.5], drift2=-0.3),
    "sine": lambda: sine_model(1.0, 1.5, 0.6, amplitude=0.4, frequency=2.0, drift1=1.0),
}


@pytest.fixture(params=sorted(PRESET_MODELS))
def preset(request):
    return PRESET_MODELS[request.param]()


def random_walk(grid, seed):
    rng = np.random.default_rng(seed)
    return np.concatenate(([0.0], np.cumsum(rng.standard_normal(grid.n))))
