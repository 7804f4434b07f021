import numpy as np
import pytest

from ucld import instances
from ucld.model import DemandProfile, ProblemInstance, PumpedStoragePlant, ThermalPlant


def thermal(id=1, g_min=1.0, g_max=11.0, ramp_up=20.0, ramp_down=20.0, mdt=0,
            startup_cost=1.0, a=0.0, b=1.0, c=0.0):
    return ThermalPlant(id, g_min, g_max, ramp_up, ramp_down, mdt, startup_cost, a, b, c)


def hydro(id=1, **kw):
    base = dict(hg_max=2.5, hp_max=2.5, ramp_gen_up=5.0, ramp_pump_down=5.0, hv_max=100.0,
                epsilon=10.0, eta=0.8)
    base.update(kw)
    return PumpedStoragePlant(id, **base)


def make_instance(thermals, hydros=(), net=(5.0,), alpha=0.0, beta=0.0, name="toy"):
    n = len(net)
    demand = DemandProfile(list(net), [alpha] * n, [beta] * n)
    return ProblemInstance(list(thermals), list(hydros), demand, name=name)


@pytest.fixture(scope="session")
def paper10():
    return instances.paper10()


@pytest.fixture(scope="session")
def paper10_24(paper10):
    return paper10.truncated(24)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
