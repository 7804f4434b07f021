"""Bundled and small built-in instances."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .model import (DemandProfile, ProblemInstance, PumpedStoragePlant, ThermalPlant,
                    load_instance)


def paper10_path() -> Path:
    return Path(resources.files("ucld") / "data" / "paper10.inst")


def paper10(hours: int | None = None) -> ProblemInstance:
    """Ten thermal + four pump-storage plants on the bundled 168 h profile."""
    inst = load_instance(paper10_path())
    return inst if hours is None else inst.truncated(hours)


def two_unit() -> ProblemInstance:
    """Two thermal units over six hours, ramps and downtimes non-binding."""
    thermal = [
        ThermalPlant(1, g_min=2.0, g_max=10.0, ramp_up=10.0, ramp_down=10.0, mdt=1,
                     startup_cost=5.0, cost_a=2.0, cost_b=1.0, cost_c=0.05),
        ThermalPlant(2, g_min=1.0, g_max=6.0, ramp_up=6.0, ramp_down=6.0, mdt=1,
                     startup_cost=2.0, cost_a=1.0, cost_b=2.0, cost_c=0.1),
    ]
    net = [4.0, 7.0, 11.0, 13.0, 9.0, 5.0]
    demand = DemandProfile(net, [0.05] * 6, [0.05] * 6)
    return ProblemInstance(thermal, [], demand, name="two_unit").validate()


def tiny_hydro() -> ProblemInstance:
    """One thermal unit and one pump-storage plant over four hours with a
    PV surplus (negative net demand) in hour 1."""
    thermal = [ThermalPlant(1, g_min=1.0, g_max=8.0, ramp_up=8.0, ramp_down=8.0, mdt=0,
                            startup_cost=0.5, cost_a=0.5, cost_b=1.0, cost_c=0.25)]
    hydro = [PumpedStoragePlant(1, hg_max=2.5, hp_max=2.5, ramp_gen_up=5.0,
                                ramp_pump_down=5.0, hv_max=100.0, epsilon=10.0, eta=0.8)]
    demand = DemandProfile([4.0, -1.0, 5.0, 4.0], [0.0] * 4, [0.0] * 4)
    return ProblemInstance(thermal, hydro, demand, name="tiny_hydro").validate()
