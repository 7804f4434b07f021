"""Violation evaluators for every constraint family.

All functions are pure and work on a decoded :class:`Schedule`. They are
written with plain loops/numpy and share no code with the compiled repair
kernels, so they double as an independent check on those kernels.

Boundary conventions: before hour 0 every thermal plant is taken to be on
(no start-up cost, ramp or downtime check at hour 0) and every pump-storage
plant idle (``hg = 0``). Start-up and shut-down transitions are limited to
``max(G_min, ramp)`` so a plant whose minimum output exceeds its ramp rate
can still be switched.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .encoding import Schedule
from .model import ProblemInstance

TAU = 1e-9


@dataclass
class ViolationReport:
    supply_demand: float = 0.0
    reserve_low: float = 0.0
    reserve_high: float = 0.0
    thermal_bounds: float = 0.0
    thermal_ramp: float = 0.0
    mdt: float = 0.0
    pump_bounds: float = 0.0
    pump_ramp_gen: float = 0.0
    pump_ramp_pump: float = 0.0
    water_capacity: float = 0.0
    water_terminal: float = 0.0

    STAGE_FAMILIES = ("thermal_ramp", "thermal_bounds", "mdt", "pump_bounds",
                      "pump_ramp_gen", "pump_ramp_pump", "water_capacity")

    def stage_families(self) -> dict:
        return {k: getattr(self, k) for k in self.STAGE_FAMILIES}

    def feasible(self, tol: float = TAU) -> bool:
        return all(v <= tol for v in self.to_dict().values())

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def check_supply_demand(s: Schedule, inst: ProblemInstance) -> np.ndarray:
    """Per-hour residual: supply minus net demand."""
    supply = (s.g * s.u).sum(axis=0) + s.hg.sum(axis=0)
    return supply - inst.demand.net_demand


def reserve_capabilities(s: Schedule, inst: ProblemInstance, ramp_aware: bool = False):
    """Committed (min, max) output capability per hour.

    Thermal plants contribute their static bounds while committed; pump
    storage contributes the bounds of the mode it runs in (generating,
    pumping or idle = 0). With ``ramp_aware`` the thermal bounds are
    tightened by the ramp window around the previous hour's output.
    """
    a = inst.arrays()
    n_th, T = s.g.shape
    gmin = np.repeat(a["g_min"][:, None], T, axis=1)
    gmax = np.repeat(a["g_max"][:, None], T, axis=1)
    if ramp_aware:
        for i in range(n_th):
            su = max(a["ramp_up"][i], a["g_min"][i])
            for t in range(1, T):
                if s.u[i, t - 1]:
                    gmin[i, t] = max(gmin[i, t], s.g[i, t - 1] - a["ramp_down"][i])
                    gmax[i, t] = min(gmax[i, t], s.g[i, t - 1] + a["ramp_up"][i])
                else:
                    gmax[i, t] = min(gmax[i, t], su)
            gmin[i] = np.minimum(gmin[i], gmax[i])
    lo = (gmin * s.u).sum(axis=0)
    hi = (gmax * s.u).sum(axis=0)
    for j in range(s.hg.shape[0]):
        gen = s.hg[j] > 0
        pump = s.hg[j] < 0
        lo = lo + np.where(gen, a["hg_min"][j], 0.0) + np.where(pump, -a["hp_max"][j], 0.0)
        hi = hi + np.where(gen, a["hg_max"][j], 0.0) + np.where(pump, -a["hp_min"][j], 0.0)
    return lo, hi


def check_spinning_reserve(s: Schedule, inst: ProblemInstance, ramp_aware: bool = False):
    """Return ``(S1, S2)``; the reserve holds at t iff both are <= 0."""
    d = inst.demand
    lo, hi = reserve_capabilities(s, inst, ramp_aware)
    s1 = lo - (1.0 - d.alpha) * d.net_demand
    s2 = (1.0 + d.beta) * d.net_demand - hi
    return s1, s2


def check_thermal(s: Schedule, inst: ProblemInstance) -> dict:
    a = inst.arrays()
    n_th, T = s.g.shape
    bounds = ramp = mdt = 0.0
    for i in range(n_th):
        gmin, gmax = a["g_min"][i], a["g_max"][i]
        up, down = a["ramp_up"][i], a["ramp_down"][i]
        su, sd = max(up, gmin), max(down, gmin)
        off_run = 0
        for t in range(T):
            g, on = s.g[i, t], s.u[i, t] == 1
            if on:
                bounds += max(0.0, gmin - g) + max(0.0, g - gmax)
                if 0 < off_run < a["mdt"][i]:
                    mdt += 1.0
                off_run = 0
            else:
                bounds += abs(g)
                off_run += 1
            if t == 0:
                continue
            was_on = s.u[i, t - 1] == 1
            if was_on and on:
                step = g - s.g[i, t - 1]
                ramp += max(0.0, step - up) + max(0.0, -step - down)
            elif on:
                ramp += max(0.0, g - su)
            elif was_on:
                ramp += max(0.0, s.g[i, t - 1] - sd)
    return {"thermal_bounds": float(bounds), "thermal_ramp": float(ramp), "mdt": float(mdt)}


def check_hydro(s: Schedule, inst: ProblemInstance) -> dict:
    a = inst.arrays()
    n_hy, T = s.hg.shape
    bounds = ramp_gen = ramp_pump = capacity = terminal = 0.0
    for j in range(n_hy):
        prev = 0.0
        for t in range(T):
            h = s.hg[j, t]
            if h > 0:
                bounds += max(0.0, a["hg_min"][j] - h) + max(0.0, h - a["hg_max"][j])
                ramp_gen += max(0.0, h - prev - a["ramp_gen_up"][j])
            elif h < 0:
                bounds += max(0.0, -a["hp_max"][j] - h) + max(0.0, h + a["hp_min"][j])
                ramp_pump += max(0.0, prev - a["ramp_pump_down"][j] - h)
            v = s.hv[j, t]
            capacity += max(0.0, v - a["hv_max"][j]) + max(0.0, a["hv_min"][j] - v)
            prev = h
        if T:
            terminal += abs(s.hv[j, T - 1] - a["hv_initial"][j])
    out = {"pump_bounds": bounds, "pump_ramp_gen": ramp_gen, "pump_ramp_pump": ramp_pump,
           "water_capacity": capacity, "water_terminal": terminal}
    return {k: float(v) for k, v in out.items()}


def conservation_error(s: Schedule, inst: ProblemInstance) -> float:
    """Max |eps*hv[t] - eps*hv[t-1] + eta*hg[t]| over all plants and hours."""
    a = inst.arrays()
    worst = 0.0
    for j in range(s.hg.shape[0]):
        prev = np.concatenate([[a["hv_initial"][j]], s.hv[j, :-1]])
        err = a["epsilon"][j] * (s.hv[j] - prev) + a["eta"][j] * s.hg[j]
        worst = max(worst, float(np.max(np.abs(err))) if err.size else 0.0)
    return worst


def violation_report(s: Schedule, inst: ProblemInstance, ramp_aware: bool = False
                     ) -> ViolationReport:
    s1, s2 = check_spinning_reserve(s, inst, ramp_aware)
    return ViolationReport(
        supply_demand=float(np.abs(check_supply_demand(s, inst)).sum()),
        reserve_low=float(np.maximum(s1, 0).sum()),
        reserve_high=float(np.maximum(s2, 0).sum()),
        **check_thermal(s, inst),
        **check_hydro(s, inst),
    )
