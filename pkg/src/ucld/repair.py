"""Repair pipeline: ordered stage chain, adaptive supply-demand repair and
backward terminal-water repair.

Each public function copies its input; the work happens in the compiled
kernels of :mod:`ucld._kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .constraints import TAU
from .encoding import Chromosome, Schedule, _check_dims, max_change, repair_order
from .model import ProblemInstance

MAX_ADJUSTMENTS = 10


@dataclass
class RepairOutcome:
    schedule: Schedule
    supply_residual: np.ndarray  # net demand minus supply, per hour
    water_residual: np.ndarray  # |hv[j, end] - hv_initial[j]|, per plant


def thermal_args(inst: ProblemInstance):
    a = inst.arrays()
    return a["g_min"], a["g_max"], a["ramp_up"], a["ramp_down"], a["mdt"]


def hydro_args(inst: ProblemInstance):
    a = inst.arrays()
    return (a["hg_min"], a["hg_max"], a["hp_min"], a["hp_max"], a["ramp_gen_up"],
            a["ramp_pump_down"], a["hv_min"], a["hv_max"], a["hv_initial"], a["epsilon"], a["eta"])


def repair_stage_chain(s: Schedule, inst: ProblemInstance) -> Schedule:
    """Apply repair stages 1-8 (thermal ramp, thermal bounds, downtime,
    pump-storage bounds and ramps, reservoir capacity)."""
    out = s.copy()
    K.stage_chain(out.u, out.g, out.hg, out.hv, *thermal_args(inst), *hydro_args(inst))
    return out


def repair_supply_demand(s: Schedule, c: Chromosome, inst: ProblemInstance,
                         max_adjustments: int = MAX_ADJUSTMENTS, tau: float = TAU):
    """Return ``(schedule, residual)`` with residual = net demand minus supply."""
    out = s.copy()
    resid = np.zeros(out.hours)
    order = repair_order(c).astype(np.int64)
    gmin, gmax, up, down, _ = thermal_args(inst)
    K.supply_repair(out.u, out.g, out.hg, inst.arrays()["net_demand"], order,
                    float(max_change(c)), int(max_adjustments), gmin, gmax, up, down,
                    float(tau), resid)
    return out, resid


def repair_water_terminal(s: Schedule, inst: ProblemInstance, tau: float = TAU):
    """Return ``(schedule, per-plant residual)``.

    The change in pump-storage output per hour is available as
    ``schedule.hg - s.hg``.
    """
    out = s.copy()
    wres = np.zeros(inst.n_hydro)
    dhg = np.zeros(out.hours)
    if inst.n_hydro:
        K.water_terminal_repair(out.hg, out.hv, *hydro_args(inst), float(tau), wres, dhg)
    return out, wres


def full_repair(c: Chromosome, inst: ProblemInstance, max_adjustments: int = MAX_ADJUSTMENTS,
                rebalance_after_water: bool = False, tau: float = TAU) -> RepairOutcome:
    """Decode, run the stage chain, the supply-demand repair and the water repair.

    When the water repair moves pump-storage output the resulting balance
    shift is charged to the supply residual, unless ``rebalance_after_water``
    asks for a second thermal-only supply-demand pass.
    """
    _check_dims(c, inst)
    u, g, hg, hv, resid, wres = _full_repair_flat(c.flatten(), inst, max_adjustments,
                                                  rebalance_after_water, tau)
    return RepairOutcome(Schedule(u, g, hg, hv), resid, wres)


def _full_repair_flat(x, inst, max_adjustments, rebalance, tau):
    gmin, gmax, up, down, mdt = thermal_args(inst)
    return K.full_repair(np.ascontiguousarray(x, dtype=np.float64), inst.n_thermal,
                         inst.n_hydro, inst.hours, inst.arrays()["net_demand"],
                         gmin, gmax, up, down, mdt, *hydro_args(inst),
                         int(max_adjustments), float(tau), bool(rebalance))
