"""Objective, penalty coefficient schedule and evaluation reports."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .constraints import check_hydro, check_spinning_reserve, check_supply_demand
from .encoding import Schedule
from .model import ProblemInstance
from .repair import RepairOutcome

FEASIBLE_PENALTY = 0.01


@dataclass(frozen=True)
class PenaltySchedule:
    """Linearly ramped supply-demand and water coefficients.

    Both coefficients are ``min(step * generation, max)``; the reserve
    weight is constant.
    """

    supply_coeff_max: float = 1000.0
    water_coeff_max: float = 100.0
    step: float = 0.025
    reserve_weight: float = 1.0
    generation: int = 0

    @property
    def supply_coeff(self) -> float:
        return min(self.step * self.generation, self.supply_coeff_max)

    @property
    def water_coeff(self) -> float:
        return min(self.step * self.generation, self.water_coeff_max)

    def advanced(self, n: int = 1) -> PenaltySchedule:
        return replace(self, generation=self.generation + n)

    def at(self, generation: int) -> PenaltySchedule:
        return replace(self, generation=generation)

    def coefficients(self) -> tuple[float, float, float]:
        return self.supply_coeff, self.water_coeff, self.reserve_weight

    def final_coefficients(self) -> tuple[float, float, float]:
        """Saturated coefficients, used to judge feasibility of reported runs."""
        return self.supply_coeff_max, self.water_coeff_max, self.reserve_weight


@dataclass
class EvaluationReport:
    fuel_cost: float
    startup_cost: float
    supply_penalty: float
    water_penalty: float
    reserve_penalty: float
    total: float
    feasible: bool
    violations: dict = field(default_factory=dict)
    coefficients: tuple = ()

    @property
    def cost(self) -> float:
        return self.fuel_cost + self.startup_cost

    @property
    def penalty(self) -> float:
        return self.supply_penalty + self.water_penalty + self.reserve_penalty

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cost"] = self.cost
        d["penalty"] = self.penalty
        d["coefficients"] = dict(zip(("supply", "water", "reserve"), self.coefficients))
        return d


def objective_cost(s: Schedule, inst: ProblemInstance) -> tuple[float, float]:
    """Fuel and start-up cost. Plants are assumed on before hour 0."""
    a = inst.arrays()
    on = s.u.astype(float)
    fuel = float(((a["cost_a"][:, None] + a["cost_b"][:, None] * s.g
                   + a["cost_c"][:, None] * s.g ** 2) * on).sum())
    prev = np.concatenate([np.ones((on.shape[0], 1)), on[:, :-1]], axis=1)
    startup = float((a["startup_cost"][:, None] * on * (1.0 - prev)).sum())
    return fuel, startup


def report_from_components(fuel: float, startup: float, supply_abs: float, water: float,
                           reserve: float, coeffs) -> EvaluationReport:
    cs, cw, r = coeffs
    sp, wp, rp = cs * supply_abs, cw * water, r * reserve
    pen = sp + wp + rp
    return EvaluationReport(
        fuel_cost=float(fuel), startup_cost=float(startup),
        supply_penalty=float(sp), water_penalty=float(wp), reserve_penalty=float(rp),
        total=float(fuel + startup + pen), feasible=bool(pen < FEASIBLE_PENALTY),
        violations={"supply_demand": float(supply_abs), "water_terminal": float(water),
                    "spinning_reserve": float(reserve)},
        coefficients=tuple(float(c) for c in coeffs),
    )


def penalties(out: RepairOutcome, s: Schedule | None, sched: PenaltySchedule,
              inst: ProblemInstance, coeffs=None, ramp_aware: bool = False) -> EvaluationReport:
    """Score a repaired candidate under ``sched`` (or explicit ``coeffs``)."""
    s = out.schedule if s is None else s
    fuel, startup = objective_cost(s, inst)
    s1, s2 = check_spinning_reserve(s, inst, ramp_aware)
    reserve = float(np.maximum(s1, 0).sum() + np.maximum(s2, 0).sum())
    return report_from_components(
        fuel, startup, float(np.abs(out.supply_residual).sum()),
        float(np.sum(out.water_residual)), reserve,
        sched.coefficients() if coeffs is None else coeffs)


def evaluate_schedule(s: Schedule, inst: ProblemInstance, coeffs,
                      ramp_aware: bool = False) -> EvaluationReport:
    """Score a finished schedule directly from its constraint residuals."""
    out = RepairOutcome(s, -check_supply_demand(s, inst),
                        np.array([check_hydro(s, inst)["water_terminal"]]))
    return penalties(out, s, PenaltySchedule(), inst, coeffs=coeffs, ramp_aware=ramp_aware)
