"""Unit commitment and load dispatch with pumped-storage hydro, solved by
Differential Evolution over repaired chromosomes."""
from .constraints import ViolationReport, violation_report
from .encoding import Chromosome, Schedule, decode
from .engine import DEConfig, RunResult, run
from .model import (DemandProfile, InstanceError, ProblemInstance, PumpedStoragePlant,
                    ThermalPlant, load_instance)
from .penalty import EvaluationReport, PenaltySchedule
from .repair import RepairOutcome, full_repair

__all__ = [
    "Chromosome", "DEConfig", "DemandProfile", "EvaluationReport", "InstanceError",
    "PenaltySchedule", "ProblemInstance", "PumpedStoragePlant", "RepairOutcome", "RunResult",
    "Schedule", "ThermalPlant", "ViolationReport", "decode", "full_repair", "load_instance",
    "run", "violation_report",
]
