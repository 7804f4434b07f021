"""Chromosome layout and genotype/phenotype conversion.

A chromosome is the pre-repair candidate: a thermal output matrix whose
negative entries mean "off", a signed pump-storage output matrix, a
preference vector steering the supply-demand repair and a real-valued gene
read as the repair's maximum change per step.

Flattened genome order (stable): thermal matrix row-major, pump matrix
row-major, preference vector, max-change gene.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance


@dataclass
class Chromosome:
    thermal_genes: np.ndarray
    pump_genes: np.ndarray
    preference: np.ndarray
    max_change_gene: float

    def __post_init__(self):
        self.thermal_genes = np.array(self.thermal_genes, dtype=float, ndmin=2)
        self.pump_genes = np.array(self.pump_genes, dtype=float)
        if self.pump_genes.ndim != 2:
            self.pump_genes = self.pump_genes.reshape(0, self.thermal_genes.shape[1])
        self.preference = np.array(self.preference, dtype=float).ravel()
        self.max_change_gene = float(self.max_change_gene)
        if self.preference.size != self.thermal_genes.shape[0]:
            raise ValueError("preference length must equal the number of thermal plants")
        if self.pump_genes.shape[1] != self.thermal_genes.shape[1]:
            raise ValueError("thermal and pump matrices must cover the same hours")
        if not (np.all(np.isfinite(self.thermal_genes)) and np.all(np.isfinite(self.pump_genes))
                and np.all(np.isfinite(self.preference)) and np.isfinite(self.max_change_gene)):
            raise ValueError("chromosome genes must be finite")

    @property
    def hours(self) -> int:
        return self.thermal_genes.shape[1]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.thermal_genes.ravel(), self.pump_genes.ravel(),
                               self.preference, [self.max_change_gene]])

    @classmethod
    def from_flat(cls, x, n_thermal: int, n_hydro: int, hours: int) -> Chromosome:
        x = np.asarray(x, dtype=float)
        if x.size != genome_length(n_thermal, n_hydro, hours):
            raise ValueError(f"genome of length {x.size} does not match layout "
                             f"({n_thermal} thermal, {n_hydro} hydro, {hours} hours)")
        a = n_thermal * hours
        b = a + n_hydro * hours
        return cls(x[:a].reshape(n_thermal, hours), x[a:b].reshape(n_hydro, hours),
                   x[b:b + n_thermal], x[-1])

    @classmethod
    def for_instance(cls, x, inst: ProblemInstance) -> Chromosome:
        return cls.from_flat(x, inst.n_thermal, inst.n_hydro, inst.hours)


def genome_length(n_thermal: int, n_hydro: int, hours: int) -> int:
    return (n_thermal + n_hydro) * hours + n_thermal + 1


@dataclass
class Schedule:
    """Post-repair phenotype. ``hv[j, t]`` is the level at the end of hour t."""

    u: np.ndarray
    g: np.ndarray
    hg: np.ndarray
    hv: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.int8)
        self.g = np.asarray(self.g, dtype=float)
        self.hg = np.asarray(self.hg, dtype=float).reshape(-1, self.g.shape[1])
        self.hv = np.asarray(self.hv, dtype=float).reshape(-1, self.g.shape[1])

    @property
    def hours(self) -> int:
        return self.g.shape[1]

    def copy(self) -> Schedule:
        return Schedule(self.u.copy(), self.g.copy(), self.hg.copy(), self.hv.copy())

    def equals(self, other: Schedule, tol: float = 0.0) -> bool:
        return (np.array_equal(self.u, other.u)
                and np.allclose(self.g, other.g, rtol=0, atol=tol)
                and np.allclose(self.hg, other.hg, rtol=0, atol=tol)
                and np.allclose(self.hv, other.hv, rtol=0, atol=tol))


def _check_dims(c: Chromosome, inst: ProblemInstance) -> None:
    want_t = (inst.n_thermal, inst.hours)
    want_h = (inst.n_hydro, inst.hours)
    if c.thermal_genes.shape != want_t or c.pump_genes.shape != want_h:
        raise ValueError(f"chromosome dims {c.thermal_genes.shape}/{c.pump_genes.shape} "
                         f"do not match instance {want_t}/{want_h}")


def water_levels(hg: np.ndarray, inst: ProblemInstance) -> np.ndarray:
    """Roll reservoir levels forward from ``hv_initial``.

    Each hour obeys ``eps * hv[t] = eps * hv[t-1] - eta * hg[t]``; the level
    before hour 0 is the plant's initial level.
    """
    arr = inst.arrays()
    hg = np.asarray(hg, dtype=float)
    hv = np.empty_like(hg)
    for j in range(hg.shape[0]):
        level = arr["hv_initial"][j]
        k = arr["eta"][j] / arr["epsilon"][j]
        for t in range(hg.shape[1]):
            level = level - k * hg[j, t]
            hv[j, t] = level
    return hv


def decode(c: Chromosome, inst: ProblemInstance) -> Schedule:
    _check_dims(c, inst)
    u = (c.thermal_genes > 0).astype(np.int8)
    g = np.where(u == 1, c.thermal_genes, 0.0)
    hg = c.pump_genes.copy()
    return Schedule(u, g, hg, water_levels(hg, inst))


def max_change(c: Chromosome) -> int:
    return max(1, int(round(abs(c.max_change_gene))))


def repair_order(c: Chromosome) -> np.ndarray:
    """Thermal indices (0-based) by descending preference, ties by index."""
    return np.argsort(-np.asarray(c.preference, dtype=float), kind="stable")


def off_marker(inst: ProblemInstance) -> np.ndarray:
    gmin = inst.arrays()["g_min"]
    return np.where(gmin > 0, -gmin, -1.0)


def encode_from_schedule(s: Schedule, old: Chromosome, inst: ProblemInstance | None = None
                         ) -> Chromosome:
    if s.g.shape != old.thermal_genes.shape or s.hg.shape != old.pump_genes.shape:
        raise ValueError("schedule and chromosome dimensions differ")
    if inst is None:
        marker = np.full(s.g.shape[0], -1.0)
    else:
        marker = off_marker(inst)
    thermal = np.where(s.u == 1, s.g, marker[:, None])
    return Chromosome(thermal, s.hg.copy(), old.preference.copy(), old.max_change_gene)


def random_chromosome(inst: ProblemInstance, rng, low: float = -10.0, high: float = 10.0
                      ) -> Chromosome:
    n = genome_length(inst.n_thermal, inst.n_hydro, inst.hours)
    return Chromosome.for_instance(rng.uniform(low, high, size=n), inst)


# ------------------------------------------------------------------ csv export

def schedule_header(n_thermal: int, n_hydro: int) -> list[str]:
    return (["t"] + [f"u_{i}" for i in range(1, n_thermal + 1)]
            + [f"g_{i}" for i in range(1, n_thermal + 1)]
            + [f"hg_{j}" for j in range(1, n_hydro + 1)]
            + [f"hv_{j}" for j in range(1, n_hydro + 1)])


def write_schedule_csv(s: Schedule, path) -> None:
    n_th, n_hy = s.g.shape[0], s.hg.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(schedule_header(n_th, n_hy))
        for t in range(s.hours):
            w.writerow([t] + [int(x) for x in s.u[:, t]]
                       + [repr(float(x)) for x in s.g[:, t]]
                       + [repr(float(x)) for x in s.hg[:, t]]
                       + [repr(float(x)) for x in s.hv[:, t]])


def read_schedule_csv(path) -> Schedule:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    n_th = sum(1 for h in header if h.startswith("u_"))
    n_hy = sum(1 for h in header if h.startswith("hg_"))
    if header != schedule_header(n_th, n_hy):
        raise ValueError(f"{path}: unexpected schedule header")
    data = np.array([[float(x) for x in r[1:]] for r in rows]).T.reshape(-1, len(rows))
    u = data[:n_th]
    g = data[n_th:2 * n_th]
    hg = data[2 * n_th:2 * n_th + n_hy]
    hv = data[2 * n_th + n_hy:]
    return Schedule(u.astype(np.int8), g, hg, hv)
