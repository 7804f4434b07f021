"""Problem instance types, validation and instance-file ingestion.

Instance files are TOML documents with ``[[thermal]]`` and ``[[hydro]]``
array tables and a ``[demand]`` table. The demand table either inlines the
hourly ``net_demand`` series or points at a CSV file (``csv = "..."``,
resolved relative to the instance file) with columns
``t,net_demand,alpha,beta``.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
DEFAULT_BETA = 0.05


class InstanceError(ValueError):
    """Raised when an instance file cannot be parsed or fails validation."""


class SolvabilityWarning(UserWarning):
    """Total installed capacity cannot cover the upper reserve requirement."""


@dataclass(frozen=True)
class ThermalPlant:
    id: int
    g_min: float
    g_max: float
    ramp_up: float
    ramp_down: float
    mdt: int
    startup_cost: float
    cost_a: float
    cost_b: float
    cost_c: float
    min_uptime: int | None = None  # parsed, not constrained

    def validate(self) -> None:
        _check(0 <= self.g_min <= self.g_max, f"thermal {self.id}: need 0 <= g_min <= g_max")
        _check(self.ramp_up > 0, f"thermal {self.id}: ramp_up must be > 0")
        _check(self.ramp_down > 0, f"thermal {self.id}: ramp_down must be > 0")
        _check(self.mdt >= 0, f"thermal {self.id}: mdt must be >= 0")
        _check(self.cost_c >= 0, f"thermal {self.id}: cost_c must be >= 0")
        _check(
            all(map(math.isfinite, (self.g_min, self.g_max, self.ramp_up, self.ramp_down,
                                    self.startup_cost, self.cost_a, self.cost_b, self.cost_c))),
            f"thermal {self.id}: non-finite parameter",
        )

    def fuel_cost(self, g):
        return self.cost_a + self.cost_b * g + self.cost_c * g * g


@dataclass(frozen=True)
class PumpedStoragePlant:
    id: int
    hg_max: float
    hp_max: float
    ramp_gen_up: float
    ramp_pump_down: float
    hv_max: float
    epsilon: float
    eta: float
    hg_min: float = 0.0
    hp_min: float = 0.0
    hv_min: float = 0.0
    hv_initial: float | None = None

    def __post_init__(self):
        if self.hv_initial is None:
            object.__setattr__(self, "hv_initial", self.hv_max / 2.0)

    def validate(self) -> None:
        _check(0 <= self.hg_min <= self.hg_max, f"hydro {self.id}: need 0 <= hg_min <= hg_max")
        _check(0 <= self.hp_min <= self.hp_max, f"hydro {self.id}: need 0 <= hp_min <= hp_max")
        _check(self.ramp_gen_up > 0, f"hydro {self.id}: ramp_gen_up must be > 0")
        _check(self.ramp_pump_down > 0, f"hydro {self.id}: ramp_pump_down must be > 0")
        _check(self.hv_min <= self.hv_initial <= self.hv_max,
               f"hydro {self.id}: need hv_min <= hv_initial <= hv_max")
        _check(self.epsilon > 0, f"hydro {self.id}: epsilon must be > 0")
        _check(0 < self.eta <= 1, f"hydro {self.id}: eta must lie in (0, 1]")


@dataclass(frozen=True)
class DemandProfile:
    """Hourly net demand (demand minus PV) with reserve margins.

    ``horizon`` is the index of the last hour, so every series holds
    ``horizon + 1`` values.
    """

    net_demand: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("net_demand", "alpha", "beta"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def horizon(self) -> int:
        return len(self.net_demand) - 1

    @property
    def hours(self) -> int:
        return len(self.net_demand)

    def validate(self) -> None:
        n = len(self.net_demand)
        _check(n >= 1, "demand: empty net_demand series")
        _check(len(self.alpha) == n and len(self.beta) == n,
               "demand: alpha/beta length must equal net_demand length")
        _check(bool(np.all(np.isfinite(self.net_demand))), "demand: non-finite net_demand")
        _check(bool(np.all((self.alpha >= 0) & (self.alpha <= 1))), "demand: alpha outside [0, 1]")
        _check(bool(np.all((self.beta >= 0) & (self.beta <= 1))), "demand: beta outside [0, 1]")

    def truncate(self, hours: int) -> DemandProfile:
        if not 1 <= hours <= self.hours:
            raise ValueError(f"cannot truncate {self.hours}-hour profile to {hours} hours")
        return DemandProfile(self.net_demand[:hours], self.alpha[:hours], self.beta[:hours])


@dataclass(frozen=True)
class ProblemInstance:
    thermal: tuple[ThermalPlant, ...]
    hydro: tuple[PumpedStoragePlant, ...]
    demand: DemandProfile
    name: str = "instance"
    _arrays: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "thermal", tuple(self.thermal))
        object.__setattr__(self, "hydro", tuple(self.hydro))

    @property
    def n_thermal(self) -> int:
        return len(self.thermal)

    @property
    def n_hydro(self) -> int:
        return len(self.hydro)

    @property
    def hours(self) -> int:
        return self.demand.hours

    def validate(self) -> ProblemInstance:
        """Check every invariant; raise InstanceError on the first failure."""
        _check(len(self.thermal) >= 1, "instance needs at least one thermal plant")
        for p in self.thermal:
            p.validate()
        for h in self.hydro:
            h.validate()
        self.demand.validate()
        cap = sum(p.g_max for p in self.thermal) + sum(h.hg_max for h in self.hydro)
        need = float(np.max((1 + self.demand.beta) * self.demand.net_demand))
        if cap < need:
            msg = (f"{self.name}: installed capacity {cap:g} is below the peak upper-reserve "
                   f"requirement {need:g}; no schedule can be feasible")
            log.warning(msg)
            warnings.warn(msg, SolvabilityWarning, stacklevel=2)
        return self

    def with_demand(self, demand: DemandProfile) -> ProblemInstance:
        return ProblemInstance(self.thermal, self.hydro, demand, self.name)

    def truncated(self, hours: int) -> ProblemInstance:
        return self.with_demand(self.demand.truncate(hours))

    def arrays(self) -> dict:
        """Plant parameters as contiguous float arrays (cached)."""
        if self._arrays is None:
            th, hy = self.thermal, self.hydro
            a = {
                "g_min": [p.g_min for p in th],
                "g_max": [p.g_max for p in th],
                "ramp_up": [p.ramp_up for p in th],
                "ramp_down": [p.ramp_down for p in th],
                "mdt": [p.mdt for p in th],
                "startup_cost": [p.startup_cost for p in th],
                "cost_a": [p.cost_a for p in th],
                "cost_b": [p.cost_b for p in th],
                "cost_c": [p.cost_c for p in th],
                "hg_min": [h.hg_min for h in hy],
                "hg_max": [h.hg_max for h in hy],
                "hp_min": [h.hp_min for h in hy],
                "hp_max": [h.hp_max for h in hy],
                "ramp_gen_up": [h.ramp_gen_up for h in hy],
                "ramp_pump_down": [h.ramp_pump_down for h in hy],
                "hv_min": [h.hv_min for h in hy],
                "hv_max": [h.hv_max for h in hy],
                "hv_initial": [h.hv_initial for h in hy],
                "epsilon": [h.epsilon for h in hy],
                "eta": [h.eta for h in hy],
            }
            out = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in a.items()}
            out["mdt"] = np.ascontiguousarray(a["mdt"], dtype=np.int64)
            out["net_demand"] = np.ascontiguousarray(self.demand.net_demand, dtype=np.float64)
            out["alpha"] = np.ascontiguousarray(self.demand.alpha, dtype=np.float64)
            out["beta"] = np.ascontiguousarray(self.demand.beta, dtype=np.float64)
            for v in out.values():
                v.setflags(write=False)
            object.__setattr__(self, "_arrays", out)
        return self._arrays


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceError(msg)


# --------------------------------------------------------------------------- io

_THERMAL_KEYS = {
    "id", "g_min", "g_max", "ramp_up", "ramp_down", "mdt", "startup_cost",
    "cost_a", "cost_b", "cost_c", "min_uptime",
}
_HYDRO_KEYS = {
    "id", "hg_min", "hg_max", "hp_min", "hp_max", "ramp_gen_up", "ramp_pump_down",
    "hv_min", "hv_max", "hv_initial", "epsilon", "eta",
}


def load_instance(path) -> ProblemInstance:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InstanceError(f"{path}: parse error: {exc}") from exc
    return instance_from_dict(doc, base_dir=path.parent, name=doc.get("name", path.stem))


def instance_from_dict(doc: dict, base_dir=None, name: str = "instance") -> ProblemInstance:
    thermal = []
    for k, row in enumerate(doc.get("thermal", []), start=1):
        _unknown(row, _THERMAL_KEYS, f"thermal[{k}]")
        try:
            thermal.append(ThermalPlant(
                id=int(row.get("id", k)),
                g_min=float(row["g_min"]),
                g_max=float(row["g_max"]),
                ramp_up=float(row.get("ramp_up", row["g_max"])),
                ramp_down=float(row.get("ramp_down", row["g_max"])),
                mdt=int(row.get("mdt", 0)),
                startup_cost=float(row.get("startup_cost", 0.0)),
                cost_a=float(row.get("cost_a", 0.0)),
                cost_b=float(row.get("cost_b", 0.0)),
                cost_c=float(row.get("cost_c", 0.0)),
                min_uptime=row.get("min_uptime"),
            ))
        except KeyError as exc:
            raise InstanceError(f"thermal[{k}]: missing key {exc.args[0]!r}") from None
    hydro = []
    for k, row in enumerate(doc.get("hydro", []), start=1):
        _unknown(row, _HYDRO_KEYS, f"hydro[{k}]")
        try:
            hg_max, hp_max = float(row["hg_max"]), float(row["hp_max"])
            hydro.append(PumpedStoragePlant(
                id=int(row.get("id", k)),
                hg_max=hg_max,
                hp_max=hp_max,
                ramp_gen_up=float(row.get("ramp_gen_up", hg_max)),
                ramp_pump_down=float(row.get("ramp_pump_down", hp_max)),
                hv_max=float(row["hv_max"]),
                epsilon=float(row["epsilon"]),
                eta=float(row["eta"]),
                hg_min=float(row.get("hg_min", 0.0)),
                hp_min=float(row.get("hp_min", 0.0)),
                hv_min=float(row.get("hv_min", 0.0)),
                hv_initial=None if row.get("hv_initial") is None else float(row["hv_initial"]),
            ))
        except KeyError as exc:
            raise InstanceError(f"hydro[{k}]: missing key {exc.args[0]!r}") from None
    if "demand" not in doc:
        raise InstanceError("missing [demand] table")
    demand = _demand_from_dict(doc["demand"], base_dir)
    inst = ProblemInstance(thermal, hydro, demand, name=name)
    return inst.validate()


def _unknown(row: dict, allowed: set, where: str) -> None:
    extra = set(row) - allowed
    if extra:
        raise InstanceError(f"{where}: unknown keys {sorted(extra)}")


def _demand_from_dict(d: dict, base_dir) -> DemandProfile:
    if "csv" in d:
        p = Path(d["csv"])
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        prof = read_demand_csv(p)
        if "hours" in d:
            prof = prof.truncate(int(d["hours"]))
        return prof
    try:
        net = np.asarray(d["net_demand"], dtype=float)
    except KeyError:
        raise InstanceError("demand: need either 'csv' or 'net_demand'") from None
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"demand: bad net_demand series: {exc}") from None
    alpha = _series(d.get("alpha", DEFAULT_ALPHA), len(net), "alpha")
    beta = _series(d.get("beta", DEFAULT_BETA), len(net), "beta")
    return DemandProfile(net, alpha, beta)


def _series(v, n, name):
    if isinstance(v, (int, float)):
        return np.full(n, float(v))
    arr = np.asarray(v, dtype=float)
    if arr.shape != (n,):
        raise InstanceError(f"demand: {name} must be a scalar or a length-{n} list")
    return arr


def read_demand_csv(path) -> DemandProfile:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise InstanceError(f"cannot read demand csv {path}: {exc}") from exc
    if not rows or "net_demand" not in rows[0]:
        raise InstanceError(f"{path}: expected columns t,net_demand,alpha,beta")
    try:
        rows.sort(key=lambda r: int(r["t"]))
        net = [float(r["net_demand"]) for r in rows]
        alpha = [float(r.get("alpha") or DEFAULT_ALPHA) for r in rows]
        beta = [float(r.get("beta") or DEFAULT_BETA) for r in rows]
    except (KeyError, ValueError) as exc:
        raise InstanceError(f"{path}: malformed row: {exc}") from exc
    return DemandProfile(net, alpha, beta)


def write_demand_csv(profile: DemandProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "net_demand", "alpha", "beta"])
        for t in range(profile.hours):
            w.writerow([t, repr(float(profile.net_demand[t])),
                        repr(float(profile.alpha[t])), repr(float(profile.beta[t]))])


# ---------------------------------------------------------------- demand model

def demand_components(days: int, peak: float, pv_peak: float, seed: int):
    """Return ``(demand, pv)`` hourly series underlying :func:`synth_demand`.

    Demand follows a diurnal cosine (trough at 03:00, crest at 15:00) on a
    0.62 base, scaled by 0.85 on days 6 and 7 of every week, with a bounded
    +-2% multiplicative noise. PV is a ``sin**1.5`` bell over 06:00-18:00
    scaled by a per-day clearness drawn in [0.6, 1] and normalised so the
    clearest day reaches ``pv_peak`` exactly at noon.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if not peak > 0:
        raise ValueError("peak must be > 0")
    if pv_peak < 0:
        raise ValueError("pv_peak must be >= 0")
    rng = np.random.default_rng(seed)
    k = np.arange(24 * days)
    hour, day = k % 24, k // 24
    shape = 0.5 * (1.0 - np.cos(2.0 * np.pi * (hour - 3) / 24.0))
    weekly = np.where(day % 7 >= 5, 0.85, 1.0)
    noise = 1.0 + 0.02 * rng.uniform(-1.0, 1.0, size=k.size)
    demand = peak * weekly * (0.62 + 0.38 * shape) * noise

    clear = rng.uniform(0.6, 1.0, size=days)
    clear = clear / clear.max()
    bell = np.where((hour > 6) & (hour < 18), np.sin(np.pi * (hour - 6) / 12.0), 0.0)
    pv = pv_peak * clear[day] * np.clip(bell, 0.0, None) ** 1.5
    return demand, pv


def synth_demand(days: int, peak: float, pv_peak: float, seed: int,
                 alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> DemandProfile:
    """Synthetic hourly net demand over ``days`` days (deterministic per seed)."""
    demand, pv = demand_components(days, peak, pv_peak, seed)
    n = demand.size
    return DemandProfile(demand - pv, np.full(n, float(alpha)), np.full(n, float(beta)))
