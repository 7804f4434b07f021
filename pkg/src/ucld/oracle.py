"""Exact reference solvers for desk-scale instances.

* :func:`dispatch_qp` - single-hour economic dispatch by lambda iteration.
* :func:`enumerate_uc` - every downtime-feasible commitment pattern, each
  hour dispatched optimally (thermal-only instances).
* :func:`brute_force_grid` - exhaustive search over commitment, thermal and
  pump-storage outputs on a grid, checked against every constraint family.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .constraints import TAU, check_spinning_reserve, check_thermal, violation_report
from .encoding import Schedule, water_levels
from .model import ProblemInstance
from .penalty import objective_cost


class OracleError(RuntimeError):
    pass


class OracleBudgetError(OracleError):
    """The search space exceeds the configured budget."""


class InfeasibleError(OracleError):
    """No candidate satisfies the constraints."""


@dataclass
class OracleResult:
    schedule: Schedule
    cost: float
    fuel_cost: float
    startup_cost: float
    candidates: int


# ------------------------------------------------------------------ dispatch

def _outputs(lam, lo, hi, b, c):
    out = np.empty_like(lo)
    quad = c > 0
    out[quad] = np.clip((lam - b[quad]) / (2.0 * c[quad]), lo[quad], hi[quad])
    lin = ~quad
    out[lin] = np.where(b[lin] < lam, hi[lin], lo[lin])
    return out


def dispatch_qp(committed, demand: float, inst: ProblemInstance, tol: float = 1e-8):
    """Least-cost split of ``demand`` over the committed thermal plants.

    ``committed`` is a boolean mask or an index sequence. Returns
    ``(g, cost)`` where ``g`` has one entry per thermal plant (0 when not
    committed) and ``cost`` is the committed plants' fuel cost.
    """
    a = inst.arrays()
    mask = np.zeros(inst.n_thermal, dtype=bool)
    committed = np.asarray(committed)
    if committed.dtype == bool:
        mask[:] = committed
    else:
        mask[committed.astype(int)] = True
    idx = np.flatnonzero(mask)
    lo, hi = a["g_min"][idx], a["g_max"][idx]
    b, c = a["cost_b"][idx], a["cost_c"][idx]
    if np.any(c < 0):
        raise ValueError("dispatch needs convex costs (cost_c >= 0)")
    total_lo, total_hi = lo.sum(), hi.sum()
    if demand < total_lo - tol or demand > total_hi + tol or idx.size == 0 and abs(demand) > tol:
        raise InfeasibleError(f"demand {demand:g} outside committed range "
                              f"[{total_lo:g}, {total_hi:g}]")
    if demand <= total_lo:
        out = lo.copy()
    elif demand >= total_hi:
        out = hi.copy()
    else:
        lam_lo = float(np.min(b + 2 * c * lo)) - 1.0
        lam_hi = float(np.max(b + 2 * c * hi)) + 1.0
        for _ in range(300):
            mid = 0.5 * (lam_lo + lam_hi)
            if mid <= lam_lo or mid >= lam_hi:
                break
            if _outputs(mid, lo, hi, b, c).sum() < demand:
                lam_lo = mid
            else:
                lam_hi = mid
        g_lo = _outputs(lam_lo, lo, hi, b, c)
        g_hi = _outputs(lam_hi, lo, hi, b, c)
        s_lo, s_hi = g_lo.sum(), g_hi.sum()
        theta = 0.0 if s_hi == s_lo else (demand - s_lo) / (s_hi - s_lo)
        out = g_lo + theta * (g_hi - g_lo)
    g = np.zeros(inst.n_thermal)
    g[idx] = out
    cost = float(np.sum(a["cost_a"][idx] + b * out + c * out ** 2))
    return g, cost


# --------------------------------------------------------------- enumeration

def mdt_patterns(hours: int, mdt: int) -> list[tuple[int, ...]]:
    """All on/off sequences with no restart after fewer than ``mdt`` off hours
    (the plant is on before hour 0)."""
    out = []
    for bits in itertools.product((0, 1), repeat=hours):
        off, ok = 0, True
        for b in bits:
            if b:
                if 0 < off < mdt:
                    ok = False
                    break
                off = 0
            else:
                off += 1
        if ok:
            out.append(bits)
    return out


def enumerate_uc(inst: ProblemInstance, horizon: int | None = None, budget: int = 1 << 22,
                 check_ramps: bool = True) -> OracleResult:
    """Cheapest schedule over all downtime-feasible commitment patterns.

    Each hour is dispatched with :func:`dispatch_qp`; patterns breaking the
    spinning reserve are skipped. Ramp limits are not part of the hourly
    dispatch, so the result is exact when ramps are non-binding; with
    ``check_ramps`` any candidate whose dispatch violates a ramp is dropped.
    """
    if inst.n_hydro:
        raise ValueError("enumerate_uc handles thermal-only instances; use brute_force_grid")
    if horizon is not None:
        inst = inst.truncated(horizon)
    T, n = inst.hours, inst.n_thermal
    a = inst.arrays()
    if n * 2 ** T > budget:
        raise OracleBudgetError(f"{n} plants x 2^{T} on/off sequences exceed budget {budget}")
    per_plant = [mdt_patterns(T, int(m)) for m in a["mdt"]]
    size = math.prod(len(p) for p in per_plant)
    if size > budget:
        raise OracleBudgetError(f"{size} commitment patterns exceed budget {budget}")

    net = a["net_demand"]
    lo_res = (1.0 - inst.demand.alpha) * net
    hi_res = (1.0 + inst.demand.beta) * net
    cache: dict = {}

    def hour(t, key):
        k = (t, key)
        if k not in cache:
            on = np.array(key, dtype=bool)
            res = None
            if (a["g_min"][on].sum() - lo_res[t] <= TAU
                    and hi_res[t] - a["g_max"][on].sum() <= TAU):
                try:
                    res = dispatch_qp(on, net[t], inst)
                except InfeasibleError:
                    res = None
            cache[k] = res
        return cache[k]

    best = None
    for combo in itertools.product(*per_plant):
        u = np.array(combo, dtype=np.int8)
        g = np.zeros((n, T))
        fuel = 0.0
        ok = True
        for t in range(T):
            res = hour(t, tuple(u[:, t]))
            if res is None:
                ok = False
                break
            g[:, t] = res[0]
            fuel += res[1]
        if not ok:
            continue
        prev = np.concatenate([np.ones((n, 1), dtype=np.int8), u[:, :-1]], axis=1)
        startup = float((a["startup_cost"][:, None] * ((u == 1) & (prev == 0))).sum())
        total = fuel + startup
        if best is not None and total >= best[0]:
            continue
        s = Schedule(u, g, np.zeros((0, T)), np.zeros((0, T)))
        if check_ramps and check_thermal(s, inst)["thermal_ramp"] > TAU:
            continue
        best = (total, s, fuel, startup)
    if best is None:
        raise InfeasibleError("no feasible commitment pattern")
    return OracleResult(best[1], best[0], best[2], best[3], size)


# ---------------------------------------------------------------- grid search

def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9))
    vals = lo + step * np.arange(n + 1)
    if hi - vals[-1] > 1e-9:
        vals = np.append(vals, hi)
    return vals


def brute_force_grid(inst: ProblemInstance, horizon: int | None = None, grid_step: float = 0.5,
                     budget: int = 2_000_000, tol: float = TAU) -> OracleResult:
    """Exhaustive search over a ``grid_step`` lattice of outputs.

    Thermal outputs range over ``g_min + k*step`` (plus ``g_max``) or off;
    pump-storage outputs over multiples of ``step`` within their mode bounds.
    Hour candidates must balance supply and demand; every full schedule is
    then checked against all constraint families.
    """
    if horizon is not None:
        inst = inst.truncated(horizon)
    T = inst.hours
    a = inst.arrays()
    th_opts = [np.concatenate([[0.0], _grid(p.g_min, p.g_max, grid_step)]) for p in inst.thermal]
    hy_opts = []
    for h in inst.hydro:
        k = np.arange(-math.floor(h.hp_max / grid_step + 1e-9),
                      math.floor(h.hg_max / grid_step + 1e-9) + 1) * grid_step
        ok = (k == 0) | ((k > 0) & (k >= h.hg_min - 1e-12)) | ((k < 0) & (-k >= h.hp_min - 1e-12))
        hy_opts.append(k[ok])

    raw = math.prod(len(o) for o in th_opts + hy_opts)
    if raw * T > budget:
        raise OracleBudgetError(f"{raw} output combinations per hour exceed budget {budget}")
    per_hour = []
    for t in range(T):
        cands = []
        for combo in itertools.product(*th_opts, *hy_opts):
            if abs(sum(combo) - a["net_demand"][t]) <= 1e-9:
                cands.append(combo)
        per_hour.append(cands)
    size = math.prod(len(c) for c in per_hour)
    if size > budget:
        raise OracleBudgetError(f"{size} grid schedules exceed budget {budget}")

    n_th = inst.n_thermal
    best = None
    for combo in itertools.product(*per_hour):
        m = np.array(combo, dtype=float).T
        g = m[:n_th]
        hg = m[n_th:]
        u = (g > 0).astype(np.int8)
        s = Schedule(u, g, hg, water_levels(hg, inst))
        fuel, startup = objective_cost(s, inst)
        total = fuel + startup
        if best is not None and total >= best[0] - 1e-12:
            continue
        s1, s2 = check_spinning_reserve(s, inst)
        if np.any(s1 > tol) or np.any(s2 > tol):
            continue
        if not violation_report(s, inst).feasible(tol):
            continue
        best = (total, s, fuel, startup)
    if best is None:
        raise InfeasibleError("no feasible grid schedule")
    return OracleResult(best[1], best[0], best[2], best[3], size)
