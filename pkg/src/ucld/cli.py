"""Command line entry point: ``ucld solve | batch | oracle | synth``.

Exit codes: 0 feasible best solution (or oracle/diff success), 1 input or
I/O error, 2 best solution infeasible, 3 oracle budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import instances
from .constraints import reserve_capabilities, violation_report
from .encoding import read_schedule_csv, write_schedule_csv
from .engine import TRACE_COLUMNS, DEConfig, run
from .model import InstanceError, ProblemInstance, load_instance, synth_demand, write_demand_csv
from .oracle import InfeasibleError, OracleBudgetError, brute_force_grid, enumerate_uc
from .penalty import PenaltySchedule, evaluate_schedule

log = logging.getLogger("ucld")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3
BUILTIN = {"two_unit": instances.two_unit, "tiny_hydro": instances.tiny_hydro,
           "paper10": instances.paper10}


class CliError(Exception):
    pass


# -------------------------------------------------------------------- helpers

def resolve_instance(source: str, horizon: int | None = None) -> ProblemInstance:
    """Load an instance file, ``builtin:<name>``, or a bundled file by name."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTIN:
            raise CliError(f"unknown builtin instance {name!r} (choose from {sorted(BUILTIN)})")
        inst = BUILTIN[name]()
    else:
        path = Path(source)
        if not path.exists():
            bundled = instances.paper10_path().parent / path.name
            if not bundled.exists():
                raise CliError(f"instance file not found: {source}")
            path = bundled
        inst = load_instance(path)
    if horizon is not None:
        if not 1 <= horizon <= inst.hours:
            raise CliError(f"--horizon must lie in [1, {inst.hours}]")
        inst = inst.truncated(horizon)
    return inst


def config_from_args(args, seed: int | None = None) -> DEConfig:
    pen = PenaltySchedule(supply_coeff_max=args.max_supply_coeff,
                          water_coeff_max=args.max_water_coeff, step=args.coeff_step,
                          reserve_weight=args.reserve_weight)
    return DEConfig(population_size=args.pop, max_generations=args.gens, cr=args.cr,
                    rc=args.rc, seed=args.seed if seed is None else seed,
                    max_adjustments=args.max_adjustments, penalty=pen,
                    rebalance_after_water=args.rebalance_after_water,
                    ramp_aware_reserve=args.ramp_aware_reserve, workers=args.workers).validate()


def write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_trace(trace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in trace:
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), row[4]])


def write_plot_data(s, inst: ProblemInstance, out: Path, ramp_aware: bool) -> None:
    """Hourly supply mix and reserve envelope series."""
    net = inst.demand.net_demand
    lo, hi = reserve_capabilities(s, inst, ramp_aware)
    thermal = s.g.sum(axis=0)
    gen = np.clip(s.hg, 0, None).sum(axis=0)
    pump = np.clip(s.hg, None, 0).sum(axis=0)
    with open(out / "supply_demand.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "net_demand", "thermal", "hydro_generation", "hydro_pumping", "supply"])
        for t in range(inst.hours):
            w.writerow([t, net[t], thermal[t], gen[t], pump[t], thermal[t] + gen[t] + pump[t]])
    with open(out / "reserve_envelope.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "net_demand", "required_low", "required_high",
                    "capability_low", "capability_high"])
        for t in range(inst.hours):
            w.writerow([t, net[t], (1 - inst.demand.alpha[t]) * net[t],
                        (1 + inst.demand.beta[t]) * net[t], lo[t], hi[t]])


def check_consistency(report, schedule_path: Path, inst, coeffs, ramp_aware) -> None:
    """Recompute the evaluation from the written schedule and compare."""
    again = evaluate_schedule(read_schedule_csv(schedule_path), inst, coeffs, ramp_aware)
    tol = 1e-6 + 1e-9 * abs(report.total)
    if abs(again.total - report.total) > tol or again.feasible != report.feasible:
        raise CliError(f"self-consistency check failed: report total {report.total!r}, "
                       f"recomputed {again.total!r}")


# ------------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    inst = resolve_instance(args.instance, args.horizon)
    cfg = config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = run(inst, cfg)
    s = res.outcome.schedule
    write_schedule_csv(s, out / "schedule.csv")
    write_trace(res.trace, out / "trace.csv")
    rep = res.report.to_dict()
    rep["instance"] = inst.name
    rep["hours"] = inst.hours
    rep["seed"] = cfg.seed
    rep["evaluations"] = res.evaluations
    rep["generations"] = res.generations
    rep["constraint_violations"] = violation_report(s, inst, cfg.ramp_aware_reserve).to_dict()
    write_json(rep, out / "report.json")
    check_consistency(res.report, out / "schedule.csv", inst, res.report.coefficients,
                      cfg.ramp_aware_reserve)
    if args.plot_data:
        write_plot_data(s, inst, out, cfg.ramp_aware_reserve)
    status = "feasible" if res.report.feasible else "INFEASIBLE"
    print(f"{inst.name}: cost {res.report.cost:.4f}, penalty {res.report.penalty:.6g} "
          f"({status}) in {res.wall_time:.1f}s -> {out}")
    return EXIT_OK if res.report.feasible else EXIT_INFEASIBLE


def _batch_one(job):
    inst, cfg = job
    res = run(inst, cfg)
    r = res.report
    return {"seed": cfg.seed, "feasible": r.feasible, "cost": r.cost, "fitness": r.total,
            "penalty": r.penalty, "supply_penalty": r.supply_penalty,
            "water_penalty": r.water_penalty, "reserve_penalty": r.reserve_penalty,
            "wall_time": res.wall_time}


def summarize(rows: list[dict]) -> dict:
    """Best, feasibility rate and mean/std over the feasible runs only."""
    feas = [r for r in rows if r["feasible"]]
    out = {"runs": len(rows), "feasible_runs": len(feas),
           "feasibility_rate": len(feas) / len(rows) if rows else 0.0}
    for key in ("cost", "fitness", "penalty"):
        vals = np.array([r[key] for r in feas])
        out[f"best_{key}"] = float(vals.min()) if vals.size else None
        out[f"mean_{key}"] = float(vals.mean()) if vals.size else None
        out[f"std_{key}"] = float(vals.std()) if vals.size else None
    return out


def _fmt(v):
    return "-" if v is None else f"{v:.2f}"


def cmd_batch(args) -> int:
    inst = resolve_instance(args.instance, args.horizon)
    seeds = list(range(args.seed, args.seed + args.runs))
    jobs = [(inst, config_from_args(args, seed=s)) for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_batch_one, jobs))
    else:
        rows = [_batch_one(j) for j in jobs]
    summary = summarize(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "batch.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    write_json(summary, out / "summary.json")
    print(f"{'seed':>6} {'feasible':>8} {'cost':>12} {'fitness':>12} {'penalty':>12}")
    for r in rows:
        print(f"{r['seed']:>6} {str(r['feasible']):>8} {r['cost']:>12.2f} "
              f"{r['fitness']:>12.2f} {r['penalty']:>12.4g}")
    print(f"feasible {summary['feasible_runs']}/{summary['runs']} "
          f"({100 * summary['feasibility_rate']:.0f}%)")
    for key in ("cost", "fitness", "penalty"):
        print(f"{key:>8}: best {_fmt(summary[f'best_{key}'])}  mean {_fmt(summary[f'mean_{key}'])}"
              f" ({_fmt(summary[f'std_{key}'])})")
    return EXIT_OK if summary["feasible_runs"] else EXIT_INFEASIBLE


def cmd_oracle(args) -> int:
    inst = resolve_instance(args.instance, args.horizon)
    method = args.method
    if method == "auto":
        method = "grid" if inst.n_hydro else "enumerate"
    try:
        if method == "enumerate":
            res = enumerate_uc(inst, budget=args.budget)
        else:
            res = brute_force_grid(inst, grid_step=args.grid, budget=args.budget)
    except OracleBudgetError as exc:
        print(f"oracle budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InfeasibleError as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_schedule_csv(res.schedule, out / "oracle_schedule.csv")
    rep = {"instance": inst.name, "hours": inst.hours, "method": method, "cost": res.cost,
           "fuel_cost": res.fuel_cost, "startup_cost": res.startup_cost,
           "candidates": res.candidates}
    if method == "grid":
        rep["grid_step"] = args.grid
    code = EXIT_OK
    print(f"{inst.name}: oracle cost {res.cost:.6f} ({method}, {res.candidates} candidates)")
    if args.compare:
        strict = PenaltySchedule().final_coefficients()
        ev = evaluate_schedule(read_schedule_csv(args.compare), inst, strict)
        gap = (ev.cost - res.cost) / abs(res.cost) if res.cost else math.inf
        ok = ev.feasible and gap <= args.rel_tol
        rep["compare"] = {"schedule": str(args.compare), "cost": ev.cost, "feasible": ev.feasible,
                          "relative_gap": gap, "result": "PASS" if ok else "FAIL"}
        print(f"compare: cost {ev.cost:.6f}, gap {100 * gap:.3f}%, "
              f"feasible={ev.feasible} -> {'PASS' if ok else 'FAIL'}")
        code = EXIT_OK if ok else EXIT_INFEASIBLE
    write_json(rep, out / "oracle.json")
    return code


def cmd_synth(args) -> int:
    profile = synth_demand(args.days, args.peak, args.pv_peak, args.seed, args.alpha, args.beta)
    write_demand_csv(profile, args.out)
    print(f"wrote {profile.hours} hours to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------- parser

def _add_de_args(p):
    d, pen = DEConfig(), PenaltySchedule()
    p.add_argument("instance", help="instance file, bundled file name or builtin:<name>")
    p.add_argument("--pop", type=int, default=d.population_size)
    p.add_argument("--gens", type=int, default=d.max_generations)
    p.add_argument("--cr", type=float, default=d.cr)
    p.add_argument("--rc", type=int, default=d.rc)
    p.add_argument("--max-supply-coeff", type=float, default=pen.supply_coeff_max)
    p.add_argument("--max-water-coeff", type=float, default=pen.water_coeff_max)
    p.add_argument("--coeff-step", type=float, default=pen.step)
    p.add_argument("--reserve-weight", type=float, default=pen.reserve_weight)
    p.add_argument("--max-adjustments", type=int, default=d.max_adjustments)
    p.add_argument("--horizon", type=int, default=None, help="truncate demand to H hours")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="evaluation threads per run")
    p.add_argument("--rebalance-after-water", action="store_true",
                   help="rerun the supply-demand repair after the water repair")
    p.add_argument("--ramp-aware-reserve", action="store_true")
    p.add_argument("--out", default="out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ucld", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one optimisation")
    _add_de_args(p)
    p.add_argument("--plot-data", action="store_true",
                   help="also write supply_demand.csv and reserve_envelope.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("batch", help="repeat runs over consecutive seeds")
    _add_de_args(p)
    p.add_argument("--runs", type=int, default=30)
    p.add_argument("--jobs", type=int, default=1, help="runs executed in parallel")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("oracle", help="exact reference solution for a small instance")
    p.add_argument("instance")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--grid", type=float, default=0.5, help="grid step for the grid search")
    p.add_argument("--method", choices=("auto", "enumerate", "grid"), default="auto")
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--compare", type=Path, default=None, help="schedule.csv to diff against")
    p.add_argument("--rel-tol", type=float, default=0.01)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("synth", help="write a synthetic net-demand csv")
    p.add_argument("--days", type=int, default=7)
    p.add_argument("--peak", type=float, default=70.0)
    p.add_argument("--pv-peak", type=float, default=34.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
