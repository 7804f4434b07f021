import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucld.constraints import check_hydro, check_supply_demand, conservation_error, violation_report
from ucld.encoding import (Chromosome, Schedule, decode, encode_from_schedule,
                           random_chromosome, water_levels)
from ucld.repair import (full_repair, repair_stage_chain, repair_supply_demand,
                         repair_water_terminal)

from conftest import hydro, make_instance, thermal

TAU = 1e-9


def sched(inst, u, g, hg=None):
    g = np.atleast_2d(np.asarray(g, dtype=float))
    hg = np.zeros((inst.n_hydro, g.shape[1])) if hg is None else np.atleast_2d(hg)
    return Schedule(np.atleast_2d(u), g, hg, water_levels(hg, inst))


def test_stage_chain_fixed_point():
    inst = make_instance([thermal(g_min=1, g_max=11, ramp_up=4, ramp_down=4, mdt=2)],
                         [hydro()], net=[1.0] * 4)
    s = sched(inst, [[1, 1, 0, 0]], [[5, 3, 0, 0]], [[1.0, -1.0, 0.5, -0.5]])
    assert repair_stage_chain(s, inst).equals(s)


def test_stage_chain_ramp_clamp():
    inst = make_instance([thermal(g_min=1, g_max=11, ramp_up=4, ramp_down=4)], net=[1.0] * 2)
    out = repair_stage_chain(sched(inst, [[0, 1]], [[0.0, 11.0]]), inst)
    np.testing.assert_array_equal(out.g, [[0.0, 4.0]])
    out = repair_stage_chain(sched(inst, [[1, 1]], [[2.0, 11.0]]), inst)
    np.testing.assert_array_equal(out.g, [[2.0, 6.0]])


def test_stage_chain_downtime():
    inst = make_instance([thermal(g_min=1, g_max=11, mdt=10)], net=[1.0] * 5)
    out = repair_stage_chain(sched(inst, [[1, 1, 0, 0, 1]], [[5, 5, 0, 0, 5]]), inst)
    np.testing.assert_array_equal(out.u, [[1, 1, 0, 0, 0]])
    np.testing.assert_array_equal(out.g[0, 4], 0.0)


def test_stage_chain_hydro_capacity():
    inst = make_instance([thermal()], [hydro(hv_max=50.3)], net=[1.0] * 3)
    out = repair_stage_chain(sched(inst, [[1] * 3], [[1.0] * 3], [[-2.5, -2.5, -2.5]]), inst)
    assert out.hv.max() <= 50.3 + TAU
    assert check_hydro(out, inst)["water_capacity"] == 0.0
    assert conservation_error(out, inst) < 1e-12


def supply_chrom(inst, pref=None, mc=10.0):
    n, T = inst.n_thermal, inst.hours
    return Chromosome(np.ones((n, T)), np.zeros((inst.n_hydro, T)),
                      np.zeros(n) if pref is None else pref, mc)


def test_supply_noop():
    inst = make_instance([thermal()], net=[5.0, 6.0])
    s = sched(inst, [[1, 1]], [[5.0, 6.0]])
    out, res = repair_supply_demand(s, supply_chrom(inst), inst)
    assert out.equals(s) and np.all(res == 0)


def test_supply_single_plant_step():
    inst = make_instance([thermal(g_min=1, g_max=11, ramp_up=5, ramp_down=5)], net=[8.0])
    out, res = repair_supply_demand(sched(inst, [[1]], [[5.0]]), supply_chrom(inst), inst)
    assert out.g[0, 0] == 8.0 and res[0] == 0.0


def test_supply_small_max_change_needs_passes():
    inst = make_instance([thermal(g_min=1, g_max=11)], net=[8.0])
    s = sched(inst, [[1]], [[5.0]])
    out, res = repair_supply_demand(s, supply_chrom(inst, mc=1.0), inst, max_adjustments=2)
    assert out.g[0, 0] == 7.0 and res[0] == 1.0


def test_supply_saturated():
    inst = make_instance([thermal(1, g_max=11), thermal(2, g_max=5)], net=[18.0])
    out, res = repair_supply_demand(sched(inst, [[1], [1]], [[11.0], [5.0]]),
                                    supply_chrom(inst), inst)
    assert res[0] == 2.0
    assert out.g[:, 0].tolist() == [11.0, 5.0]


def test_supply_preference_decides_who_moves():
    inst = make_instance([thermal(1), thermal(2)], net=[9.0])
    s = sched(inst, [[1], [1]], [[4.0], [4.0]])
    a, _ = repair_supply_demand(s, supply_chrom(inst, [1.0, 0.0]), inst)
    b, _ = repair_supply_demand(s, supply_chrom(inst, [0.0, 1.0]), inst)
    assert a.g[:, 0].tolist() == [5.0, 4.0]
    assert b.g[:, 0].tolist() == [4.0, 5.0]


def test_supply_never_flips_commitment():
    inst = make_instance([thermal(1), thermal(2)], net=[15.0])
    s = sched(inst, [[1], [0]], [[4.0], [0.0]])
    out, res = repair_supply_demand(s, supply_chrom(inst), inst)
    np.testing.assert_array_equal(out.u, s.u)
    assert res[0] == 4.0


def test_water_already_closed():
    inst = make_instance([thermal()], [hydro()], net=[1.0] * 3)
    s = sched(inst, [[1] * 3], [[1.0] * 3], [[1.0, -1.0, 0.0]])
    out, res = repair_water_terminal(s, inst)
    assert out.equals(s) and res[0] == 0.0


def test_water_last_hour_fix():
    inst = make_instance([thermal()], [hydro()], net=[1.0] * 3)
    s = sched(inst, [[1] * 3], [[1.0] * 3], [[-2.5, 0.0, 0.0]])
    out, res = repair_water_terminal(s, inst)
    assert res[0] == 0.0
    np.testing.assert_allclose(out.hg, [[-2.5, 0.0, 2.5]])
    assert abs(out.hv[0, -1] - 50.0) < 1e-12


def test_water_residual_matches_level_gap(paper10_24, rng):
    for _ in range(50):
        s = repair_stage_chain(decode(random_chromosome(paper10_24, rng), paper10_24), paper10_24)
        out, res = repair_water_terminal(s, paper10_24)
        gap = np.abs(out.hv[:, -1] - paper10_24.arrays()["hv_initial"])
        np.testing.assert_allclose(res, np.where(gap <= TAU, 0.0, gap), atol=1e-12)
        fam = check_hydro(out, paper10_24)
        assert max(fam["pump_bounds"], fam["pump_ramp_gen"], fam["pump_ramp_pump"],
                   fam["water_capacity"]) <= TAU
        assert conservation_error(out, paper10_24) < 1e-12
        np.testing.assert_array_equal(out.g, s.g)


def test_water_gap_spread_respects_ramps():
    inst = make_instance([thermal()], [hydro(hg_max=0.0, ramp_pump_down=1.0)], net=[1.0] * 2)
    s = sched(inst, [[1] * 2], [[1.0] * 2], [[-1.0, -2.0]])
    out, res = repair_water_terminal(s, inst)
    assert res[0] == 0.0
    assert check_hydro(out, inst)["pump_ramp_pump"] == 0.0
    assert np.all(out.hg <= 0.0)


def test_full_repair_fixed_point():
    inst = make_instance([thermal(1, g_min=1, g_max=8), thermal(2, g_min=1, g_max=8)],
                         [hydro()], net=[6.0, 3.0, 8.0])
    s = sched(inst, [[1, 1, 1], [1, 0, 1]], [[4.0, 4.0, 4.0], [1.0, 0.0, 4.0]],
              [[1.0, -1.0, 0.0]])
    c = encode_from_schedule(s, supply_chrom(inst), inst)
    out = full_repair(c, inst)
    assert out.schedule.equals(s, tol=1e-12)
    assert np.all(out.supply_residual == 0) and np.all(out.water_residual == 0)


def test_full_repair_capacity_gap():
    inst = make_instance([thermal(1, g_max=6), thermal(2, g_max=4)], net=[8.0, 13.0])
    c = Chromosome(np.full((2, 2), 50.0), np.zeros((0, 2)), [0, 0], 10.0)
    out = full_repair(c, inst)
    np.testing.assert_allclose(out.supply_residual, [0.0, 3.0])


def test_full_repair_random_paper10(paper10_24, rng):
    for _ in range(30):
        c = random_chromosome(paper10_24, rng)
        out = full_repair(c, paper10_24)
        rep = violation_report(out.schedule, paper10_24)
        assert max(rep.stage_families().values()) <= TAU
        assert conservation_error(out.schedule, paper10_24) < 1e-12
        # reported residuals describe the schedule
        np.testing.assert_allclose(-check_supply_demand(out.schedule, paper10_24),
                                   out.supply_residual, atol=1e-9)
        np.testing.assert_allclose(rep.water_terminal, out.water_residual.sum(), atol=1e-9)


def test_full_repair_does_not_mutate_input(paper10_24, rng):
    c = random_chromosome(paper10_24, rng)
    before = c.flatten().copy()
    full_repair(c, paper10_24)
    np.testing.assert_array_equal(c.flatten(), before)


def test_rebalance_closes_balance_after_water_shift():
    inst = make_instance([thermal(g_min=1, g_max=8)], [hydro()], net=[4.0, -1.0, 5.0, 4.0])
    c = Chromosome([[4.0, -1.0, 5.0, 4.0]], [[0.0, -1.0, 0.0, 0.0]], [0.0], 10.0)
    folded = full_repair(c, inst)
    rebal = full_repair(c, inst, rebalance_after_water=True)
    assert folded.water_residual[0] == 0 and rebal.water_residual[0] == 0
    assert np.abs(folded.supply_residual).sum() > 0
    assert np.abs(rebal.supply_residual).sum() == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_feasibility_invariant_under_preference_permutation(seed):
    from ucld.instances import paper10
    inst = paper10(12)
    r = np.random.default_rng(seed)
    c = random_chromosome(inst, r)
    p = Chromosome(c.thermal_genes, c.pump_genes, r.permutation(c.preference), c.max_change_gene)
    a, b = full_repair(c, inst), full_repair(p, inst)
    ra, rb = violation_report(a.schedule, inst), violation_report(b.schedule, inst)
    assert max(ra.stage_families().values()) <= TAU
    assert max(rb.stage_families().values()) <= TAU
    # commitment and reserve do not depend on who absorbs the adjustment
    np.testing.assert_array_equal(a.schedule.u, b.schedule.u)
    assert ra.reserve_low == rb.reserve_low and ra.reserve_high == rb.reserve_high


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_idempotent_on_feasible_output(seed):
    inst = make_instance([thermal(1, g_min=1, g_max=8, ramp_up=3, ramp_down=3, mdt=2),
                          thermal(2, g_min=2, g_max=9, ramp_up=4, ramp_down=4)],
                         [hydro(ramp_gen_up=2.0, ramp_pump_down=2.0)],
                         net=[7.0, 9.0, 4.0, 10.0, 6.0])
    r = np.random.default_rng(seed)
    c = random_chromosome(inst, r, 0.0, 9.0)
    out = full_repair(c, inst)
    if np.abs(out.supply_residual).sum() or out.water_residual.sum():
        return
    again = full_repair(encode_from_schedule(out.schedule, c, inst), inst)
    assert again.schedule.equals(out.schedule, tol=TAU)
    assert np.abs(again.supply_residual).sum() == 0


def test_decode_then_repair_is_pure(paper10_24, rng):
    c = random_chromosome(paper10_24, rng)
    a, b = full_repair(c, paper10_24), full_repair(c, paper10_24)
    assert a.schedule.equals(b.schedule)
    assert decode(c, paper10_24).u.shape == a.schedule.u.shape
