import warnings

import numpy as np
import pytest

from ucld.instances import paper10_path
from ucld.model import (InstanceError, SolvabilityWarning, demand_components, instance_from_dict,
                        load_instance, read_demand_csv, synth_demand, write_demand_csv)

from conftest import make_instance, thermal


def test_bundled_generator_1(paper10):
    g1 = paper10.thermal[0]
    assert (g1.g_max, g1.g_min, g1.mdt, g1.startup_cost) == (11, 11, 10, 1)
    assert (g1.cost_a, g1.cost_b, g1.cost_c) == (0.01, 0.5, 0.01)


def test_bundled_hydro(paper10):
    assert paper10.n_thermal == 10 and paper10.n_hydro == 4
    for h in paper10.hydro:
        assert (h.hg_max, h.hp_max, h.eta, h.hv_max, h.epsilon) == (2.5, 2.5, 0.8, 100, 10)
        assert h.hg_min == h.hp_min == 0.0
        assert h.hv_initial == 50.0


def test_bundled_demand_week(paper10):
    d = paper10.demand
    assert d.hours == 168 and d.horizon == 167
    assert np.all(d.alpha == 0.05) and np.all(d.beta == 0.05)
    cap = sum(p.g_max for p in paper10.thermal) + sum(h.hg_max for h in paper10.hydro)
    assert np.max((1 + d.beta) * d.net_demand) <= cap


def test_min_uptime_parsed(paper10):
    assert all(p.min_uptime is not None for p in paper10.thermal)


def test_empty_thermal_list_rejected():
    doc = {"thermal": [], "demand": {"net_demand": [1.0]}}
    with pytest.raises(InstanceError, match="at least one thermal"):
        instance_from_dict(doc)


@pytest.mark.parametrize("row, msg", [
    ({"g_min": 5, "g_max": 2}, "g_min <= g_max"),
    ({"g_min": 1, "g_max": 2, "ramp_up": 0}, "ramp_up"),
    ({"g_min": 1, "g_max": 2, "mdt": -1}, "mdt"),
    ({"g_min": 1, "g_max": 2, "cost_c": -0.1}, "cost_c"),
    ({"g_min": 1, "g_max": 2, "colour": "red"}, "unknown"),
    ({"g_max": 2}, "missing"),
])
def test_bad_thermal_rows(row, msg):
    with pytest.raises(InstanceError, match=msg):
        instance_from_dict({"thermal": [row], "demand": {"net_demand": [1.0]}})


def test_bad_hydro_and_demand():
    base = {"thermal": [{"g_min": 0, "g_max": 5}]}
    with pytest.raises(InstanceError, match="eta"):
        instance_from_dict({**base, "hydro": [{"hg_max": 1, "hp_max": 1, "hv_max": 10,
                                               "epsilon": 10, "eta": 1.5}],
                            "demand": {"net_demand": [1.0]}})
    with pytest.raises(InstanceError, match="alpha"):
        instance_from_dict({**base, "demand": {"net_demand": [1.0, 2.0], "alpha": [0.1]}})
    with pytest.raises(InstanceError, match="demand"):
        instance_from_dict(base)


def test_capacity_warning():
    with pytest.warns(SolvabilityWarning):
        make_instance([thermal(g_max=4.0)], net=[5.0]).validate()


def test_inline_demand_and_defaults():
    inst = instance_from_dict({"thermal": [{"g_min": 1, "g_max": 6}],
                               "demand": {"net_demand": [2, 3], "alpha": 0.1}})
    assert inst.thermal[0].ramp_up == 6 and inst.thermal[0].ramp_down == 6
    assert np.all(inst.demand.alpha == 0.1) and np.all(inst.demand.beta == 0.05)


def test_load_from_file_with_csv(tmp_path):
    write_demand_csv(synth_demand(1, 10.0, 2.0, seed=3), tmp_path / "d.csv")
    (tmp_path / "x.inst").write_text(
        '[[thermal]]\ng_min = 1.0\ng_max = 12.0\n[demand]\ncsv = "d.csv"\n')
    inst = load_instance(tmp_path / "x.inst")
    assert inst.hours == 24 and inst.name == "x"
    np.testing.assert_array_equal(inst.demand.net_demand,
                                  read_demand_csv(tmp_path / "d.csv").net_demand)


def test_load_errors(tmp_path):
    (tmp_path / "bad.inst").write_text("[[thermal]\n")
    with pytest.raises(InstanceError, match="parse"):
        load_instance(tmp_path / "bad.inst")
    (tmp_path / "nocsv.inst").write_text(
        '[[thermal]]\ng_min = 1.0\ng_max = 12.0\n[demand]\ncsv = "missing.csv"\n')
    with pytest.raises(InstanceError):
        load_instance(tmp_path / "nocsv.inst")


def test_demand_csv_round_trip(tmp_path):
    prof = synth_demand(2, 50.0, 20.0, seed=7, alpha=0.03, beta=0.07)
    write_demand_csv(prof, tmp_path / "p.csv")
    back = read_demand_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.net_demand, prof.net_demand)
    np.testing.assert_array_equal(back.alpha, prof.alpha)
    np.testing.assert_array_equal(back.beta, prof.beta)


def test_truncate():
    inst = load_instance(paper10_path())
    short = inst.truncated(24)
    assert short.hours == 24
    np.testing.assert_array_equal(short.demand.net_demand, inst.demand.net_demand[:24])
    with pytest.raises(ValueError):
        inst.truncated(500)


def test_synth_without_pv_is_positive_and_daily():
    prof = synth_demand(7, 70.0, 0.0, seed=1)
    net = prof.net_demand
    assert net.size == 168 and np.all(net > 0)
    # same hour of day peaks every day, troughs at 03:00
    days = net.reshape(7, 24)
    assert np.all(np.argmin(days, axis=1) <= 5)
    assert np.all(np.abs(np.argmax(days, axis=1) - 15) <= 2)


def test_synth_strong_pv_creates_surplus():
    prof = synth_demand(7, 70.0, 90.0, seed=1)
    hours = np.flatnonzero(prof.net_demand < 0) % 24
    assert hours.size > 0 and np.all((hours > 6) & (hours < 18))


def test_synth_is_pure():
    a = synth_demand(3, 40.0, 10.0, seed=9)
    b = synth_demand(3, 40.0, 10.0, seed=9)
    c = synth_demand(3, 40.0, 10.0, seed=10)
    np.testing.assert_array_equal(a.net_demand, b.net_demand)
    assert not np.array_equal(a.net_demand, c.net_demand)


def test_pv_component_peaks_at_noon():
    _, pv = demand_components(2, 10.0, 5.0, seed=0)
    day = pv.reshape(2, 24)
    assert np.all(np.argmax(day, axis=1) == 12)
    assert np.isclose(pv.max(), 5.0)
    with pytest.raises(ValueError):
        demand_components(0, 10.0, 5.0, seed=0)


def test_instance_is_immutable(paper10):
    with pytest.raises(Exception):
        paper10.thermal[0].g_max = 3
    with pytest.raises(ValueError):
        paper10.arrays()["g_max"][0] = 1.0
