import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucld.encoding import (Chromosome, Schedule, decode, encode_from_schedule, genome_length,
                           max_change, random_chromosome, read_schedule_csv, repair_order,
                           water_levels, write_schedule_csv)

from conftest import hydro, make_instance, thermal


@pytest.fixture
def small():
    return make_instance([thermal(1), thermal(2, g_min=2.0)], [hydro()], net=[5.0, 6.0, 7.0])


def chrom(small, th=None, hy=None, pref=(0.0, 0.0), mc=1.0):
    th = np.ones((2, 3)) if th is None else th
    hy = np.zeros((1, 3)) if hy is None else hy
    return Chromosome(th, hy, pref, mc)


def test_negative_gene_means_off(small):
    th = np.array([[-3.0, 4.0, 0.0], [2.5, -0.1, 7.0]])
    s = decode(chrom(small, th), small)
    np.testing.assert_array_equal(s.u, [[0, 1, 0], [1, 0, 1]])
    np.testing.assert_array_equal(s.g, [[0, 4, 0], [2.5, 0, 7]])


def test_idle_pump_keeps_level(small):
    s = decode(chrom(small), small)
    np.testing.assert_array_equal(s.hv, np.full((1, 3), 50.0))


def test_pumping_raises_level(small):
    s = decode(chrom(small, hy=np.array([[-2.5, 0.0, 0.0]])), small)
    assert np.isclose(s.hv[0, 0] - 50.0, 0.2)
    assert np.isclose(s.hv[0, 2], 50.2)


@pytest.mark.parametrize("gene, want", [(0.2, 1), (-3.4, 3), (7.0, 7), (0.0, 1), (-0.6, 1)])
def test_max_change(small, gene, want):
    assert max_change(chrom(small, mc=gene)) == want


def test_repair_order_examples():
    c = Chromosome(np.ones((3, 1)), np.zeros((0, 1)), [0.1, 0.9, 0.5], 1.0)
    assert list(repair_order(c) + 1) == [2, 3, 1]
    c = Chromosome(np.ones((4, 1)), np.zeros((0, 1)), [0.3] * 4, 1.0)
    assert list(repair_order(c)) == [0, 1, 2, 3]
    c = Chromosome(np.ones((4, 1)), np.zeros((0, 1)), [1.0, 2.0, 3.0, 4.0], 1.0)
    assert list(repair_order(c)) == [3, 2, 1, 0]


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64),
                min_size=1, max_size=20))
def test_repair_order_is_permutation(prefs):
    c = Chromosome(np.ones((len(prefs), 1)), np.zeros((0, 1)), prefs, 1.0)
    assert sorted(repair_order(c)) == list(range(len(prefs)))


def test_encode_round_trip_and_carry_over(small, rng):
    c = random_chromosome(small, rng)
    c = Chromosome(c.thermal_genes, c.pump_genes, [0.1, 0.9], 4.2)
    s = decode(c, small)
    e = encode_from_schedule(s, c, small)
    assert decode(e, small).equals(s)
    assert np.all(e.thermal_genes[s.u == 0] < 0)
    np.testing.assert_array_equal(e.preference, [0.1, 0.9])
    assert e.max_change_gene == 4.2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decode_encode_identity(seed):
    inst = make_instance([thermal(1), thermal(2, g_min=0.0)], [hydro()], net=[1.0] * 5)
    r = np.random.default_rng(seed)
    u = r.integers(0, 2, size=(2, 5)).astype(np.int8)
    g = np.where(u == 1, r.uniform(0.5, 11.0, size=(2, 5)), 0.0)
    hg = r.uniform(-2.5, 2.5, size=(1, 5))
    s = Schedule(u, g, hg, water_levels(hg, inst))
    old = random_chromosome(inst, r)
    assert decode(encode_from_schedule(s, old, inst), inst).equals(s)


def test_flatten_layout(small):
    th = np.arange(6.0).reshape(2, 3)
    hy = np.array([[10.0, 11.0, 12.0]])
    c = Chromosome(th, hy, [20.0, 21.0], 30.0)
    x = c.flatten()
    np.testing.assert_array_equal(x, [0, 1, 2, 3, 4, 5, 10, 11, 12, 20, 21, 30])
    assert x.size == genome_length(2, 1, 3)
    back = Chromosome.from_flat(x, 2, 1, 3)
    np.testing.assert_array_equal(back.flatten(), x)
    with pytest.raises(ValueError):
        Chromosome.from_flat(x[:-1], 2, 1, 3)


def test_chromosome_validation(small):
    with pytest.raises(ValueError, match="finite"):
        chrom(small, th=np.array([[np.nan, 1, 1], [1, 1, 1]]))
    with pytest.raises(ValueError, match="preference"):
        chrom(small, pref=(1.0,))
    with pytest.raises(ValueError):
        decode(Chromosome(np.ones((2, 4)), np.zeros((1, 4)), [0, 0], 1), small)


def test_schedule_csv_round_trip(small, rng, tmp_path):
    s = decode(random_chromosome(small, rng), small)
    write_schedule_csv(s, tmp_path / "s.csv")
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "t,u_1,u_2,g_1,g_2,hg_1,hv_1"
    assert read_schedule_csv(tmp_path / "s.csv").equals(s)
