import math

import pytest
from hypothesis import given, strategies as st

from batdeg.errors import (
    DodOutOfRange, EmptyGroup, EmptyInput, EmptyTable, InvalidEcon, InvalidSchedule, ScenarioMismatch,
)
from batdeg.models import (
    DodCostTable, EconParams, LinearModel, LinearParams, ScenarioKey, Schedule, ScheduleStep,
    ThroughputConvention, benchmark_fade, calibrate_dod_table, calibrate_linear,
    cycle_throughput_kWh, dod_cost, dod_lookup, linear_cost, model_fade_per_cycle,
)
from helpers import brute_pooled_mean, deg, meta

ECON = EconParams(c_BESS=100000, E_BESS_kWh=10, cycle_life=1000, nominal_capacity_Ah=2.0)
TABLE = DodCostTable(((40, 0.0005), (100, 0.002)))


class TestLinear:
    def test_calibrate(self):
        assert calibrate_linear(ECON).c_BD == 10.0

    def test_identity(self):
        assert calibrate_linear(EconParams(1, 1, 1, 1)).c_BD == 1.0

    def test_zero_cycle_life(self):
        with pytest.raises(InvalidEcon):
            calibrate_linear(EconParams(100000, 10, 0, 2.0))

    def test_eol_fraction_below_one(self):
        with pytest.raises(InvalidEcon):
            EconParams(1, 1, 1, 1, fade_eol_fraction=1.0)

    def test_one_step_cost(self):
        s = Schedule((ScheduleStep(0, 1.0, 5.0, 0.0),))
        assert linear_cost(LinearParams(10.0), s) == 50.0

    def test_zero_schedule(self):
        s = Schedule((ScheduleStep(0, 1.0, 0.0, 0.0), ScheduleStep(1, 1.0, 0.0, 0.0)))
        assert linear_cost(LinearParams(10.0), s) == 0.0
        assert linear_cost(LinearParams(10.0), Schedule()) == 0.0

    def test_two_identical_steps(self):
        one = Schedule((ScheduleStep(0, 0.25, 3.3, 0.0),))
        two = Schedule(one.steps * 2)
        assert linear_cost(LinearParams(7.1), two) == 2 * linear_cost(LinearParams(7.1), one)

    def test_duration_factor(self):
        s = Schedule((ScheduleStep(0, 0.5, 0.0, 4.0),))
        assert linear_cost(LinearParams(10.0), s) == 20.0

    def test_complementarity(self):
        with pytest.raises(InvalidSchedule):
            Schedule((ScheduleStep(0, 1.0, 1.0, 1.0),))


steps = st.lists(
    st.tuples(st.floats(0.1, 4), st.floats(0, 50), st.booleans()).map(
        lambda t: ScheduleStep(0, t[0], t[1] if t[2] else 0.0, 0.0 if t[2] else t[1])),
    max_size=20,
)


@given(steps, steps, st.floats(0, 10))
def test_linear_cost_linearity(a, b, alpha):
    p = LinearParams(3.7)
    sa, sb = Schedule(tuple(a)), Schedule(tuple(b))
    assert linear_cost(p, sa.scaled(alpha)) == pytest.approx(alpha * linear_cost(p, sa), rel=1e-12, abs=1e-9)
    assert linear_cost(p, Schedule(sa.steps + sb.steps)) == pytest.approx(
        linear_cost(p, sa) + linear_cost(p, sb), rel=1e-12, abs=1e-9)


class TestDodTable:
    def test_single_group(self):
        t = calibrate_dod_table({100: [deg([0.002, 0.002])]})
        assert t.entries == ((100.0, 0.002),)

    def test_two_groups_sorted(self):
        t = calibrate_dod_table({100: [deg([0.002])], 40: [deg([0.0004, 0.0006])]})
        assert [d for d, _ in t.entries] == [40, 100]
        assert t.entries[0][1] == pytest.approx(0.0005, rel=1e-12)
        assert t.entries[1][1] == 0.002

    def test_empty_group(self):
        with pytest.raises(EmptyGroup):
            calibrate_dod_table({60: []})

    def test_exact_hit(self):
        assert dod_lookup(TABLE, 40) == 0.0005

    def test_interpolation(self):
        assert dod_lookup(TABLE, 70) == pytest.approx(0.00125, rel=1e-12)

    def test_clamp(self):
        assert dod_lookup(TABLE, 20) == 0.0005
        assert dod_lookup(DodCostTable(((40, 0.0005), (80, 0.001))), 100) == 0.001

    def test_out_of_range(self):
        for bad in (0, -5, 100.5):
            with pytest.raises(DodOutOfRange):
                dod_lookup(TABLE, bad)

    def test_empty_table(self):
        with pytest.raises(EmptyTable):
            dod_lookup(DodCostTable(()), 50)

    def test_round_trip_mapping(self):
        assert DodCostTable.from_mapping(TABLE.to_mapping()) == TABLE


tables = st.lists(
    st.tuples(st.integers(1, 100), st.floats(0, 0.01)), min_size=1, max_size=8, unique_by=lambda t: t[0]
).map(lambda e: DodCostTable(tuple(sorted(e))))


@given(tables, st.floats(0.01, 100), st.floats(0.01, 100))
def test_monotone_table_monotone_lookup(table, a, b):
    fades = sorted(f for _, f in table.entries)
    mono = DodCostTable(tuple((d, f) for (d, _), f in zip(table.entries, fades)))
    lo, hi = min(a, b), max(a, b)
    assert dod_lookup(mono, lo) <= dod_lookup(mono, hi)


@given(tables, st.floats(0.01, 100))
def test_lookup_bounded_by_brackets(table, dod):
    v = dod_lookup(table, dod)
    dods = [d for d, _ in table.entries]
    fades = [f for _, f in table.entries]
    below = [k for k, d in enumerate(dods) if d <= dod]
    above = [k for k, d in enumerate(dods) if d >= dod]
    lo_k = below[-1] if below else 0
    hi_k = above[0] if above else len(dods) - 1
    assert min(fades[lo_k], fades[hi_k]) - 1e-18 <= v <= max(fades[lo_k], fades[hi_k]) + 1e-18


class TestDodCost:
    def test_hand_value(self):
        table = DodCostTable(((100, 0.002),))
        assert dod_cost(table, [(100, 1.0)], ECON) == pytest.approx(500.0, rel=1e-12)

    def test_zero_cycles(self):
        assert dod_cost(TABLE, [], ECON) == 0.0

    def test_half_cycles_additive(self):
        assert dod_cost(TABLE, [(70, 0.5), (70, 0.5)], ECON) == dod_cost(TABLE, [(70, 1.0)], ECON)


class TestBenchmark:
    def test_one_series(self):
        b = benchmark_fade(ScenarioKey(), [deg([0.001] * 3)])
        assert b.mean_fade_Ah_per_cycle == pytest.approx(0.001, rel=1e-12)
        assert b.n_replicates == 1 and b.n_deltas == 3

    def test_two_replicates(self):
        b = benchmark_fade(ScenarioKey(), [deg([0.001] * 4), deg([0.003] * 4, meta("u"))])
        assert b.mean_fade_Ah_per_cycle == pytest.approx(0.002, rel=1e-12)
        assert all(v == pytest.approx(0.002) for _, v in b.per_cycle_curve)

    def test_pooled_not_mean_of_means(self):
        b = benchmark_fade(ScenarioKey(), [deg([0.001]), deg([0.004, 0.004, 0.004], meta("u"))])
        assert b.mean_fade_Ah_per_cycle == pytest.approx(0.00325, rel=1e-12)
        assert b.per_cycle_curve[0][1] == pytest.approx(0.0025) and b.per_cycle_curve[1][1] == 0.004

    def test_scenario_mismatch(self):
        with pytest.raises(ScenarioMismatch):
            benchmark_fade(ScenarioKey(ambient_temp_C=15.0), [deg([0.001], meta(temp=25.0))])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            benchmark_fade(ScenarioKey(), [])


@given(st.lists(st.lists(st.floats(-0.01, 0.01), min_size=1, max_size=50), min_size=1, max_size=4))
def test_benchmark_equals_brute_force(lists):
    b = benchmark_fade(ScenarioKey(), [deg(v, meta(f"r{k}")) for k, v in enumerate(lists)])
    expected = brute_pooled_mean(lists)
    assert b.mean_fade_Ah_per_cycle == pytest.approx(expected, rel=1e-12, abs=1e-300)


class TestCommonUnit:
    def test_linear_sum_convention(self):
        lin = LinearModel(calibrate_linear(ECON), ECON)
        thr = cycle_throughput_kWh(100, ECON, ThroughputConvention.SUM)
        assert thr == 20.0
        assert model_fade_per_cycle(lin, 100, thr) == pytest.approx(0.0008, rel=1e-12)

    def test_linear_discharge_only(self):
        lin = LinearModel(calibrate_linear(ECON), ECON)
        thr = cycle_throughput_kWh(100, ECON, ThroughputConvention.DISCHARGE_ONLY)
        assert thr == 10.0
        fade = model_fade_per_cycle(lin, 100, thr)
        assert fade == pytest.approx(0.0004, rel=1e-12)
        assert fade == pytest.approx(ECON.fade_eol_fraction * ECON.nominal_capacity_Ah / ECON.cycle_life,
                                     rel=1e-12)

    def test_dod_model(self):
        assert model_fade_per_cycle(DodCostTable(((100, 0.002),)), 100, 20.0) == 0.002


@given(st.floats(1, 1e7), st.floats(0.1, 1e4), st.integers(1, 20000), st.floats(0.01, 500),
       st.floats(0.01, 0.99))
def test_discharge_only_full_dod_spreads_eol_fade(c, e, life, nominal, frac):
    econ = EconParams(c, e, life, nominal, frac)
    lin = LinearModel(calibrate_linear(econ), econ)
    fade = model_fade_per_cycle(lin, 100, cycle_throughput_kWh(100, econ, "DISCHARGE_ONLY"))
    assert math.isclose(fade, frac * nominal / life, rel_tol=1e-12)


def test_scenario_key_sorting_and_label():
    k = ScenarioKey("LFP", 25.0, 0.5, 1.0, 100.0)
    assert k.label() == "LFP 100% 0.5-1C 25C"
    keys = [ScenarioKey(ambient_temp_C=t) for t in (35.0, 15.0, 25.0)]
    assert [x.ambient_temp_C for x in sorted(keys, key=ScenarioKey.sort_key)] == [15, 25, 35]
