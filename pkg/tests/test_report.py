import csv
import io
import math

import pytest
from hypothesis import given, strategies as st

from batdeg.errors import EmptyPlot, IncomparableScenarios, MissingMetadata
from batdeg.ingest import Chemistry, parse_cycle_csv
from batdeg.models import DodCostTable, EconParams, ScenarioKey, calibrate_linear
from batdeg.report import (
    SCENARIO_COLUMNS, compare_models, emit_csv, group_scenarios, model_error, ratio_report,
    summarize_dataset,
)
from batdeg.svg import capacity_curves, emit_svg, scenario_bars, degradation_dots
from helpers import deg, meta, series

ECON = EconParams(c_BESS=100000, E_BESS_kWh=10, cycle_life=1000, nominal_capacity_Ah=2.0)
LIN = calibrate_linear(ECON)
TABLE = DodCostTable(((40, 0.0005), (100, 0.002)))


def rows(data: bytes):
    return list(csv.reader(io.StringIO(data.decode())))


class TestGrouping:
    def test_by_temperature(self):
        data = [series([2.0], meta(f"t{t}", temp=t)) for t in (35.0, 15.0, 25.0)]
        groups = group_scenarios(data, ["temperature"])
        assert [k.ambient_temp_C for k in groups] == [15.0, 25.0, 35.0]
        assert all(len(v) == 1 for v in groups.values())

    def test_by_dod(self):
        data = [series([2.0], meta(f"d{d}", window=(100 - d, 100))) for d in (100, 60, 40)]
        groups = group_scenarios(data, ["dod"])
        assert [k.dod_percent for k in groups] == [40, 60, 100]

    def test_empty(self):
        assert group_scenarios([], ["temperature"]) == {}

    def test_missing_metadata(self):
        with pytest.raises(MissingMetadata) as err:
            group_scenarios([series([2.0], meta("x", temp=None))], ["temperature"])
        assert "x" in str(err.value)

    @given(st.lists(st.tuples(st.sampled_from([15.0, 25.0]), st.sampled_from([1.0, 2.0])), max_size=20))
    def test_partition(self, conds):
        data = [series([2.0], meta(f"t{k}", temp=t, dis=d)) for k, (t, d) in enumerate(conds)]
        groups = group_scenarios(data)
        members = [s.meta.test_id for v in groups.values() for s in v]
        assert sorted(members) == sorted(s.meta.test_id for s in data)


class TestCompare:
    def test_rel_err(self):
        e = model_error(0.001, 0.002)
        assert e.rel_err == pytest.approx(-0.5) and e.abs_err == pytest.approx(0.001)

    def test_equal(self):
        assert model_error(0.002, 0.002).rel_err == 0.0

    def test_zero_benchmark(self):
        e = model_error(0.001, 0.0)
        assert e.rel_err is None and not e.rel_err_defined and e.abs_err == 0.001

    def test_report(self):
        r = compare_models(ScenarioKey(dod_percent=100.0), [deg([0.002] * 5)], LIN, TABLE, ECON)
        assert r.benchmark_fade == pytest.approx(0.002)
        assert r.model1_fade == pytest.approx(0.0008)
        assert r.model2_fade == 0.002
        assert r.model1_error.rel_err == pytest.approx(-0.6)
        assert r.benchmark_cost == pytest.approx(500.0)
        assert r.config["throughput_convention"] == "SUM"

    @given(st.lists(st.floats(-0.005, 0.01), min_size=1, max_size=30))
    def test_report_arithmetic(self, deltas):
        r = compare_models(ScenarioKey(), [deg(deltas)], LIN, TABLE, ECON)
        for fade, err in ((r.model1_fade, r.model1_error), (r.model2_fade, r.model2_error)):
            if err.rel_err_defined:
                assert math.isclose(err.rel_err * r.benchmark_fade + r.benchmark_fade, fade,
                                    rel_tol=1e-9, abs_tol=1e-15)


class TestRatios:
    def _reports(self, fades):
        return [
            compare_models(ScenarioKey(ambient_temp_C=t), [deg([f] * 3, meta(f"t{t}", temp=t))], LIN, TABLE, ECON)
            for t, f in fades.items()
        ]

    def test_double(self):
        table = ratio_report(self._reports({15.0: 0.001, 35.0: 0.002}))
        assert table.ratio_at(35.0) == pytest.approx(2.0) and table.reference_temp_C == 15.0

    def test_quarter(self):
        table = ratio_report(self._reports({25.0: 0.00125, 15.0: 0.001}))
        assert table.ratio_at(25.0) == pytest.approx(1.25)

    def test_single(self):
        with pytest.raises(IncomparableScenarios):
            ratio_report(self._reports({15.0: 0.001}))

    def test_other_fields_differ(self):
        a = compare_models(ScenarioKey(ambient_temp_C=15.0, dod_percent=100.0), [deg([0.001], meta(temp=15.0))],
                           LIN, TABLE, ECON)
        b = compare_models(ScenarioKey(ambient_temp_C=25.0, dod_percent=60.0),
                           [deg([0.001], meta(temp=25.0, window=(40, 100)))], LIN, TABLE, ECON)
        with pytest.raises(IncomparableScenarios):
            ratio_report([a, b])


class TestCensus:
    def test_lco(self):
        c = summarize_dataset([series([2.0], meta(f"l{k}", chemistry=Chemistry.LCO, dis=0.5)) for k in range(7)])
        assert c[("LCO", 0.5)] == 7 and c.total == 7

    def test_nca(self):
        c = summarize_dataset([series([2.0], meta(f"n{k}", chemistry=Chemistry.NCA, dis=0.5)) for k in range(29)])
        assert c[("NCA", 0.5)] == 29

    def test_empty(self):
        c = summarize_dataset([])
        assert c.counts == ()
        assert rows(emit_csv(c)) == [["chemistry", "discharge_rate_C", "n_tests"]]


class TestCsv:
    def test_scenario_row(self):
        r = compare_models(ScenarioKey("LFP", 25.0, 0.5, 1.0, 100.0), [deg([0.002] * 2)], LIN, TABLE, ECON,
                           config={"calibration_source": "unit"})
        out = rows(emit_csv(r))
        assert tuple(out[0]) == SCENARIO_COLUMNS and len(out) == 2
        row = dict(zip(out[0], out[1]))
        assert row["model1_fade_Ah"] == "0.0008"
        assert row["calibration_source"] == "unit"
        assert row["model1_rel_err_defined"] == "1"

    def test_undefined_flag_not_nan(self):
        r = compare_models(ScenarioKey(), [deg([0.001, -0.001])], LIN, TABLE, ECON)
        row = dict(zip(*rows(emit_csv([r]))))
        assert row["model1_rel_err"] == "" and row["model1_rel_err_defined"] == "0"
        assert "nan" not in emit_csv([r]).decode().lower()

    def test_nine_significant_digits(self):
        r = compare_models(ScenarioKey(), [deg([1 / 3])], LIN, TABLE, ECON)
        row = dict(zip(*rows(emit_csv(r))))
        assert row["benchmark_fade_Ah"] == "0.333333333"

    @given(st.lists(st.floats(0, 5), max_size=30))
    def test_series_round_trip(self, caps):
        s = series(caps)
        assert parse_cycle_csv(emit_csv(s), None, s.meta) == s


class TestSvg:
    def test_one_polyline(self):
        svg = emit_svg(capacity_curves([series([2.0, 1.9, 1.8])]))
        assert svg.count("<polyline") == 1 and svg.startswith("<svg")

    def test_nine_bars(self):
        reports = [
            compare_models(ScenarioKey(ambient_temp_C=t), [deg([0.001 * k] * 3, meta(temp=t))], LIN, TABLE, ECON)
            for k, t in enumerate((15.0, 25.0, 35.0), start=1)
        ]
        svg = emit_svg(scenario_bars(reports))
        assert svg.count('class="bar ') == 9
        assert svg.count('<g class="scenario"') == 3
        for name in ("model1", "model2", "benchmark"):
            assert svg.count(f'class="bar {name}"') == 3

    def test_empty(self):
        with pytest.raises(EmptyPlot):
            emit_svg(capacity_curves([]))
        with pytest.raises(EmptyPlot):
            emit_svg(scenario_bars([]))

    def test_dots_and_determinism(self):
        d = [deg([0.001, -0.0005, 0.002])]
        a, b = emit_svg(degradation_dots(d)), emit_svg(degradation_dots(d))
        assert a == b and a.count("<circle") == 3

    def test_metadata_embedded(self):
        svg = emit_svg(capacity_curves([series([2.0, 1.9])], metadata={"throughput_convention": "SUM"}))
        assert "<metadata>" in svg and "throughput_convention" in svg
