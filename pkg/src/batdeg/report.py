"""Scenario grouping, model comparison and tabular outputs.

CSV schemas (column order is fixed; numbers use 9 significant digits except
capacity series, which use shortest round-trip repr):

scenarios.csv
    scenario, chemistry, ambient_temp_C, charge_rate_C, discharge_rate_C,
    dod_percent, n_tests, n_deltas, throughput_kWh, benchmark_fade_Ah,
    model1_fade_Ah, model2_fade_Ah, benchmark_cost, model1_cost, model2_cost,
    model1_abs_err_Ah, model1_rel_err, model1_rel_err_defined,
    model2_abs_err_Ah, model2_rel_err, model2_rel_err_defined,
    throughput_convention, calibration_source, config
census.csv
    chemistry, discharge_rate_C, n_tests
ratios.csv
    scenario, ambient_temp_C, benchmark_fade_Ah, ratio_to_coldest,
    reference_temp_C
removed.csv
    cycle_index, reason
deltas.csv
    cycle_index, fade_Ah
cycles.csv
    dod_percent, count, soc_range
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Any, Iterable, Mapping, Sequence

from .cycles import ExtractedCycles
from .errors import IncomparableScenarios, MissingMetadata, ScenarioMismatch
from .ingest import CapacitySeries, serialize_cycle_csv
from .models import (
    DodCostTable,
    EconParams,
    LinearModel,
    LinearParams,
    ScenarioKey,
    ThroughputConvention,
    benchmark_fade,
    cycle_throughput_kWh,
    model_fade_per_cycle,
)
from .preprocess import CleanCapacitySeries, DegradationSeries

# CLI-facing names for ScenarioKey fields
GROUP_FIELDS = {
    "chemistry": "chemistry",
    "temperature": "ambient_temp_C",
    "charge_rate": "charge_rate_C",
    "discharge_rate": "discharge_rate_C",
    "dod": "dod_percent",
}


def _resolve_group_by(group_by: Iterable[str] | None) -> tuple[str, ...]:
    if group_by is None:
        return ScenarioKey.FIELDS
    out = []
    for name in group_by:
        resolved = GROUP_FIELDS.get(name, name)
        if resolved not in ScenarioKey.FIELDS:
            raise ValueError(f"unknown grouping field {name!r}")
        out.append(resolved)
    return tuple(out)


def group_scenarios(dataset: Sequence[Any], group_by: Iterable[str] | None = None) -> dict[ScenarioKey, list]:
    """Partition series (anything with ``.meta``) by the chosen key fields.

    Keys come back sorted; within a group the input order is kept.
    """
    fields_ = _resolve_group_by(group_by)
    groups: dict[ScenarioKey, list] = {}
    for s in dataset:
        meta = s.meta
        key = ScenarioKey.from_meta(meta, fields_)
        for f in fields_:
            if getattr(key, f) is None:
                raise MissingMetadata(f"{meta.test_id}: missing {f}")
        groups.setdefault(key, []).append(s)
    return dict(sorted(groups.items(), key=lambda kv: kv[0].sort_key()))


@dataclass(frozen=True)
class ModelError:
    abs_err: float
    rel_err: float | None

    @property
    def rel_err_defined(self) -> bool:
        return self.rel_err is not None


def model_error(model: float, benchmark: float) -> ModelError:
    rel = (model - benchmark) / benchmark if benchmark != 0 else None
    return ModelError(abs_err=abs(model - benchmark), rel_err=rel)


@dataclass(frozen=True)
class ScenarioReport:
    key: ScenarioKey
    dod_percent: float
    throughput_kWh: float
    benchmark_fade: float
    model1_fade: float
    model2_fade: float
    value_per_Ah: float
    model1_error: ModelError
    model2_error: ModelError
    n_tests: int
    n_deltas: int
    config: Mapping[str, Any] = field(default_factory=dict)

    @property
    def benchmark_cost(self) -> float:
        return self.benchmark_fade * self.value_per_Ah

    @property
    def model1_cost(self) -> float:
        return self.model1_fade * self.value_per_Ah

    @property
    def model2_cost(self) -> float:
        return self.model2_fade * self.value_per_Ah


def _scenario_dod(key: ScenarioKey, series: Sequence[DegradationSeries]) -> float:
    if key.dod_percent is not None:
        return key.dod_percent
    dods = {s.meta.dod_percent for s in series}
    if len(dods) != 1:
        raise ScenarioMismatch(f"scenario {key.label()} mixes DODs {sorted(dods)}")
    return dods.pop()


def compare_models(
    key: ScenarioKey,
    series: Sequence[DegradationSeries],
    model1: LinearParams,
    model2: DodCostTable,
    econ: EconParams,
    convention: ThroughputConvention = ThroughputConvention.SUM,
    config: Mapping[str, Any] | None = None,
) -> ScenarioReport:
    """Benchmark, linear model and DOD model fade for one scenario."""
    bench = benchmark_fade(key, series)
    dod = _scenario_dod(key, series)
    throughput = cycle_throughput_kWh(dod, econ, convention)
    m1 = model_fade_per_cycle(LinearModel(model1, econ), dod, throughput)
    m2 = model_fade_per_cycle(model2, dod, throughput)
    b = bench.mean_fade_Ah_per_cycle
    echo = {"throughput_convention": ThroughputConvention(convention).value}
    echo.update(config or {})
    return ScenarioReport(
        key=key,
        dod_percent=dod,
        throughput_kWh=throughput,
        benchmark_fade=b,
        model1_fade=m1,
        model2_fade=m2,
        value_per_Ah=econ.value_per_Ah,
        model1_error=model_error(m1, b),
        model2_error=model_error(m2, b),
        n_tests=bench.n_replicates,
        n_deltas=bench.n_deltas,
        config=echo,
    )


@dataclass(frozen=True)
class RatioRow:
    key: ScenarioKey
    ambient_temp_C: float
    benchmark_fade: float
    ratio: float | None


@dataclass(frozen=True)
class RatioTable:
    reference_temp_C: float
    rows: tuple[RatioRow, ...]

    def ratio_at(self, temp: float) -> float | None:
        for r in self.rows:
            if r.ambient_temp_C == temp:
                return r.ratio
        raise KeyError(temp)


def ratio_report(reports: Sequence[ScenarioReport] | Mapping[Any, ScenarioReport]) -> RatioTable:
    """Benchmark fade of each temperature relative to the coldest one."""
    if isinstance(reports, Mapping):
        reports = list(reports.values())
    if len(reports) < 2:
        raise IncomparableScenarios("temperature ratios need at least two scenarios")
    others = {
        tuple(getattr(r.key, f) for f in ScenarioKey.FIELDS if f != "ambient_temp_C") for r in reports
    }
    if len(others) != 1:
        raise IncomparableScenarios("scenarios differ in fields other than temperature")
    temps = [r.key.ambient_temp_C for r in reports]
    if any(t is None for t in temps):
        raise IncomparableScenarios("every scenario needs an ambient temperature")
    if len(set(temps)) != len(temps):
        raise IncomparableScenarios(f"duplicate temperatures {temps}")
    ordered = sorted(reports, key=lambda r: r.key.ambient_temp_C)
    ref = ordered[0]
    rows = tuple(
        RatioRow(
            key=r.key,
            ambient_temp_C=r.key.ambient_temp_C,
            benchmark_fade=r.benchmark_fade,
            ratio=r.benchmark_fade / ref.benchmark_fade if ref.benchmark_fade != 0 else None,
        )
        for r in ordered
    )
    return RatioTable(reference_temp_C=ref.key.ambient_temp_C, rows=rows)


@dataclass(frozen=True)
class Census:
    counts: tuple[tuple[tuple[str, float | None], int], ...]

    def __getitem__(self, cell: tuple[str, float | None]) -> int:
        return dict(self.counts).get(cell, 0)

    @property
    def total(self) -> int:
        return sum(n for _, n in self.counts)


def summarize_dataset(dataset: Sequence[Any]) -> Census:
    """Number of tests per (chemistry, discharge rate); empty cells omitted."""
    counts = Counter((s.meta.chemistry.value, s.meta.discharge_rate_C) for s in dataset)
    ordered = sorted(counts.items(), key=lambda kv: (kv[0][0], kv[0][1] is not None, kv[0][1] or 0))
    return Census(tuple(ordered))


# ---------------------------------------------------------------------------
# CSV emission


def _num(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.9g}"


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


SCENARIO_COLUMNS = (
    "scenario", "chemistry", "ambient_temp_C", "charge_rate_C", "discharge_rate_C",
    "dod_percent", "n_tests", "n_deltas", "throughput_kWh", "benchmark_fade_Ah",
    "model1_fade_Ah", "model2_fade_Ah", "benchmark_cost", "model1_cost", "model2_cost",
    "model1_abs_err_Ah", "model1_rel_err", "model1_rel_err_defined",
    "model2_abs_err_Ah", "model2_rel_err", "model2_rel_err_defined",
    "throughput_convention", "calibration_source", "config",
)
CENSUS_COLUMNS = ("chemistry", "discharge_rate_C", "n_tests")
RATIO_COLUMNS = ("scenario", "ambient_temp_C", "benchmark_fade_Ah", "ratio_to_coldest", "reference_temp_C")


def _scenario_row(r: ScenarioReport) -> list[str]:
    k = r.key
    return [
        k.label(), k.chemistry or "", _num(k.ambient_temp_C), _num(k.charge_rate_C),
        _num(k.discharge_rate_C), _num(r.dod_percent), str(r.n_tests), str(r.n_deltas),
        _num(r.throughput_kWh), _num(r.benchmark_fade), _num(r.model1_fade), _num(r.model2_fade),
        _num(r.benchmark_cost), _num(r.model1_cost), _num(r.model2_cost),
        _num(r.model1_error.abs_err), _num(r.model1_error.rel_err), str(int(r.model1_error.rel_err_defined)),
        _num(r.model2_error.abs_err), _num(r.model2_error.rel_err), str(int(r.model2_error.rel_err_defined)),
        str(r.config.get("throughput_convention", "")),
        str(r.config.get("calibration_source", "")),
        json.dumps(dict(r.config), sort_keys=True, separators=(",", ":")),
    ]


def scenarios_csv(reports: Iterable[ScenarioReport]) -> bytes:
    return _csv(SCENARIO_COLUMNS, (_scenario_row(r) for r in reports))


def census_csv(census: Census) -> bytes:
    return _csv(CENSUS_COLUMNS, ([chem, _num(rate), str(n)] for (chem, rate), n in census.counts))


def ratios_csv(table: RatioTable) -> bytes:
    return _csv(
        RATIO_COLUMNS,
        (
            [r.key.label(), _num(r.ambient_temp_C), _num(r.benchmark_fade), _num(r.ratio),
             _num(table.reference_temp_C)]
            for r in table.rows
        ),
    )


def removed_csv(clean: CleanCapacitySeries) -> bytes:
    return _csv(("cycle_index", "reason"), ([i, reason.value] for i, reason in sorted(clean.removed)))


def deltas_csv(deltas: DegradationSeries) -> bytes:
    return _csv(("cycle_index", "fade_Ah"), ([i, _num(d)] for i, d in deltas.deltas))


def cycles_csv(cycles: ExtractedCycles) -> bytes:
    return _csv(("dod_percent", "count", "soc_range"),
                ([_num(c.dod_percent), _num(c.count), _num(c.soc_range)] for c in cycles.cycles))


@singledispatch
def emit_csv(obj) -> bytes:
    """Serialize any report-like object to CSV bytes (header always present)."""
    if isinstance(obj, (list, tuple)) and all(isinstance(r, ScenarioReport) for r in obj):
        return scenarios_csv(obj)
    raise TypeError(f"no CSV layout for {type(obj).__name__}")


emit_csv.register(ScenarioReport, lambda r: scenarios_csv([r]))
emit_csv.register(Census, census_csv)
emit_csv.register(RatioTable, ratios_csv)
emit_csv.register(CapacitySeries, lambda s: serialize_cycle_csv(s))
emit_csv.register(CleanCapacitySeries, lambda s: serialize_cycle_csv(CapacitySeries(s.meta, s.cycles)))
emit_csv.register(DegradationSeries, deltas_csv)
emit_csv.register(ExtractedCycles, cycles_csv)

