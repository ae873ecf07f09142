"""Battery degradation models.

Model 1 (linear)
    A constant cost per kWh of throughput, ``c_BD = c_BESS / (cycle_life * E_BESS)``,
    charged on both charging and discharging energy.

Model 2 (DOD table)
    A per-cycle fade looked up from the cycle's depth of discharge. The table
    is calibrated from aging data (mean fade per cycle at each tested DOD).

Benchmark
    The pooled mean of the measured per-cycle fade of all tests belonging to
    one scenario.

All three can be expressed in Ah of fade per cycle, which is the common unit
used for comparison; costs follow from ``value_per_Ah``.
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence, Union

from .errors import (
    DodOutOfRange,
    EmptyGroup,
    EmptyInput,
    EmptyTable,
    InvalidEcon,
    InvalidSchedule,
    ScenarioMismatch,
)
from .ingest import AgingTestMeta
from .preprocess import DegradationSeries


class ThroughputConvention(str, Enum):
    """How much energy one cycle moves through the battery.

    ``SUM`` counts charge and discharge energy (literal reading of the cost
    sum over both directions); ``DISCHARGE_ONLY`` counts discharge energy only.
    """

    SUM = "SUM"
    DISCHARGE_ONLY = "DISCHARGE_ONLY"


@dataclass(frozen=True)
class EconParams:
    c_BESS: float
    E_BESS_kWh: float
    cycle_life: float
    nominal_capacity_Ah: float
    fade_eol_fraction: float = 0.2

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise InvalidEcon(f"{f.name} must be a positive number, got {value!r}")
        if self.fade_eol_fraction >= 1:
            raise InvalidEcon(f"fade_eol_fraction must be < 1, got {self.fade_eol_fraction}")

    @property
    def value_per_Ah(self) -> float:
        """Investment cost attributed to one Ah of capacity fade."""
        return self.c_BESS / (self.fade_eol_fraction * self.nominal_capacity_Ah)

    def to_mapping(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "EconParams":
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidEcon(str(exc)) from None


@dataclass(frozen=True)
class LinearParams:
    c_BD: float

    def __post_init__(self):
        if not self.c_BD > 0:
            raise InvalidEcon(f"c_BD must be > 0, got {self.c_BD}")


@dataclass(frozen=True)
class DodCostTable:
    """Fade per cycle (Ah) against DOD (percent), interpolated linearly and
    clamped at both ends."""

    entries: tuple[tuple[float, float], ...]
    interpolation: str = "LINEAR_CLAMPED"

    def __post_init__(self):
        entries = tuple((float(d), float(f)) for d, f in self.entries)
        object.__setattr__(self, "entries", entries)
        if self.interpolation != "LINEAR_CLAMPED":
            raise ValueError(f"unsupported interpolation {self.interpolation!r}")
        for dod, fade in entries:
            if not 0 < dod <= 100:
                raise DodOutOfRange(f"table DOD {dod} outside (0, 100]")
            if not fade >= 0:
                raise ValueError(f"table fade must be >= 0, got {fade}")
        for (a, _), (b, _) in zip(entries, entries[1:]):
            if not b > a:
                raise ValueError("table DOD values must be strictly increasing")

    def to_mapping(self) -> dict[str, Any]:
        return {"entries": [list(e) for e in self.entries], "interpolation": self.interpolation}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "DodCostTable":
        return cls(
            entries=tuple(tuple(e) for e in data["entries"]),
            interpolation=data.get("interpolation", "LINEAR_CLAMPED"),
        )


@dataclass(frozen=True)
class ScheduleStep:
    t: float
    duration_h: float
    p_charge_kW: float
    p_discharge_kW: float


@dataclass(frozen=True)
class Schedule:
    steps: tuple[ScheduleStep, ...] = ()

    def __post_init__(self):
        steps = tuple(s if isinstance(s, ScheduleStep) else ScheduleStep(*s) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        for k, s in enumerate(steps):
            if not s.duration_h > 0:
                raise InvalidSchedule(f"step {k}: duration_h must be > 0")
            if s.p_charge_kW < 0 or s.p_discharge_kW < 0:
                raise InvalidSchedule(f"step {k}: powers must be >= 0")
            if s.p_charge_kW > 0 and s.p_discharge_kW > 0:
                raise InvalidSchedule(f"step {k}: simultaneous charge and discharge")

    def __len__(self) -> int:
        return len(self.steps)

    def scaled(self, alpha: float) -> "Schedule":
        return Schedule(
            tuple(ScheduleStep(s.t, s.duration_h, alpha * s.p_charge_kW, alpha * s.p_discharge_kW)
                  for s in self.steps)
        )


@dataclass(frozen=True)
class ScenarioKey:
    """Operating conditions shared by a group of tests.

    A ``None`` field is not part of the grouping and matches anything.
    """

    chemistry: str | None = None
    ambient_temp_C: float | None = None
    charge_rate_C: float | None = None
    discharge_rate_C: float | None = None
    dod_percent: float | None = None

    FIELDS = ("chemistry", "ambient_temp_C", "charge_rate_C", "discharge_rate_C", "dod_percent")

    @classmethod
    def from_meta(cls, meta: AgingTestMeta, group_by: Iterable[str] | None = None) -> "ScenarioKey":
        chosen = set(cls.FIELDS if group_by is None else group_by)
        values = {
            "chemistry": meta.chemistry.value,
            "ambient_temp_C": meta.ambient_temp_C,
            "charge_rate_C": meta.charge_rate_C,
            "discharge_rate_C": meta.discharge_rate_C,
            "dod_percent": meta.dod_percent,
        }
        return cls(**{k: (v if k in chosen else None) for k, v in values.items()})

    def matches(self, meta: AgingTestMeta) -> bool:
        own = ScenarioKey.from_meta(meta)
        return all(
            getattr(self, f) is None or getattr(self, f) == getattr(own, f) for f in self.FIELDS
        )

    def sort_key(self) -> tuple:
        return tuple((v is not None, v if v is not None else 0) for v in
                     (getattr(self, f) for f in self.FIELDS))

    def label(self) -> str:
        parts = []
        if self.chemistry is not None:
            parts.append(self.chemistry)
        if self.dod_percent is not None:
            parts.append(f"{self.dod_percent:g}%")
        if self.charge_rate_C is not None or self.discharge_rate_C is not None:
            chg = "?" if self.charge_rate_C is None else f"{self.charge_rate_C:g}"
            dis = "?" if self.discharge_rate_C is None else f"{self.discharge_rate_C:g}"
            parts.append(f"{chg}-{dis}C")
        if self.ambient_temp_C is not None:
            parts.append(f"{self.ambient_temp_C:g}C")
        return " ".join(parts) or "all"


@dataclass(frozen=True)
class BenchmarkModel:
    key: ScenarioKey
    mean_fade_Ah_per_cycle: float
    per_cycle_curve: tuple[tuple[int, float], ...]
    n_replicates: int
    n_deltas: int


# ---------------------------------------------------------------------------
# Model 1


def calibrate_linear(econ: EconParams) -> LinearParams:
    """Cost per kWh of throughput: capital cost over lifetime energy."""
    if not isinstance(econ, EconParams):
        raise InvalidEcon("calibrate_linear needs EconParams")
    return LinearParams(c_BD=econ.c_BESS / (econ.cycle_life * econ.E_BESS_kWh))


def linear_cost(params: LinearParams, schedule: Schedule) -> float:
    """Degradation cost of a schedule under the linear model.

    Power is multiplied by step duration so the result is currency for any
    time resolution; with 1 h steps this is the plain sum of powers times
    ``c_BD``.
    """
    return math.fsum(
        params.c_BD * (s.p_charge_kW + s.p_discharge_kW) * s.duration_h for s in schedule.steps
    )


# ---------------------------------------------------------------------------
# Model 2


def _pooled(series: Sequence[DegradationSeries]) -> list[float]:
    return [d for s in series for _, d in s.deltas]


def calibrate_dod_table(groups: Mapping[float, Sequence[DegradationSeries]]) -> DodCostTable:
    """One table entry per DOD: the pooled mean fade of that DOD's tests."""
    entries = []
    for dod, series in groups.items():
        pooled = _pooled(series)
        if not pooled:
            raise EmptyGroup(f"no fade data for DOD {dod}")
        entries.append((float(dod), math.fsum(pooled) / len(pooled)))
    if not entries:
        raise EmptyGroup("no calibration groups")
    entries.sort()
    return DodCostTable(tuple(entries))


def dod_lookup(table: DodCostTable, dod_percent: float) -> float:
    if not table.entries:
        raise EmptyTable("DOD table has no entries")
    if not 0 < dod_percent <= 100:
        raise DodOutOfRange(f"DOD {dod_percent} outside (0, 100]")
    dods = [d for d, _ in table.entries]
    k = bisect.bisect_left(dods, dod_percent)
    if k < len(dods) and dods[k] == dod_percent:
        return table.entries[k][1]
    if k == 0:
        return table.entries[0][1]
    if k == len(dods):
        return table.entries[-1][1]
    (d0, f0), (d1, f1) = table.entries[k - 1], table.entries[k]
    w = (dod_percent - d0) / (d1 - d0)
    return f0 + w * (f1 - f0)


def dod_cost(table: DodCostTable, cycles: Iterable[tuple[float, float]], econ: EconParams) -> float:
    """Cost of a set of ``(dod_percent, count)`` cycles; counts may be 0.5."""
    value = econ.value_per_Ah
    return math.fsum(dod_lookup(table, dod) * count * value for dod, count in cycles)


# ---------------------------------------------------------------------------
# Benchmark


def benchmark_fade(key: ScenarioKey, series: Sequence[DegradationSeries]) -> BenchmarkModel:
    """Pooled mean fade of a scenario, plus the replicate-mean curve.

    The pooled mean weights each replicate by its number of cycles.
    """
    if not series:
        raise EmptyInput(f"no series for scenario {key.label()}")
    for s in series:
        if not key.matches(s.meta):
            raise ScenarioMismatch(f"{s.meta.test_id} does not belong to scenario {key.label()}")
    pooled = _pooled(series)
    if not pooled:
        raise EmptyInput(f"scenario {key.label()} has no fade values")
    by_index: dict[int, list[float]] = defaultdict(list)
    for s in series:
        for idx, d in s.deltas:
            by_index[idx].append(d)
    curve = tuple((idx, math.fsum(v) / len(v)) for idx, v in sorted(by_index.items()))
    return BenchmarkModel(
        key=key,
        mean_fade_Ah_per_cycle=math.fsum(pooled) / len(pooled),
        per_cycle_curve=curve,
        n_replicates=len(series),
        n_deltas=len(pooled),
    )


# ---------------------------------------------------------------------------
# Common unit


@dataclass(frozen=True)
class LinearModel:
    """Model 1 bundled with the economics needed to express it as fade."""

    params: LinearParams
    econ: EconParams


HeuristicModel = Union[LinearModel, DodCostTable]


def cycle_throughput_kWh(
    dod_percent: float, econ: EconParams, convention: ThroughputConvention = ThroughputConvention.SUM
) -> float:
    """Energy moved by one full cycle of the given depth."""
    discharged = dod_percent / 100.0 * econ.E_BESS_kWh
    if ThroughputConvention(convention) is ThroughputConvention.SUM:
        return 2.0 * discharged
    return discharged


def model_fade_per_cycle(model: HeuristicModel, dod_percent: float, throughput_kWh: float) -> float:
    """Fade in Ah that a heuristic model attributes to one cycle."""
    if isinstance(model, LinearModel):
        econ = model.econ
        return (
            model.params.c_BD * throughput_kWh
            * (econ.fade_eol_fraction * econ.nominal_capacity_Ah) / econ.c_BESS
        )
    if isinstance(model, DodCostTable):
        return dod_lookup(model, dod_percent)
    raise TypeError(f"unsupported model type {type(model).__name__}")

