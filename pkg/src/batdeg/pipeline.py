"""End-to-end orchestration used by the CLI."""

from __future__ import annotations

import json
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import RunConfig
from .errors import ConfigError, IncomparableScenarios
from .ingest import CapacitySeries, load_dataset
from .models import (
    DodCostTable,
    LinearParams,
    calibrate_dod_table,
    calibrate_linear,
)
from .preprocess import CleanCapacitySeries, DegradationSeries, clean_series
from .report import RatioTable, ScenarioReport, compare_models, group_scenarios, ratio_report


@dataclass(frozen=True)
class Cleaned:
    raw: CapacitySeries
    clean: CleanCapacitySeries
    deltas: DegradationSeries

    @property
    def meta(self):
        return self.raw.meta


@dataclass(frozen=True)
class Calibration:
    linear: LinearParams
    dod_table: DodCostTable
    source: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "linear": {"c_BD": self.linear.c_BD},
                "dod_table": self.dod_table.to_mapping(),
                "calibration_source": self.source,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"


def load(cfg: RunConfig, selected: bool = True) -> list[CapacitySeries]:
    series = load_dataset(cfg.dataset_root, cfg.manifest)
    if selected:
        series = [s for s in series if cfg.selects(s.meta)]
    return series


def clean_all(cfg: RunConfig, series: Sequence[CapacitySeries]) -> list[Cleaned]:
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda s: clean_series(s, cfg.clean), series))
    return [Cleaned(s, c, d) for s, (c, d) in zip(series, results)]


def calibrate(cfg: RunConfig, cleaned_all: Iterable[Cleaned] = ()) -> Calibration:
    """Linear model from the economics; DOD table from config or from the
    configured calibration tests (pooled by DOD)."""
    linear = calibrate_linear(cfg.econ)
    if cfg.dod_table is not None:
        return Calibration(linear, cfg.dod_table, cfg.calibration_source)
    by_id = {c.meta.test_id: c for c in cleaned_all}
    missing = [t for t in cfg.calibration.tests if t not in by_id]
    if missing:
        raise ConfigError(f"calibration tests not in dataset: {missing}")
    groups: dict[float, list[DegradationSeries]] = defaultdict(list)
    for test_id in cfg.calibration.tests:
        c = by_id[test_id]
        groups[c.meta.dod_percent].append(c.deltas)
    return Calibration(linear, calibrate_dod_table(groups), cfg.calibration_source)


def prepare(cfg: RunConfig) -> tuple[list[Cleaned], Calibration]:
    """Load, clean and calibrate. Calibration tests may fall outside the
    ``select`` filter, so they are cleaned from the full dataset."""
    everything = load(cfg, selected=False)
    chosen = [s for s in everything if cfg.selects(s.meta)]
    if cfg.calibration is not None:
        wanted = set(cfg.calibration.tests)
        extra = [s for s in everything if s.meta.test_id in wanted and not cfg.selects(s.meta)]
    else:
        extra = []
    cleaned = clean_all(cfg, chosen + extra)
    calibration = calibrate(cfg, cleaned)
    return cleaned[: len(chosen)], calibration


def evaluate(
    cfg: RunConfig,
    cleaned: Sequence[Cleaned],
    calibration: Calibration,
    group_by: Iterable[str] | None = None,
) -> tuple[list[ScenarioReport], RatioTable | None]:
    groups = group_scenarios(cleaned, group_by)
    echo = cfg.echo()
    echo["calibration_source"] = calibration.source
    if group_by is not None:
        echo["group_by"] = list(group_by)
    reports = [
        compare_models(key, [c.deltas for c in members], calibration.linear, calibration.dod_table,
                       cfg.econ, cfg.convention, echo)
        for key, members in groups.items()
    ]
    try:
        ratios = ratio_report(reports)
    except IncomparableScenarios:
        ratios = None
    return reports, ratios
