"""Battery degradation model evaluation against cycle-aging data."""

from .cycles import ExtractedCycles, SocProfile, extract_cycles, soc_from_power
from .ingest import (
    AgingTestMeta,
    CapacitySeries,
    Chemistry,
    ColumnMap,
    load_dataset,
    parse_cycle_csv,
    parse_test_name,
)
from .models import (
    DodCostTable,
    EconParams,
    LinearModel,
    LinearParams,
    ScenarioKey,
    Schedule,
    ScheduleStep,
    ThroughputConvention,
    benchmark_fade,
    calibrate_dod_table,
    calibrate_linear,
    dod_cost,
    dod_lookup,
    linear_cost,
    model_fade_per_cycle,
)
from .preprocess import (
    CleanCapacitySeries,
    CleanParams,
    DegradationSeries,
    clean_series,
    compute_deltas,
    drop_idle_cycles,
    flag_rpt_spikes,
    truncate_at_eol,
)
from .report import compare_models, emit_csv, group_scenarios, ratio_report, summarize_dataset
from .svg import emit_svg

__version__ = "0.1.0"
