"""Cleaning of capacity series and per-cycle fade.

Three artefacts show up in cycle-summary data and are removed here, each one
recorded in a removal ledger so the original index set is always recoverable:

* idle cycles, whose discharge capacity is (near) zero;
* reference performance test (RPT) cycles, run at a low rate and therefore
  showing an upward capacity spike;
* cycles past end of life, cut off before calibration.

Fade (``capacity[i] - capacity[i + 1]``) is then taken between consecutive
retained cycles. Negative fade is kept as-is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptySeries, InvalidParams, MissingMetadata, SeriesTooShort
from .ingest import AgingTestMeta, CapacitySeries

# 1 / Phi^-1(3/4): scales the MAD into a consistent estimate of sigma.
MAD_TO_SIGMA = 1.482602218505602


class RemovalReason(str, Enum):
    IDLE = "IDLE"
    RPT_SPIKE = "RPT_SPIKE"
    EOL_TRUNCATED = "EOL_TRUNCATED"


@dataclass(frozen=True)
class CleanParams:
    """Cleaning thresholds.

    ``idle_eps_Ah=None`` means 5 % of the test's nominal capacity.
    ``spike_k`` is in robust-sigma units (scaled MAD).
    """

    idle_eps_Ah: float | None = None
    spike_window: int = 11
    spike_k: float = 4.0
    eol_fraction: float = 0.8

    def __post_init__(self):
        if self.idle_eps_Ah is not None and not self.idle_eps_Ah >= 0:
            raise InvalidParams(f"idle_eps_Ah must be >= 0, got {self.idle_eps_Ah}")
        if int(self.spike_window) != self.spike_window or self.spike_window < 3 or self.spike_window % 2 == 0:
            raise InvalidParams(f"spike_window must be an odd integer >= 3, got {self.spike_window}")
        if not self.spike_k > 0:
            raise InvalidParams(f"spike_k must be > 0, got {self.spike_k}")
        if not 0 < self.eol_fraction <= 1:
            raise InvalidParams(f"eol_fraction must be in (0, 1], got {self.eol_fraction}")

    def idle_threshold(self, meta: AgingTestMeta) -> float:
        if self.idle_eps_Ah is not None:
            return float(self.idle_eps_Ah)
        if meta.nominal_capacity_Ah is None:
            raise MissingMetadata(
                f"{meta.test_id}: nominal_capacity_Ah is needed for the default idle threshold"
            )
        return 0.05 * meta.nominal_capacity_Ah

    def to_mapping(self) -> dict:
        return {
            "idle_eps_Ah": self.idle_eps_Ah,
            "spike_window": self.spike_window,
            "spike_k": self.spike_k,
            "eol_fraction": self.eol_fraction,
        }


@dataclass(frozen=True)
class CleanCapacitySeries:
    meta: AgingTestMeta
    cycles: tuple[tuple[int, float], ...]
    removed: tuple[tuple[int, RemovalReason], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.cycles)

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter((i for i, _ in self.cycles), dtype=np.int64, count=len(self.cycles))

    @property
    def capacities(self) -> np.ndarray:
        return np.fromiter((c for _, c in self.cycles), dtype=np.float64, count=len(self.cycles))

    def removed_by(self, reason: RemovalReason | str) -> list[int]:
        reason = RemovalReason(reason)
        return [i for i, r in self.removed if r is reason]


@dataclass(frozen=True)
class DegradationSeries:
    """Per-cycle capacity fade, indexed by the earlier of the two cycles."""

    meta: AgingTestMeta
    deltas: tuple[tuple[int, float], ...]

    def __len__(self) -> int:
        return len(self.deltas)

    @property
    def values(self) -> np.ndarray:
        return np.fromiter((d for _, d in self.deltas), dtype=np.float64, count=len(self.deltas))


AnySeries = Union[CapacitySeries, CleanCapacitySeries]


def _as_clean(series: AnySeries) -> CleanCapacitySeries:
    if isinstance(series, CleanCapacitySeries):
        return series
    return CleanCapacitySeries(meta=series.meta, cycles=series.cycles, removed=())


def _partition(series: CleanCapacitySeries, drop: np.ndarray, reason: RemovalReason) -> CleanCapacitySeries:
    kept = tuple(c for c, d in zip(series.cycles, drop) if not d)
    removed = series.removed + tuple((c[0], reason) for c, d in zip(series.cycles, drop) if d)
    return CleanCapacitySeries(meta=series.meta, cycles=kept, removed=removed)


def drop_idle_cycles(series: AnySeries, params: CleanParams) -> CleanCapacitySeries:
    """Remove cycles whose capacity is below the idle threshold."""
    clean = _as_clean(series)
    eps = params.idle_threshold(clean.meta)
    return _partition(clean, clean.capacities < eps, RemovalReason.IDLE)


def rolling_median_mad(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Rolling median and scaled MAD over a full-width window.

    The window is centred on each point where possible and shifted inward at
    the ends, so every estimate uses exactly ``window`` samples.
    """
    n = len(values)
    half = window // 2
    windows = sliding_window_view(values, window)  # row j covers [j, j + window)
    starts = np.clip(np.arange(n) - half, 0, n - window)
    med_w = np.median(windows, axis=1)
    mad_w = np.median(np.abs(windows - med_w[:, None]), axis=1) * MAD_TO_SIGMA
    return med_w[starts], mad_w[starts]


def flag_rpt_spikes(series: AnySeries, params: CleanParams) -> CleanCapacitySeries:
    """Remove one-sided (upward) capacity spikes left by RPT cycles.

    A cycle is flagged when its capacity exceeds the rolling median by more
    than ``spike_k`` robust sigmas. Detection is a single pass over the input.
    An empty input is returned unchanged.
    """
    clean = _as_clean(series)
    if len(clean) == 0:
        return clean
    window = int(params.spike_window)
    if len(clean) < window:
        raise SeriesTooShort(
            f"{clean.meta.test_id}: {len(clean)} cycles, spike window needs {window}"
        )
    caps = clean.capacities
    median, sigma = rolling_median_mad(caps, window)
    return _partition(clean, caps - median > params.spike_k * sigma, RemovalReason.RPT_SPIKE)


def truncate_at_eol(series: AnySeries, params: CleanParams) -> CleanCapacitySeries:
    """Keep the prefix up to and including the first cycle below EOL."""
    clean = _as_clean(series)
    if len(clean) == 0:
        raise EmptySeries(f"{clean.meta.test_id}: nothing left to truncate")
    caps = clean.capacities
    below = np.flatnonzero(caps < params.eol_fraction * caps[0])
    if below.size == 0:
        return clean
    cut = int(below[0]) + 1
    drop = np.zeros(len(caps), dtype=bool)
    drop[cut:] = True
    return _partition(clean, drop, RemovalReason.EOL_TRUNCATED)


def compute_deltas(series: AnySeries) -> DegradationSeries:
    clean = _as_clean(series)
    if len(clean) < 2:
        raise SeriesTooShort(f"{clean.meta.test_id}: fade needs at least 2 cycles, got {len(clean)}")
    cyc = clean.cycles
    return DegradationSeries(
        meta=clean.meta,
        deltas=tuple((a[0], a[1] - b[1]) for a, b in zip(cyc, cyc[1:])),
    )


def clean_series(
    series: AnySeries, params: CleanParams | None = None
) -> tuple[CleanCapacitySeries, DegradationSeries]:
    """Idle removal, spike removal, EOL truncation, then fade."""
    params = params or CleanParams()
    clean = drop_idle_cycles(series, params)
    clean = flag_rpt_spikes(clean, params)
    clean = truncate_at_eol(clean, params)
    return clean, compute_deltas(clean)


def total_fade(deltas: DegradationSeries) -> float:
    return math.fsum(d for _, d in deltas.deltas)
