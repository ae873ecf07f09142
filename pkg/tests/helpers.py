"""Synthetic data builders and independent brute-force oracles for tests."""

from __future__ import annotations

import statistics
from fractions import Fraction

import numpy as np

from batdeg.ingest import AgingTestMeta, CapacitySeries, Chemistry
from batdeg.preprocess import DegradationSeries

MAD_SCALE = 1.482602218505602


def meta(test_id="t", chemistry=Chemistry.LFP, temp=25.0, chg=0.5, dis=1.0,
         window=(0.0, 100.0), nominal=2.0, rep="a") -> AgingTestMeta:
    return AgingTestMeta(
        test_id=test_id, chemistry=chemistry, soc_window=window, ambient_temp_C=temp,
        charge_rate_C=chg, discharge_rate_C=dis, nominal_capacity_Ah=nominal,
        lab="SNL", form_factor="18650", replicate_tag=rep,
    )


def series(caps, m=None, start=1) -> CapacitySeries:
    return CapacitySeries(m or meta(), tuple((start + k, float(c)) for k, c in enumerate(caps)))


def deg(deltas, m=None, start=1) -> DegradationSeries:
    return DegradationSeries(m or meta(), tuple((start + k, float(d)) for k, d in enumerate(deltas)))


def synthetic_fade(n=1000, c0=2.0, slope=3e-4, noise=2e-5, n_idle=10, n_spikes=10,
                   spike_height=0.05, seed=0, m=None):
    """Linear fade + bounded noise + injected idle (zero) and RPT (upward) cycles.

    Returns the raw series and the sets of injected idle/spike cycle indices.
    """
    rng = np.random.default_rng(seed)
    idx = np.arange(1, n + 1)
    caps = c0 - slope * (idx - 1) + rng.uniform(-noise, noise, n)
    picks = rng.choice(np.arange(3, n - 3), size=n_idle + n_spikes, replace=False)
    idle = set(int(i) for i in idx[picks[:n_idle]])
    spikes = set(int(i) for i in idx[picks[n_idle:]])
    for i in idle:
        caps[i - 1] = 0.0
    for i in spikes:
        caps[i - 1] += spike_height
    return series(caps, m), idle, spikes


# ---------------------------------------------------------------------------
# oracles (pure Python, no numpy on the checked path)


def brute_spikes(values, window, k):
    """Indices (positions) flagged by a hand-rolled clamped-window median/MAD test."""
    n = len(values)
    half = window // 2
    flagged = []
    for i in range(n):
        start = min(max(i - half, 0), n - window)
        w = list(values[start:start + window])
        med = statistics.median(w)
        mad = statistics.median([abs(v - med) for v in w]) * MAD_SCALE
        if values[i] - med > k * mad:
            flagged.append(i)
    return flagged


def brute_pooled_mean(delta_lists):
    total = Fraction(0)
    count = 0
    for lst in delta_lists:
        for d in lst:
            total += Fraction(d)
            count += 1
    return float(total / count)


def total_variation_exact(values):
    vals = [Fraction(v) for v in values]
    return sum((abs(b - a) for a, b in zip(vals, vals[1:])), Fraction(0))
