"""SOC trajectories from power schedules and rainflow cycle extraction.

The DOD table prices cycles, not power; to apply it to an arbitrary dispatch
we integrate the schedule into an SOC profile and decompose that profile
into full and half cycles with the four-point rainflow rule.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import DegenerateProfile, InvalidParams, InvalidSchedule, SocOutOfBounds
from .models import EconParams, Schedule, ScheduleStep

SOC_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SocProfile:
    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        samples = tuple((float(t), float(s)) for t, s in self.samples)
        object.__setattr__(self, "samples", samples)
        for t, soc in samples:
            if not 0.0 <= soc <= 1.0:
                raise SocOutOfBounds(-1, soc)

    @classmethod
    def from_values(cls, socs: Sequence[float]) -> "SocProfile":
        return cls(tuple((float(k), float(s)) for k, s in enumerate(socs)))

    @property
    def soc(self) -> list[float]:
        return [s for _, s in self.samples]


class RainflowCycle(NamedTuple):
    dod_percent: float
    count: float
    soc_range: float


@dataclass(frozen=True)
class ExtractedCycles:
    cycles: tuple[RainflowCycle, ...] = ()

    def __len__(self) -> int:
        return len(self.cycles)

    def as_pairs(self) -> list[tuple[float, float]]:
        """``(dod_percent, count)`` pairs as consumed by :func:`models.dod_cost`."""
        return [(c.dod_percent, c.count) for c in self.cycles]

    @property
    def equivalent_full_cycles(self) -> float:
        return math.fsum(c.count for c in self.cycles)


def split_round_trip(round_trip: float) -> tuple[float, float]:
    """Symmetric charge/discharge efficiencies for a round-trip efficiency."""
    if not 0 < round_trip <= 1:
        raise InvalidParams(f"round-trip efficiency must be in (0, 1], got {round_trip}")
    eta = math.sqrt(round_trip)
    return eta, eta


def soc_from_power(
    schedule: Schedule,
    econ: EconParams,
    soc0: float,
    eta_c: float = 1.0,
    eta_d: float = 1.0,
) -> SocProfile:
    """Integrate a power schedule into state of charge.

    ``soc[k+1] = soc[k] + (P_ch * eta_c - P_dis / eta_d) * duration_h / E_BESS``.
    Excursions within 1e-9 of the bounds are clipped; anything larger raises
    :class:`SocOutOfBounds` naming the first offending step.
    """
    if not 0.0 <= soc0 <= 1.0:
        raise InvalidParams(f"soc0 must be in [0, 1], got {soc0}")
    if not (0 < eta_c <= 1 and 0 < eta_d <= 1):
        raise InvalidParams(f"efficiencies must be in (0, 1], got {eta_c}, {eta_d}")

    t0 = schedule.steps[0].t if schedule.steps else 0.0
    samples = [(t0, float(soc0))]
    soc = float(soc0)
    for k, step in enumerate(schedule.steps):
        soc += (step.p_charge_kW * eta_c - step.p_discharge_kW / eta_d) * step.duration_h / econ.E_BESS_kWh
        if soc < -SOC_TOLERANCE or soc > 1.0 + SOC_TOLERANCE:
            raise SocOutOfBounds(k, soc)
        soc = min(1.0, max(0.0, soc))
        samples.append((step.t + step.duration_h, soc))
    return SocProfile(tuple(samples))


def turning_points(values: Sequence[float]) -> list[float]:
    """Reversal points of a sequence, endpoints included.

    Plateaus collapse to their earliest sample; monotone runs collapse to
    their ends.
    """
    points: list[float] = []
    for v in values:
        if points and v == points[-1]:
            continue
        if len(points) >= 2 and (points[-1] - points[-2]) * (v - points[-1]) > 0:
            points[-1] = v
            continue
        points.append(v)
    return points


def rainflow(values: Sequence[float]) -> list[tuple[float, float]]:
    """Four-point rainflow on ``values``; returns ``(range, count)`` pairs.

    For consecutive turning points A, B, C, D, the inner pair B-C closes a
    full cycle when ``|B-C| <= |A-B|`` and ``|B-C| <= |C-D|``; B and C are
    then removed. Whatever is left on the stack is emitted as half cycles,
    one per consecutive pair, in stack order.
    """
    out: list[tuple[float, float]] = []
    stack: list[float] = []
    for p in turning_points(values):
        stack.append(p)
        while len(stack) >= 4:
            a, b, c, d = stack[-4:]
            inner = abs(b - c)
            if inner <= abs(a - b) and inner <= abs(c - d):
                out.append((inner, 1.0))
                del stack[-3:-1]
            else:
                break
    out.extend((abs(y - x), 0.5) for x, y in zip(stack, stack[1:]))
    return out


def extract_cycles(profile: SocProfile) -> ExtractedCycles:
    if len(profile.samples) < 2:
        raise DegenerateProfile(f"need at least 2 SOC samples, got {len(profile.samples)}")
    return ExtractedCycles(
        tuple(RainflowCycle(r * 100.0, count, r) for r, count in rainflow(profile.soc))
    )


# ---------------------------------------------------------------------------
# CSV I/O

SCHEDULE_COLUMNS = ("t", "duration_h", "P_charge_kW", "P_discharge_kW")


def read_schedule_csv(source: bytes | str) -> Schedule:
    text = source.decode("utf-8-sig") if isinstance(source, bytes) else source
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in SCHEDULE_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise InvalidSchedule(f"schedule CSV missing columns {missing}")
    steps = []
    for n, row in enumerate(reader, start=1):
        try:
            steps.append(ScheduleStep(*(float(row[c]) for c in SCHEDULE_COLUMNS)))
        except (TypeError, ValueError):
            raise InvalidSchedule(f"schedule row {n} is not numeric: {row}") from None
    return Schedule(tuple(steps))


def write_schedule_csv(schedule: Schedule) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCHEDULE_COLUMNS)
    for s in schedule.steps:
        writer.writerow([repr(s.t), repr(s.duration_h), repr(s.p_charge_kW), repr(s.p_discharge_kW)])
    return buf.getvalue().encode("utf-8")
