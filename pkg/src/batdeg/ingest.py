"""Cycle-summary CSV ingestion and test metadata.

Battery Archive publishes one ``*_cycle_data.csv`` per aging test, named
after the test conditions, e.g. ``HNEI_18650_NMC_LCO_25C_0-100_0.5-1.5C_a``.
This module turns those files (plus an optional JSON manifest carrying
metadata overrides) into immutable :class:`CapacitySeries` values.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import IO, Any, Mapping, Sequence, Union

import numpy as np

from .errors import (
    BatdegError,
    DuplicateCycleIndex,
    FileUnreadable,
    InvalidMetadata,
    MalformedRow,
    MissingColumn,
    MissingMetadata,
    UnrecognizedName,
)

__all__ = [
    "Chemistry",
    "AgingTestMeta",
    "ColumnMap",
    "CapacitySeries",
    "DEFAULT_COLUMNS",
    "parse_cycle_csv",
    "serialize_cycle_csv",
    "parse_test_name",
    "format_test_name",
    "load_dataset",
]


class Chemistry(str, Enum):
    LCO = "LCO"
    NMC_LCO = "NMC_LCO"
    LFP = "LFP"
    NCA = "NCA"
    NMC = "NMC"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, token: str) -> "Chemistry":
        norm = token.strip().upper().replace("-", "_")
        try:
            return cls(norm)
        except ValueError:
            return cls.OTHER


def _fmt_num(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class AgingTestMeta:
    """Identity and operating conditions of one aging test.

    Only ``test_id``, ``chemistry`` and ``soc_window`` are mandatory; the
    remaining conditions may be unknown (``None``) when a file name cannot
    be parsed and the manifest does not supply them.
    """

    test_id: str
    chemistry: Chemistry
    soc_window: tuple[float, float]
    ambient_temp_C: float | None = None
    charge_rate_C: float | None = None
    discharge_rate_C: float | None = None
    nominal_capacity_Ah: float | None = None
    lab: str = ""
    form_factor: str = ""
    replicate_tag: str = ""

    def __post_init__(self):
        if not isinstance(self.chemistry, Chemistry):
            object.__setattr__(self, "chemistry", Chemistry.parse(str(self.chemistry)))
        try:
            lo, hi = (float(v) for v in self.soc_window)
        except (TypeError, ValueError):
            raise InvalidMetadata(f"{self.test_id}: soc_window must be a (low, high) pair")
        object.__setattr__(self, "soc_window", (lo, hi))
        if not (0.0 <= lo < hi <= 100.0):
            raise InvalidMetadata(
                f"{self.test_id}: soc_window needs 0 <= low < high <= 100, got ({lo}, {hi})"
            )
        for name in ("charge_rate_C", "discharge_rate_C", "nominal_capacity_Ah"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InvalidMetadata(f"{self.test_id}: {name} must be > 0, got {value}")

    @property
    def dod_percent(self) -> float:
        return self.soc_window[1] - self.soc_window[0]

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "AgingTestMeta":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidMetadata(f"unknown metadata fields: {sorted(unknown)}")
        for required in ("test_id", "chemistry", "soc_window"):
            if data.get(required) is None:
                raise MissingMetadata(f"{data.get('test_id', '?')}: missing field {required!r}")
        return cls(**dict(data))

    def to_mapping(self) -> dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["chemistry"] = self.chemistry.value
        out["soc_window"] = list(self.soc_window)
        return out


@dataclass(frozen=True)
class ColumnMap:
    cycle_index_col: str = "Cycle_Index"
    discharge_capacity_col: str = "Discharge_Capacity (Ah)"
    extra_cols: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "extra_cols", tuple(self.extra_cols))
        names = [self.cycle_index_col, self.discharge_capacity_col, *self.extra_cols]
        if any(not n for n in names):
            raise InvalidMetadata("column names must be non-empty")
        if len(set(names)) != len(names):
            raise InvalidMetadata(f"column names must be distinct: {names}")


DEFAULT_COLUMNS = ColumnMap()


@dataclass(frozen=True)
class CapacitySeries:
    """Per-cycle discharge capacity of one test, sorted by cycle index."""

    meta: AgingTestMeta
    cycles: tuple[tuple[int, float], ...]
    extras: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        cycles = tuple((int(i), float(c)) for i, c in self.cycles)
        object.__setattr__(self, "cycles", cycles)
        for (a, _), (b, _) in zip(cycles, cycles[1:]):
            if b <= a:
                raise DuplicateCycleIndex(
                    f"{self.meta.test_id}: cycle indices not strictly increasing at {a}, {b}"
                )
        for name, values in self.extras.items():
            if len(values) != len(cycles):
                raise InvalidMetadata(f"extra column {name!r} length mismatch")

    def __len__(self) -> int:
        return len(self.cycles)

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter((i for i, _ in self.cycles), dtype=np.int64, count=len(self.cycles))

    @property
    def capacities(self) -> np.ndarray:
        return np.fromiter((c for _, c in self.cycles), dtype=np.float64, count=len(self.cycles))


# ---------------------------------------------------------------------------
# CSV

Source = Union[bytes, str, IO[bytes], IO[str]]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return data


def _parse_index(cell: str, row: int) -> int:
    try:
        value = float(cell)
    except ValueError:
        raise MalformedRow(row, f"cycle index {cell!r} is not numeric") from None
    if not math.isfinite(value) or value != int(value) or value < 0:
        raise MalformedRow(row, f"cycle index {cell!r} is not a non-negative integer")
    return int(value)


def _parse_capacity(cell: str, row: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise MalformedRow(row, f"capacity {cell!r} is not numeric") from None
    if not math.isfinite(value) or value < 0:
        raise MalformedRow(row, f"capacity {cell!r} must be finite and >= 0")
    return value


def parse_cycle_csv(
    source: Source, columns: ColumnMap | None, meta: AgingTestMeta
) -> CapacitySeries:
    """Parse a header-bearing cycle-summary CSV into a :class:`CapacitySeries`.

    Rows are re-sorted by cycle index. Zero-capacity rows are kept; removing
    them is a cleaning decision. ``MalformedRow.row`` is the 1-based data row
    (header excluded).
    """
    columns = columns or DEFAULT_COLUMNS
    reader = csv.reader(io.StringIO(_read_text(source)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn("empty CSV: no header row") from None

    def col(name: str) -> int:
        try:
            return header.index(name)
        except ValueError:
            raise MissingColumn(f"column {name!r} not in header {header}") from None

    i_idx = col(columns.cycle_index_col)
    i_cap = col(columns.discharge_capacity_col)
    i_extra = [col(name) for name in columns.extra_cols]

    rows: list[tuple[int, float, tuple[float, ...]]] = []
    for n, record in enumerate(reader, start=1):
        if not record or all(not cell.strip() for cell in record):
            continue
        if len(record) < len(header):
            raise MalformedRow(n, f"expected {len(header)} cells, got {len(record)}")
        idx = _parse_index(record[i_idx].strip(), n)
        cap = _parse_capacity(record[i_cap].strip(), n)
        extra = []
        for j in i_extra:
            cell = record[j].strip()
            try:
                extra.append(float(cell) if cell else math.nan)
            except ValueError:
                raise MalformedRow(n, f"column {header[j]!r} value {cell!r} is not numeric") from None
        rows.append((idx, cap, tuple(extra)))

    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise DuplicateCycleIndex(f"cycle index {a[0]} appears more than once")

    extras = {
        name: tuple(r[2][k] for r in rows) for k, name in enumerate(columns.extra_cols)
    }
    return CapacitySeries(meta=meta, cycles=tuple((r[0], r[1]) for r in rows), extras=extras)


def serialize_cycle_csv(series: CapacitySeries, columns: ColumnMap | None = None) -> bytes:
    """Inverse of :func:`parse_cycle_csv`; floats use shortest round-trip repr."""
    columns = columns or DEFAULT_COLUMNS
    extra_names = list(series.extras)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([columns.cycle_index_col, columns.discharge_capacity_col, *extra_names])
    for k, (idx, cap) in enumerate(series.cycles):
        writer.writerow([idx, repr(cap), *(repr(series.extras[n][k]) for n in extra_names)])
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Test names
#
# LAB_FORM_CHEM_TEMPC_LO-HI_CHG-DISCC[_REPLICATE]; numbers are written in
# shortest form ("0.5", "1", "25").

_NUM = r"\d+(?:\.\d+)?"
_NAME_RE = re.compile(
    rf"""^(?P<lab>[A-Za-z0-9]+)
    _(?P<form>[A-Za-z0-9]+)
    _(?P<chem>NMC_LCO|[A-Za-z0-9-]+)
    _(?P<temp>-?{_NUM})C
    _(?P<lo>{_NUM})-(?P<hi>{_NUM})
    _(?P<chg>{_NUM})C?-(?P<dis>{_NUM})C
    (?:_(?P<rep>[A-Za-z0-9]+))?$""",
    re.VERBOSE,
)
_NAME_SUFFIXES = ("_cycle_data", "_timeseries")


def parse_test_name(name: str) -> AgingTestMeta:
    """Parse a Battery Archive style test name into (partial) metadata.

    ``nominal_capacity_Ah`` is never set here; it has to come from the
    manifest.

    >>> m = parse_test_name("HNEI_18650_NMC_LCO_25C_0-100_0.5-1.5C")
    >>> m.chemistry.value, m.soc_window, m.discharge_rate_C
    ('NMC_LCO', (0.0, 100.0), 1.5)
    """
    match = _NAME_RE.match(name)
    if match is None:
        raise UnrecognizedName(f"{name!r} does not match LAB_FORM_CHEM_TEMPC_LO-HI_CHG-DISCC")
    g = match.groupdict()
    try:
        return AgingTestMeta(
            test_id=name,
            lab=g["lab"],
            form_factor=g["form"],
            chemistry=Chemistry.parse(g["chem"]),
            ambient_temp_C=float(g["temp"]),
            soc_window=(float(g["lo"]), float(g["hi"])),
            charge_rate_C=float(g["chg"]),
            discharge_rate_C=float(g["dis"]),
            replicate_tag=g["rep"] or "",
        )
    except InvalidMetadata as exc:
        raise UnrecognizedName(f"{name!r}: {exc}") from None


def format_test_name(meta: AgingTestMeta) -> str:
    """Serialize metadata back into the test-name grammar."""
    missing = [
        n for n in ("ambient_temp_C", "charge_rate_C", "discharge_rate_C")
        if getattr(meta, n) is None
    ]
    if missing or not meta.lab or not meta.form_factor:
        raise MissingMetadata(f"{meta.test_id}: cannot format name, missing {missing or 'lab/form'}")
    lo, hi = meta.soc_window
    name = (
        f"{meta.lab}_{meta.form_factor}_{meta.chemistry.value}_{_fmt_num(meta.ambient_temp_C)}C"
        f"_{_fmt_num(lo)}-{_fmt_num(hi)}"
        f"_{_fmt_num(meta.charge_rate_C)}-{_fmt_num(meta.discharge_rate_C)}C"
    )
    if meta.replicate_tag:
        name += f"_{meta.replicate_tag}"
    return name


def test_name_from_path(path: str | Path) -> str:
    stem = Path(path).name
    if stem.lower().endswith(".csv"):
        stem = stem[:-4]
    for suffix in _NAME_SUFFIXES:
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return stem


test_name_from_path.__test__ = False  # keep pytest from collecting it


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    meta: Mapping[str, Any] = field(default_factory=dict)
    columns: Mapping[str, Any] = field(default_factory=dict)


def _column_map(*layers: Mapping[str, Any]) -> ColumnMap:
    merged: dict[str, Any] = {}
    for layer in layers:
        merged.update(layer)
    try:
        return ColumnMap(**merged)
    except TypeError as exc:
        raise InvalidMetadata(f"bad column map {merged}: {exc}") from None


def read_manifest(manifest: str | Path | Mapping[str, Any] | Sequence[Any]):
    """Normalize a manifest into ``(defaults, columns, entries)``.

    Accepted forms: a path to a JSON file, a list of entries, or a mapping
    ``{"defaults": {...}, "columns": {...}, "tests": [...]}``. An entry is a
    path string or ``{"path": ..., "meta": {...}, "columns": {...}}``.
    """
    if isinstance(manifest, (str, Path)):
        try:
            manifest = json.loads(Path(manifest).read_text(encoding="utf-8"))
        except OSError as exc:
            raise FileUnreadable(f"{manifest}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InvalidMetadata(f"{manifest}: invalid JSON ({exc})") from None
    if isinstance(manifest, Mapping):
        defaults = dict(manifest.get("defaults", {}))
        columns = dict(manifest.get("columns", {}))
        raw = manifest.get("tests", [])
    else:
        defaults, columns, raw = {}, {}, manifest
    entries = []
    for item in raw:
        if isinstance(item, str):
            entries.append(ManifestEntry(path=item))
        elif isinstance(item, Mapping) and "path" in item:
            entries.append(
                ManifestEntry(
                    path=item["path"],
                    meta=dict(item.get("meta", {})),
                    columns=dict(item.get("columns", {})),
                )
            )
        else:
            raise InvalidMetadata(f"manifest entry needs a 'path': {item!r}")
    return defaults, columns, entries


def resolve_meta(path: str, defaults: Mapping[str, Any], overrides: Mapping[str, Any]) -> AgingTestMeta:
    """Manifest defaults, then name-grammar fields, then per-test overrides."""
    name = test_name_from_path(path)
    merged: dict[str, Any] = {"test_id": name}
    merged.update(defaults)
    try:
        parsed = parse_test_name(name)
    except UnrecognizedName:
        parsed = None
    if parsed is not None:
        merged.update(
            (k, v) for k, v in parsed.to_mapping().items() if v is not None and v != ""
        )
    merged.update(overrides)
    if parsed is None and "chemistry" not in merged:
        raise UnrecognizedName(
            f"{path}: name not in test-name grammar and manifest supplies no metadata"
        )
    return AgingTestMeta.from_mapping(merged)


def _load_one(root: Path, entry: ManifestEntry, defaults, columns) -> CapacitySeries:
    path = root / entry.path
    try:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise FileUnreadable(f"cannot read ({exc.strerror or exc})") from None
        meta = resolve_meta(entry.path, defaults, entry.meta)
        return parse_cycle_csv(data, _column_map(columns, entry.columns), meta)
    except BatdegError as exc:
        exc.args = (f"{path}: {exc.args[0] if exc.args else ''}",)
        exc.path = str(path)
        raise


def load_dataset(
    root: str | Path,
    manifest: str | Path | Mapping[str, Any] | Sequence[Any],
    max_workers: int | None = None,
) -> list[CapacitySeries]:
    """Parse every file listed in ``manifest`` (paths relative to ``root``).

    Files are parsed concurrently; the result keeps manifest order. The first
    failing file (in manifest order) raises, tagged with its path.
    """
    defaults, columns, entries = read_manifest(manifest)
    if not entries:
        return []
    root = Path(root)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_load_one, root, e, defaults, columns) for e in entries]
        return [f.result() for f in futures]


def with_meta(series: CapacitySeries, **changes: Any) -> CapacitySeries:
    return replace(series, meta=replace(series.meta, **changes))
