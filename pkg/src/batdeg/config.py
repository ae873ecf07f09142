"""Run configuration (JSON).

Example::

    {
      "manifest": "manifest.json",
      "dataset_root": "data",
      "output_dir": "out",
      "clean": {"idle_eps_Ah": null, "spike_window": 11, "spike_k": 4.0, "eol_fraction": 0.8},
      "econ": {"c_BESS": 100000, "E_BESS_kWh": 10, "cycle_life": 1000,
               "nominal_capacity_Ah": 1.1, "fade_eol_fraction": 0.2},
      "throughput_convention": "SUM",
      "calibration": {"tests": ["SNL_18650_LFP_15C_0-100_0.5-1C_a"]},
      "select": {"chemistry": "LFP"},
      "schedule": {"soc0": 0.5, "round_trip_efficiency": 1.0}
    }

Exactly one of ``dod_table`` (``{"entries": [[dod, fade], ...]}``) or
``calibration`` must be present. Relative paths resolve against the
directory holding the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .cycles import split_round_trip
from .errors import BatdegError, ConfigError
from .ingest import AgingTestMeta
from .models import DodCostTable, EconParams, ThroughputConvention
from .preprocess import CleanParams

SELECT_FIELDS = ("chemistry", "ambient_temp_C", "charge_rate_C", "discharge_rate_C", "dod_percent", "test_ids")


@dataclass(frozen=True)
class CalibrationSpec:
    tests: tuple[str, ...]

    @property
    def source(self) -> str:
        return "tests:" + ",".join(self.tests)


@dataclass(frozen=True)
class RunConfig:
    manifest: Path
    dataset_root: Path
    output_dir: Path
    clean: CleanParams
    econ: EconParams
    convention: ThroughputConvention
    dod_table: DodCostTable | None = None
    calibration: CalibrationSpec | None = None
    select: Mapping[str, Any] = field(default_factory=dict)
    soc0: float = 0.5
    eta_c: float = 1.0
    eta_d: float = 1.0

    @property
    def calibration_source(self) -> str:
        if self.dod_table is not None:
            return "dod_table:config"
        return self.calibration.source

    def echo(self) -> dict[str, Any]:
        """Parameters written into every report."""
        return {
            "throughput_convention": self.convention.value,
            "calibration_source": self.calibration_source,
            "clean": self.clean.to_mapping(),
            "econ": self.econ.to_mapping(),
            "select": dict(self.select),
            "spike_cycles": "excluded",
        }

    def selects(self, meta: AgingTestMeta) -> bool:
        for name, wanted in self.select.items():
            if name == "test_ids":
                if meta.test_id not in wanted:
                    return False
            elif name == "chemistry":
                if meta.chemistry.value != str(wanted).upper().replace("-", "_"):
                    return False
            elif name == "dod_percent":
                if meta.dod_percent != float(wanted):
                    return False
            elif getattr(meta, name) != float(wanted):
                return False
        return True


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(data: Mapping[str, Any], base_dir: Path) -> RunConfig:
    try:
        has_table = data.get("dod_table") is not None
        has_cal = data.get("calibration") is not None
        if has_table == has_cal:
            raise ConfigError("config needs exactly one of 'dod_table' or 'calibration'")
        unknown = set(data.get("select", {})) - set(SELECT_FIELDS)
        if unknown:
            raise ConfigError(f"unknown select fields {sorted(unknown)}")
        sched = dict(data.get("schedule", {}))
        if "round_trip_efficiency" in sched:
            eta_c, eta_d = split_round_trip(float(sched["round_trip_efficiency"]))
        else:
            eta_c, eta_d = float(sched.get("eta_c", 1.0)), float(sched.get("eta_d", 1.0))
        manifest = _resolve(base_dir, data["manifest"])
        return RunConfig(
            manifest=manifest,
            dataset_root=_resolve(base_dir, data["dataset_root"]) if "dataset_root" in data else manifest.parent,
            output_dir=_resolve(base_dir, data.get("output_dir", "out")),
            clean=CleanParams(**data.get("clean", {})),
            econ=EconParams.from_mapping(data["econ"]),
            convention=ThroughputConvention(data.get("throughput_convention", "SUM")),
            dod_table=DodCostTable.from_mapping(data["dod_table"]) if has_table else None,
            calibration=CalibrationSpec(tuple(data["calibration"]["tests"])) if has_cal else None,
            select=dict(data.get("select", {})),
            soc0=float(sched.get("soc0", 0.5)),
            eta_c=eta_c,
            eta_d=eta_d,
        )
    except BatdegError:
        raise
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data, path.parent)
