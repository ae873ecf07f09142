"""Command-line front end.

    batdeg ingest         --config cfg.json
    batdeg clean          --config cfg.json
    batdeg calibrate      --config cfg.json
    batdeg evaluate       --config cfg.json [--group-by temperature[,dod,...]]
    batdeg schedule-cost  --config cfg.json --schedule sched.csv
    batdeg census         (--config cfg.json | --manifest m.json [--dataset-root DIR])
    batdeg plot           --config cfg.json

Domain errors exit 1 with one JSON line on stderr; usage errors exit 2.
Outputs are written only after the whole command has succeeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import pipeline
from .config import load_config
from .cycles import extract_cycles, read_schedule_csv, soc_from_power
from .errors import BatdegError, ConfigError, FileUnreadable
from .ingest import CapacitySeries, load_dataset, serialize_cycle_csv
from .models import dod_cost, linear_cost
from .report import GROUP_FIELDS, census_csv, cycles_csv, deltas_csv, ratios_csv, removed_csv, scenarios_csv, summarize_dataset
from .svg import capacity_curves, degradation_dots, emit_svg, scenario_bars

Outputs = dict[str, bytes]


def write_outputs(out_dir: Path, outputs: Outputs) -> None:
    """Stage every file as a temp sibling, then rename them all into place."""
    staged: list[tuple[str, Path]] = []
    blocked = [rel for rel in outputs if (out_dir / rel).is_dir()]
    if blocked:
        raise FileUnreadable(f"cannot write outputs to {out_dir}: {blocked} are directories")
    try:
        for rel, data in outputs.items():
            target = out_dir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            staged.append((tmp, target))
        for tmp, target in staged:
            os.replace(tmp, target)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise FileUnreadable(f"cannot write outputs to {out_dir}: {exc}") from None


def _safe_name(test_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in test_id)


def _svg(spec) -> bytes:
    return emit_svg(spec).encode("utf-8")


def cmd_ingest(cfg, args) -> Outputs:
    series = pipeline.load(cfg, selected=False)
    for s in series:
        print(f"{s.meta.test_id}\t{len(s)} cycles")
    return {f"series/{_safe_name(s.meta.test_id)}.csv": serialize_cycle_csv(s) for s in series}


def cmd_clean(cfg, args) -> Outputs:
    out: Outputs = {}
    for c in pipeline.clean_all(cfg, pipeline.load(cfg)):
        name = _safe_name(c.meta.test_id)
        out[f"clean/{name}.capacity.csv"] = serialize_cycle_csv(CapacitySeries(c.meta, c.clean.cycles))
        out[f"clean/{name}.deltas.csv"] = deltas_csv(c.deltas)
        out[f"clean/{name}.removed.csv"] = removed_csv(c.clean)
        print(f"{c.meta.test_id}\tretained {len(c.clean)}\tremoved {len(c.clean.removed)}")
    return out


def cmd_calibrate(cfg, args) -> Outputs:
    _, calibration = pipeline.prepare(cfg)
    text = calibration.to_json()
    sys.stdout.write(text)
    return {"calibration.json": text.encode("utf-8")}


def cmd_evaluate(cfg, args) -> Outputs:
    cleaned, calibration = pipeline.prepare(cfg)
    group_by = args.group_by.split(",") if args.group_by else None
    reports, ratios = pipeline.evaluate(cfg, cleaned, calibration, group_by)
    out: Outputs = {"scenarios.csv": scenarios_csv(reports)}
    if ratios is not None:
        out["ratios.csv"] = ratios_csv(ratios)
    else:
        out["ratios.csv"] = b"scenario,ambient_temp_C,benchmark_fade_Ah,ratio_to_coldest,reference_temp_C\n"
    if reports:
        meta = dict(reports[0].config)
        out["scenario_bars.svg"] = _svg(scenario_bars(reports, metadata=meta))
    for r in reports:
        print(f"{r.key.label()}\tbenchmark {r.benchmark_fade:.6g}\tmodel1 {r.model1_fade:.6g}"
              f"\tmodel2 {r.model2_fade:.6g}")
    return out


def cmd_schedule_cost(cfg, args) -> Outputs:
    try:
        schedule = read_schedule_csv(Path(args.schedule).read_bytes())
    except OSError as exc:
        raise FileUnreadable(f"{args.schedule}: {exc.strerror}") from None
    if cfg.dod_table is not None:
        calibration = pipeline.calibrate(cfg)
    else:
        _, calibration = pipeline.prepare(cfg)
    profile = soc_from_power(schedule, cfg.econ, cfg.soc0, cfg.eta_c, cfg.eta_d)
    cycles = extract_cycles(profile)
    result = {
        "linear_cost": linear_cost(calibration.linear, schedule),
        "dod_cost": dod_cost(calibration.dod_table, cycles.as_pairs(), cfg.econ),
        "equivalent_full_cycles": cycles.equivalent_full_cycles,
        "n_cycles": len(cycles),
        "calibration_source": calibration.source,
    }
    print(json.dumps(result, sort_keys=True))
    return {"cycles.csv": cycles_csv(cycles)}


def cmd_census(cfg, args) -> Outputs:
    if cfg is not None:
        series = pipeline.load(cfg, selected=False)
    else:
        manifest = Path(args.manifest)
        root = Path(args.dataset_root) if args.dataset_root else manifest.parent
        series = load_dataset(root, manifest)
    census = summarize_dataset(series)
    for (chem, rate), n in census.counts:
        print(f"{chem}\t{'' if rate is None else f'{rate:g}C'}\t{n}")
    return {"census.csv": census_csv(census)}


def cmd_plot(cfg, args) -> Outputs:
    cleaned = pipeline.clean_all(cfg, pipeline.load(cfg))
    echo = cfg.echo()
    raw = [c.raw for c in cleaned]
    return {
        "capacity_curves.svg": _svg(capacity_curves(raw, metadata=echo)),
        "capacity_curves_clean.svg": _svg(
            capacity_curves([c.clean for c in cleaned], title="Discharge capacity (cleaned)", metadata=echo)
        ),
        "degradation_dots.svg": _svg(degradation_dots([c.deltas for c in cleaned], metadata=echo)),
    }


COMMANDS = {
    "ingest": cmd_ingest,
    "clean": cmd_clean,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "schedule-cost": cmd_schedule_cost,
    "census": cmd_census,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batdeg", description="Battery degradation model evaluation")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "census", help="run configuration (JSON)")
        p.add_argument("--output-dir", help="override the configured output directory")
        if name == "evaluate":
            p.add_argument("--group-by", help="comma-separated: chemistry,temperature,charge_rate,discharge_rate,dod")
        if name == "schedule-cost":
            p.add_argument("--schedule", required=True, help="CSV: t,duration_h,P_charge_kW,P_discharge_kW")
        if name == "census":
            p.add_argument("--manifest", help="dataset manifest (when no --config is given)")
            p.add_argument("--dataset-root", help="directory manifest paths are relative to")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "census" and not args.config and not args.manifest:
            parser.error("census needs --config or --manifest")
        if getattr(args, "group_by", None):
            bad = [g for g in args.group_by.split(",") if g not in GROUP_FIELDS]
            if bad:
                parser.error(f"unknown --group-by field(s) {bad}; choose from {sorted(GROUP_FIELDS)}")
    except SystemExit as exc:  # argparse: 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else None
        outputs = COMMANDS[args.command](cfg, args)
        if args.output_dir:
            out_dir = Path(args.output_dir)
        elif cfg is not None:
            out_dir = cfg.output_dir
        else:
            out_dir = Path(".")
        write_outputs(out_dir, outputs)
    except BatdegError as exc:
        msg = str(exc) if not isinstance(exc, ConfigError) else f"config: {exc}"
        print(json.dumps({"error": exc.code, "message": msg}), file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
