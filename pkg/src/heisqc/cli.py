"""Command-line runner: ``heisqc --experiment NAME [options]``.

Writes ``report.json`` and ``tables.csv`` to the output directory and prints
one line per check.  Exit status is 0 when every check passes, 1 when one
fails and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .conformal_maps import Calibration, default_calibration, load_calibration, parse_key_values
from .experiments import EXPERIMENTS, TABLE_COLUMNS, Outcome, RunContext, calibrate
from .qc_models import MODEL_MAPS
from .report import _plain, dumps, rows_to_csv
from .sphere_measures import QuadSpec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _epilog() -> str:
    lines = ["tables.csv columns (every row also has a 'table' column naming its scan):"]
    for name, cols in TABLE_COLUMNS.items():
        lines.append(f"  {name:16s} {cols}")
    lines.append("")
    lines.append("config file: key = value lines using the long option names without dashes")
    lines.append("(experiment, seed, out, quad.alpha, quad.phi, quad.s, mc, tol, map, calibration);")
    lines.append("'param.K = V' sets a parameter and 'params = {json}' sets several.  Flags override the file.")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heisqc", description="Numerical verification experiments on the Heisenberg ball.",
                                 epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--calibrate", action="store_true", help="recompute calibration.cfg instead of running an experiment")
    ap.add_argument("--config", type=Path, help="key=value configuration file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path, help="output directory (default heisqc-out/<experiment>)")
    ap.add_argument("--quad.alpha", dest="quad_alpha", type=int, metavar="N")
    ap.add_argument("--quad.phi", dest="quad_phi", type=int, metavar="N")
    ap.add_argument("--quad.s", dest="quad_s", type=int, metavar="N")
    ap.add_argument("--mc", type=int, metavar="N", help="Monte Carlo sample budget")
    ap.add_argument("--tol", type=float, metavar="X", help="relative tolerance")
    ap.add_argument("--map", choices=sorted(MODEL_MAPS), help="restrict map suites to one model map")
    ap.add_argument("--param", action="append", default=[], metavar="K=V",
                    help="experiment parameter; 'map.K=V' goes to the --map constructor")
    ap.add_argument("--calibration", type=Path, help="calibration file (default: the packaged one)")
    return ap


_CONFIG_KEYS = {"experiment": "experiment", "seed": "seed", "out": "out", "quad.alpha": "quad_alpha",
                "quad.phi": "quad_phi", "quad.s": "quad_s", "mc": "mc", "tol": "tol", "map": "map",
                "calibration": "calibration"}


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _split_param(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"parameter {item!r} is not of the form key=value")
    key, value = item.split("=", 1)
    return key.strip(), _value(value.strip())


def resolve(args: argparse.Namespace) -> dict:
    """Merge the config file and the flags into one settings dict."""
    settings: dict = {"params": {}}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
            entries = parse_key_values(text)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for key, raw in entries.items():
            if key == "params":
                extra = _value(raw)
                if not isinstance(extra, dict):
                    raise ConfigError("'params' must be a JSON object")
                settings["params"].update(extra)
            elif key.startswith("param."):
                settings["params"][key[6:]] = _value(raw)
            elif key in _CONFIG_KEYS:
                settings[_CONFIG_KEYS[key]] = raw
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for dest in _CONFIG_KEYS.values():
        value = getattr(args, dest)
        if value is not None:
            settings[dest] = value
    for item in args.param:
        key, value = _split_param(item)
        settings["params"][key] = value
    return settings


def make_quad(settings: dict) -> QuadSpec:
    fields = {"quad_alpha": "n_alpha", "quad_phi": "n_phi", "quad_s": "n_s", "mc": "mc_samples", "seed": "seed"}
    try:
        changes = {name: int(settings[key]) for key, name in fields.items() if key in settings}
        if "tol" in settings:
            changes["rel_tol"] = float(settings["tol"])
        return replace(QuadSpec(), **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid quadrature setting: {exc}") from exc


def make_calibration(settings: dict) -> Calibration:
    try:
        if "calibration" in settings:
            return load_calibration(settings["calibration"])
        return default_calibration()
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot load calibration: {exc}") from exc


def write_artifacts(out_dir: Path, experiment: str, params: dict, outcome: Outcome) -> dict:
    cells = []
    for scan in outcome.scans:
        for row in scan.cells:
            cells.append({"table": scan.name, **row})
    summary = {"checks": [c.as_dict() for c in outcome.checks], "pass": outcome.passed,
               "tolerance": params["quad"]["rel_tol"], "tables": {s.name: s.as_dict()["summary"] for s in outcome.scans}}
    summary.update(outcome.info)
    report = {"experiment": experiment, "params": params, "cells": cells, "summary": summary}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(report), encoding="utf-8")
    (out_dir / "tables.csv").write_text(rows_to_csv(_plain(cells)), encoding="utf-8")
    return report


def _line(check) -> str:
    value = json.dumps(_plain(check.value), sort_keys=True)
    if len(value) > 100:
        value = value[:97] + "..."
    return f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {value}  [{check.limit}]"


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve(args)
        if args.calibrate:
            return run_calibrate(settings)
        experiment = settings.get("experiment")
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"--experiment must be one of {', '.join(sorted(EXPERIMENTS))}")
        quad = make_quad(settings)
        calib = make_calibration(settings)
        map_name = settings.get("map")
        if map_name is not None and map_name not in MODEL_MAPS:
            raise ConfigError(f"unknown map {map_name!r}")
        params = dict(sorted(settings["params"].items()))
        ctx = RunContext(quad, calib, params, map_name)
        if map_name is not None:
            try:
                MODEL_MAPS[map_name](**ctx.map_params())
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad parameters for map {map_name!r}: {exc}") from exc
        out_dir = Path(settings.get("out") or Path("heisqc-out") / experiment)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outcome = EXPERIMENTS[experiment](ctx)
    run_params = {"quad": asdict(quad), "map": map_name, "params": params, "seed": quad.seed,
                  "calibration": calib.as_dict()}
    try:
        write_artifacts(out_dir, experiment, run_params, outcome)
    except OSError as exc:
        print(f"config error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for check in outcome.checks:
        print(_line(check))
    failed = sum(not c.passed for c in outcome.checks)
    print(f"{experiment}: {len(outcome.checks) - failed}/{len(outcome.checks)} checks passed -> {out_dir}")
    return EXIT_OK if outcome.passed else EXIT_FAIL


def run_calibrate(settings: dict) -> int:
    quad = make_quad(settings)
    out_dir = Path(settings.get("out") or Path("heisqc-out") / "calibrate")
    calib, outcome = calibrate(quad)
    params = {"quad": asdict(quad), "map": None, "params": {}, "seed": quad.seed, "calibration": calib.as_dict()}
    try:
        write_artifacts(out_dir, "calibrate", params, outcome)
        (out_dir / "calibration.cfg").write_text(calib.to_text(), encoding="utf-8")
    except OSError as exc:
        print(f"config error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for check in outcome.checks:
        print(_line(check))
    print(f"calibration written to {out_dir / 'calibration.cfg'}")
    return EXIT_OK if outcome.passed else EXIT_FAIL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
