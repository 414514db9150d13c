"""qmclab command-line interface.

Exit codes: 0 success, 1 configuration error (bad flags, missing or
invalid config file, unknown keys), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import dataset_preset, save_dataset
from .lab import (
    ConfigError,
    EXPERIMENTS,
    apply_dotted_overrides,
    cell_seed,
    merge_config,
    read_rows,
    run_experiment,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qmclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run_commands = ("gen-data",) + tuple(e for e in EXPERIMENTS if e != "train") + ("train",)
    for name in run_commands:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file (defaults apply without it)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, e.g. circuit.n_qubits=6")
        p.add_argument("--out", help="output directory (overrides config output)")
    rep = sub.add_parser("report", help="summarize a finished run directory")
    rep.add_argument("--run", required=True, help="run directory with manifest.json")
    return parser


def _load_config(command: str, args) -> dict:
    overrides = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            overrides = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        declared = overrides.pop("experiment", command)
        if declared != command:
            raise ConfigError(
                f"config file is for experiment {declared!r}, not {command!r}"
            )
    config = merge_config(command, overrides)
    apply_dotted_overrides(config, args.set)
    return config


def _run_gen_data(config: dict, out_dir: str | None) -> int:
    out = Path(out_dir if out_dir is not None else config["output"])
    out.mkdir(parents=True, exist_ok=True)
    ds_cfg = config["dataset"]
    seed = cell_seed(config["seed"], ds_cfg["preset"], "gen")
    ds = dataset_preset(ds_cfg["preset"], seed, **ds_cfg["overrides"])
    path = out / f"{ds.name}.csv"
    save_dataset(ds, path, meta={"preset": ds_cfg["preset"], "seed": config["seed"],
                                 "overrides": ds_cfg["overrides"]})
    print(f"wrote {path} ({ds.size} samples, {ds.n_classes} classes)")
    return 0


def _run_report(run_dir: str) -> int:
    run = Path(run_dir)
    manifest_path = run / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"no manifest.json under {run}")
    manifest = json.loads(manifest_path.read_text())
    print(f"experiment : {manifest['experiment']}")
    print(f"build      : {manifest['build']}")
    print(f"seed       : {manifest['seed']}")
    print(f"wall       : {manifest['wall_seconds']:.1f} s")
    print(f"rows       : {manifest['rows']}")
    results = run / "results.csv"
    if not results.exists():
        print("no results.csv")
        return 0
    header, rows = read_rows(results)
    numeric = [c for c in header if c not in
               ("obs_kind", "model_kind", "loss", "seed", "dim", "samples")]
    group_col = "model_kind" if "model_kind" in header else (
        "obs_kind" if "obs_kind" in header else None)
    groups: dict[str, list[dict]] = {}
    for row in rows:
        key = row[group_col] if group_col else "all"
        groups.setdefault(key, []).append(row)
    print(f"{'group':<22}" + "".join(f"{c:>14}" for c in numeric))
    for key in sorted(groups):
        means = []
        for c in numeric:
            vals = [float(r[c]) for r in groups[key] if r[c] not in ("", None)]
            means.append(f"{sum(vals) / len(vals):>14.6g}" if vals else f"{'-':>14}")
        print(f"{key:<22}" + "".join(means))
    return 0


def run_cli(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "report":
            return _run_report(args.run)
        config = _load_config(args.command, args)
        if args.command == "gen-data":
            return _run_gen_data(config, args.out)
        path = run_experiment(config, args.out)
        print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"qmclab: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"qmclab: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run_cli())
