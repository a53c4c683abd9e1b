"""Command-line entry point: ``toda-toric <command> --config f.json [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NumericalAbort
from .experiments import COMMANDS, DEFAULTS

EXIT_PASS, EXIT_USAGE, EXIT_VERDICT, EXIT_ABORT = 0, 1, 2, 3

CONFIG_KEYS = {"experiment", "n", "seed", "c_ladder", "samples", "tolerances", "out"}
# keys with no default value
OPTIONAL_KEYS = {"billiard": {"initial_conditions"}}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toda-toric", description=__doc__)
    ap.add_argument("command", nargs="?", help="experiment to run (see --list)")
    ap.add_argument("--config", type=Path, help="JSON config file")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--out", type=Path, help="output directory for report.json and CSV tables")
    ap.add_argument("--list", action="store_true", help="list experiments and exit")
    ap.add_argument("--check", action="store_true", help="validate the config without running")
    return ap


def load_config(command: str, path: Path | None, seed: int | None, out: Path | None) -> dict:
    cfg: dict = {}
    if path is not None:
        try:
            cfg = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    if cfg.get("experiment", command) != command:
        raise UsageError(f"config is for experiment {cfg['experiment']!r}, not {command!r}")
    cfg["experiment"] = command
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["out"] = str(out)
    validate(command, cfg)
    return cfg


def validate(command: str, cfg: dict) -> None:
    if "seed" not in cfg:
        raise UsageError("a seed is required (config key 'seed' or --seed)")
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    known = CONFIG_KEYS | set(DEFAULTS[command]) | OPTIONAL_KEYS.get(command, set())
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    if "n" in cfg and (not isinstance(cfg["n"], int) or cfg["n"] < 3):
        raise UsageError("n must be an integer >= 3")
    if "samples" in cfg and (not isinstance(cfg["samples"], int) or cfg["samples"] < 1):
        raise UsageError("samples must be a positive integer")
    for c in cfg.get("c_ladder", []):
        if not isinstance(c, (int, float)) or not 2 <= c <= 200:
            raise UsageError("c_ladder entries must lie in [2, 200]")
    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict):
        raise UsageError("tolerances must be an object")
    bad = sorted(set(tol) - set(DEFAULTS[command].get("tolerances", {})))
    if bad:
        raise UsageError(f"unknown tolerances for {command}: {', '.join(bad)}")


def write_outputs(report: dict, tables: dict[str, str], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, text in tables.items():
        (out / f"{name}.csv").write_text(text, encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.list:
        for name, fn in COMMANDS.items():
            doc = (fn.__doc__ or "").strip().splitlines()
            print(f"{name:12s} {doc[0] if doc else ''}")
        return EXIT_PASS
    if args.command not in COMMANDS:
        print(f"error: unknown or missing command {args.command!r}; use --list", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.command, args.config, args.seed, args.out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.check:
        print(f"config ok for {args.command}")
        return EXIT_PASS
    run_cfg = {k: v for k, v in cfg.items() if k not in ("experiment", "out")}
    try:
        rep = COMMANDS[args.command](run_cfg)
    except NumericalAbort as exc:
        print(f"numerical abort ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_ABORT
    report = rep.as_dict()
    if "out" in cfg:
        write_outputs(report, rep.tables, Path(cfg["out"]))
    for name, ok in report["verdicts"].items():
        print(f"{'PASS' if ok else 'FAIL'}  {args.command}.{name}")
    return EXIT_PASS if report["passed"] else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
