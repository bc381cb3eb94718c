"""Command line entry point.

    phirm run --config PATH [--out DIR] [--jobs N]
    phirm verify PATH [PATH ...]      (also: phirm --verify PATH)

Exit codes: 0 ok, 1 bound violation, 2 invalid config or trace file, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiment import run_experiment
from .odp import ValidationError
from .report import SchemaError, find_violation, verify_csv, write_outputs

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _err(msg):
    print(f"phirm: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_IO
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    base = Path(args.config).resolve().parent
    out_dir = Path(cfg.output_dir)
    if not out_dir.is_absolute() and args.out is None:
        out_dir = base / out_dir
    try:
        result = run_experiment(cfg, jobs=args.jobs, base_dir=base)
    except ValidationError as exc:
        _err(f"{args.config}: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    try:
        write_outputs(result, out_dir)
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return EXIT_IO
    bad = find_violation(result)
    if bad is not None:
        player, seed, t, what = bad
        who = f"player {player} " if len(result.players) > 1 else ""
        _err(f"bound violation ({what}): {who}seed={seed} t={t}")
        return EXIT_VIOLATION
    print(f"wrote {out_dir}")
    return EXIT_OK


def cmd_verify(paths) -> int:
    status = EXIT_OK
    for path in paths:
        try:
            rep = verify_csv(path)
        except SchemaError as exc:
            _err(f"schema error: {exc}")
            status = max(status, EXIT_CONFIG)
            continue
        except OSError as exc:
            _err(f"cannot read {path}: {exc}")
            status = max(status, EXIT_IO)
            continue
        print("\n".join(rep.lines()))
        if not rep.ok and status == EXIT_OK:
            status = EXIT_VIOLATION
    return status


def build_parser():
    parser = argparse.ArgumentParser(prog="phirm", description="Approximate (Phi, f)-regret-matching experiments")
    parser.add_argument("--verify", metavar="PATH", nargs="+", help="verify trace CSVs and exit")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, metavar="PATH")
    run.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    run.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for seeds")
    ver = sub.add_parser("verify", help="re-check the inequalities logged in trace CSVs")
    ver.add_argument("paths", nargs="+", metavar="PATH")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verify:
        return cmd_verify(args.verify)
    if args.command == "run":
        if args.jobs < 1:
            parser.error("--jobs must be >= 1")
        return cmd_run(args)
    if args.command == "verify":
        return cmd_verify(args.paths)
    parser.print_help()
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
