"""``python -m oslab`` front-end: run, validate and describe, with TOML support from tomli."""

import argparse
import json
import sys
from pathlib import Path

from . import _core

EXIT_CONFIG = 2
EXIT_IO = 4


def load(path):
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return None, EXIT_IO
    try:
        if p.suffix == ".toml":
            import tomli

            return tomli.loads(raw.decode("utf-8")), 0
        return json.loads(raw), 0
    except Exception as exc:  # tomli and json raise different types
        print(f"config error: malformed {p.suffix.lstrip('.') or 'config'}: {exc}", file=sys.stderr)
        return None, EXIT_CONFIG


def main(argv=None):
    parser = argparse.ArgumentParser(prog="oslab")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the pipelines of a config")
    run.add_argument("config", nargs="?")
    run.add_argument("-c", "--config", dest="config_flag")
    run.add_argument("-o", "--out-dir")
    run.add_argument("--seed", type=int)
    run.add_argument("-j", "--threads", type=int, default=0)
    run.add_argument("--format", choices=["csv", "json"])
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config", nargs="?")
    val.add_argument("-c", "--config", dest="config_flag")
    desc = sub.add_parser("describe", help="contract of a cocycle, base, pipeline or check")
    desc.add_argument("name")
    args = parser.parse_args(argv)

    if args.command == "describe":
        try:
            sys.stdout.write(_core.describe(args.name))
        except _core.OslabError as exc:
            print(exc, file=sys.stderr)
            return EXIT_CONFIG
        return 0

    path = args.config_flag or args.config
    if path is None:
        parser.error("a config file is required")
    doc, code = load(path)
    if doc is None:
        return code
    try:
        if args.command == "validate":
            for w in _core.validate_config(doc):
                print(f"warning: {w}")
            print("ok")
            return 0
        code, log = _core.run_config(doc, args.out_dir, args.seed, args.threads, args.format)
    except _core.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stderr.write(log)
    return code


if __name__ == "__main__":
    sys.exit(main())
