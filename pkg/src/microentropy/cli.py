"""Command-line entry point.

    microentropy parse <file>
    microentropy check <file>
    microentropy run <scenario> --config <file> [--seed N] [--out DIR]

Exit codes: 0 success, 1 validation error, 2 budget exhausted (partial
results written), 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .dsl import DSLError, parse_experiment, parse_structure, serialize, serialize_structure
from .experiments import run_config
from .structures import StructureError, check_structure
from .terms import TermError

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_IO = 0, 1, 2, 3


def _is_structure(text: str) -> bool:
    # configs are flat key = value lines; only structure documents have blocks
    return any("{" in line.split("#", 1)[0] for line in text.splitlines())


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_parse(args) -> int:
    text = _read(args.file)
    if _is_structure(text):
        obj = parse_structure(text)
    else:
        obj = parse_experiment(text, os.path.dirname(os.path.abspath(args.file)))
    sys.stdout.write(serialize(obj))
    return EXIT_OK


def cmd_check(args) -> int:
    text = _read(args.file)
    base = os.path.dirname(os.path.abspath(args.file))
    if _is_structure(text):
        doc = parse_structure(text)
        problems = check_structure(doc.to_structure())
        if parse_structure(serialize_structure(doc)) != doc:
            problems.append("canonical serialization does not round-trip")
    else:
        cfg = parse_experiment(text, base)
        problems = []
        if cfg.source:
            doc = parse_structure(_read(os.path.join(base, cfg.source)))
            problems = check_structure(doc.to_structure())
        for note in cfg.notes:
            print(f"note: {note}")
    for p in problems:
        print(f"violation: {p}")
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_run(args) -> int:
    base = os.path.dirname(os.path.abspath(args.config))
    cfg = parse_experiment(_read(args.config), base)
    if cfg.scenario != args.scenario:
        raise ValueError(f"config declares scenario {cfg.scenario!r}, not {args.scenario!r}")
    result = run_config(cfg, base, out_dir=args.out, seed=args.seed)
    print(json.dumps(result.summary(), indent=2, sort_keys=True))
    return EXIT_BUDGET if result.partial else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="microentropy",
                                 description="Microstate entropy and dimension experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("parse", help="parse a structure or config file and print its canonical form")
    p.add_argument("file")
    p.set_defaults(fn=cmd_parse)
    c = sub.add_parser("check", help="validate a document against the structure invariants")
    c.add_argument("file")
    c.set_defaults(fn=cmd_check)
    r = sub.add_parser("run", help="run a scenario end to end")
    r.add_argument("scenario", choices=("shannon", "bowen", "sofic_dim", "entropy", "dimension"))
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default=None)
    r.set_defaults(fn=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DSLError as exc:
        print(f"error: {getattr(args, 'file', None) or args.config}:{exc}", file=sys.stderr)
        return EXIT_INVALID
    except (StructureError, TermError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
