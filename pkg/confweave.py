#!/usr/bin/env python3
"""
Command-line front end: check, solve, enumerate or emit a configuration model.

    confweave <check|solve|all|emit-minion> --library <path>... --problem <path>
              [--depth N] [--limit N] [--order <path>] [--out <path>]

Exit codes: 0 success, 1 unsatisfiable, 2 diagnostics errors, 3 usage errors.
stdout carries only the JSON report or the Minion text; diagnostics and log
messages go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import adl
import csp
import emit
import encoder
from errors import ConfweaveError, InvalidEncoding

logger = logging.getLogger("confweave")

MODES = ("check", "solve", "all", "emit-minion")
MINION_EXECUTABLE = "minion"

EXIT_OK = 0
EXIT_UNSAT = 1
EXIT_DIAGNOSTICS = 2
EXIT_USAGE = 3


@dataclass
class RunConfig:
    mode: str
    libraries: list = field(default_factory=list)
    problem: str = ""
    depth: int = encoder.DEFAULT_DEPTH_LIMIT
    limit: Optional[int] = None
    order: Optional[str] = None
    out: Optional[str] = None
    dynamic_order: bool = False
    verbose: bool = False


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def get_run_defaults():
    """Defaults for depth, limit and the Minion executable, overridable from the environment."""
    depth = os.getenv("CONFWEAVE_DEPTH") or encoder.DEFAULT_DEPTH_LIMIT
    limit = os.getenv("CONFWEAVE_LIMIT") or None
    minion = os.getenv("CONFWEAVE_MINION") or MINION_EXECUTABLE
    try:
        return {
            "depth": _positive_int(depth),
            "limit": _positive_int(limit) if limit is not None else None,
            "minion": minion,
        }
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"invalid environment default: {exc}") from None


def build_parser():
    defaults = get_run_defaults()
    parser = _ArgumentParser(prog="confweave", description="Configure a solver from a component library.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--library", action="append", required=True, metavar="PATH",
                        help="component library file; repeat to concatenate libraries")
    parser.add_argument("--problem", required=True, metavar="PATH")
    parser.add_argument("--depth", type=_positive_int, default=defaults["depth"],
                        help="maximum requirement chain depth (default %(default)s)")
    parser.add_argument("--limit", type=_positive_int, default=defaults["limit"],
                        help="maximum number of configurations for 'all'")
    parser.add_argument("--order", metavar="PATH", help="JSON order file {\"vars\": [...], \"values\": {...}}")
    parser.add_argument("--out", metavar="PATH", help="write results here instead of stdout")
    parser.add_argument("--dynamic-order", action="store_true",
                        help="branch on the component variable with the smallest domain first")
    parser.add_argument("--verbose", "-v", action="store_true")
    return parser


def parse_args(argv):
    args = build_parser().parse_args(argv)
    return RunConfig(
        mode=args.mode,
        libraries=list(args.library),
        problem=args.problem,
        depth=args.depth,
        limit=args.limit,
        order=args.order,
        out=args.out,
        dynamic_order=args.dynamic_order,
        verbose=args.verbose,
    )


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except UnicodeDecodeError as exc:
        raise InvalidEncoding(path, exc.start) from None


def _report(diagnostics):
    for diag in diagnostics:
        print(diag, file=sys.stderr)


def load_inputs(config):
    """Parse and validate every input file. Returns (library, problem, diagnostics)."""
    diagnostics = []
    libraries = []
    for path in config.libraries:
        library, diags = adl.parse_library(_read(path), path)
        libraries.append(library)
        diagnostics += diags
    library, diags = adl.merge_libraries(libraries)
    diagnostics += diags
    problem, diags = adl.parse_problem(_read(config.problem), config.problem)
    diagnostics += diags
    if not adl.has_errors(diagnostics):
        diagnostics += adl.validate(library, problem)
    return library, problem, diagnostics


def _write(config, text):
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def execute(config):
    try:
        library, problem, diagnostics = load_inputs(config)
    except OSError as exc:
        print(f"{exc.filename or '<input>'}: error: cannot read file: {exc.strerror}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except InvalidEncoding as exc:
        print(f"{exc.filename}: error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    _report(diagnostics)
    if adl.has_errors(diagnostics):
        return EXIT_DIAGNOSTICS

    try:
        model = encoder.encode(library, problem, config.depth)
        if config.order:
            model = encoder.load_order_file(config.order, model)
        if config.mode == "check":
            return EXIT_OK
        if config.mode == "emit-minion":
            _write(config, emit.emit_minion(model))
            return EXIT_OK
    except ConfweaveError as exc:
        print(f"{getattr(exc, 'filename', None) or config.problem}: error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except (OSError, json.JSONDecodeError) as exc:
        print(f"{config.order}: error: cannot load order file: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS

    if config.mode == "solve":
        found = csp.solve_first(model, config.dynamic_order)
        configurations = [found] if not isinstance(found, csp.Unsat) else []
        if not configurations:
            logger.info("Unsatisfiable: %s", found.reason)
    else:
        configurations = csp.solve_all(model, config.limit, config.dynamic_order)
    try:
        _write(config, emit.emit_report(configurations))
    except OSError as exc:
        print(f"{config.out}: error: cannot write file: {exc.strerror}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    return EXIT_OK if configurations else EXIT_UNSAT


def run(argv):
    """Run one command; returns the exit code and never raises."""
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if config.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    try:
        return execute(config)
    except OSError as exc:
        print(f"{config.out}: error: cannot write output: {exc.strerror}", file=sys.stderr)
        return EXIT_DIAGNOSTICS


def main(argv=None):
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
