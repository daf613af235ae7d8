"""Command-line entry point: ``pmx run``, ``pmx ir`` and ``pmx repl``."""

from __future__ import annotations

import argparse
import sys

from .errors import PmxError
from .evaluator import DEFAULT_FUEL
from .program import RunReport, Session, dump_ir, run_program

PROMPT = "pmx> "


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError("fuel must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmx", description="Extensible pattern matching for S-expressions.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a program file")
    run.add_argument("file")
    run.add_argument("--trace", action="store_true", help="print match trace events")
    run.add_argument("--dump-ir", action="store_true", help="print each match's IR before running it")
    run.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL, help="expander rewrite limit")

    ir = sub.add_parser("ir", help="print match IR without running")
    ir.add_argument("file")
    ir.add_argument("--match", type=int, default=None, metavar="K", help="only the K-th match form (from 0)")
    ir.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)

    repl_cmd = sub.add_parser("repl", help="interactive session")
    repl_cmd.add_argument("--trace", action="store_true")
    repl_cmd.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)
    return parser


def _report_error(err: PmxError, where: str) -> None:
    sys.stdout.flush()
    print(f"{where}: {err}", file=sys.stderr)


def repl(fuel: int = DEFAULT_FUEL, trace: bool = False, stdin=None) -> int:
    """One entry per input line; errors are reported and the session continues."""
    stdin = stdin or sys.stdin
    session = Session(fuel, emit=print)
    interactive = stdin.isatty()
    while True:
        if interactive:
            print(PROMPT, end="", flush=True)
        line = stdin.readline()
        if not line:
            break
        if not line.strip():
            continue
        report = session.run_text(line, trace=trace)
        if report.error is not None:
            _report_error(report.error, "repl")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))
    if args.command == "run":
        try:
            report: RunReport = run_program(args.file, dump_ir=args.dump_ir, trace=args.trace,
                                            fuel=args.fuel, emit=print)
        except OSError as err:
            print(f"pmx: {err}", file=sys.stderr)
            return 2
        if report.error is not None:
            _report_error(report.error, args.file)
        return report.exit_code
    if args.command == "ir":
        try:
            text = dump_ir(args.file, args.match, fuel=args.fuel)
        except PmxError as err:
            _report_error(err, args.file)
            return err.exit_code
        except (OSError, IndexError) as err:
            print(f"pmx: {err}", file=sys.stderr)
            return 2
        print(text, end="")
        return 0
    return repl(args.fuel, args.trace)


if __name__ == "__main__":
    sys.exit(main())
