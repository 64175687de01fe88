"""Command line entry point: ``freeendo <command> FILE [options]``."""

from __future__ import annotations

import argparse
import sys

from .errors import FreeEndoError, NonInjective, ParseError, PreconditionError
from .report import COMMANDS, parse_endo, run
from .words import Word


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freeendo", description="Analyse endomorphisms of free groups.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="endomorphism description ('-' for stdin)")
    common.add_argument("--json", action="store_true", help="print the machine-readable report")
    common.add_argument("--timing", action="store_true", help="include elapsed time")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("fold", parents=[common], help="fold the rose representative")
    s = sub.add_parser("images", parents=[common], help="iterated image graphs")
    s.add_argument("--k", type=int, default=3)
    sub.add_parser("traintrack", parents=[common], help="transition matrix, legality, Whitehead graphs")
    s = sub.add_parser("immersion-rep", parents=[common], help="search for an immersion representative")
    s.add_argument("--cap", type=int)
    for name in ("certify", "periodic"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--max-n", dest="max_n", type=int)
        s.add_argument("--max-len", dest="max_len", type=int)
        s.add_argument("--cap", type=int)
        if name == "certify":
            s.add_argument("--witness", nargs="+", help="generators of an invariant free factor")
            s.add_argument("--twist")
    s = sub.add_parser("orbit", parents=[common], help="orbit of a spine simplex (rank 2)")
    s.add_argument("--start", default="rose", help="rose|theta|barbell[:w1,w2]")
    s.add_argument("--max-steps", dest="max_steps", type=int, default=32)
    s = sub.add_parser("periodic-set", parents=[common], help="periodic spine simplices (rank 2)")
    s.add_argument("--radius", type=int, default=3)
    s.add_argument("--max-steps", dest="max_steps", type=int, default=32)
    s = sub.add_parser("invariant", parents=[common], help="least k with [e^k(F) : e^k(F) ∩ H] finite")
    s.add_argument("--gens", nargs="+")
    s.add_argument("--twist")
    s.add_argument("--cap", type=int)
    return p


def _words(spec, items) -> list[Word] | None:
    if items is None:
        return None
    return [spec.basis.parse(x) for x in items]


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    assert args.command in COMMANDS
    try:
        if args.file == "-":
            text = sys.stdin.read()
        else:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
        spec = parse_endo(text)
        flags = {
            k: v
            for k, v in vars(args).items()
            if k not in ("file", "json", "timing", "command") and v is not None
        }
        for key in ("witness", "gens"):
            if key in flags:
                flags[key] = _words(spec, flags[key])
        if "twist" in flags:
            flags["twist"] = spec.basis.parse(flags["twist"])
        report = run(args.command, spec, timing=args.timing, **flags)
    except (ParseError, PreconditionError, NonInjective) as err:
        print(f"freeendo: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"freeendo: {err}", file=sys.stderr)
        return 2
    except FreeEndoError as err:
        print(f"freeendo: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    sys.stdout.write(report.to_json() if args.json else report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
