"""Command-line surface of the stub toolchain.

Pinned command shapes (mirroring the real toolchain's verbs):

    dafny-stub verify FILE [--verification-time-limit N]
    dafny-stub generate-tests {Block,Path,InlinedBlock} FILE [--length-limit N]
    dafny-stub translate py FILE [--include-runtime] -o OUTDIR
    dafny-stub --version

Diagnostics go to stdout as `file(line,col): Severity: message` lines with a
trailing summary, like the real verifier. Exit codes: 0 success, 2
parse/usage/refusal, 4 verification errors.

The DAFNY_STUB_DELAY_VERIFY / DAFNY_STUB_DELAY_TESTGEN environment variables
(seconds) inject latency for timeout testing.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .parser import StubParseError, parse_program
from .pycompile import CompileRefusal, compile_program
from .testgen import TestgenRefusal, generate_tests
from .verify import check_program

VERSION = "4.4.0-stub"


def _sleep_if_requested(env_var: str) -> None:
    delay = os.environ.get(env_var)
    if delay:
        time.sleep(float(delay))


def _load(path: str):
    source = Path(path).read_text(encoding="utf-8")
    return parse_program(source)


def cmd_verify(args: argparse.Namespace) -> int:
    _sleep_if_requested("DAFNY_STUB_DELAY_VERIFY")
    filename = Path(args.file).name
    try:
        program = _load(args.file)
    except StubParseError as exc:
        print(f"{filename}({exc.pos.line},{exc.pos.col}): Error: {exc.message}")
        print(f"1 parse errors detected in {filename}")
        return 2
    diagnostics = check_program(program)
    for diag in diagnostics:
        print(diag.render(filename))
    errors = sum(1 for d in diagnostics if d.severity == "Error")
    checked = len(program.functions()) + len(program.methods())
    print(f"Dafny program verifier finished with {max(checked - errors, 0)} verified, {errors} errors")
    return 4 if errors else 0


def cmd_generate_tests(args: argparse.Namespace) -> int:
    _sleep_if_requested("DAFNY_STUB_DELAY_TESTGEN")
    filename = Path(args.file).name
    try:
        program = _load(args.file)
    except StubParseError as exc:
        print(f"{filename}({exc.pos.line},{exc.pos.col}): Error: {exc.message}", file=sys.stderr)
        return 2
    try:
        sys.stdout.write(generate_tests(program, args.mode, args.length_limit))
    except TestgenRefusal as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    return 0


def cmd_translate(args: argparse.Namespace) -> int:
    if args.target != "py":
        print(f"Error: unsupported target {args.target}", file=sys.stderr)
        return 2
    filename = Path(args.file).name
    try:
        program = _load(args.file)
    except StubParseError as exc:
        print(f"{filename}({exc.pos.line},{exc.pos.col}): Error: {exc.message}", file=sys.stderr)
        return 2
    try:
        files = compile_program(program)
    except CompileRefusal as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    if not args.include_runtime:
        files.pop("_dafny.py", None)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out / name).write_text(content, encoding="utf-8")
    print(f"Wrote {len(files)} files to {out}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dafny-stub", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dafny-stub {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify")
    p_verify.add_argument("file")
    p_verify.add_argument("--verification-time-limit", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    p_gen = sub.add_parser("generate-tests")
    p_gen.add_argument("mode", choices=["Block", "Path", "InlinedBlock"])
    p_gen.add_argument("file")
    p_gen.add_argument("--length-limit", type=int, default=512)
    p_gen.set_defaults(func=cmd_generate_tests)

    p_tr = sub.add_parser("translate")
    p_tr.add_argument("target")
    p_tr.add_argument("file")
    p_tr.add_argument("--include-runtime", action="store_true")
    p_tr.add_argument("-o", "--output", required=True)
    p_tr.set_defaults(func=cmd_translate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
