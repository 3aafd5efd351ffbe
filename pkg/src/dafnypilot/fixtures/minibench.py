"""Authored six-task benchmark mini-suite with per-scenario cassettes.

One task per outcome class the harness must classify correctly:

  mini/0-double      pass
  mini/1-sum-to      NoVerifiedCode (both scripted candidates fail checks)
  mini/2-triple      WrongAlgorithm (scripted spec mistranslates the doctest,
                     so the internally consistent result disagrees with the
                     canonical tests)
  mini/3-tag-points  InteropFailure (two-field constructor: no shim)
  mini/4-scale-up    pass with testgen degraded (real-valued parameter)
  mini/5-add-one     pass with a rejected post-processing rewrite

`python -m dafnypilot.fixtures.minibench --out DIR` writes tasks.jsonl and
a cassettes/ directory ready for `dafnypilot bench run`.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import recording_engine
from ..bench import BenchTask, run_one_task
from ..dafny_driver import ToolchainConfig
from ..llm_gateway import Purpose
from ..synth_loop import SynthesisBudget

SYNTH_BUDGET = SynthesisBudget(max_attempts=2, restart_after=3)


def _fenced(source: str, prose: str = "Here is the program:") -> str:
    return f"{prose}\n\n```dafny\n{source}\n```"


def _fenced_py(source: str) -> str:
    return f"Here is the idiomatic rewrite:\n\n```python\n{source}\n```"


def _vary(source: str) -> str:
    """Cosmetic variant used for reconstructions so the judge runs."""
    return source.replace("var t0", "var a0").replace("t0 ==", "a0 ==")


_JUDGE_OK = "EQUIVALENT\nSame entry behaviour, same reference definition, same test cases."


def _summary(entry: str, body: str) -> str:
    return (
        f"You asked for a Python function {entry}. {body}\n\n"
        "Key differences:\n"
        "1. The expected behaviour is pinned to an explicit reference definition.\n"
        "2. Your examples become runnable checks of the final program."
    )


@dataclass(frozen=True)
class ScriptedTask:
    task: BenchTask
    script: Sequence[tuple[Purpose, str]]


# --- task 0: straightforward pass ---

_DOUBLE_SPEC = """module M {
  function doubleFunc(n: int): int
  {
    n + n
  }

  /*
  Return n multiplied by two.
  */
  method {:testEntry} double(n: int) returns (result: int)
    ensures result == doubleFunc(n)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := double(0);
    expect t0 == 0;
    var t1 := double(3);
    expect t1 == 6;
  }
}"""

_DOUBLE_IMPL = _DOUBLE_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    result := 2 * n;",
)

T_DOUBLE = ScriptedTask(
    task=BenchTask(
        task_id="mini/0-double",
        prompt='def double(n: int) -> int:\n    """Return n multiplied by two.\n    >>> double(0)\n    0\n    >>> double(3)\n    6\n    """\n',
        entry_point="double",
        canonical_tests="def check(candidate):\n    assert candidate(0) == 0\n    assert candidate(3) == 6\n    assert candidate(10) == 20\n",
    ),
    script=[
        (Purpose.SPEC_GEN, _fenced(_DOUBLE_SPEC)),
        (Purpose.SUMMARY, _summary("double(n)", "It returns the input added to itself.")),
        (Purpose.RECONSTRUCT, _fenced(_vary(_DOUBLE_SPEC))),
        (Purpose.EQUIV_JUDGE, _JUDGE_OK),
        (Purpose.IMPL_GEN, _fenced(_DOUBLE_IMPL)),
    ],
)

# --- task 1: the loop never converges ---

_SUMTO_SPEC = """module M {
  function sumToFunc(n: int): int
    requires n >= 0
    decreases n
  {
    if n == 0 then 0 else n + sumToFunc(n - 1)
  }

  /*
  Return the sum of the integers from 0 up to n.
  */
  method {:testEntry} sum_to(n: int) returns (result: int)
    requires n >= 0
    ensures result == sumToFunc(n)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := sum_to(3);
    expect t0 == 6;
  }
}"""

_SUMTO_BAD_1 = _SUMTO_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    result := n * (n - 1) / 2;",
)
_SUMTO_BAD_2 = _SUMTO_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    result := n * (n + 1) / 2 + 1;",
)

T_SUMTO = ScriptedTask(
    task=BenchTask(
        task_id="mini/1-sum-to",
        prompt='def sum_to(n: int) -> int:\n    """Return the sum of the integers from 0 up to n.\n    >>> sum_to(3)\n    6\n    """\n',
        entry_point="sum_to",
        canonical_tests="def check(candidate):\n    assert candidate(3) == 6\n    assert candidate(0) == 0\n",
    ),
    script=[
        (Purpose.SPEC_GEN, _fenced(_SUMTO_SPEC)),
        (Purpose.SUMMARY, _summary("sum_to(n)", "It totals the whole numbers up to and including n.")),
        (Purpose.RECONSTRUCT, _fenced(_vary(_SUMTO_SPEC))),
        (Purpose.EQUIV_JUDGE, _JUDGE_OK),
        (Purpose.IMPL_GEN, _fenced(_SUMTO_BAD_1)),
        (Purpose.IMPL_GEN, _fenced(_SUMTO_BAD_2)),
    ],
)

# --- task 2: internally consistent but wrong against the canonical tests ---
# the scripted model mistranslated the user's example into its own wrong
# arithmetic, test case included

_TRIPLE_SPEC = """module M {
  function tripleFunc(n: int): int
  {
    4 * n
  }

  /*
  Return n multiplied by three.
  */
  method {:testEntry} triple(n: int) returns (result: int)
    ensures result == tripleFunc(n)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := triple(2);
    expect t0 == 8;
  }
}"""

_TRIPLE_IMPL = _TRIPLE_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    result := 4 * n;",
)

T_TRIPLE = ScriptedTask(
    task=BenchTask(
        task_id="mini/2-triple",
        prompt='def triple(n: int) -> int:\n    """Return n multiplied by three.\n    >>> triple(2)\n    6\n    """\n',
        entry_point="triple",
        canonical_tests="def check(candidate):\n    assert candidate(2) == 6\n    assert candidate(1) == 3\n",
    ),
    script=[
        (Purpose.SPEC_GEN, _fenced(_TRIPLE_SPEC)),
        (Purpose.SUMMARY, _summary("triple(n)", "It scales the input by a constant factor.")),
        (Purpose.RECONSTRUCT, _fenced(_vary(_TRIPLE_SPEC))),
        (Purpose.EQUIV_JUDGE, _JUDGE_OK),
        (Purpose.IMPL_GEN, _fenced(_TRIPLE_IMPL)),
    ],
)

# --- task 3: compiled fine, but the boundary types defeat the canonical tests ---

_TAGPOINTS_SPEC = """module M {
  datatype Pair = P(int, int)

  /*
  Return the fixed list of tagged coordinate pairs.
  */
  method {:testEntry} tag_points() returns (l: seq<Pair>)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := tag_points();
    expect |t0| == 2;
  }
}"""

_TAGPOINTS_IMPL = _TAGPOINTS_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    l := [P(1, 2), P(3, 4)];",
)

T_TAGPOINTS = ScriptedTask(
    task=BenchTask(
        task_id="mini/3-tag-points",
        prompt='def tag_points() -> list:\n    """Return the fixed list of tagged coordinate pairs.\n    >>> tag_points()\n    [(1, 2), (3, 4)]\n    """\n',
        entry_point="tag_points",
        canonical_tests="def check(candidate):\n    result = candidate()\n    assert result[0][0] == 1\n    assert result[1][1] == 4\n",
    ),
    script=[
        (Purpose.SPEC_GEN, _fenced(_TAGPOINTS_SPEC)),
        (Purpose.SUMMARY, _summary("tag_points()", "It returns a fixed two-element list of coordinate pairs.")),
        (Purpose.RECONSTRUCT, _fenced(_vary(_TAGPOINTS_SPEC))),
        (Purpose.EQUIV_JUDGE, _JUDGE_OK),
        (Purpose.IMPL_GEN, _fenced(_TAGPOINTS_IMPL)),
    ],
)

# --- task 4: test generation refuses real-valued parameters; still passes ---

_SCALEUP_SPEC = """module M {
  function scaleFunc(x: real): real
  {
    x + x
  }

  /*
  Return x multiplied by two.
  */
  method {:testEntry} scale_up(x: real) returns (y: real)
    ensures y == scaleFunc(x)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := scale_up(1.5);
    expect t0 == 3.0;
  }
}"""

_SCALEUP_IMPL = _SCALEUP_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    y := x + x;",
)

T_SCALEUP = ScriptedTask(
    task=BenchTask(
        task_id="mini/4-scale-up",
        prompt='def scale_up(x: float) -> float:\n    """Return x multiplied by two.\n    >>> scale_up(1.5)\n    3.0\n    """\n',
        entry_point="scale_up",
        canonical_tests=(
            "def check(candidate):\n"
            "    assert abs(candidate(1.5) - 3.0) < 1e-9\n"
            "    assert abs(candidate(0.0)) < 1e-9\n"
        ),
    ),
    script=[
        (Purpose.SPEC_GEN, _fenced(_SCALEUP_SPEC)),
        (Purpose.SUMMARY, _summary("scale_up(x)", "It doubles a decimal number.")),
        (Purpose.RECONSTRUCT, _fenced(_vary(_SCALEUP_SPEC))),
        (Purpose.EQUIV_JUDGE, _JUDGE_OK),
        (Purpose.IMPL_GEN, _fenced(_SCALEUP_IMPL)),
    ],
)

# --- task 5: the readability rewrite breaks a test and is rejected ---

_ADDONE_SPEC = """module M {
  function addOneFunc(n: int): int
  {
    n + 1
  }

  /*
  Return n plus one.
  */
  method {:testEntry} add_one(n: int) returns (result: int)
    ensures result == addOneFunc(n)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := add_one(1);
    expect t0 == 2;
  }
}"""

_ADDONE_IMPL = _ADDONE_SPEC.replace(
    "    assume {:axiom} false; // YOUR CODE HERE",
    "    result := n + 1;",
)

_ADDONE_BAD_REWRITE = "def add_one(n__):\n  return n__ + 2\n"

T_ADDONE = ScriptedTask(
    task=BenchTask(
        task_id="mini/5-add-one",
        prompt='def add_one(n: int) -> int:\n    """Return n plus one.\n    >>> add_one(1)\n    2\n    """\n',
        entry_point="add_one",
        canonical_tests="def check(candidate):\n    assert candidate(1) == 2\n    assert candidate(5) == 6\n",
        options={"postprocess": True},
    ),
    script=[
        (Purpose.SPEC_GEN, _fenced(_ADDONE_SPEC)),
        (Purpose.SUMMARY, _summary("add_one(n)", "It increments the input by one.")),
        (Purpose.RECONSTRUCT, _fenced(_vary(_ADDONE_SPEC))),
        (Purpose.EQUIV_JUDGE, _JUDGE_OK),
        (Purpose.IMPL_GEN, _fenced(_ADDONE_IMPL)),
        (Purpose.POSTPROCESS, _fenced_py(_ADDONE_BAD_REWRITE)),
    ],
)

ALL_TASKS: list[ScriptedTask] = [T_DOUBLE, T_SUMTO, T_TRIPLE, T_TAGPOINTS, T_SCALEUP, T_ADDONE]

EXPECTED_OUTCOMES = {
    "mini/0-double": {"passed": True, "converged": True, "failure_class": None},
    "mini/1-sum-to": {"passed": False, "converged": False, "failure_class": "NoVerifiedCode"},
    "mini/2-triple": {"passed": False, "converged": True, "failure_class": "WrongAlgorithm"},
    "mini/3-tag-points": {"passed": False, "converged": True, "failure_class": "InteropFailure"},
    "mini/4-scale-up": {"passed": True, "converged": True, "failure_class": None},
    "mini/5-add-one": {"passed": True, "converged": True, "failure_class": None},
}


def cassette_name(task_id: str) -> str:
    return f"{task_id.replace('/', '_')}.jsonl"


def build_mini_suite(out_dir: Path | str, toolchain: Optional[ToolchainConfig] = None) -> tuple[Path, Path]:
    """Write tasks.jsonl and cassettes/ by recording real pipeline runs."""
    out = Path(out_dir)
    cassette_dir = out / "cassettes"
    cassette_dir.mkdir(parents=True, exist_ok=True)

    tasks_path = out / "tasks.jsonl"
    with open(tasks_path, "w", encoding="utf-8") as fh:
        for scripted in ALL_TASKS:
            task = scripted.task
            fh.write(
                json.dumps(
                    {
                        "task_id": task.task_id,
                        "prompt": task.prompt,
                        "entry_point": task.entry_point,
                        "test": task.canonical_tests,
                        "options": task.options,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    for scripted in ALL_TASKS:
        path = cassette_dir / cassette_name(scripted.task.task_id)
        if path.exists():
            path.unlink()
        engine, backend = recording_engine(
            scripted.script, path, toolchain=toolchain, synth_budget=SYNTH_BUDGET
        )
        run_one_task(engine, scripted.task)
        backend.assert_exhausted()
    return tasks_path, cassette_dir


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="build the mini benchmark suite")
    parser.add_argument("--out", default="mini-suite")
    args = parser.parse_args(argv)
    tasks_path, cassette_dir = build_mini_suite(args.out)
    print(f"wrote {tasks_path} and {cassette_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
