"""The scripted demo conversation: FibFib with a typo, corrected, delivered.

The user's first prompt carries an n-4 typo that makes the recursive
definition ill-founded; the first scripted spec fails verification, the
retry invents a fourth base case (which verifies but is not what the user
meant), the summary surfaces that surprise, the user corrects the typo, and
the corrected spec sails through to a delivered implementation.

A second script covers the same task stated correctly from the start.
Build both into one cassette with `python -m dafnypilot.fixtures.demo`.
"""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Optional

from . import recording_engine
from ..dafny_driver import ToolchainConfig
from ..llm_gateway import Purpose
from ..spec_loop import draft_specification, refine_specification
from ..synth_loop import synthesize

TYPO_TASK = """Please write a Python function `fibfib(n: int)` to efficiently
compute the n-th element of the FibFib number sequence.

The FibFib number sequence is a sequence similar to the Fibbonacci
sequence that's defined as follows:
fibfib(0) == 0
fibfib(1) == 0
fibfib(2) == 1
fibfib(n) == fibfib(n-1) + fibfib(n-2) + fibfib(n-4).

The function `fibfib` should satisfy the following test cases:
>>> fibfib(1)
0
>>> fibfib(5)
4
>>> fibfib(8)
24
"""

CORRECT_TASK = TYPO_TASK.replace("fibfib(n-4)", "fibfib(n-3)")

CORRECTION_FEEDBACK = (
    "Oops, I made a mistake. fibfib(n) should be equal to "
    "fibfib(n-1) + fibfib(n-2) + fibfib(n-3) instead."
)

SPEC_TYPO_V1 = """module M {
  function fibfibFunc(n: int): int
    requires n >= 0
    decreases n
  {
    match n
    case 0 => 0
    case 1 => 0
    case 2 => 1
    case _ => fibfibFunc(n-1) + fibfibFunc(n-2) + fibfibFunc(n-4)
  }

  /*
  Compute the n-th element of the FibFib number sequence efficiently.
  */
  method {:testEntry} fibfib(n: int) returns (result: int)
    requires n >= 0
    ensures result == fibfibFunc(n)
  {
    assume {:axiom} false; // YOUR CODE HERE
  }

  method Main() {
    var t0 := fibfib(1);
    expect t0 == 0;
    var t1 := fibfib(5);
    expect t1 == 4;
    var t2 := fibfib(8);
    expect t2 == 24;
  }
}"""

# the retry invents a fourth base case so the n-4 recursion is well-founded
SPEC_TYPO_V2 = SPEC_TYPO_V1.replace(
    "    case 2 => 1\n", "    case 2 => 1\n    case 3 => 1\n"
)

SPEC_CORRECT = SPEC_TYPO_V1.replace("fibfibFunc(n-4)", "fibfibFunc(n-3)")

# reconstructions differ cosmetically from the originals so the judge runs
RECON_TYPO_V2 = SPEC_TYPO_V2.replace("var t0", "var a0").replace("t0 ==", "a0 ==").replace(
    "var t1", "var a1"
).replace("t1 ==", "a1 ==").replace("var t2", "var a2").replace("t2 ==", "a2 ==")

RECON_CORRECT = SPEC_CORRECT.replace("var t0", "var a0").replace("t0 ==", "a0 ==").replace(
    "var t1", "var a1"
).replace("t1 ==", "a1 ==").replace("var t2", "var a2").replace("t2 ==", "a2 ==")

SUMMARY_TYPO_V2 = """Thank you for providing the task. You asked for a Python function fibfib(n: int) that efficiently computes the n-th element of the FibFib number sequence, and you provided the definition of the sequence along with some test cases.

The fibfib method takes a non-negative integer n as input and returns the n-th term of a modified Fibonacci-like sequence. This sequence is defined such that the first two terms are 0, the next two terms are 1, and each subsequent term is the sum of the previous term, the term before that, and the term four steps back. For any valid input, the method returns exactly the value computed by a recursive reference definition of this sequence.

Key differences:
1. It explicitly states that the input must be non-negative.
2. It clarifies that the first four terms of the sequence are 0, 0, 1, 1: a fourth base case fibfib(3) == 1 that was implicit in the original definition.
3. It pins the result to a recursive reference definition, which implies a correct but potentially inefficient fallback; your function is still meant to be efficient."""

SUMMARY_CORRECT = """Thank you for the correction. The FibFib number sequence is now defined as: the first two terms are 0, the third term is 1, and every later term is the sum of the three preceding terms.

The fibfib method takes a non-negative integer n and returns an integer equal to the value of a recursive reference definition of this corrected sequence for the same input. The reference definition is guaranteed to terminate because its argument shrinks with every recursive step.

Key differences:
1. It explicitly states that the input must be non-negative.
2. It pins the result to a recursive reference definition of the sequence, which implies a correct but potentially inefficient fallback; your function is still meant to be efficient.
3. It guarantees termination of the reference definition, which the original prompt did not mention."""

JUDGE_EQUIVALENT_TYPO = """EQUIVALENT
Both programs define the same entry method over non-negative integers, the same four base cases with the same four-step recurrence, and identical test cases; only local variable names differ."""

JUDGE_EQUIVALENT_CORRECT = """EQUIVALENT
Both programs define the same entry method over non-negative integers, the same three base cases with the same three-term recurrence, and identical test cases; only local variable names differ."""

IMPL_CORRECT = """Here is the complete program with an efficient iterative implementation
and the annotations needed for every check to go through:

```dafny
module M {
  function fibfibFunc(n: int): int
    requires n >= 0
    decreases n
  {
    match n
    case 0 => 0
    case 1 => 0
    case 2 => 1
    case _ => fibfibFunc(n-1) + fibfibFunc(n-2) + fibfibFunc(n-3)
  }

  /*
  Compute the n-th element of the FibFib number sequence efficiently.
  */
  method {:testEntry} fibfib(n: int) returns (result: int)
    requires n >= 0
    ensures result == fibfibFunc(n)
  {
    if n <= 1 { result := 0; return; }
    if n == 2 { result := 1; return; }
    var a, b, c := 0, 0, 1;
    var i := 3;
    while i <= n
      invariant 3 <= i <= n + 1
      invariant a == fibfibFunc(i - 3)
      invariant b == fibfibFunc(i - 2)
      invariant c == fibfibFunc(i - 1)
      decreases n - i
    {
      var t := a + b + c;
      a := b;
      b := c;
      c := t;
      i := i + 1;
    }
    result := c;
  }

  method Main() {
    var t0 := fibfib(1);
    expect t0 == 0;
    var t1 := fibfib(5);
    expect t1 == 4;
    var t2 := fibfib(8);
    expect t2 == 24;
  }
}
```"""


def _fenced(source: str, prose: str = "Here is the specification:") -> str:
    return f"{prose}\n\n```dafny\n{source}\n```"


TYPO_SESSION_SCRIPT = [
    (Purpose.SPEC_GEN, _fenced(SPEC_TYPO_V1)),
    (Purpose.SPEC_GEN, _fenced(SPEC_TYPO_V2, "Corrected so every recursive call stays in range:")),
    (Purpose.SUMMARY, SUMMARY_TYPO_V2),
    (Purpose.RECONSTRUCT, _fenced(RECON_TYPO_V2)),
    (Purpose.EQUIV_JUDGE, JUDGE_EQUIVALENT_TYPO),
    # user correction arrives here
    (Purpose.SPEC_GEN, _fenced(SPEC_CORRECT, "Updated to the corrected recurrence:")),
    (Purpose.SUMMARY, SUMMARY_CORRECT),
    (Purpose.RECONSTRUCT, _fenced(RECON_CORRECT)),
    (Purpose.EQUIV_JUDGE, JUDGE_EQUIVALENT_CORRECT),
    # accept fires the implementation loop
    (Purpose.IMPL_GEN, IMPL_CORRECT),
]

CORRECT_SESSION_SCRIPT = [
    (Purpose.SPEC_GEN, _fenced(SPEC_CORRECT)),
    (Purpose.SUMMARY, SUMMARY_CORRECT),
    (Purpose.RECONSTRUCT, _fenced(RECON_CORRECT)),
    (Purpose.EQUIV_JUDGE, JUDGE_EQUIVALENT_CORRECT),
    (Purpose.IMPL_GEN, IMPL_CORRECT),
]


def build_demo_cassette(path: Path | str, toolchain: Optional[ToolchainConfig] = None) -> Path:
    """Record both demo scripts into one cassette by running the pipeline."""
    path = Path(path)
    if path.exists():
        path.unlink()

    engine, backend = recording_engine(TYPO_SESSION_SCRIPT, path, toolchain=toolchain)
    draft = draft_specification(engine, TYPO_TASK)
    assert "fourth base case" in draft.nl_summary or "fourth base case" in draft.differences_note
    revised = refine_specification(engine, draft, CORRECTION_FEEDBACK)
    synthesize(engine, revised)
    backend.assert_exhausted()

    engine, backend = recording_engine(CORRECT_SESSION_SCRIPT, path, toolchain=toolchain)
    fresh = draft_specification(engine, CORRECT_TASK)
    synthesize(engine, fresh)
    backend.assert_exhausted()
    return path


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="build the demo cassette")
    parser.add_argument("--out", default="demo-cassette.jsonl")
    args = parser.parse_args(argv)
    built = build_demo_cassette(args.out)
    print(f"wrote {built}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
