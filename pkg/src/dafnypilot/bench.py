"""Benchmark harness: run the pipeline non-interactively and score it.

Tasks arrive as JSONL (task_id, prompt, entry_point, test, plus an optional
options object for authored suites). Each task runs the full pipeline with
the agreement step fired programmatically after the first draft — the
consistency verdict is still computed and recorded — then the canonical
tests run against the shim-wrapped entry in a subprocess. Failures are
data, never suite-level errors; scoring is exact rational arithmetic.
"""

from __future__ import annotations

import enum
import json
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from . import delivery as delivery_mod
from . import interop
from .delivery import DeliveryError
from .engine import Engine
from .spec_loop import SpecNonConvergence, draft_specification
from .stubdafny.pycompile import mangle_decl
from .synth_loop import SynthNonConvergence, synthesize

DEFAULT_TASK_TIME_CAP = 600.0  # seconds of wall clock per task
DEFAULT_WORKERS = 4


class BenchError(Exception):
    pass


class ParseError(BenchError):
    def __init__(self, path, lineno: int, detail: str):
        super().__init__(f"{path}:{lineno}: {detail}")
        self.lineno = lineno


class DuplicateTaskId(BenchError):
    pass


class FailureClass(str, enum.Enum):
    NO_VERIFIED_CODE = "NoVerifiedCode"
    WRONG_ALGORITHM = "WrongAlgorithm"
    AMBIGUOUS_PROMPT = "AmbiguousPrompt"
    INTEROP_FAILURE = "InteropFailure"


@dataclass(frozen=True)
class BenchTask:
    task_id: str
    prompt: str
    entry_point: str
    canonical_tests: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BenchResult:
    task_id: str
    converged: bool
    passed: bool
    attempts_used: int
    failure_class: Optional[FailureClass]
    wall_time: float
    consistency: str = "unchecked"
    detail: str = ""

    def __post_init__(self) -> None:
        if self.passed and not self.converged:
            raise ValueError("passed implies converged")
        if (self.failure_class is None) != self.passed:
            raise ValueError("failure_class present iff not passed")

    def to_json(self) -> str:
        record = {
            "task_id": self.task_id,
            "converged": self.converged,
            "passed": self.passed,
            "attempts_used": self.attempts_used,
            "failure_class": self.failure_class.value if self.failure_class else None,
            "wall_time": round(self.wall_time, 3),
            "consistency": self.consistency,
            "detail": self.detail,
        }
        return json.dumps(record, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "BenchResult":
        record = json.loads(line)
        failure = record.get("failure_class")
        return cls(
            task_id=record["task_id"],
            converged=record["converged"],
            passed=record["passed"],
            attempts_used=record.get("attempts_used", 0),
            failure_class=FailureClass(failure) if failure else None,
            wall_time=record.get("wall_time", 0.0),
            consistency=record.get("consistency", "unchecked"),
            detail=record.get("detail", ""),
        )


@dataclass(frozen=True)
class BenchReport:
    n_tasks: int
    n_converged: int
    n_passed: int
    pass_rate: Fraction
    fallback_pass_rate: Fraction
    native_rate_assumed: Fraction
    config_snapshot: dict

    def to_dict(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "n_converged": self.n_converged,
            "n_passed": self.n_passed,
            "pass_rate": round(float(self.pass_rate), 3),
            "fallback_pass_rate": round(float(self.fallback_pass_rate), 3),
            "native_rate_assumed": round(float(self.native_rate_assumed), 3),
            "pass_rate_exact": f"{self.pass_rate.numerator}/{self.pass_rate.denominator}",
            "fallback_exact": f"{self.fallback_pass_rate.numerator}/{self.fallback_pass_rate.denominator}",
            "config": self.config_snapshot,
        }


def load_tasks(path: Path | str) -> list[BenchTask]:
    """Parse a JSONL task file; duplicate ids and bad records are refused."""
    tasks: list[BenchTask] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"not JSON: {exc}") from exc
            missing = {"task_id", "prompt", "entry_point", "test"} - record.keys()
            if missing:
                raise ParseError(path, lineno, f"missing fields {sorted(missing)}")
            task_id = record["task_id"]
            if task_id in seen:
                raise DuplicateTaskId(task_id)
            if record["entry_point"] not in record["prompt"]:
                raise ParseError(path, lineno, f"entry_point {record['entry_point']!r} not in prompt")
            seen.add(task_id)
            tasks.append(
                BenchTask(
                    task_id=task_id,
                    prompt=record["prompt"],
                    entry_point=record["entry_point"],
                    canonical_tests=record["test"],
                    options=record.get("options", {}),
                )
            )
    return tasks


_RUNNER_TEMPLATE = '''import sys
import traceback

try:
    from native import {entry} as candidate
except ImportError:
    import impl
    candidate = impl.Default.{mangled}

{canonical_tests}

try:
    check(candidate)
except AssertionError:
    print("BENCH:ASSERT_FAIL")
    traceback.print_exc()
    sys.exit(3)
except BaseException:
    print("BENCH:BOUNDARY_ERROR")
    traceback.print_exc()
    sys.exit(4)
print("BENCH:PASS")
sys.exit(0)
'''


def run_canonical_tests(deliverable: delivery_mod.Deliverable, task: BenchTask, timeout: float = 60.0) -> int:
    """Exit code of the canonical test run: 0 pass, 3 assert-fail, 4 boundary."""
    runner = _RUNNER_TEMPLATE.format(
        entry=task.entry_point,
        mangled=mangle_decl(task.entry_point),
        canonical_tests=task.canonical_tests,
    )
    with tempfile.TemporaryDirectory(prefix="dafnypilot-bench-") as scratch:
        root = deliverable.write_to(scratch)
        (root / "runner.py").write_text(runner, encoding="utf-8")
        try:
            proc = subprocess.run(
                [sys.executable, "runner.py"],
                cwd=root,
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            return 4
        return proc.returncode


def classify_failure(converged: bool, canonical_exit: Optional[int], annotation: Optional[str] = None) -> FailureClass:
    """Map an unpassed task to the failure taxonomy.

    AmbiguousPrompt is applied only from a manual annotation; machine
    heuristics cannot detect intent gaps.
    """
    if annotation == "ambiguous":
        return FailureClass.AMBIGUOUS_PROMPT
    if not converged:
        return FailureClass.NO_VERIFIED_CODE
    if canonical_exit == 3:
        return FailureClass.WRONG_ALGORITHM
    return FailureClass.INTEROP_FAILURE


def run_one_task(engine: Engine, task: BenchTask, time_cap: float = DEFAULT_TASK_TIME_CAP) -> BenchResult:
    started = time.monotonic()
    annotation = task.options.get("annotated_failure")

    def out_of_time() -> bool:
        return time.monotonic() - started > time_cap

    consistency = "unchecked"
    attempts = 0
    try:
        draft = draft_specification(engine, task.prompt)  # agreement fired programmatically
        consistency = draft.consistency.status.value
        if out_of_time():
            raise SynthNonConvergence([])
        prog = synthesize(engine, draft)
        attempts = prog.attempts_used
        if out_of_time():
            raise SynthNonConvergence([])
        deliverable = engine.deliver(prog, postprocess=task.options.get("postprocess", False))
    except (SpecNonConvergence, SynthNonConvergence) as exc:
        attempts = len(getattr(exc, "history", []) or [])
        return BenchResult(
            task_id=task.task_id,
            converged=False,
            passed=False,
            attempts_used=attempts,
            failure_class=classify_failure(False, None, annotation),
            wall_time=time.monotonic() - started,
            consistency=consistency,
            detail=str(exc),
        )
    except DeliveryError as exc:
        return BenchResult(
            task_id=task.task_id,
            converged=True,
            passed=False,
            attempts_used=attempts,
            failure_class=classify_failure(True, 4, annotation),
            wall_time=time.monotonic() - started,
            consistency=consistency,
            detail=str(exc),
        )

    exit_code = run_canonical_tests(deliverable, task)
    passed = exit_code == 0
    return BenchResult(
        task_id=task.task_id,
        converged=True,
        passed=passed,
        attempts_used=attempts,
        failure_class=None if passed else classify_failure(True, exit_code, annotation),
        wall_time=time.monotonic() - started,
        consistency=consistency,
        detail="" if passed else f"canonical exit {exit_code}",
    )


def run_benchmark(
    tasks: list[BenchTask],
    engine_factory: Callable[[BenchTask], Engine],
    out_dir: Optional[Path | str] = None,
    workers: int = DEFAULT_WORKERS,
    time_cap: float = DEFAULT_TASK_TIME_CAP,
) -> list[BenchResult]:
    """Run every task, resumably; results merge in task order.

    A crashed run restarted with the same out_dir skips completed task ids
    (results.jsonl is the ledger) and yields the same final report under
    replay.
    """
    done: dict[str, BenchResult] = {}
    results_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        results_path = out / "results.jsonl"
        if results_path.exists():
            for line in results_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    result = BenchResult.from_json(line)
                    done[result.task_id] = result

    pending = [t for t in tasks if t.task_id not in done]

    def run(task: BenchTask) -> BenchResult:
        return run_one_task(engine_factory(task), task, time_cap=time_cap)

    if pending:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for result in pool.map(run, pending):
                done[result.task_id] = result
                if results_path is not None:
                    with open(results_path, "a", encoding="utf-8") as fh:
                        fh.write(result.to_json() + "\n")

    return [done[t.task_id] for t in tasks]


def score_counts(n_tasks: int, n_converged: int, n_passed: int, native_rate: float | Fraction, config_snapshot: Optional[dict] = None) -> BenchReport:
    """Exact-rational scoring from the three counters.

    fallback models answering every non-converged task with native
    generation at the assumed native pass rate.
    """
    native = Fraction(native_rate).limit_denominator(10**6)
    if not 0 <= native <= 1:
        raise ValueError("native_rate must be in [0, 1]")
    if not 0 <= n_passed <= n_converged <= n_tasks:
        raise ValueError("need 0 <= n_passed <= n_converged <= n_tasks")
    if n_tasks == 0:
        pass_rate = Fraction(0)
        fallback = native
    else:
        pass_rate = Fraction(n_passed, n_tasks)
        fallback = (Fraction(n_passed) + native * (n_tasks - n_converged)) / n_tasks
    return BenchReport(
        n_tasks=n_tasks,
        n_converged=n_converged,
        n_passed=n_passed,
        pass_rate=pass_rate,
        fallback_pass_rate=fallback,
        native_rate_assumed=native,
        config_snapshot=config_snapshot or {},
    )


def score(results: list[BenchResult], native_rate: float | Fraction, config_snapshot: Optional[dict] = None) -> BenchReport:
    return score_counts(
        n_tasks=len(results),
        n_converged=sum(1 for r in results if r.converged),
        n_passed=sum(1 for r in results if r.passed),
        native_rate=native_rate,
        config_snapshot=config_snapshot,
    )


def write_report(report: BenchReport, out_dir: Path | str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path
