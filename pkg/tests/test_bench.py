"""Harness: task loading, classification, scoring, resumability."""

import json
from fractions import Fraction

import pytest

from dafnypilot.bench import (
    BenchResult,
    DuplicateTaskId,
    FailureClass,
    ParseError,
    classify_failure,
    load_tasks,
    run_benchmark,
    score,
    score_counts,
    write_report,
)
from dafnypilot.engine import build_engine
from dafnypilot.fixtures.minibench import (
    EXPECTED_OUTCOMES,
    SYNTH_BUDGET,
    cassette_name,
)


def _task_line(i, entry="f"):
    return json.dumps(
        {
            "task_id": f"T/{i}",
            "prompt": f"def {entry}(n):\n    \"\"\"doc\n    >>> {entry}(1)\n    1\n    \"\"\"\n",
            "entry_point": entry,
            "test": "def check(candidate):\n    pass\n",
        }
    )


class TestLoadTasks:
    def test_full_sized_file_loads_every_task(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        path.write_text("\n".join(_task_line(i) for i in range(164)) + "\n")
        assert len(load_tasks(path)) == 164

    def test_empty_file(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        path.write_text("")
        assert load_tasks(path) == []

    def test_duplicate_task_id(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        path.write_text(_task_line(1) + "\n" + _task_line(1) + "\n")
        with pytest.raises(DuplicateTaskId):
            load_tasks(path)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        path.write_text(_task_line(1) + "\nnot json\n")
        with pytest.raises(ParseError) as err:
            load_tasks(path)
        assert err.value.lineno == 2

    def test_entry_point_must_appear_in_prompt(self, tmp_path):
        record = json.loads(_task_line(1))
        record["entry_point"] = "elsewhere"
        path = tmp_path / "tasks.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(ParseError):
            load_tasks(path)


class TestClassifyFailure:
    def test_non_convergence(self):
        assert classify_failure(False, None) is FailureClass.NO_VERIFIED_CODE

    def test_boundary_error(self):
        assert classify_failure(True, 4) is FailureClass.INTEROP_FAILURE

    def test_assert_failure(self):
        assert classify_failure(True, 3) is FailureClass.WRONG_ALGORITHM

    def test_manual_annotation_wins(self):
        assert classify_failure(True, 3, "ambiguous") is FailureClass.AMBIGUOUS_PROMPT


class TestScore:
    def test_reported_evaluation_counts(self):
        report = score_counts(164, 144, 127, 0.86)
        assert report.pass_rate == Fraction(127, 164)
        assert round(float(report.pass_rate), 3) == 0.774
        assert round(float(report.fallback_pass_rate), 3) == 0.879

    def test_pure_fallback(self):
        report = score_counts(10, 0, 0, 0.86)
        assert report.pass_rate == 0
        assert report.fallback_pass_rate == Fraction(86, 100)

    def test_perfect_run(self):
        report = score_counts(7, 7, 7, 0.5)
        assert report.pass_rate == 1
        assert report.fallback_pass_rate == 1

    def test_invariant_chain_enforced(self):
        with pytest.raises(ValueError):
            score_counts(10, 5, 7, 0.86)
        with pytest.raises(ValueError):
            score_counts(10, 11, 5, 0.86)
        with pytest.raises(ValueError):
            score_counts(10, 5, 5, 1.5)

    def test_score_aggregates_results(self):
        results = [
            BenchResult("a", True, True, 1, None, 0.1),
            BenchResult("b", True, False, 2, FailureClass.WRONG_ALGORITHM, 0.1),
            BenchResult("c", False, False, 2, FailureClass.NO_VERIFIED_CODE, 0.1),
        ]
        report = score(results, 0.5)
        assert (report.n_tasks, report.n_converged, report.n_passed) == (3, 2, 1)
        assert report.fallback_pass_rate == Fraction(1, 2)  # (1 + 0.5*1)/3

    def test_result_invariants(self):
        with pytest.raises(ValueError):
            BenchResult("x", False, True, 1, None, 0.0)
        with pytest.raises(ValueError):
            BenchResult("x", True, True, 1, FailureClass.WRONG_ALGORITHM, 0.0)


def mini_engine_factory(cassette_dir):
    def factory(task):
        return build_engine(
            llm_mode="replay",
            cassette_path=cassette_dir / cassette_name(task.task_id),
            synth_budget=SYNTH_BUDGET,
        )

    return factory


class TestRunBenchmark:
    def test_three_scenario_replay_suite(self, mini_suite, tmp_path):
        """pass / non-converge / wrong-output cassettes classify exactly."""
        tasks_path, cassette_dir = mini_suite
        tasks = [t for t in load_tasks(tasks_path) if t.task_id in (
            "mini/0-double", "mini/1-sum-to", "mini/2-triple",
        )]
        results = run_benchmark(tasks, mini_engine_factory(cassette_dir), workers=2)
        by_id = {r.task_id: r for r in results}
        assert by_id["mini/0-double"].passed
        assert by_id["mini/1-sum-to"].failure_class is FailureClass.NO_VERIFIED_CODE
        assert not by_id["mini/1-sum-to"].converged
        assert by_id["mini/2-triple"].failure_class is FailureClass.WRONG_ALGORITHM

    def test_empty_task_list(self):
        assert run_benchmark([], lambda t: None) == []

    def test_interop_task_classified(self, mini_suite):
        tasks_path, cassette_dir = mini_suite
        tasks = [t for t in load_tasks(tasks_path) if t.task_id == "mini/3-tag-points"]
        (result,) = run_benchmark(tasks, mini_engine_factory(cassette_dir), workers=1)
        assert result.failure_class is FailureClass.INTEROP_FAILURE

    def test_resume_skips_completed_and_reproduces_report(self, mini_suite, tmp_path):
        tasks_path, cassette_dir = mini_suite
        tasks = load_tasks(tasks_path)
        factory = mini_engine_factory(cassette_dir)

        out = tmp_path / "run"
        first = run_benchmark(tasks, factory, out_dir=out, workers=2)
        report_first = score(first, 0.86)

        # drop two completed entries to simulate a crash mid-run
        results_path = out / "results.jsonl"
        lines = results_path.read_text().strip().split("\n")
        results_path.write_text("\n".join(lines[:-2]) + "\n")

        second = run_benchmark(tasks, factory, out_dir=out, workers=2)
        report_second = score(second, 0.86)
        assert [r.task_id for r in second] == [t.task_id for t in tasks]
        assert report_first.to_dict() == report_second.to_dict()

    def test_report_written_with_config_snapshot(self, tmp_path):
        report = score_counts(1, 1, 1, 0.86, config_snapshot={"budget": 2})
        path = write_report(report, tmp_path)
        loaded = json.loads(path.read_text())
        assert loaded["config"] == {"budget": 2}
        assert loaded["pass_rate"] == 1.0
