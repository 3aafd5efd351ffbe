"""Command-line surface: one-shot run, bench run, config loading."""

import json

from click.testing import CliRunner

from dafnypilot.fixtures.demo import CORRECT_TASK
from dafnypilot.service.cli import main
from dafnypilot.service.config import load_config


class TestConfig:
    def test_defaults(self):
        cfg = load_config(env={})
        assert cfg.llm_mode == "replay"
        assert cfg.spec_budget == 5

    def test_yaml_plus_env_plus_override(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("spec_budget: 7\nllm_mode: record\n")
        cfg = load_config(
            path, env={"DAFNYPILOT_SPEC_BUDGET": "9"}, llm_mode="replay"
        )
        assert cfg.spec_budget == 9  # env beats file
        assert cfg.llm_mode == "replay"  # explicit override beats env

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("not_a_knob: 1\n")
        try:
            load_config(path, env={})
            assert False, "should reject"
        except ValueError:
            pass

    def test_toolchain_from_config(self):
        cfg = load_config(env={"DAFNYPILOT_VERIFY_TIMEOUT": "11.5"})
        assert cfg.toolchain().verify_timeout == 11.5


class TestRunCommand:
    def test_one_shot_pipeline(self, demo_cassette, tmp_path):
        prompt = tmp_path / "task.txt"
        prompt.write_text(CORRECT_TASK)
        out = tmp_path / "solution"
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "run",
                "--llm-mode",
                "replay",
                "--cassette",
                str(demo_cassette),
                "--prompt-file",
                str(prompt),
                "--auto-accept",
                "--out",
                str(out),
                "--data-dir",
                str(tmp_path / "data"),
            ],
        )
        assert result.exit_code == 0, result.output
        assert (out / "impl.py").exists()
        assert (out / "tests.py").exists()
        assert (out / "PROVENANCE.json").exists()


class TestBenchCommand:
    def test_bench_run_writes_results_and_report(self, mini_suite, tmp_path):
        tasks_path, cassette_dir = mini_suite
        out = tmp_path / "bench-out"
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "bench",
                "run",
                "--tasks",
                str(tasks_path),
                "--llm-mode",
                "replay",
                "--cassette-dir",
                str(cassette_dir),
                "--native-rate",
                "0.86",
                "--out",
                str(out),
                "--workers",
                "3",
                "--data-dir",
                str(tmp_path / "data"),
            ],
            env={"DAFNYPILOT_SYNTH_MAX_ATTEMPTS": "2"},
        )
        assert result.exit_code == 0, result.output
        results = [json.loads(l) for l in (out / "results.jsonl").read_text().splitlines()]
        assert len(results) == 6
        report = json.loads((out / "report.json").read_text())
        assert report["n_tasks"] == 6
        assert report["n_passed"] == 3
        assert report["config"]["native_rate"] == 0.86
        assert "mini/1-sum-to: NoVerifiedCode" in result.output
