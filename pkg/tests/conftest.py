"""Shared fixtures: prebuilt cassettes, engines, and a fast fake driver."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from dafnypilot.dafny_driver import (
    RunResult,
    ToolchainConfig,
    VerifyOutcome,
    VerifyStatus,
)
from dafnypilot.engine import Engine, build_engine
from dafnypilot.fixtures import demo as demo_fixture
from dafnypilot.fixtures import minibench as minibench_fixture
from dafnypilot.prompt_kit import load_assets


@pytest.fixture(scope="session")
def toolchain() -> ToolchainConfig:
    return ToolchainConfig()


@pytest.fixture(scope="session")
def assets():
    return load_assets()


@pytest.fixture(scope="session")
def demo_cassette(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("demo") / "demo-cassette.jsonl"
    return demo_fixture.build_demo_cassette(path)


@pytest.fixture(scope="session")
def mini_suite(tmp_path_factory) -> tuple[Path, Path]:
    out = tmp_path_factory.mktemp("minisuite")
    return minibench_fixture.build_mini_suite(out)


@pytest.fixture()
def demo_engine(demo_cassette) -> Engine:
    return build_engine(llm_mode="replay", cassette_path=demo_cassette)


_FAKE_IMPL = "import _dafny\n\n\nclass Default:\n  pass\n"
_FAKE_TESTS = "import sys\n\n\ndef main():\n  pass\n\n\nif __name__ == '__main__':\n  main()\n  sys.exit(0)\n"


@dataclass
class FakeDriver:
    """In-process driver double: everything verifies, compiles and runs."""

    cfg: ToolchainConfig = None

    def __post_init__(self):
        if self.cfg is None:
            self.cfg = ToolchainConfig()

    def verify(self, source: str) -> VerifyOutcome:
        return VerifyOutcome(VerifyStatus.VERIFIED, (), 0.0, 0, self.cfg.dafny_version)

    def generate_tests(self, source: str) -> str:
        return ""

    def compile(self, source: str) -> dict[str, str]:
        return {"impl.py": _FAKE_IMPL, "tests.py": _FAKE_TESTS, "_dafny.py": "pass\n"}

    def run_target(self, files: dict[str, str], entry: str = "tests.py") -> RunResult:
        return RunResult(0, "", "", 0.0)


@pytest.fixture()
def fake_driver() -> FakeDriver:
    return FakeDriver()
