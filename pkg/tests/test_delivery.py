"""Packaging: tests, compile, self-run gate, postprocess gating, provenance."""

import json

import pytest

from dafnypilot.delivery import (
    DeliveryError,
    assemble_deliverable,
    inject_region_markers,
    locate_components,
    postprocess_readability,
)
from dafnypilot.engine import Engine
from dafnypilot.fixtures.demo import CORRECT_TASK, IMPL_CORRECT
from dafnypilot.llm_gateway import Purpose, extract_code_block
from dafnypilot.spec_loop import draft_specification
from dafnypilot.synth_loop import VerifiedProgram, synthesize
from tests.test_spec_loop import scripted_engine

IMPL_SOURCE = extract_code_block(IMPL_CORRECT, "dafny")

GOOD_REWRITE = """def fibfib(n__):
  if n__ <= 1:
    return 0
  if n__ == 2:
    return 1
  a, b, c = 0, 0, 1
  for _ in range(3, n__ + 1):
    a, b, c = b, c, a + b + c
  return c"""

BAD_REWRITE = """def fibfib(n__):
  if n__ <= 1:
    return 0
  return n__"""


def fibfib_program():
    return VerifiedProgram(IMPL_SOURCE, spec_revision=1, attempts_used=1)


@pytest.fixture()
def delivered(demo_engine):
    draft = draft_specification(demo_engine, CORRECT_TASK)
    prog = synthesize(demo_engine, draft)
    return demo_engine.deliver(prog)


class TestAssemble:
    def test_fibfib_deliverable_contents(self, delivered):
        tests = delivered.files["tests.py"]
        assert "Default.fibfib(1)" in tests and "== (0)" in tests
        assert "Default.fibfib(5)" in tests and "== (4)" in tests
        assert "Default.fibfib(8)" in tests and "== (24)" in tests
        assert "fibfib_func(" in tests  # generated impl-vs-spec equivalence
        assert "PROVENANCE.json" in delivered.files

    def test_deliverable_self_run_exits_zero(self, delivered, demo_engine):
        result = demo_engine.driver.run_target(delivered.files, entry="tests.py")
        assert result.exit_code == 0

    def test_all_four_components_located(self, delivered):
        assert set(delivered.components) == {
            "imperative_impl",
            "functional_spec",
            "user_tests",
            "generated_tests",
        }
        assert delivered.components["imperative_impl"].file == "impl.py"
        assert delivered.components["user_tests"].file == "tests.py"

    def test_provenance_flags(self, delivered, demo_engine):
        provenance = json.loads(delivered.files["PROVENANCE.json"])
        assert provenance["verified_in_dafny"] is True
        assert provenance["postprocessed_unverified"] is False
        assert provenance["testgen_degraded"] is False
        assert provenance["asset_version"] == demo_engine.assets.version
        assert provenance["dafny_version"] == demo_engine.driver.cfg.dafny_version

    def test_testgen_degradation_flagged(self, fake_driver, assets, demo_engine):
        from dafnypilot.dafny_driver import TestgenTimeout

        class DegradingDriver:
            cfg = demo_engine.driver.cfg

            def generate_tests(self, source):
                raise TestgenTimeout("seeded")

            def compile(self, source):
                return demo_engine.driver.compile(source)

            def run_target(self, files, entry="tests.py"):
                return demo_engine.driver.run_target(files, entry=entry)

        engine = Engine(gateway=None, driver=DegradingDriver(), assets=assets)
        deliverable = assemble_deliverable(engine, fibfib_program())
        assert deliverable.provenance["testgen_degraded"] is True
        assert "fibfib_func(" not in deliverable.files["tests.py"].replace(
            "# @@region", ""
        ) or "{:test}" not in deliverable.files["tests.py"]
        # user tests still present and green
        assert "Default.fibfib(8)" in deliverable.files["tests.py"]

    def test_failing_self_run_is_gated(self, demo_engine, assets):
        seeded = IMPL_SOURCE.replace("expect t2 == 24;", "expect t2 == 23;")
        engine = Engine(gateway=None, driver=demo_engine.driver, assets=assets)
        with pytest.raises(DeliveryError):
            assemble_deliverable(engine, VerifiedProgram(seeded, 1, 1))


class TestRegionMachinery:
    def test_markers_injected_before_components(self):
        marked = inject_region_markers(IMPL_SOURCE)
        assert "// @@region:imperative_impl@@" in marked
        assert "// @@region:functional_spec@@" in marked
        assert "// @@region:user_tests@@" in marked
        assert marked.index("functional_spec") < marked.index("imperative_impl")

    def test_locate_components_from_markers(self):
        files = {
            "impl.py": "# @@region:functional_spec@@\ndef f():\n    pass\n# @@region:imperative_impl@@\ndef g():\n    pass\n",
        }
        regions = locate_components(files)
        assert regions["functional_spec"].start_line == 1
        assert regions["functional_spec"].end_line == 3
        assert regions["imperative_impl"].start_line == 4
        assert regions["imperative_impl"].end_line == len(files["impl.py"].split("\n"))

    def test_symbol_fallback_when_markers_missing(self):
        files = {"impl.py": "import _dafny\n\ndef fibfib(n):\n    return 0\n"}
        regions = locate_components(files)
        assert "imperative_impl" in regions


class TestPostprocess:
    def _postprocess_engine(self, delivered_engine, response):
        return scripted_engine(
            [(Purpose.POSTPROCESS, response)], driver=delivered_engine.driver
        )

    def test_good_rewrite_swapped_in_and_flagged(self, delivered, demo_engine):
        engine = self._postprocess_engine(demo_engine, f"```python\n{GOOD_REWRITE}\n```")
        result = postprocess_readability(engine, delivered)
        assert result.provenance["postprocessed_unverified"] is True
        impl = result.files["impl.py"]
        assert "a, b, c = 0, 0, 1" in impl
        assert engine.driver.run_target(result.files, entry="tests.py").exit_code == 0

    def test_failing_rewrite_keeps_original(self, delivered, demo_engine):
        engine = self._postprocess_engine(demo_engine, f"```python\n{BAD_REWRITE}\n```")
        result = postprocess_readability(engine, delivered)
        assert result.provenance["postprocessed_unverified"] is False
        assert result.files["impl.py"] == delivered.files["impl.py"]

    def test_tests_are_locked_under_postprocess(self, delivered, demo_engine):
        engine = self._postprocess_engine(demo_engine, f"```python\n{GOOD_REWRITE}\n```")
        result = postprocess_readability(engine, delivered)
        assert result.files["tests.py"] == delivered.files["tests.py"]

    def test_opt_out_leaves_deliverable_byte_identical(self, demo_engine):
        draft = draft_specification(demo_engine, CORRECT_TASK)
        prog = synthesize(demo_engine, draft)
        plain = demo_engine.deliver(prog, postprocess=False)
        again = demo_engine.deliver(prog, postprocess=False)
        assert plain.files == again.files
