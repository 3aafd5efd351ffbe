"""Phase-one loop: drafting, refinement, consistency, opacity of summaries."""

import pytest

from dafnypilot.engine import Engine
from dafnypilot.fixtures import ScriptedBackend, recording_engine
from dafnypilot.fixtures.demo import (
    CORRECT_TASK,
    CORRECTION_FEEDBACK,
    SPEC_CORRECT,
    SUMMARY_CORRECT,
    TYPO_TASK,
)
from dafnypilot.llm_gateway import Cassette, LlmGateway, Purpose
from dafnypilot.prompt_kit import load_assets
from dafnypilot.dafny_driver import Driver, ToolchainConfig
from dafnypilot.spec_loop import (
    ConsistencyStatus,
    SpecNonConvergence,
    check_consistency,
    draft_specification,
    refine_specification,
    render_user_summary,
)
from dafnypilot.engine import build_engine


def scripted_engine(script, **kwargs):
    backend = ScriptedBackend(script)
    gateway = LlmGateway(mode="record", cassette=Cassette(), live=backend)
    return Engine(
        gateway=gateway,
        driver=kwargs.pop("driver", None) or Driver(ToolchainConfig()),
        assets=load_assets(),
        **kwargs,
    )


def _fenced(source, prose="Here:"):  # model-response shape
    return f"{prose}\n\n```dafny\n{source}\n```"


class TestDraftSpecification:
    def test_correct_task_draft_carries_contract(self, demo_engine):
        draft = draft_specification(demo_engine, CORRECT_TASK)
        assert draft.revision == 1
        assert "ensures result == fibfibFunc(n)" in draft.dafny_source
        assert draft.entry_name == "fibfib"

    def test_typo_task_reports_extra_base_case(self, demo_engine):
        draft = draft_specification(demo_engine, TYPO_TASK)
        note = draft.nl_summary + draft.differences_note
        assert "fourth base case" in note
        assert "fibfib(3) == 1" in note

    def test_budget_zero_is_precondition_violation(self, demo_engine):
        with pytest.raises(ValueError):
            draft_specification(demo_engine, CORRECT_TASK, budget=0)

    def test_empty_task_rejected(self, demo_engine):
        with pytest.raises(ValueError):
            draft_specification(demo_engine, "  ")

    def test_replay_is_deterministic(self, demo_cassette):
        a = build_engine(llm_mode="replay", cassette_path=demo_cassette)
        b = build_engine(llm_mode="replay", cassette_path=demo_cassette)
        d1 = draft_specification(a, CORRECT_TASK)
        d2 = draft_specification(b, CORRECT_TASK)
        assert d1 == d2

    def test_non_convergence_carries_problems(self):
        script = [(Purpose.SPEC_GEN, "no fence at all")] * 2
        engine = scripted_engine(script)
        with pytest.raises(SpecNonConvergence) as err:
            draft_specification(engine, CORRECT_TASK, budget=2)
        assert err.value.problems

    def test_shape_invalid_then_valid_retries(self):
        bad = _fenced(SPEC_CORRECT.replace("{:testEntry} ", ""))
        script = [
            (Purpose.SPEC_GEN, bad),
            (Purpose.SPEC_GEN, _fenced(SPEC_CORRECT)),
            (Purpose.SUMMARY, SUMMARY_CORRECT),
            (Purpose.RECONSTRUCT, _fenced(SPEC_CORRECT)),
        ]
        engine = scripted_engine(script)
        draft = draft_specification(engine, CORRECT_TASK)
        assert draft.revision == 1
        # identical reconstruction short-circuits before any judge call
        assert draft.consistency.status is ConsistencyStatus.CONSISTENT

    def test_every_surfaced_draft_is_shape_valid_and_verified(self, demo_engine):
        from dafnypilot.dafny_driver import VerifyStatus
        from dafnypilot.prompt_kit import validate_spec_shape

        draft = draft_specification(demo_engine, CORRECT_TASK)
        assert validate_spec_shape(draft.dafny_source, CORRECT_TASK).ok
        assert demo_engine.driver.verify(draft.dafny_source).status is VerifyStatus.VERIFIED


class TestRefinement:
    def test_revision_increments(self, demo_engine):
        draft = draft_specification(demo_engine, TYPO_TASK)
        revised = refine_specification(demo_engine, draft, CORRECTION_FEEDBACK)
        assert revised.revision == draft.revision + 1
        assert "case 3" not in revised.dafny_source  # synthetic base case gone

    def test_identical_feedback_identical_draft(self, demo_cassette):
        def run():
            engine = build_engine(llm_mode="replay", cassette_path=demo_cassette)
            draft = draft_specification(engine, TYPO_TASK)
            return refine_specification(engine, draft, CORRECTION_FEEDBACK)

        assert run() == run()

    def test_empty_feedback_rejected(self, demo_engine):
        draft = draft_specification(demo_engine, CORRECT_TASK)
        with pytest.raises(ValueError):
            refine_specification(demo_engine, draft, "")


class TestConsistency:
    def test_byte_equal_short_circuit(self):
        script = [(Purpose.RECONSTRUCT, _fenced(SPEC_CORRECT))]
        engine = scripted_engine(script)
        verdict = check_consistency(engine, SPEC_CORRECT, "summary text")
        assert verdict.status is ConsistencyStatus.CONSISTENT
        assert verdict.reconstructed_source is not None

    def test_shape_invalid_reconstruction_is_inconsistent(self):
        broken = _fenced(SPEC_CORRECT.replace("method Main()", "method Harness()"))
        engine = scripted_engine([(Purpose.RECONSTRUCT, broken)])
        verdict = check_consistency(engine, SPEC_CORRECT, "summary")
        assert verdict.status is ConsistencyStatus.INCONSISTENT
        assert "MissingMain" in verdict.judge_reason

    def test_demo_pair_is_consistent_with_judge_token(self, demo_engine):
        draft = draft_specification(demo_engine, CORRECT_TASK)
        assert draft.consistency.status is ConsistencyStatus.CONSISTENT
        assert draft.consistency.judge_reason.startswith("EQUIVALENT")
        # Consistent implies the reconstruction verifies on a re-run
        from dafnypilot.dafny_driver import VerifyStatus

        outcome = demo_engine.driver.verify(draft.consistency.reconstructed_source)
        assert outcome.status is VerifyStatus.VERIFIED

    def test_different_verdict_is_inconsistent_but_surfaced(self):
        varied = _fenced(SPEC_CORRECT.replace("var t0", "var z0").replace("t0 ==", "z0 =="))
        script = [
            (Purpose.SPEC_GEN, _fenced(SPEC_CORRECT)),
            (Purpose.SUMMARY, SUMMARY_CORRECT),
            (Purpose.RECONSTRUCT, varied),
            (Purpose.EQUIV_JUDGE, "DIFFERENT\nThe test cases disagree."),
            # one automatic summary regeneration, then judged again; the
            # judge request is identical so its answer must be too
            (Purpose.SUMMARY, SUMMARY_CORRECT + "\nRestated for clarity."),
            (Purpose.RECONSTRUCT, varied),
            (Purpose.EQUIV_JUDGE, "DIFFERENT\nThe test cases disagree."),
        ]
        engine = scripted_engine(script)
        draft = draft_specification(engine, CORRECT_TASK)
        assert draft.consistency.status is ConsistencyStatus.INCONSISTENT
        assert draft.consistency_flagged


class TestSummaryOpacity:
    def test_summary_never_mentions_the_intermediate_language(self, demo_engine):
        draft = draft_specification(demo_engine, CORRECT_TASK)
        text = render_user_summary(draft)
        lowered = text.lower()
        assert "dafny" not in lowered
        assert "ensures" not in lowered
        assert "requires" not in lowered

    def test_render_matches_cassette_driven_golden(self, demo_engine):
        draft = draft_specification(demo_engine, CORRECT_TASK)
        text = render_user_summary(draft)
        assert text.startswith(SUMMARY_CORRECT.split("\n")[0])
        assert "Key differences:" in text

    def test_leaky_summary_regenerated(self):
        leaky = "The method ensures result correctness.\n\nKey differences:\n1. none"
        clean = SUMMARY_CORRECT
        script = [
            (Purpose.SPEC_GEN, _fenced(SPEC_CORRECT)),
            (Purpose.SUMMARY, leaky),
            (Purpose.SUMMARY, clean),
            (Purpose.RECONSTRUCT, _fenced(SPEC_CORRECT)),
        ]
        engine = scripted_engine(script)
        draft = draft_specification(engine, CORRECT_TASK)
        assert not draft.summary_withheld
        assert "ensures" not in draft.nl_summary

    def test_persistently_leaky_summary_withheld(self):
        leaky = "```dafny\nmethod fibfib()\n```"
        script = [
            (Purpose.SPEC_GEN, _fenced(SPEC_CORRECT)),
            (Purpose.SUMMARY, leaky),
            (Purpose.SUMMARY, leaky),
            (Purpose.SUMMARY, leaky),
        ]
        engine = scripted_engine(script)
        draft = draft_specification(engine, CORRECT_TASK)
        assert draft.summary_withheld
        assert draft.consistency.status is ConsistencyStatus.UNCHECKED
        render_user_summary(draft)  # withheld text must itself be clean
