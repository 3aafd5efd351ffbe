"""Phase-two loop: contract-locked merging, strategy choice, convergence."""

import random

import pytest

from dafnypilot import dafny_text
from dafnypilot.dafny_driver import Severity, VerifierDiagnostic, VerifyOutcome, VerifyStatus
from dafnypilot.fixtures.demo import IMPL_CORRECT, SPEC_CORRECT
from dafnypilot.llm_gateway import Purpose, extract_code_block
from dafnypilot.spec_loop import ConsistencyStatus, ConsistencyVerdict, SpecDraft
from dafnypilot.synth_loop import (
    ContractTampered,
    EntryNotFound,
    SignatureMismatch,
    Strategy,
    SynthesisAttempt,
    SynthesisBudget,
    SynthNonConvergence,
    choose_strategy,
    merge_into_spec,
    synthesize,
)
from tests.test_spec_loop import _fenced, scripted_engine

IMPL_SOURCE = extract_code_block(IMPL_CORRECT, "dafny")


def make_draft(source=SPEC_CORRECT, revision=1):
    return SpecDraft(
        revision=revision,
        task="task",
        dafny_source=source,
        nl_summary="summary",
        differences_note="",
        consistency=ConsistencyVerdict(ConsistencyStatus.CONSISTENT, source, "EQUIVALENT"),
        entry_name="fibfib",
    )


class TestMergeIntoSpec:
    def test_correct_body_keeps_contract_byte_exact(self):
        merged = merge_into_spec(SPEC_CORRECT, IMPL_SOURCE)
        assert "ensures result == fibfibFunc(n)" in merged
        assert "while i <= n" in merged
        # functional spec and Main preserved verbatim from the spec side
        for fragment in ("function fibfibFunc(n: int): int", "expect t2 == 24;"):
            assert fragment in merged

    def test_contract_rewrite_rejected(self):
        tampered = IMPL_SOURCE.replace(
            "ensures result == fibfibFunc(n)", "ensures result >= 0"
        )
        with pytest.raises(ContractTampered):
            merge_into_spec(SPEC_CORRECT, tampered)

    def test_expect_rewrite_rejected(self):
        tampered = IMPL_SOURCE.replace("expect t2 == 24;", "expect t2 == 25;")
        with pytest.raises(ContractTampered):
            merge_into_spec(SPEC_CORRECT, tampered)

    def test_stub_candidate_merges_to_spec_itself(self):
        merged = merge_into_spec(SPEC_CORRECT, SPEC_CORRECT)
        assert merged == SPEC_CORRECT

    def test_missing_entry(self):
        with pytest.raises(EntryNotFound):
            merge_into_spec(SPEC_CORRECT, "module M { method other() { } }")

    def test_signature_change_rejected(self):
        tampered = IMPL_SOURCE.replace("fibfib(n: int)", "fibfib(n: int, m: int)")
        with pytest.raises(SignatureMismatch):
            merge_into_spec(SPEC_CORRECT, tampered)

    def test_contract_free_candidate_is_body_only(self):
        body_only = """module M {
  method fibfib(n: int) returns (result: int)
  {
    result := fibfibFunc(n);
  }
}"""
        merged = merge_into_spec(SPEC_CORRECT, body_only)
        assert "ensures result == fibfibFunc(n)" in merged
        assert "result := fibfibFunc(n);" in merged

    def test_auxiliary_declarations_appended(self):
        with_helper = IMPL_SOURCE.replace(
            "  method Main()",
            "  lemma helperFact(n: int)\n    ensures n == n\n  {\n  }\n\n  method Main()",
        )
        merged = merge_into_spec(SPEC_CORRECT, with_helper)
        assert "lemma helperFact" in merged
        outline = dafny_text.outline(merged)
        assert outline.body_span is not None


def attempt(index, errors, strategy=Strategy.FRESH):
    diags = tuple(
        VerifierDiagnostic("f", 1, 1, Severity.ERROR, f"e{i}", f"e{i}") for i in range(errors)
    )
    status = VerifyStatus.VERIFIED if errors == 0 else VerifyStatus.FAILED
    return SynthesisAttempt(index, strategy, "src", VerifyOutcome(status, diags, 0.0, 0))


class TestChooseStrategy:
    def test_improving_counts_refine(self):
        history = [attempt(1, 5), attempt(2, 3), attempt(3, 1)]
        assert choose_strategy(history, SynthesisBudget()) is Strategy.REFINE

    def test_plateau_restarts(self):
        history = [attempt(1, 4), attempt(2, 4), attempt(3, 4)]
        assert choose_strategy(history, SynthesisBudget(restart_after=3)) is Strategy.RESTART

    def test_window_not_full_refines(self):
        history = [attempt(1, 4), attempt(2, 4)]
        assert choose_strategy(history, SynthesisBudget(restart_after=3)) is Strategy.REFINE

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            choose_strategy([], SynthesisBudget())


class TestSynthesize:
    def test_demo_cassette_one_attempt(self, demo_engine):
        from dafnypilot.spec_loop import draft_specification
        from dafnypilot.fixtures.demo import CORRECT_TASK

        draft = draft_specification(demo_engine, CORRECT_TASK)
        prog = synthesize(demo_engine, draft)
        assert prog.attempts_used == 1
        assert prog.spec_revision == draft.revision

    def test_returned_program_verifies_at_return_time(self, demo_engine):
        from dafnypilot.spec_loop import draft_specification
        from dafnypilot.fixtures.demo import CORRECT_TASK

        draft = draft_specification(demo_engine, CORRECT_TASK)
        prog = synthesize(demo_engine, draft)
        assert demo_engine.driver.verify(prog.dafny_source).status is VerifyStatus.VERIFIED

    def test_fail_then_fix_uses_refine(self):
        faulty = IMPL_SOURCE.replace("result := c;", "result := b;")
        script = [
            (Purpose.IMPL_GEN, _fenced(faulty)),
            (Purpose.IMPL_GEN, _fenced(IMPL_SOURCE)),
        ]
        engine = scripted_engine(script)
        prog = synthesize(engine, make_draft())
        assert prog.attempts_used == 2

    def test_budget_one_with_failing_candidate(self):
        faulty = IMPL_SOURCE.replace("result := c;", "result := b;")
        engine = scripted_engine([(Purpose.IMPL_GEN, _fenced(faulty))])
        with pytest.raises(SynthNonConvergence) as err:
            synthesize(engine, make_draft(), SynthesisBudget(max_attempts=1))
        assert len(err.value.history) == 1
        assert err.value.history[0].strategy is Strategy.FRESH

    def test_contract_tampering_counts_as_failed_attempt(self):
        tampered = IMPL_SOURCE.replace("ensures result == fibfibFunc(n)", "ensures true")
        engine = scripted_engine([(Purpose.IMPL_GEN, _fenced(tampered))])
        with pytest.raises(SynthNonConvergence) as err:
            synthesize(engine, make_draft(), SynthesisBudget(max_attempts=1))
        assert "merge rejected" in err.value.history[0].outcome.errors[0].message

    def test_spec_preservation_in_result(self, demo_engine):
        from dafnypilot.spec_loop import draft_specification
        from dafnypilot.fixtures.demo import CORRECT_TASK

        draft = draft_specification(demo_engine, CORRECT_TASK)
        prog = synthesize(demo_engine, draft)
        spec_ol = dafny_text.outline(draft.dafny_source)
        prog_ol = dafny_text.outline(prog.dafny_source)
        spec_entry = dafny_text.entry_decl(spec_ol)
        prog_entry = dafny_text.entry_decl(prog_ol)
        assert [c for c in spec_entry.clauses] == [c for c in prog_entry.clauses]
        spec_main = dafny_text.find_decl(spec_ol, "Main")
        prog_main = dafny_text.find_decl(prog_ol, "Main")
        assert dafny_text.body_text(draft.dafny_source, spec_main) == dafny_text.body_text(
            prog.dafny_source, prog_main
        )


CONTRACT_MUTATIONS = [
    ("ensures result == fibfibFunc(n)", "ensures result >= fibfibFunc(n)"),
    ("ensures result == fibfibFunc(n)", "ensures result == fibfibFunc(n) + 1"),
    ("ensures result == fibfibFunc(n)", "ensures true"),
    (
        "requires n >= 0\n    ensures result == fibfibFunc(n)",
        "requires n >= 1\n    ensures result == fibfibFunc(n)",
    ),
    (
        "requires n >= 0\n    ensures result == fibfibFunc(n)",
        "requires n >= -1\n    ensures result == fibfibFunc(n)",
    ),
    ("requires n >= 0\n    ensures result == fibfibFunc(n)", "ensures result == fibfibFunc(n)"),
    ("expect t0 == 0;", "expect t0 == 1;"),
    ("expect t1 == 4;", "expect t1 == 5;"),
    ("expect t2 == 24;", "expect t2 == 23;"),
    ("var t1 := fibfib(5);\n    expect t1 == 4;\n    ", ""),
]

BODY_MUTATIONS = [
    ("var t := a + b + c;", "var tmp := a + b + c;\n      var t := tmp;"),
    ("var i := 3;", "var i := 3; // iteration counter"),
    ("result := c;", "result := c + 0;"),
    ("a := b;", "a := b;\n      assert a == b;"),
    ("invariant 3 <= i <= n + 1", "invariant 3 <= i && i <= n + 1"),
    ("if n <= 1 { result := 0; return; }", "if n <= 0 || n == 1 { result := 0; return; }"),
    ("var a, b, c := 0, 0, 1;", "var a := 0;\n    var b := 0;\n    var c := 1;"),
    ("c := t;", "c := t + 0;"),
    ("i := i + 1;", "i := 1 + i;"),
    ("decreases n - i", "decreases n + 1 - i"),
]


class TestContractLockProperty:
    def _mutants(self, table, count):
        rng = random.Random(991)
        out = []
        while len(out) < count:
            old, new = table[rng.randrange(len(table))]
            if old in IMPL_SOURCE:
                mutated = IMPL_SOURCE.replace(old, new, 1)
                if mutated != IMPL_SOURCE:
                    out.append(mutated)
        return out

    def test_fifty_contract_mutants_all_rejected(self):
        for mutant in self._mutants(CONTRACT_MUTATIONS, 50):
            with pytest.raises(ContractTampered):
                merge_into_spec(SPEC_CORRECT, mutant)

    def test_fifty_body_mutants_keep_contracts_byte_identical(self):
        spec_ol = dafny_text.outline(SPEC_CORRECT)
        spec_entry = dafny_text.entry_decl(spec_ol)
        spec_clauses = spec_entry.clauses
        spec_main_body = dafny_text.body_text(SPEC_CORRECT, dafny_text.find_decl(spec_ol, "Main"))
        for mutant in self._mutants(BODY_MUTATIONS, 50):
            merged = merge_into_spec(SPEC_CORRECT, mutant)
            ol = dafny_text.outline(merged)
            entry = dafny_text.entry_decl(ol)
            assert entry.clauses == spec_clauses
            assert dafny_text.body_text(merged, dafny_text.find_decl(ol, "Main")) == spec_main_body
