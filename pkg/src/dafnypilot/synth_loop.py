"""Phase two: automated verify-refine synthesis for the agreed spec.

Candidates from the model are merged into the agreed specification by the
engine, never trusted wholesale: the entry method's contracts, the
functional specification and the user's test cases are taken verbatim from
the spec, so a model that tries to rewrite them is rejected instead of
obeyed. The loop feeds verifier diagnostics back, measures progress by
error count, and restarts from scratch when a window of attempts stops
improving.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import dafny_text, prompt_kit
from .dafny_driver import Severity, VerifierDiagnostic, VerifyOutcome, VerifyStatus
from .llm_gateway import NoFence, UnterminatedFence, extract_code_block
from .spec_loop import SpecDraft


class MergeError(Exception):
    pass


class EntryNotFound(MergeError):
    pass


class SignatureMismatch(MergeError):
    pass


class ContractTampered(MergeError):
    """The candidate tried to alter locked contracts or user tests."""


class Strategy(str, enum.Enum):
    FRESH = "fresh"
    REFINE = "refine"
    RESTART = "restart"


@dataclass(frozen=True)
class SynthesisAttempt:
    index: int
    strategy: Strategy
    dafny_source: str
    outcome: VerifyOutcome

    @property
    def error_count(self) -> int:
        return len(self.outcome.errors)


@dataclass(frozen=True)
class SynthesisBudget:
    max_attempts: int = 8
    restart_after: int = 3  # consecutive non-improving attempts

    def __post_init__(self) -> None:
        if self.max_attempts < 1 or self.restart_after < 1:
            raise ValueError("budget knobs must be at least 1")


@dataclass(frozen=True)
class VerifiedProgram:
    dafny_source: str
    spec_revision: int
    attempts_used: int


class SynthNonConvergence(Exception):
    def __init__(self, history: list[SynthesisAttempt]):
        super().__init__(f"no verified candidate after {len(history)} attempts")
        self.history = history


def _normalized_clauses(clauses: Sequence[tuple[str, str]]) -> list[tuple[str, tuple[str, ...]]]:
    spec_kinds = ("requires", "ensures", "decreases")
    return sorted(
        (kw, tuple(dafny_text.token_texts(text)))
        for kw, text in clauses
        if kw in spec_kinds
    )


def merge_into_spec(spec_source: str, impl_source: str) -> str:
    """Splice the candidate's entry body (and helpers) into the spec.

    The merged program keeps the spec's entry signature, contracts,
    functional specification and Main verbatim; only the stub body is
    replaced, and candidate-only auxiliary declarations are appended.
    """
    spec_ol = dafny_text.outline(spec_source)
    spec_entry = dafny_text.entry_decl(spec_ol)
    if spec_entry is None or spec_entry.body_span is None:
        raise EntryNotFound("spec has no usable {:testEntry} method")

    impl_ol = dafny_text.outline(impl_source)
    impl_entry = dafny_text.find_decl(impl_ol, spec_entry.name)
    if impl_entry is None or impl_entry.body_span is None:
        raise EntryNotFound(f"candidate lacks a method named {spec_entry.name}")

    def sig_tokens(decl):
        return dafny_text.token_texts(decl.params_text), dafny_text.token_texts(decl.returns_text)

    if sig_tokens(impl_entry) != sig_tokens(spec_entry):
        raise SignatureMismatch(f"candidate changed the signature of {spec_entry.name}")

    impl_contracts = _normalized_clauses(impl_entry.clauses)
    if impl_contracts and impl_contracts != _normalized_clauses(spec_entry.clauses):
        raise ContractTampered(f"candidate altered contracts of {spec_entry.name}")

    spec_main = dafny_text.find_decl(spec_ol, "Main")
    impl_main = dafny_text.find_decl(impl_ol, "Main")
    if spec_main is not None and impl_main is not None and impl_main.body_span is not None:
        spec_main_tokens = dafny_text.token_texts(dafny_text.body_text(spec_source, spec_main))
        impl_main_tokens = dafny_text.token_texts(dafny_text.body_text(impl_source, impl_main))
        if spec_main_tokens != impl_main_tokens:
            raise ContractTampered("candidate altered the user test cases in Main")

    body = dafny_text.body_text(impl_source, impl_entry)
    open_pos, close_pos = spec_entry.body_span
    merged = spec_source[: open_pos + 1] + body + spec_source[close_pos:]

    spec_names = {d.name for d in spec_ol.decls} | set(spec_ol.datatypes) | {"Main"}
    aux_parts = [
        impl_source[d.span[0] : d.span[1]]
        for d in impl_ol.decls
        if d.name not in spec_names and d.name != impl_entry.name
    ]
    if aux_parts:
        merged_ol = dafny_text.outline(merged)
        if merged_ol.body_span is not None:
            close = merged_ol.body_span[1]
            aux_text = "\n\n  " + "\n\n  ".join(aux_parts) + "\n"
            merged = merged[:close] + aux_text + merged[close:]
        else:
            merged = merged + "\n\n" + "\n\n".join(aux_parts) + "\n"
    return merged


def choose_strategy(history: Sequence[SynthesisAttempt], budget: SynthesisBudget) -> Strategy:
    """Refine while improving; restart after a windowful of stagnation."""
    if not history:
        raise ValueError("choose_strategy needs at least one prior attempt")
    if len(history) < budget.restart_after:
        return Strategy.REFINE
    window = [a.error_count for a in history[-budget.restart_after :]]
    improving = any(later < earlier for earlier, later in zip(window, window[1:]))
    return Strategy.REFINE if improving else Strategy.RESTART


def _rejection_outcome(reason: str) -> VerifyOutcome:
    diag = VerifierDiagnostic(
        file="", line=0, column=0, severity=Severity.ERROR, message=reason, raw=reason
    )
    return VerifyOutcome(VerifyStatus.FAILED, (diag,), 0.0, -1)


def _failure_notes(history: Sequence[SynthesisAttempt]) -> list[str]:
    notes = []
    for attempt in history:
        first = attempt.outcome.errors[0].message if attempt.outcome.errors else "unknown failure"
        notes.append(f"attempt {attempt.index}: {attempt.error_count} verifier errors; first: {first}")
    return notes


def synthesize(engine, spec: SpecDraft, budget: Optional[SynthesisBudget] = None) -> VerifiedProgram:
    """Verify-refine loop; returns on the first (re-checked) verified merge."""
    budget = budget or engine.synth_budget
    history: list[SynthesisAttempt] = []

    for index in range(1, budget.max_attempts + 1):
        if index == 1:
            strategy = Strategy.FRESH
            request = prompt_kit.build_impl_prompt(spec.dafny_source)
        else:
            strategy = choose_strategy(history, budget)
            last = history[-1]
            if strategy is Strategy.REFINE and last.outcome.diagnostics:
                request = prompt_kit.build_feedback_prompt(last.dafny_source, list(last.outcome.diagnostics))
            else:
                request = prompt_kit.build_impl_prompt(spec.dafny_source, _failure_notes(history))

        response = engine.gateway.complete(request).content
        try:
            candidate = extract_code_block(response, "dafny")
        except (NoFence, UnterminatedFence) as exc:
            history.append(SynthesisAttempt(index, strategy, response, _rejection_outcome(f"output format: {exc}")))
            continue
        try:
            merged = merge_into_spec(spec.dafny_source, candidate)
        except MergeError as exc:
            history.append(SynthesisAttempt(index, strategy, candidate, _rejection_outcome(f"merge rejected: {exc}")))
            continue

        outcome = engine.driver.verify(merged)
        history.append(SynthesisAttempt(index, strategy, merged, outcome))
        if outcome.status is VerifyStatus.VERIFIED:
            # returned programs are re-checked, never trusted from the loop
            recheck = engine.driver.verify(merged)
            if recheck.status is VerifyStatus.VERIFIED:
                return VerifiedProgram(merged, spec.revision, attempts_used=index)
            history[-1] = SynthesisAttempt(index, strategy, merged, recheck)

    raise SynthNonConvergence(history)
