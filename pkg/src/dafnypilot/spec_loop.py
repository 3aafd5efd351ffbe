"""Phase one: from prompt to an agreed-on, verified specification.

Drafting loops generate-validate-verify until the model produces a
shape-valid spec the verifier accepts, then summarize it in plain language
and run the reconstruct-and-judge consistency check. Every draft surfaced
to a user is shape-valid, verified, and opacity-clean; user feedback runs
the same loop again at the next revision number.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from . import dafny_text, prompt_kit
from .dafny_driver import VerifyStatus
from .llm_gateway import NoFence, UnterminatedFence, extract_code_block
from .prompt_kit import PromptAssets
from .service.redaction import RedactionViolation, redact

SUMMARY_ATTEMPTS = 3  # initial ask plus up to two redaction-driven retries

WITHHELD_SUMMARY = (
    "I have prepared and checked an internal specification for your task, "
    "but I am unable to describe it right now without exposing internal "
    "notation, which I never do. You can still accept to proceed with the "
    "task exactly as you stated it, or rephrase your request."
)


class SpecLoopError(Exception):
    pass


class SpecNonConvergence(SpecLoopError):
    """The drafting budget ran out; carries what went wrong on the way."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems[-3:]) or "no attempts made")
        self.problems = problems


class OpacityError(SpecLoopError):
    """Defense-in-depth trip wire: a summary about to surface was dirty."""


class ConsistencyStatus(str, enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    UNCHECKED = "unchecked"


@dataclass(frozen=True)
class ConsistencyVerdict:
    status: ConsistencyStatus
    reconstructed_source: Optional[str]
    judge_reason: str


@dataclass(frozen=True)
class SpecDraft:
    revision: int
    task: str
    dafny_source: str
    nl_summary: str
    differences_note: str
    consistency: ConsistencyVerdict
    entry_name: str
    summary_withheld: bool = False
    consistency_flagged: bool = False


def _entry_name(source: str) -> str:
    entry = dafny_text.entry_decl(dafny_text.outline(source))
    return entry.name if entry else ""


def _split_summary(text: str) -> tuple[str, str]:
    marker = "Key differences:"
    if marker in text:
        head, _, tail = text.partition(marker)
        return head.strip(), (marker + tail).strip()
    return text.strip(), ""


def _generate_summary(engine, source: str, task: str, start_attempt: int = 1, reason: str = "") -> tuple[str, str, bool, int]:
    """Summary + differences note, redaction-gated.

    Returns (summary, differences, withheld, attempts_consumed). Retries up
    to two times on redaction violations, then withholds.
    """
    attempt = start_attempt
    for _ in range(SUMMARY_ATTEMPTS):
        req = prompt_kit.build_summary_prompt(source, task, attempt=attempt, rejection_reason=reason)
        text = engine.gateway.complete(req).content
        verdict = redact(text)
        if not isinstance(verdict, RedactionViolation):
            summary, differences = _split_summary(text)
            return summary, differences, False, attempt - start_attempt + 1
        reason = str(verdict)
        attempt += 1
    return WITHHELD_SUMMARY, "", True, SUMMARY_ATTEMPTS


def check_consistency(engine, original_source: str, summary: str) -> ConsistencyVerdict:
    """Clover-style check: reconstruct from the summary, judge equivalence."""
    if not summary.strip():
        raise ValueError("consistency check needs a non-empty summary")
    req = prompt_kit.build_reconstruction_prompt(summary, engine.assets)
    response = engine.gateway.complete(req).content
    try:
        reconstructed = extract_code_block(response, "dafny")
    except (NoFence, UnterminatedFence) as exc:
        return ConsistencyVerdict(ConsistencyStatus.INCONSISTENT, None, f"reconstruction: {exc}")

    # shape validation against an empty task checks structure only; the
    # name/arity cross-check is meaningless for a reconstruction
    report = prompt_kit.validate_spec_shape(reconstructed, "")
    structural = [v for v in report.violations if v not in (prompt_kit.Violation.NAME_MISMATCH, prompt_kit.Violation.ARITY_MISMATCH)]
    if structural:
        names = ", ".join(v.value for v in structural)
        return ConsistencyVerdict(ConsistencyStatus.INCONSISTENT, reconstructed, f"reconstruction shape: {names}")

    outcome = engine.driver.verify(reconstructed)
    if outcome.status is not VerifyStatus.VERIFIED:
        return ConsistencyVerdict(
            ConsistencyStatus.INCONSISTENT, reconstructed, f"reconstruction failed verification ({outcome.status.value})"
        )

    if reconstructed.strip() == original_source.strip():
        return ConsistencyVerdict(ConsistencyStatus.CONSISTENT, reconstructed, "reconstruction is identical")

    judge_req = prompt_kit.build_equivalence_prompt(original_source, reconstructed)
    verdict_text = engine.gateway.complete(judge_req).content.strip()
    token = verdict_text.split()[0].upper().strip(".,:;") if verdict_text.split() else ""
    if token == "EQUIVALENT":
        return ConsistencyVerdict(ConsistencyStatus.CONSISTENT, reconstructed, verdict_text)
    return ConsistencyVerdict(ConsistencyStatus.INCONSISTENT, reconstructed, verdict_text)


def _finish_draft(engine, task: str, source: str, revision: int) -> SpecDraft:
    summary, differences, withheld, used = _generate_summary(engine, source, task)
    flagged = False
    if withheld:
        consistency = ConsistencyVerdict(ConsistencyStatus.UNCHECKED, None, "summary withheld")
    else:
        consistency = check_consistency(engine, source, summary)
        if consistency.status is ConsistencyStatus.INCONSISTENT:
            # one automatic regeneration, then surface regardless
            summary2, differences2, withheld2, _ = _generate_summary(
                engine, source, task, start_attempt=used + 1, reason="consistency check judged the description ambiguous"
            )
            if not withheld2:
                summary, differences = summary2, differences2
                consistency = check_consistency(engine, source, summary)
            flagged = consistency.status is not ConsistencyStatus.CONSISTENT
    return SpecDraft(
        revision=revision,
        task=task,
        dafny_source=source,
        nl_summary=summary,
        differences_note=differences,
        consistency=consistency,
        entry_name=_entry_name(source),
        summary_withheld=withheld,
        consistency_flagged=flagged,
    )


def _draft_loop(engine, task: str, budget: int, first_request) -> str:
    """Shared generate-validate-verify loop; returns the accepted source."""
    problems: list[str] = []
    prior_source = ""
    for attempt in range(1, budget + 1):
        if attempt == 1:
            request = first_request
        else:
            request = prompt_kit.build_spec_retry_prompt(task, engine.assets, prior_source, problems)
        response = engine.gateway.complete(request).content
        try:
            source = extract_code_block(response, "dafny")
        except (NoFence, UnterminatedFence) as exc:
            problems = [f"output format: {exc}"]
            prior_source = response
            continue
        prior_source = source
        report = prompt_kit.validate_spec_shape(source, task)
        if not report.ok:
            problems = [f"shape violation: {v.value}" for v in report.violations]
            continue
        outcome = engine.driver.verify(source)
        if outcome.status is not VerifyStatus.VERIFIED:
            problems = [prompt_kit.render_diagnostic(d) for d in outcome.errors] or [
                f"verification {outcome.status.value}"
            ]
            continue
        return source
    raise SpecNonConvergence(problems)


def draft_specification(engine, task: str, budget: Optional[int] = None) -> SpecDraft:
    """Revision 1 from a fresh task prompt."""
    if not task.strip():
        raise ValueError("task must be non-empty")
    budget = budget if budget is not None else engine.spec_budget
    if budget < 1:
        raise ValueError("budget must be at least 1")
    first = prompt_kit.build_spec_prompt(task, engine.assets)
    source = _draft_loop(engine, task, budget, first)
    return _finish_draft(engine, task, source, revision=1)


def refine_specification(engine, draft: SpecDraft, feedback: str, budget: Optional[int] = None) -> SpecDraft:
    """Revision n+1 incorporating user feedback on the prior draft."""
    if not feedback.strip():
        raise ValueError("feedback must be non-empty")
    budget = budget if budget is not None else engine.spec_budget
    if budget < 1:
        raise ValueError("budget must be at least 1")
    first = prompt_kit.build_refine_prompt(draft.task, engine.assets, draft.dafny_source, feedback)
    source = _draft_loop(engine, draft.task, budget, first)
    return _finish_draft(engine, draft.task, source, revision=draft.revision + 1)


def render_user_summary(draft: SpecDraft) -> str:
    """User-facing text for a draft, re-checked through the opacity filter."""
    text = draft.nl_summary
    if draft.differences_note:
        text += "\n\n" + draft.differences_note
    verdict = redact(text)
    if isinstance(verdict, RedactionViolation):
        raise OpacityError(str(verdict))
    return text
