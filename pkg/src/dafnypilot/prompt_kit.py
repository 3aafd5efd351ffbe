"""Builders for every model request plus static spec-shape validation.

Every request the pipeline makes is assembled here, from a versioned asset
set (the system prompt and the few-shot corpus live as repository files) and
from the template constants below. Expansion is pure: same inputs plus same
asset version means byte-identical request content.

Shape validation is lexical, not a real parse; it exists to reject malformed
model output before paying for a verifier run.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import dafny_text
from .llm_gateway import ChatMessage, LlmRequest, Purpose, Role

GEN_TEMPERATURE = 0.2  # generation purposes
JUDGE_TEMPERATURE = 0.0  # judging and reconstruction must be stable


class Violation(str, enum.Enum):
    NO_MODULE = "NoModule"
    MISSING_TEST_ENTRY = "MissingTestEntry"
    BODY_NOT_STUB = "BodyNotStub"
    MISSING_MAIN = "MissingMain"
    MISSING_EXPECT = "MissingExpect"
    USES_FUNCTION_SYNTAX = "UsesFunctionSyntax"
    ARITY_MISMATCH = "ArityMismatch"
    NAME_MISMATCH = "NameMismatch"
    MISSING_DOCSTRING = "MissingDocstring"
    MISSING_OPTION = "MissingOption"


@dataclass(frozen=True)
class SpecShapeReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class FewShotExample:
    name: str
    input_stub: str
    output_spec: str


@dataclass(frozen=True)
class PromptAssets:
    system_prompt: str
    few_shots: tuple[FewShotExample, ...]
    version: str


_SPEC_RETRY_TEMPLATE = """The Dafny program you returned was rejected. Problems found:

{problems}

Here is the program you returned:

```dafny
{source}
```

Please return a corrected version of the full Dafny program for the same
task, following all of the original formatting rules, using this format:
```dafny
<YOUR CODE>
```."""

_REFINE_TEMPLATE = """The user gave feedback on the task you formalised earlier.

Your current Dafny program:

```dafny
{source}
```

User feedback:

{feedback}

Please return a new version of the full Dafny program that takes the
feedback into account, following all of the original formatting rules,
using this format:
```dafny
<YOUR CODE>
```."""

_IMPL_SYSTEM = """You are an expert Dafny programmer.

You are given a Dafny program in which one method is annotated with
{:testEntry} and has the placeholder body `assume {:axiom} false;`.
Replace that placeholder with a correct, efficient imperative
implementation, adding whatever loop invariants, assertions and helper
lemmas are needed for the Dafny verifier to accept the program.

Do not change the method's signature, requires, ensures or decreases
clauses. Do not change any other declaration, and do not modify the test
cases in Main. Return the complete program using this format:
```dafny
<YOUR CODE>
```."""

_IMPL_TASK_TEMPLATE = """Implement the {{:testEntry}} method in this program:

```dafny
{source}
```"""

_IMPL_RESTART_NOTE = """

Earlier attempts at this program failed verification. Do not repeat these
approaches:

{failures}

Start again from a different approach."""

_FEEDBACK_TEMPLATE = """The Dafny verifier rejected your previous program.

Verifier feedback:

{diagnostics}

The rejected program:

```dafny
{source}
```

Please return a corrected version of the complete program, keeping the
method signature and all requires/ensures/decreases clauses and test cases
exactly as they are, using this format:
```dafny
<YOUR CODE>
```."""

_SUMMARY_SYSTEM = """You are the user-facing voice of a code-generation assistant.

You will be shown an internal formal specification of a programming task.
Describe, in plain prose, exactly what the specified program does: its
input conditions, its output guarantees, and how the expected behaviour is
defined. Never mention Dafny, verification, or any other internal
technology, and never include code or formal syntax of any kind in your
answer. The description must stand on its own for a reader who will never
see the internal form."""

_SUMMARY_TEMPLATE = """Internal specification:

{source}

{task_section}Write the plain-language description of the task this specification
encodes. Then add a short section starting with the exact line
"Key differences:" listing, as a numbered list, anything the specification
pins down that the user's original request left implicit or stated
differently. Remember: no code, no formal notation, no mention of internal
technology."""

_SUMMARY_TASK_SECTION = """The user's original request, for comparison:

{task}

"""

_SUMMARY_RETRY_NOTE = """

Attempt {attempt}: your previous description was rejected because it leaked
internal notation ({reason}). Rewrite it in plain prose only."""

_RECONSTRUCT_TEMPLATE = """Below is a plain-language description of a programming task.
Write a Dafny program that formalises exactly this description, following
all of the formatting rules, using this format:
```dafny
<YOUR CODE>
```.

Description:

{summary}"""

_EQUIV_SYSTEM = """You are an expert Dafny reviewer. You compare two Dafny programs and
judge whether they specify the same task: same entry method behaviour,
same input conditions, same guarantees, and the same test cases. Answer
with the single word EQUIVALENT or DIFFERENT on the first line, followed
by one short paragraph explaining why."""

_EQUIV_TEMPLATE = """Program one:

```dafny
{first}
```

Program two:

```dafny
{second}
```

Are these two programs equivalent specifications of the same task?"""

_POSTPROCESS_SYSTEM = """You are an expert Python programmer. You rewrite machine-generated
Python functions into clean, idiomatic Python. The rewrite must keep the
exact same function name, accept the same positional arguments, and return
the same values for all inputs. Return only the rewritten function using
this format:
```python
<YOUR CODE>
```."""

_POSTPROCESS_TEMPLATE = """Rewrite this machine-generated function as idiomatic Python:

```python
{source}
```"""

_ALL_TEMPLATES = (
    _SPEC_RETRY_TEMPLATE,
    _REFINE_TEMPLATE,
    _IMPL_SYSTEM,
    _IMPL_TASK_TEMPLATE,
    _IMPL_RESTART_NOTE,
    _FEEDBACK_TEMPLATE,
    _SUMMARY_SYSTEM,
    _SUMMARY_TEMPLATE,
    _SUMMARY_TASK_SECTION,
    _SUMMARY_RETRY_NOTE,
    _RECONSTRUCT_TEMPLATE,
    _EQUIV_SYSTEM,
    _EQUIV_TEMPLATE,
    _POSTPROCESS_SYSTEM,
    _POSTPROCESS_TEMPLATE,
)


def load_assets(path: Optional[Path | str] = None) -> PromptAssets:
    """Load the prompt corpus from a directory (default: packaged assets).

    Layout: `system_prompt.txt` plus one directory per few-shot example
    containing `input.txt` and `output.dfy`. The version identifier is a
    content hash over everything that shapes a request, so it changes
    whenever any prompt text changes.
    """
    if path is None:
        path = Path(str(resources.files("dafnypilot").joinpath("assets")))
    else:
        path = Path(path)
    system_prompt = (path / "system_prompt.txt").read_text(encoding="utf-8")
    few_shots = []
    few_dir = path / "few_shot"
    if few_dir.is_dir():
        for example_dir in sorted(few_dir.iterdir()):
            if not example_dir.is_dir():
                continue
            few_shots.append(
                FewShotExample(
                    name=example_dir.name,
                    input_stub=(example_dir / "input.txt").read_text(encoding="utf-8"),
                    output_spec=(example_dir / "output.dfy").read_text(encoding="utf-8"),
                )
            )
    hasher = hashlib.sha256()
    hasher.update(system_prompt.encode("utf-8"))
    for ex in few_shots:
        hasher.update(ex.input_stub.encode("utf-8"))
        hasher.update(ex.output_spec.encode("utf-8"))
    for template in _ALL_TEMPLATES:
        hasher.update(template.encode("utf-8"))
    return PromptAssets(
        system_prompt=system_prompt,
        few_shots=tuple(few_shots),
        version=hasher.hexdigest()[:12],
    )


def _fence(source: str, tag: str = "dafny") -> str:
    return f"```{tag}\n{source}\n```"


def build_spec_prompt(task: str, assets: PromptAssets) -> LlmRequest:
    """System prompt + few-shot pairs as alternating turns + the task."""
    if not task.strip():
        raise ValueError("task must be non-empty")
    messages = [ChatMessage(Role.SYSTEM, assets.system_prompt)]
    for ex in assets.few_shots:
        messages.append(ChatMessage(Role.USER, ex.input_stub))
        messages.append(ChatMessage(Role.ASSISTANT, _fence(ex.output_spec)))
    messages.append(ChatMessage(Role.USER, task))
    return LlmRequest(tuple(messages), Purpose.SPEC_GEN, temperature=GEN_TEMPERATURE)


def build_spec_retry_prompt(
    task: str, assets: PromptAssets, prior_source: str, problems: Sequence[str]
) -> LlmRequest:
    """Re-prompt after a rejected spec: prior source plus what was wrong."""
    base = build_spec_prompt(task, assets)
    problem_lines = "\n".join(f"- {p}" for p in problems) or "- rejected"
    retry = ChatMessage(
        Role.USER, _SPEC_RETRY_TEMPLATE.format(problems=problem_lines, source=prior_source)
    )
    return LlmRequest(base.messages + (retry,), Purpose.SPEC_GEN, temperature=GEN_TEMPERATURE)


def build_refine_prompt(task: str, assets: PromptAssets, prior_source: str, feedback: str) -> LlmRequest:
    """New spec revision from user feedback on the previous draft."""
    if not feedback.strip():
        raise ValueError("feedback must be non-empty")
    base = build_spec_prompt(task, assets)
    refine = ChatMessage(Role.USER, _REFINE_TEMPLATE.format(source=prior_source, feedback=feedback))
    return LlmRequest(base.messages + (refine,), Purpose.SPEC_GEN, temperature=GEN_TEMPERATURE)


def render_diagnostic(diag) -> str:
    """One verifier diagnostic as feedback text: line L, col C: SEVERITY: message."""
    return f"line {diag.line}, col {diag.column}: {diag.severity.value.upper()}: {diag.message}"


def build_feedback_prompt(attempt_source: str, diags: Sequence) -> LlmRequest:
    """Verifier errors and warnings fed back for a corrected program."""
    if not diags:
        raise ValueError("feedback prompt needs at least one diagnostic")
    # errors and warnings only; tool chatter lines add nothing for the model
    structured = [d for d in diags if getattr(d.severity, "value", "") in ("error", "warning")]
    rendered = "\n".join(render_diagnostic(d) for d in (structured or list(diags)))
    messages = (
        ChatMessage(Role.SYSTEM, _IMPL_SYSTEM),
        ChatMessage(Role.USER, _FEEDBACK_TEMPLATE.format(diagnostics=rendered, source=attempt_source)),
    )
    return LlmRequest(messages, Purpose.IMPL_GEN, temperature=GEN_TEMPERATURE)


def build_impl_prompt(spec_source: str, failed_notes: Sequence[str] = ()) -> LlmRequest:
    """First (or restarted) implementation request for an agreed spec."""
    content = _IMPL_TASK_TEMPLATE.format(source=spec_source)
    if failed_notes:
        notes = "\n".join(f"- {n}" for n in failed_notes)
        content += _IMPL_RESTART_NOTE.format(failures=notes)
    messages = (
        ChatMessage(Role.SYSTEM, _IMPL_SYSTEM),
        ChatMessage(Role.USER, content),
    )
    return LlmRequest(messages, Purpose.IMPL_GEN, temperature=GEN_TEMPERATURE)


def build_summary_prompt(
    spec: str, task: Optional[str] = None, attempt: int = 1, rejection_reason: str = ""
) -> LlmRequest:
    """Plain-prose description of a spec; never mentions the internal language.

    When the user's original task is supplied, the model is asked to list
    the differences between the task and what the specification pins down.
    Retries after a redaction rejection carry an attempt note so they digest
    differently from the first ask.
    """
    task_section = _SUMMARY_TASK_SECTION.format(task=task) if task else ""
    content = _SUMMARY_TEMPLATE.format(source=spec, task_section=task_section)
    if attempt > 1:
        content += _SUMMARY_RETRY_NOTE.format(attempt=attempt, reason=rejection_reason or "notation leak")
    messages = (
        ChatMessage(Role.SYSTEM, _SUMMARY_SYSTEM),
        ChatMessage(Role.USER, content),
    )
    return LlmRequest(messages, Purpose.SUMMARY, temperature=GEN_TEMPERATURE)


def build_reconstruction_prompt(summary: str, assets: PromptAssets) -> LlmRequest:
    """Second program from the summary alone (consistency check, leg one)."""
    if not summary.strip():
        raise ValueError("summary must be non-empty")
    messages = (
        ChatMessage(Role.SYSTEM, assets.system_prompt),
        ChatMessage(Role.USER, _RECONSTRUCT_TEMPLATE.format(summary=summary)),
    )
    return LlmRequest(messages, Purpose.RECONSTRUCT, temperature=JUDGE_TEMPERATURE)


def build_equivalence_prompt(p1: str, p2: str) -> LlmRequest:
    """Judge request: EQUIVALENT or DIFFERENT plus a reason."""
    if not p1.strip() or not p2.strip():
        raise ValueError("both programs must be non-empty")
    messages = (
        ChatMessage(Role.SYSTEM, _EQUIV_SYSTEM),
        ChatMessage(Role.USER, _EQUIV_TEMPLATE.format(first=p1, second=p2)),
    )
    return LlmRequest(messages, Purpose.EQUIV_JUDGE, temperature=JUDGE_TEMPERATURE)


def build_postprocess_prompt(function_source: str) -> LlmRequest:
    """Idiomatic rewrite of one compiler-emitted target function."""
    messages = (
        ChatMessage(Role.SYSTEM, _POSTPROCESS_SYSTEM),
        ChatMessage(Role.USER, _POSTPROCESS_TEMPLATE.format(source=function_source)),
    )
    return LlmRequest(messages, Purpose.POSTPROCESS, temperature=GEN_TEMPERATURE)


_DEF_RE = re.compile(r"def\s+([A-Za-z_]\w*)\s*\(([^)]*)\)")
_BACKTICK_SIG_RE = re.compile(r"`([A-Za-z_]\w*)\s*\(([^`)]*)\)[^`]*`")
_OPTIONAL_RETURN_RE = re.compile(r"\bNone\b|\b[Oo]ptionall?y?\b")


def parse_task_signature(task: str) -> Optional[tuple[str, int]]:
    """Requested function name and arity from a task prompt.

    Understands `def name(params)` stubs (benchmark prompts) and
    backticked `name(params)` signatures in conversational prompts.
    """
    m = _DEF_RE.search(task) or _BACKTICK_SIG_RE.search(task)
    if m is None:
        return None
    name = m.group(1)
    params = m.group(2).strip()
    if not params:
        return name, 0
    depth = 0
    count = 1
    for ch in params:
        if ch in "([{<":
            depth += 1
        elif ch in ")]}>":
            depth -= 1
        elif ch == "," and depth == 0:
            count += 1
    # a trailing "self" never shows up in these prompts; no adjustment
    return name, count


def validate_spec_shape(spec: str, task: str) -> SpecShapeReport:
    """Lexical shape check of a generated Dafny spec against its task.

    Checks: module wrapper; exactly one {:testEntry} method whose body is
    the axiom stub; a Main with at least one expect; method (not function)
    syntax for the entry; entry name and arity match the task signature; a
    docstring comment precedes the entry; an Option datatype exists when
    the task mentions a None/optional return.
    """
    violations: list[Violation] = []
    ol = dafny_text.outline(spec)

    if ol.body_span is None:
        violations.append(Violation.NO_MODULE)

    entry = dafny_text.entry_decl(ol)
    if entry is None:
        violations.append(Violation.MISSING_TEST_ENTRY)
    else:
        if entry.kind != "method":
            violations.append(Violation.USES_FUNCTION_SYNTAX)
        body = dafny_text.body_text(spec, entry)
        if not dafny_text.is_stub_body(body):
            violations.append(Violation.BODY_NOT_STUB)
        if not entry.doc_comment:
            violations.append(Violation.MISSING_DOCSTRING)
        sig = parse_task_signature(task)
        if sig is not None:
            name, arity = sig
            if entry.name != name:
                violations.append(Violation.NAME_MISMATCH)
            if dafny_text.param_count(entry.params_text) != arity:
                violations.append(Violation.ARITY_MISMATCH)

    main = dafny_text.find_decl(ol, "Main")
    if main is None or main.kind != "method":
        violations.append(Violation.MISSING_MAIN)
    else:
        main_tokens = dafny_text.token_texts(dafny_text.body_text(spec, main))
        if "expect" not in main_tokens:
            violations.append(Violation.MISSING_EXPECT)

    if _OPTIONAL_RETURN_RE.search(task) and not any("Option" in n for n in ol.datatypes):
        violations.append(Violation.MISSING_OPTION)

    return SpecShapeReport(tuple(violations))
