"""Session lifecycle: state machine, append-only event log, opacity.

Persistence is one JSON event per line per session under the data
directory; a session is a fold over its events, so crash recovery is
replaying the file. Every turn that carries internal material (requests
to the model, intermediate sources, verifier output, tool payloads) is
appended hidden; the only visible assistant turns are redaction-gated
summaries and status messages.
"""

from __future__ import annotations

import enum
import io
import json
import threading
import time
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import spec_loop, synth_loop
from ..delivery import DeliveryError
from ..engine import Engine
from ..llm_gateway import tool_call_marker
from ..spec_loop import ConsistencyStatus, ConsistencyVerdict, SpecDraft, SpecLoopError
from .redaction import RedactionViolation, redact


class SessionState(str, enum.Enum):
    CREATED = "created"
    SPEC_DRAFTING = "spec_drafting"
    AWAITING_AGREEMENT = "awaiting_agreement"
    SPEC_AGREED = "spec_agreed"
    SYNTHESIZING = "synthesizing"
    DELIVERED = "delivered"
    FAILED = "failed"


class UnknownSession(Exception):
    pass


class WrongState(Exception):
    def __init__(self, operation: str, state: SessionState):
        super().__init__(f"operation {operation} is not legal in state {state.value}")
        self.operation = operation
        self.state = state


@dataclass(frozen=True)
class ChatTurn:
    index: int
    role: str  # "user" | "assistant" | "tool"
    content: str
    visible: bool
    timestamp: float
    tool_tag: Optional[str] = None


@dataclass
class Session:
    id: str
    state: SessionState = SessionState.CREATED
    transcript: list[ChatTurn] = field(default_factory=list)
    current_draft: Optional[SpecDraft] = None
    deliverable_dir: Optional[str] = None
    failure_reason: str = ""

    def visible_turns(self) -> list[ChatTurn]:
        return [t for t in self.transcript if t.visible]


class EventStore:
    """Append-only JSONL event log, one file per session."""

    def __init__(self, data_dir: Path | str):
        self.data_dir = Path(data_dir)
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / f"{session_id}.jsonl"

    def append(self, session_id: str, event_type: str, data: dict) -> None:
        event = {"type": event_type, "data": data, "ts": time.time()}
        with self._lock:
            with open(self._path(session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def events(self, session_id: str) -> list[dict]:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSession(session_id)
        out = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                out.append(json.loads(line))
        return out

    def known_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.data_dir / "sessions").glob("*.jsonl"))


def _draft_from_event(data: dict) -> SpecDraft:
    return SpecDraft(
        revision=data["revision"],
        task=data["task"],
        dafny_source=data["dafny_source"],
        nl_summary=data["nl_summary"],
        differences_note=data["differences_note"],
        consistency=ConsistencyVerdict(
            status=ConsistencyStatus(data["consistency_status"]),
            reconstructed_source=data.get("reconstructed_source"),
            judge_reason=data.get("judge_reason", ""),
        ),
        entry_name=data.get("entry_name", ""),
        summary_withheld=data.get("summary_withheld", False),
        consistency_flagged=data.get("consistency_flagged", False),
    )


def _draft_to_event(draft: SpecDraft) -> dict:
    return {
        "revision": draft.revision,
        "task": draft.task,
        "dafny_source": draft.dafny_source,
        "nl_summary": draft.nl_summary,
        "differences_note": draft.differences_note,
        "consistency_status": draft.consistency.status.value,
        "reconstructed_source": draft.consistency.reconstructed_source,
        "judge_reason": draft.consistency.judge_reason,
        "entry_name": draft.entry_name,
        "summary_withheld": draft.summary_withheld,
        "consistency_flagged": draft.consistency_flagged,
    }


def fold_session(session_id: str, events: list[dict]) -> Session:
    """Rebuild session state from its event history."""
    session = Session(id=session_id)
    for event in events:
        kind = event["type"]
        data = event["data"]
        if kind == "created":
            pass
        elif kind == "turn":
            session.transcript.append(
                ChatTurn(
                    index=len(session.transcript),
                    role=data["role"],
                    content=data["content"],
                    visible=data["visible"],
                    timestamp=event.get("ts", 0.0),
                    tool_tag=data.get("tool_tag"),
                )
            )
        elif kind == "state":
            session.state = SessionState(data["state"])
        elif kind == "draft":
            session.current_draft = _draft_from_event(data)
        elif kind == "deliverable":
            session.deliverable_dir = data["dir"]
        elif kind == "failed":
            session.failure_reason = data.get("reason", "")
    return session


DELIVERED_MESSAGE = (
    "Your solution is ready. The package contains four parts: the "
    "implementation itself, a reference definition of the expected "
    "behaviour that the implementation was checked against, your own test "
    "cases as runnable assertions, and additional generated tests. "
    "Download it when ready."
)

FAILED_SYNTH_MESSAGE = (
    "I was unable to produce a solution that passes all of my internal "
    "checks within my attempt budget, so I have nothing trustworthy to "
    "hand over. Please try rephrasing or simplifying the task."
)

FAILED_SPEC_MESSAGE = (
    "I was unable to turn this task into a specification that passes my "
    "internal checks. Please try rephrasing the request or adding detail."
)

AGREEMENT_QUESTION = (
    "\n\nAre you satisfied with this specification, or would you like to "
    "make any changes?"
)


class SessionManager:
    """Serialized per-session operations over the event store."""

    def __init__(self, engine: Engine, store: EventStore, inline_jobs: bool = True):
        self.engine = engine
        self.store = store
        self.inline_jobs = inline_jobs
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    # --- operations ---

    def create_session(self) -> Session:
        session_id = uuid.uuid4().hex[:12]
        self.store.append(session_id, "created", {})
        self.store.append(session_id, "state", {"state": SessionState.CREATED.value})
        return self.get_session(session_id)

    def get_session(self, session_id: str) -> Session:
        return fold_session(session_id, self.store.events(session_id))

    def _turn(self, session_id: str, role: str, content: str, visible: bool, tool_tag: Optional[str] = None) -> None:
        self.store.append(
            session_id,
            "turn",
            {"role": role, "content": content, "visible": visible, "tool_tag": tool_tag},
        )

    def _state(self, session_id: str, state: SessionState) -> None:
        self.store.append(session_id, "state", {"state": state.value})

    def _visible_summary_turn(self, session_id: str, draft: SpecDraft) -> None:
        try:
            body = spec_loop.render_user_summary(draft)
        except spec_loop.OpacityError:
            body = spec_loop.WITHHELD_SUMMARY
        self._turn(session_id, "assistant", body + AGREEMENT_QUESTION, visible=True)

    def post_message(self, session_id: str, text: str) -> Session:
        with self._lock(session_id):
            session = self.get_session(session_id)
            if session.state not in (
                SessionState.CREATED,
                SessionState.SPEC_DRAFTING,
                SessionState.AWAITING_AGREEMENT,
            ):
                raise WrongState("post_message", session.state)
            self._turn(session_id, "user", text, visible=True)
            self._state(session_id, SessionState.SPEC_DRAFTING)
            try:
                if session.current_draft is None:
                    draft = spec_loop.draft_specification(self.engine, text)
                else:
                    draft = spec_loop.refine_specification(self.engine, session.current_draft, text)
            except (SpecLoopError, ValueError) as exc:
                self._turn(
                    session_id,
                    "tool",
                    tool_call_marker("spec_synthesis", f"failed: {exc}"),
                    visible=False,
                    tool_tag="spec_synthesis",
                )
                self._turn(session_id, "assistant", FAILED_SPEC_MESSAGE, visible=True)
                self.store.append(session_id, "failed", {"reason": str(exc)})
                self._state(session_id, SessionState.FAILED)
                return self.get_session(session_id)
            self._turn(
                session_id,
                "tool",
                tool_call_marker("spec_synthesis", draft.dafny_source),
                visible=False,
                tool_tag="spec_synthesis",
            )
            self.store.append(session_id, "draft", _draft_to_event(draft))
            self._visible_summary_turn(session_id, draft)
            self._state(session_id, SessionState.AWAITING_AGREEMENT)
            return self.get_session(session_id)

    def accept_spec(self, session_id: str) -> Session:
        with self._lock(session_id):
            session = self.get_session(session_id)
            if session.state is not SessionState.AWAITING_AGREEMENT:
                raise WrongState("accept_spec", session.state)
            self._state(session_id, SessionState.SPEC_AGREED)
            self._state(session_id, SessionState.SYNTHESIZING)
        if self.inline_jobs:
            self._synthesis_job(session_id)
        else:
            thread = threading.Thread(target=self._synthesis_job, args=(session_id,), daemon=True)
            thread.start()
        return self.get_session(session_id)

    def _synthesis_job(self, session_id: str) -> None:
        with self._lock(session_id):
            session = self.get_session(session_id)
            draft = session.current_draft
            try:
                prog = synth_loop.synthesize(self.engine, draft)
                self._turn(
                    session_id,
                    "tool",
                    tool_call_marker("impl_synthesis", prog.dafny_source),
                    visible=False,
                    tool_tag="impl_synthesis",
                )
                deliverable = self.engine.deliver(prog)
            except synth_loop.SynthNonConvergence as exc:
                for attempt in exc.history:
                    self._turn(
                        session_id,
                        "tool",
                        tool_call_marker("impl_synthesis", f"attempt {attempt.index}: {attempt.error_count} errors"),
                        visible=False,
                        tool_tag="impl_synthesis",
                    )
                self._turn(session_id, "assistant", FAILED_SYNTH_MESSAGE, visible=True)
                self.store.append(session_id, "failed", {"reason": str(exc)})
                self._state(session_id, SessionState.FAILED)
                return
            except DeliveryError as exc:
                self._turn(session_id, "assistant", FAILED_SYNTH_MESSAGE, visible=True)
                self.store.append(session_id, "failed", {"reason": str(exc)})
                self._state(session_id, SessionState.FAILED)
                return
            target_dir = self.store.data_dir / "deliverables" / session_id
            deliverable.write_to(target_dir)
            self.store.append(session_id, "deliverable", {"dir": str(target_dir)})
            self._turn(session_id, "assistant", DELIVERED_MESSAGE, visible=True)
            self._state(session_id, SessionState.DELIVERED)

    def deliverable_zip(self, session_id: str) -> bytes:
        session = self.get_session(session_id)
        if session.state is not SessionState.DELIVERED or not session.deliverable_dir:
            raise WrongState("get_deliverable", session.state)
        buffer = io.BytesIO()
        root = Path(session.deliverable_dir)
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            for path in sorted(root.rglob("*")):
                if path.is_file():
                    archive.write(path, path.relative_to(root))
        return buffer.getvalue()

    # --- views ---

    def _guarded(self, text: str) -> str:
        # last line of defense: withhold rather than surface anything dirty
        if isinstance(redact(text), RedactionViolation):
            return spec_loop.WITHHELD_SUMMARY
        return text

    def view(self, session_id: str) -> dict:
        """API-facing projection: visible turns only, no raw sources."""
        session = self.get_session(session_id)
        draft_card = None
        if session.current_draft is not None:
            draft = session.current_draft
            summary = draft.nl_summary if not draft.summary_withheld else spec_loop.WITHHELD_SUMMARY
            draft_card = {
                "revision": draft.revision,
                "summary": self._guarded(summary),
                "differences": self._guarded(draft.differences_note),
                "consistency": draft.consistency.status.value,
            }
        deliverable_card = None
        if session.state is SessionState.DELIVERED and session.deliverable_dir:
            provenance = {}
            provenance_path = Path(session.deliverable_dir) / "PROVENANCE.json"
            if provenance_path.exists():
                provenance = json.loads(provenance_path.read_text(encoding="utf-8"))
            deliverable_card = {
                "components": ["implementation", "reference definition", "your tests", "generated tests"],
                "provenance": {
                    "checked_internally": provenance.get("verified_in_dafny", False),
                    "postprocessed_unverified": provenance.get("postprocessed_unverified", False),
                    "testgen_degraded": provenance.get("testgen_degraded", False),
                },
            }
        return {
            "id": session.id,
            "state": session.state.value,
            "turns": [
                {
                    "index": t.index,
                    "role": t.role,
                    "content": self._guarded(t.content) if t.role == "assistant" else t.content,
                }
                for t in session.visible_turns()
            ],
            "draft": draft_card,
            "deliverable": deliverable_card,
        }
