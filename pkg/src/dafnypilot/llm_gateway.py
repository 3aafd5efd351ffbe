"""Uniform interface to a chat-completion model.

Two backends share one surface: a live HTTP backend speaking a generic JSON
chat-completion shape, and a deterministic record/replay backend keyed by a
digest of the normalized request. All pipeline stages talk to the model
exclusively through :class:`LlmGateway`, which is what makes whole pipeline
runs replayable bit-for-bit from a cassette file.

Also home to the fenced-code extractor and the tagged tool-call markers used
to keep internal tool traffic out of user-visible transcripts.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import httpx

# Marker wrapped around externally-implemented call payloads. Turns carrying
# it are never shown to users; the redaction filter also rejects it outright.
TOOL_TAG_OPEN = "<<tool:"
TOOL_TAG_CLOSE = ">>"

ENV_ENDPOINT = "DAFNYPILOT_LLM_URL"
ENV_CREDENTIAL = "DAFNYPILOT_LLM_KEY"
ENV_MODEL = "DAFNYPILOT_LLM_MODEL"


class Role(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"
    TOOL = "tool"


class Purpose(str, enum.Enum):
    """Which template produced a request; part of the replay digest."""

    SPEC_GEN = "spec_gen"
    SUMMARY = "summary"
    RECONSTRUCT = "reconstruct"
    EQUIV_JUDGE = "equiv_judge"
    IMPL_GEN = "impl_gen"
    POSTPROCESS = "postprocess"


class LlmGatewayError(Exception):
    pass


class LiveTransportError(LlmGatewayError):
    """Network or auth failure talking to the live endpoint."""


class ReplayMiss(LlmGatewayError):
    """Request digest absent from the cassette.

    Signals a fixture gap; replay never silently falls back to live.
    """

    def __init__(self, digest: str, purpose: Purpose):
        super().__init__(f"no cassette entry for digest {digest} (purpose={purpose.value})")
        self.digest = digest
        self.purpose = purpose


class DigestCollision(LlmGatewayError):
    """Same digest recorded with two different responses."""


class CassetteFormatError(LlmGatewayError):
    pass


class NoFence(LlmGatewayError):
    """No code fence with the requested tag in the model output."""


class UnterminatedFence(LlmGatewayError):
    """Opening fence without a closing fence."""


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str
    tool_tag: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.tool_tag is not None) != (self.role is Role.TOOL):
            raise ValueError("tool_tag present iff role == Tool")
        if self.role in (Role.USER, Role.ASSISTANT) and not self.content:
            raise ValueError(f"{self.role.value} message must have content")


@dataclass(frozen=True)
class LlmRequest:
    messages: tuple[ChatMessage, ...]
    purpose: Purpose
    temperature: float = 0.2
    max_tokens: int = 4096

    def __post_init__(self) -> None:
        if not self.messages or self.messages[0].role is not Role.SYSTEM:
            raise ValueError("first message must have role System")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be in [0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    @property
    def digest(self) -> str:
        return request_digest(self)


@dataclass(frozen=True)
class LlmResponse:
    content: str
    request_digest: str
    backend: str  # "live" | "replay"


def normalize_content(text: str) -> str:
    """Canonical form of message text for digesting.

    NFC-normalized, trailing whitespace stripped per line and at the end.
    Prompt templates evolve; this keeps cassettes stable under cosmetic edits
    while leaving indentation (which is meaningful in code) alone.
    """
    nfc = unicodedata.normalize("NFC", text)
    return "\n".join(line.rstrip() for line in nfc.split("\n")).rstrip("\n")


def request_digest(req: LlmRequest) -> str:
    """Digest over (role, normalized content) per message plus the purpose.

    Deliberately excludes temperature/max_tokens and any other metadata that
    does not change what was asked.
    """
    canonical = json.dumps(
        {
            "purpose": req.purpose.value,
            "messages": [
                {"role": m.role.value, "content": normalize_content(m.content)}
                for m in req.messages
            ],
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Cassette:
    """Recorded map from request digest to model response.

    On-disk format is one JSON object per line: {digest, purpose, response,
    model}. Lookups are exact; recording the same (digest, response) pair
    twice is a no-op, while a conflicting response for a known digest is
    refused.
    """

    def __init__(self, path: Optional[Path] = None, model: str = "unknown"):
        self.path = Path(path) if path is not None else None
        self.model = model
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: Path | str) -> "Cassette":
        cassette = cls(Path(path))
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CassetteFormatError(f"{path}:{lineno}: not JSON: {exc}") from exc
                missing = {"digest", "purpose", "response"} - entry.keys()
                if missing:
                    raise CassetteFormatError(f"{path}:{lineno}: missing fields {sorted(missing)}")
                digest = entry["digest"]
                known = cassette._entries.get(digest)
                if known is not None and known["response"] != entry["response"]:
                    raise DigestCollision(f"{path}:{lineno}: digest {digest} recorded twice with different responses")
                cassette._entries[digest] = entry
                cassette.model = entry.get("model", cassette.model)
        return cassette

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, digest: str) -> Optional[dict]:
        return self._entries.get(digest)

    def record(self, digest: str, purpose: Purpose, response: str, model: Optional[str] = None) -> None:
        entry = {
            "digest": digest,
            "purpose": purpose.value,
            "response": response,
            "model": model or self.model,
        }
        with self._lock:
            known = self._entries.get(digest)
            if known is not None:
                if known["response"] != response:
                    raise DigestCollision(f"digest {digest} already recorded with a different response")
                return  # idempotent
            self._entries[digest] = entry
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def save(self, path: Path | str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for entry in self._entries.values():
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        self.path = Path(path)


class LiveBackend:
    """Generic JSON chat-completion transport.

    Speaks a single wire shape; vendor specifics belong in thin adapters on
    the server side, not here. The endpoint and credential come from
    explicit arguments or the environment.
    """

    def __init__(
        self,
        endpoint: Optional[str] = None,
        credential: Optional[str] = None,
        model: Optional[str] = None,
        transport: Optional[httpx.BaseTransport] = None,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        self.credential = credential or os.environ.get(ENV_CREDENTIAL)
        self.model = model or os.environ.get(ENV_MODEL, "default")
        self._client = httpx.Client(transport=transport, timeout=timeout)

    def complete(self, req: LlmRequest) -> str:
        if not self.endpoint:
            raise LiveTransportError(f"no live endpoint configured (set {ENV_ENDPOINT})")
        headers = {}
        if self.credential:
            headers["Authorization"] = f"Bearer {self.credential}"
        payload = {
            "model": self.model,
            "messages": [{"role": m.role.value, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        try:
            resp = self._client.post(self.endpoint, json=payload, headers=headers)
            resp.raise_for_status()
            body = resp.json()
        except httpx.HTTPError as exc:
            raise LiveTransportError(str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise LiveTransportError(f"malformed completion body: {exc}") from exc
        if "content" not in body:
            raise LiveTransportError("completion body lacks 'content'")
        return body["content"]


class LlmGateway:
    """Mode-switched front door: live, replay, or record.

    Replay is a pure map lookup and therefore deterministic; record wraps a
    live call and appends to the cassette (write-serialized). A cassette
    opened for replay is read-only and can be shared across sessions.
    """

    def __init__(
        self,
        mode: str = "replay",
        cassette: Optional[Cassette] = None,
        live: Optional[LiveBackend] = None,
    ):
        if mode not in ("live", "replay", "record"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode in ("replay", "record") and cassette is None:
            raise ValueError(f"{mode} mode needs a cassette")
        if mode in ("live", "record") and live is None:
            live = LiveBackend()
        self.mode = mode
        self.cassette = cassette
        self.live = live

    def complete(self, req: LlmRequest) -> LlmResponse:
        digest = request_digest(req)
        if self.mode == "replay":
            entry = self.cassette.lookup(digest)
            if entry is None:
                raise ReplayMiss(digest, req.purpose)
            return LlmResponse(content=entry["response"], request_digest=digest, backend="replay")
        content = self.live.complete(req)
        if self.mode == "record":
            self.cassette.record(digest, req.purpose, content, self.live.model)
        return LlmResponse(content=content, request_digest=digest, backend="live")


def extract_code_block(text: str, fence_tag: str) -> str:
    """Contents of the first ```<fence_tag> fence, fence lines removed.

    Interior bytes are preserved exactly. Raises NoFence when no fence with
    the tag exists, UnterminatedFence when an opening fence never closes.
    """
    lines = text.split("\n")
    open_idx = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if open_idx is None:
            if stripped.startswith("```") and stripped[3:].strip() == fence_tag:
                open_idx = i
        else:
            if stripped == "```":
                return "\n".join(lines[open_idx + 1 : i])
    if open_idx is not None:
        raise UnterminatedFence(f"```{fence_tag} fence never closed")
    raise NoFence(f"no ```{fence_tag} fence in model output")


def wrap_code_block(source: str, fence_tag: str) -> str:
    """Inverse of extract_code_block for fence-free payloads."""
    return f"```{fence_tag}\n{source}\n```"


def tool_call_marker(name: str, payload: str = "") -> str:
    """Render a tagged tool-call payload (hidden-turn content)."""
    return f"{TOOL_TAG_OPEN}{name}{TOOL_TAG_CLOSE}{payload}"


def contains_tool_tag(text: str) -> bool:
    return TOOL_TAG_OPEN in text
