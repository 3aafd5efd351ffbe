"""Authored deterministic fixtures: demo and benchmark cassettes.

Cassettes are keyed by request digests, so hand-writing them would break on
any prompt-template change. Instead, fixture builders run the real pipeline
in record mode against a ScriptedBackend that plays authored responses in
call order; the recorder keys each response by the digest the pipeline
actually produced. Replaying the resulting cassette then exercises the
identical code path with zero scripting.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Optional, Sequence

from ..dafny_driver import ToolchainConfig
from ..engine import Engine
from ..llm_gateway import Cassette, LlmGateway, LlmRequest, Purpose
from ..prompt_kit import load_assets
from ..synth_loop import SynthesisBudget


class ScriptMismatch(Exception):
    pass


class ScriptedBackend:
    """Plays an authored (purpose, response) script in pipeline call order."""

    def __init__(self, script: Sequence[tuple[Purpose, str]]):
        self.queue = deque(script)
        self.model = "scripted-fixture"

    def complete(self, req: LlmRequest) -> str:
        if not self.queue:
            raise ScriptMismatch(f"script exhausted; pipeline asked for {req.purpose.value}")
        purpose, response = self.queue.popleft()
        if purpose is not req.purpose:
            raise ScriptMismatch(f"script expected {purpose.value} call, pipeline made {req.purpose.value}")
        return response

    def assert_exhausted(self) -> None:
        if self.queue:
            leftover = [p.value for p, _ in self.queue]
            raise ScriptMismatch(f"script not fully consumed: {leftover}")


def recording_engine(
    script: Sequence[tuple[Purpose, str]],
    cassette_path: Path | str,
    toolchain: Optional[ToolchainConfig] = None,
    synth_budget: Optional[SynthesisBudget] = None,
    spec_budget: int = 5,
) -> tuple[Engine, ScriptedBackend]:
    backend = ScriptedBackend(script)
    cassette = Cassette(Path(cassette_path), model=backend.model)
    gateway = LlmGateway(mode="record", cassette=cassette, live=backend)
    from ..dafny_driver import Driver

    engine = Engine(
        gateway=gateway,
        driver=Driver(toolchain or ToolchainConfig()),
        assets=load_assets(),
        spec_budget=spec_budget,
        synth_budget=synth_budget or SynthesisBudget(),
    )
    return engine, backend
