"""Shared wiring: one object carrying the gateway, driver and knobs.

Every pipeline stage takes the engine as its first argument; the service,
the CLI and the benchmark harness all construct one from configuration.
Tests inject fakes for either side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import delivery as delivery_mod
from . import interop, spec_loop, synth_loop
from .dafny_driver import Driver, ToolchainConfig
from .llm_gateway import Cassette, LiveBackend, LlmGateway
from .prompt_kit import PromptAssets, load_assets
from .synth_loop import SynthesisBudget


@dataclass
class Engine:
    gateway: LlmGateway
    driver: Driver
    assets: PromptAssets
    spec_budget: int = 5
    synth_budget: SynthesisBudget = field(default_factory=SynthesisBudget)
    postprocess: bool = False
    attach_shim: bool = True

    def draft(self, task: str) -> spec_loop.SpecDraft:
        return spec_loop.draft_specification(self, task)

    def refine(self, draft: spec_loop.SpecDraft, feedback: str) -> spec_loop.SpecDraft:
        return spec_loop.refine_specification(self, draft, feedback)

    def synthesize(self, draft: spec_loop.SpecDraft) -> synth_loop.VerifiedProgram:
        return synth_loop.synthesize(self, draft)

    def deliver(self, prog: synth_loop.VerifiedProgram, postprocess: Optional[bool] = None) -> delivery_mod.Deliverable:
        deliverable = delivery_mod.assemble_deliverable(self, prog)
        do_postprocess = self.postprocess if postprocess is None else postprocess
        if do_postprocess:
            deliverable = delivery_mod.postprocess_readability(self, deliverable)
        if self.attach_shim:
            try:
                shim = interop.build_shim(prog.dafny_source)
            except interop.UnsupportedTypeShape:
                shim = None
            if shim is not None:
                deliverable = delivery_mod.wrap_native_entry(deliverable, shim)
        return deliverable


def build_engine(
    llm_mode: str = "replay",
    cassette_path: Optional[str] = None,
    toolchain: Optional[ToolchainConfig] = None,
    assets_path: Optional[str] = None,
    spec_budget: int = 5,
    synth_budget: Optional[SynthesisBudget] = None,
    postprocess: bool = False,
    attach_shim: bool = True,
    live_backend: Optional[LiveBackend] = None,
) -> Engine:
    cassette = None
    if llm_mode in ("replay", "record") and cassette_path is not None:
        path = str(cassette_path)
        if llm_mode == "replay":
            cassette = Cassette.load(path)
        else:
            cassette = Cassette(path)
    gateway = LlmGateway(mode=llm_mode, cassette=cassette, live=live_backend)
    return Engine(
        gateway=gateway,
        driver=Driver(toolchain or ToolchainConfig()),
        assets=load_assets(assets_path),
        spec_budget=spec_budget,
        synth_budget=synth_budget or SynthesisBudget(),
        postprocess=postprocess,
        attach_shim=attach_shim,
    )
