"""Phase three: package the verified program for the user.

Generates extra tests (degrading gracefully when the tool refuses or times
out), compiles to the target language, runs the packaged test program and
requires exit 0 before anything reaches a user, then records provenance.
Optional post-processing sends the compiled entry function through the
model for an idiomatic rewrite that is test-gated, never equivalence-
verified — the provenance flag says so honestly. The interop shim is
attached last and its absence never blocks delivery.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import dafny_text, interop, prompt_kit
from .dafny_driver import TestgenError
from .llm_gateway import NoFence, UnterminatedFence, extract_code_block
from .stubdafny.pycompile import mangle_decl
from .synth_loop import VerifiedProgram

MARKER_TEMPLATE = "// @@region:{name}@@"
COMPILED_MARKER_RE = re.compile(r"^\s*# (@@region:([a-z_]+)@@)\s*$")

COMPONENTS = ("imperative_impl", "functional_spec", "user_tests", "generated_tests")


class DeliveryError(Exception):
    def __init__(self, message: str, detail: str = ""):
        super().__init__(message)
        self.detail = detail


@dataclass(frozen=True)
class Region:
    file: str
    start_line: int  # 1-based, inclusive
    end_line: int  # 1-based, inclusive


@dataclass
class Deliverable:
    target: str
    entry_name: str
    files: dict[str, str]
    components: dict[str, Region]
    provenance: dict

    def write_to(self, directory: Path | str) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        for name, content in self.files.items():
            (out / name).write_text(content, encoding="utf-8")
        return out


def _inject_marker(source: str, offset: int, name: str) -> str:
    line_start = source.rfind("\n", 0, offset) + 1
    indent = source[line_start:offset]
    if indent.strip():
        indent = ""
    return source[:line_start] + indent + MARKER_TEMPLATE.format(name=name) + "\n" + source[line_start:]


def _functional_spec_name(source: str, entry: dafny_text.MethodDecl, outline: dafny_text.ModuleOutline) -> Optional[str]:
    ensures_text = " ".join(text for kw, text in entry.clauses if kw == "ensures")
    function_names = [d.name for d in outline.decls if d.kind in ("function", "predicate")]
    for name in function_names:
        if re.search(rf"\b{re.escape(name)}\b", ensures_text):
            return name
    return function_names[0] if function_names else None


def inject_region_markers(source: str) -> str:
    """Marker comments before each component declaration.

    Injected into the intermediate source before compilation; the backend
    preserves them as comments, which keeps the component regions
    mechanically locatable in the compiled output.
    """
    ol = dafny_text.outline(source)
    entry = dafny_text.entry_decl(ol)
    targets: list[tuple[int, str]] = []
    if entry is not None:
        targets.append((entry.span[0], "imperative_impl"))
        spec_name = _functional_spec_name(source, entry, ol)
        if spec_name:
            spec_decl = dafny_text.find_decl(ol, spec_name)
            if spec_decl is not None:
                targets.append((spec_decl.span[0], "functional_spec"))
    main = dafny_text.find_decl(ol, "Main")
    if main is not None:
        targets.append((main.span[0], "user_tests"))
    for offset, name in sorted(targets, reverse=True):
        source = _inject_marker(source, offset, name)
    return source


def splice_generated_tests(source: str, tests: str) -> str:
    """Insert the generated test methods before the module's closing brace."""
    ol = dafny_text.outline(source)
    indented = "\n".join(f"  {line}" if line.strip() else line for line in tests.strip().split("\n"))
    block = f"\n  {MARKER_TEMPLATE.format(name='generated_tests')}\n{indented}\n"
    if ol.body_span is None:
        return source + block
    close = ol.body_span[1]
    return source[:close] + block + source[close:]


def locate_components(files: dict[str, str]) -> dict[str, Region]:
    """Component regions from preserved markers; symbol matching fallback."""
    regions: dict[str, Region] = {}
    for filename, content in files.items():
        lines = content.split("\n")
        marks: list[tuple[int, str]] = []
        for i, line in enumerate(lines, start=1):
            m = COMPILED_MARKER_RE.match(line)
            if m and m.group(2) in COMPONENTS:
                marks.append((i, m.group(2)))
        for idx, (start, name) in enumerate(marks):
            end = marks[idx + 1][0] - 1 if idx + 1 < len(marks) else len(lines)
            regions[name] = Region(filename, start, end)
    if "imperative_impl" not in regions:
        # fallback: find the entry symbol by name
        for filename, content in files.items():
            lines = content.split("\n")
            for i, line in enumerate(lines, start=1):
                if re.match(r"\s*def \w+\(", line):
                    regions.setdefault("imperative_impl", Region(filename, i, len(lines)))
                    break
    return regions


def assemble_deliverable(engine, prog: VerifiedProgram) -> Deliverable:
    """Tests, compilation, self-run gate, provenance — the standard path."""
    source = inject_region_markers(prog.dafny_source)

    testgen_degraded = False
    degrade_reason = ""
    try:
        generated = engine.driver.generate_tests(prog.dafny_source)
    except TestgenError as exc:
        testgen_degraded = True
        degrade_reason = f"{type(exc).__name__}: {exc}"
        generated = ""
    if generated.strip():
        source = splice_generated_tests(source, generated)

    try:
        files = engine.driver.compile(source)
    except Exception as exc:
        raise DeliveryError(f"compilation failed: {exc}") from exc

    run = engine.driver.run_target(files, entry="tests.py")
    if run.exit_code != 0:
        raise DeliveryError(
            "packaged test program failed its own run", detail=run.stdout + run.stderr
        )

    entry_name = ""
    entry = dafny_text.entry_decl(dafny_text.outline(prog.dafny_source))
    if entry is not None:
        entry_name = entry.name

    provenance = {
        "verified_in_dafny": True,
        "postprocessed_unverified": False,
        "testgen_degraded": testgen_degraded,
        "testgen_degrade_reason": degrade_reason,
        "dafny_version": engine.driver.cfg.dafny_version,
        "asset_version": engine.assets.version,
        "spec_revision": prog.spec_revision,
        "synthesis_attempts": prog.attempts_used,
    }
    files = dict(files)
    files["PROVENANCE.json"] = json.dumps(provenance, indent=2) + "\n"
    components = locate_components(files)
    return Deliverable(
        target=engine.driver.cfg.target,
        entry_name=entry_name,
        files=files,
        components=components,
        provenance=provenance,
    )


def _replace_region(content: str, region: Region, new_lines: list[str]) -> str:
    lines = content.split("\n")
    kept_head = lines[: region.start_line]  # keep the marker line itself
    kept_tail = lines[region.end_line :]
    return "\n".join(kept_head + new_lines + kept_tail)


def postprocess_readability(engine, deliverable: Deliverable) -> Deliverable:
    """Test-gated idiomatic rewrite of the compiled entry function.

    The rewrite replaces only the implementation region; every test file is
    locked. A rewrite that fails any packaged test is discarded.
    """
    region = deliverable.components.get("imperative_impl")
    if region is None:
        return deliverable
    impl_content = deliverable.files[region.file]
    lines = impl_content.split("\n")
    function_source = "\n".join(lines[region.start_line : region.end_line])

    request = prompt_kit.build_postprocess_prompt(function_source)
    response = engine.gateway.complete(request).content
    try:
        rewritten = extract_code_block(response, "python")
    except (NoFence, UnterminatedFence):
        return deliverable

    indented = ["  @staticmethod"] + [
        f"  {line}" if line.strip() else line for line in rewritten.strip().split("\n")
    ]
    candidate_impl = _replace_region(impl_content, region, indented)
    candidate_files = dict(deliverable.files)
    candidate_files[region.file] = candidate_impl

    run = engine.driver.run_target(candidate_files, entry="tests.py")
    if run.exit_code != 0:
        return deliverable

    provenance = dict(deliverable.provenance)
    provenance["postprocessed_unverified"] = True
    candidate_files["PROVENANCE.json"] = json.dumps(provenance, indent=2) + "\n"
    return Deliverable(
        target=deliverable.target,
        entry_name=deliverable.entry_name,
        files=candidate_files,
        components=locate_components(candidate_files),
        provenance=provenance,
    )


def wrap_native_entry(deliverable: Deliverable, shim: interop.InteropShim) -> Deliverable:
    """Attach `native.py`, the native-signature facade over the entry."""
    files = dict(deliverable.files)
    files["native.py"] = interop.render_native_module(shim, mangle_decl(shim.entry_name))
    return replace_files(deliverable, files)


def replace_files(deliverable: Deliverable, files: dict[str, str]) -> Deliverable:
    return Deliverable(
        target=deliverable.target,
        entry_name=deliverable.entry_name,
        files=files,
        components=deliverable.components,
        provenance=deliverable.provenance,
    )
