"""Subprocess wrapper around the verification toolchain.

Runs verify / generate-tests / translate / target execution with per-stage
timeouts in per-invocation scratch directories, and parses verifier output
into structured diagnostics. Command-line syntax differences between
toolchain versions are isolated here; the pinned surface is documented in
the README and the `dafny-stub` emulation implements it for hermetic runs.
Point `dafny_executable` (or the DAFNY_BIN environment variable) at a real
installation to use one.
"""

from __future__ import annotations

import enum
import os
import re
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

ENV_DAFNY_BIN = "DAFNY_BIN"


class DriverError(Exception):
    pass


class TestgenError(DriverError):
    pass


class TestgenTimeout(TestgenError):
    pass


class TestgenUnsupported(TestgenError):
    """The tool reports the construct is out of scope for test generation."""


class CompileError(DriverError):
    def __init__(self, message: str, tool_output: str = ""):
        super().__init__(message)
        self.tool_output = tool_output


class RuntimeMissing(DriverError):
    pass


class RunTimeout(DriverError):
    pass


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    UNKNOWN = "unknown"


class VerifyStatus(str, enum.Enum):
    VERIFIED = "verified"
    FAILED = "failed"
    TIMEOUT = "timeout"
    TOOL_ERROR = "tool_error"


class CoverageMode(str, enum.Enum):
    BLOCK = "Block"
    PATH = "Path"
    INLINED_BLOCK = "InlinedBlock"


@dataclass(frozen=True)
class VerifierDiagnostic:
    file: str
    line: int
    column: int
    severity: Severity
    message: str
    raw: str


@dataclass(frozen=True)
class VerifyOutcome:
    status: VerifyStatus
    diagnostics: tuple[VerifierDiagnostic, ...]
    wall_time: float
    exit_code: int
    dafny_version: str = ""

    @property
    def errors(self) -> tuple[VerifierDiagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity is Severity.ERROR)


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    stdout: str
    stderr: str
    wall_time: float


def _default_executable() -> str:
    env = os.environ.get(ENV_DAFNY_BIN)
    if env:
        return env
    for candidate in ("dafny", "dafny-stub"):
        found = shutil.which(candidate)
        if found:
            return found
    return "dafny"


@dataclass(frozen=True)
class ToolchainConfig:
    dafny_executable: str = field(default_factory=_default_executable)
    dafny_version: str = "4.4.0-stub"
    verify_timeout: float = 120.0
    testgen_timeout: float = 180.0
    compile_timeout: float = 60.0
    run_timeout: float = 30.0
    coverage_mode: CoverageMode = CoverageMode.INLINED_BLOCK
    length_limit: int = 512
    target: str = "py"
    keep_artifacts: bool = False
    scratch_root: Optional[str] = None

    def with_executable(self, path: str) -> "ToolchainConfig":
        return replace(self, dafny_executable=path)


# The documented verifier output shape: FILE(LINE,COL): SEVERITY: MESSAGE
_DIAG_RE = re.compile(
    r"^(?P<file>[^\s(][^(]*)\((?P<line>\d+),(?P<col>\d+)\): (?P<sev>Error|Warning): (?P<msg>.*)$"
)


def parse_diagnostics(raw_output: str) -> list[VerifierDiagnostic]:
    """Total, order-preserving parse of verifier output.

    Every input line becomes either a structured diagnostic or an Unknown
    one whose raw field reproduces the line byte-exactly, so joining raw
    fields with newlines reconstructs the input (modulo a trailing newline).
    """
    lines = raw_output.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    out: list[VerifierDiagnostic] = []
    for line in lines:
        m = _DIAG_RE.match(line)
        if m:
            out.append(
                VerifierDiagnostic(
                    file=m.group("file"),
                    line=int(m.group("line")),
                    column=int(m.group("col")),
                    severity=Severity(m.group("sev").lower()),
                    message=m.group("msg"),
                    raw=line,
                )
            )
        else:
            out.append(
                VerifierDiagnostic(file="", line=0, column=0, severity=Severity.UNKNOWN, message=line, raw=line)
            )
    return out


def _scratch_dir(cfg: ToolchainConfig, label: str) -> Path:
    root = Path(cfg.scratch_root) if cfg.scratch_root else Path(tempfile.gettempdir())
    root.mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix=f"dafnypilot-{label}-", dir=root))


def _cleanup(scratch: Path, cfg: ToolchainConfig, failed: bool) -> None:
    # deleted on success; retained on failure only when keep_artifacts is set
    if failed and cfg.keep_artifacts:
        return
    shutil.rmtree(scratch, ignore_errors=True)


def _run_tool(cmd: list[str], timeout: float, cwd: Optional[Path] = None) -> tuple[int, str, str, float]:
    started = time.monotonic()
    proc = subprocess.run(
        cmd,
        capture_output=True,
        text=True,
        errors="replace",
        timeout=timeout,
        cwd=cwd,
    )
    return proc.returncode, proc.stdout, proc.stderr, time.monotonic() - started


def verify(source: str, cfg: ToolchainConfig) -> VerifyOutcome:
    """Run the verifier on `source`; total — tool faults become outcomes."""
    scratch = _scratch_dir(cfg, "verify")
    failed = True
    started = time.monotonic()
    try:
        dfy = scratch / "program.dfy"
        dfy.write_text(source, encoding="utf-8")
        cmd = [
            cfg.dafny_executable,
            "verify",
            str(dfy),
            "--verification-time-limit",
            str(int(cfg.verify_timeout)),
        ]
        try:
            code, out, err, wall = _run_tool(cmd, cfg.verify_timeout)
        except FileNotFoundError:
            return VerifyOutcome(
                VerifyStatus.TOOL_ERROR,
                tuple(parse_diagnostics(f"verifier executable not found: {cfg.dafny_executable}")),
                time.monotonic() - started,
                -1,
                cfg.dafny_version,
            )
        except subprocess.TimeoutExpired:
            wall = max(time.monotonic() - started, cfg.verify_timeout)
            return VerifyOutcome(VerifyStatus.TIMEOUT, (), wall, -1, cfg.dafny_version)

        diagnostics = tuple(parse_diagnostics(out + err))
        has_errors = any(d.severity is Severity.ERROR for d in diagnostics)
        if code == 0 and not has_errors:
            status = VerifyStatus.VERIFIED
            failed = False
        elif has_errors:
            status = VerifyStatus.FAILED
        else:
            status = VerifyStatus.TOOL_ERROR
        return VerifyOutcome(status, diagnostics, wall, code, cfg.dafny_version)
    finally:
        _cleanup(scratch, cfg, failed)


def generate_tests(source: str, cfg: ToolchainConfig) -> str:
    """Invoke the test generator; raises the Testgen* family on failure."""
    scratch = _scratch_dir(cfg, "testgen")
    failed = True
    try:
        dfy = scratch / "program.dfy"
        dfy.write_text(source, encoding="utf-8")
        cmd = [
            cfg.dafny_executable,
            "generate-tests",
            cfg.coverage_mode.value,
            str(dfy),
            "--length-limit",
            str(cfg.length_limit),
        ]
        try:
            code, out, err, _ = _run_tool(cmd, cfg.testgen_timeout)
        except FileNotFoundError as exc:
            raise TestgenError(f"toolchain executable not found: {cfg.dafny_executable}") from exc
        except subprocess.TimeoutExpired as exc:
            raise TestgenTimeout(f"test generation exceeded {cfg.testgen_timeout}s") from exc
        if code != 0:
            combined = (out + "\n" + err).lower()
            if "not support" in combined or "unsupported" in combined:
                raise TestgenUnsupported(err.strip() or out.strip())
            raise TestgenError(err.strip() or out.strip() or f"exit code {code}")
        failed = False
        return out
    finally:
        _cleanup(scratch, cfg, failed)


def compile(source: str, cfg: ToolchainConfig) -> dict[str, str]:
    """Translate to the target language; returns {filename: content}."""
    scratch = _scratch_dir(cfg, "compile")
    failed = True
    try:
        dfy = scratch / "program.dfy"
        dfy.write_text(source, encoding="utf-8")
        outdir = scratch / "out"
        cmd = [
            cfg.dafny_executable,
            "translate",
            cfg.target,
            str(dfy),
            "--include-runtime",
            "-o",
            str(outdir),
        ]
        try:
            code, out, err, _ = _run_tool(cmd, cfg.compile_timeout)
        except FileNotFoundError as exc:
            raise CompileError(f"toolchain executable not found: {cfg.dafny_executable}") from exc
        except subprocess.TimeoutExpired as exc:
            raise CompileError(f"compilation exceeded {cfg.compile_timeout}s") from exc
        if code != 0 or not outdir.is_dir():
            raise CompileError("compilation failed", tool_output=out + err)
        files = {
            str(p.relative_to(outdir)): p.read_text(encoding="utf-8")
            for p in sorted(outdir.rglob("*"))
            if p.is_file()
        }
        failed = False
        return files
    finally:
        _cleanup(scratch, cfg, failed)


def run_target(
    files: dict[str, str],
    timeout: float = 30.0,
    entry: str = "tests.py",
    cfg: Optional[ToolchainConfig] = None,
) -> RunResult:
    """Execute compiled output in a scratch directory; kills at timeout."""
    cfg = cfg or ToolchainConfig()
    if entry not in files:
        raise RuntimeMissing(f"no entry file {entry} in compiled output")
    runtime = sys.executable
    if not runtime:
        raise RuntimeMissing("no Python runtime available")
    scratch = _scratch_dir(cfg, "run")
    failed = True
    try:
        for name, content in files.items():
            path = scratch / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
        try:
            code, out, err, wall = _run_tool([runtime, entry], timeout, cwd=scratch)
        except subprocess.TimeoutExpired as exc:
            raise RunTimeout(f"target run exceeded {timeout}s") from exc
        failed = code != 0
        return RunResult(code, out, err, wall)
    finally:
        _cleanup(scratch, cfg, failed)


class Driver:
    """Object facade over the module operations, for dependency injection."""

    def __init__(self, cfg: ToolchainConfig):
        self.cfg = cfg

    def verify(self, source: str) -> VerifyOutcome:
        return verify(source, self.cfg)

    def generate_tests(self, source: str) -> str:
        return generate_tests(source, self.cfg)

    def compile(self, source: str) -> dict[str, str]:
        return compile(source, self.cfg)

    def run_target(self, files: dict[str, str], entry: str = "tests.py") -> RunResult:
        return run_target(files, timeout=self.cfg.run_timeout, entry=entry, cfg=self.cfg)
