"""Configuration: YAML file plus DAFNYPILOT_* environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import yaml

from ..dafny_driver import ToolchainConfig
from ..synth_loop import SynthesisBudget

ENV_PREFIX = "DAFNYPILOT_"


@dataclass(frozen=True)
class AppConfig:
    llm_mode: str = "replay"
    cassette: Optional[str] = None
    dafny_bin: Optional[str] = None
    keep_artifacts: bool = False
    data_dir: str = "./dafnypilot-data"
    assets_path: Optional[str] = None
    spec_budget: int = 5
    synth_max_attempts: int = 8
    synth_restart_after: int = 3
    postprocess: bool = False
    attach_shim: bool = True
    verify_timeout: float = 120.0
    testgen_timeout: float = 180.0
    compile_timeout: float = 60.0
    run_timeout: float = 30.0
    target: str = "py"
    inline_jobs: bool = False

    def toolchain(self) -> ToolchainConfig:
        base = ToolchainConfig(
            verify_timeout=self.verify_timeout,
            testgen_timeout=self.testgen_timeout,
            compile_timeout=self.compile_timeout,
            run_timeout=self.run_timeout,
            target=self.target,
            keep_artifacts=self.keep_artifacts,
        )
        if self.dafny_bin:
            base = base.with_executable(self.dafny_bin)
        return base

    def synth_budget(self) -> SynthesisBudget:
        return SynthesisBudget(max_attempts=self.synth_max_attempts, restart_after=self.synth_restart_after)


_BOOL_FIELDS = {"keep_artifacts", "postprocess", "attach_shim", "inline_jobs"}
_FLOAT_FIELDS = {"verify_timeout", "testgen_timeout", "compile_timeout", "run_timeout"}
_INT_FIELDS = {"spec_budget", "synth_max_attempts", "synth_restart_after"}


def _coerce(name: str, raw: str):
    if name in _BOOL_FIELDS:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if name in _FLOAT_FIELDS:
        return float(raw)
    if name in _INT_FIELDS:
        return int(raw)
    return raw


def load_config(path: Optional[Path | str] = None, env: Optional[dict] = None, **overrides) -> AppConfig:
    """File -> environment -> explicit overrides, later wins."""
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {path} must hold a mapping")
        values.update(loaded)
    known = {f.name for f in fields(AppConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        raw = env.get(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None:
            values[name] = _coerce(name, raw)
    for name, value in overrides.items():
        if value is not None:
            values[name] = value
    return AppConfig(**values)
