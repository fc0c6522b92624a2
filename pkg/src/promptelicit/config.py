"""Run and service configuration: file values with environment overrides.

Config files are YAML (JSON therefore also parses). Every knob can be
overridden by an environment variable named PROMPTELICIT_<KEY>; CLI flags
are layered on top by the CLI module itself and always win.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .engine import Budget
from .errors import ConfigError
from .oracles import LiveSettings
from .synthesis import (DEFAULT_META_PROMPT, DEFAULT_MODEL_CONTEXT,
                        SynthesisContext)

ENV_PREFIX = "PROMPTELICIT_"


@dataclass(frozen=True)
class Settings:
    """Everything the service and the batch driver need to start."""

    backend: str = "scripted"  # scripted | live
    seed: int = 0
    sessions_dir: str = "./sessions"
    static_dir: str | None = None
    max_iterations: int = 15
    max_candidates: int = 5
    max_options: int = 5
    persona_samples: int = 8
    oracle_endpoint: str = ""
    oracle_model: str = ""
    render_endpoint: str = ""
    credential_env: str = "PROMPTELICIT_API_KEY"
    meta_prompt_file: str | None = None
    model_context_file: str | None = None

    def budget(self) -> Budget:
        try:
            return Budget(max_iterations=self.max_iterations,
                          max_candidates=self.max_candidates,
                          max_options=self.max_options,
                          persona_samples=self.persona_samples)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def live_settings(self) -> LiveSettings:
        return LiveSettings(oracle_endpoint=self.oracle_endpoint,
                            oracle_model=self.oracle_model,
                            render_endpoint=self.render_endpoint,
                            credential_env=self.credential_env)

    def synthesis_context(self) -> SynthesisContext:
        meta = _read_template(self.meta_prompt_file, DEFAULT_META_PROMPT)
        model = _read_template(self.model_context_file, DEFAULT_MODEL_CONTEXT)
        return SynthesisContext(meta_prompt=meta, model_context=model)

    def validate(self) -> "Settings":
        if self.backend not in ("scripted", "live"):
            raise ConfigError(f"backend must be 'scripted' or 'live', got {self.backend!r}")
        if self.backend == "live" and not (self.oracle_endpoint and self.render_endpoint):
            raise ConfigError("live backend requires oracle_endpoint and render_endpoint")
        self.budget()
        return self


def _read_template(path: str | None, default: str) -> str:
    if path is None:
        return default
    try:
        text = Path(path).read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise ConfigError(f"cannot read template file {path}: {exc}") from exc
    if not text:
        raise ConfigError(f"template file {path} is empty")
    return text


_INT_KEYS = {"seed", "max_iterations", "max_candidates", "max_options", "persona_samples"}


def load_settings(path: str | Path | None = None,
                  env: Mapping[str, str] | None = None) -> Settings:
    """Build Settings from an optional config file plus env overrides."""
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise ConfigError(f"config file not found: {file_path}")
        try:
            loaded = yaml.safe_load(file_path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {file_path} is not valid YAML: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {file_path} must hold a mapping at top level")
        values.update(loaded)
    known = {f.name for f in fields(Settings)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in known:
        env_name = ENV_PREFIX + key.upper()
        if env_name in env:
            values[key] = env[env_name]
    for key in _INT_KEYS & set(values):
        try:
            values[key] = int(values[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r} must be an integer, "
                              f"got {values[key]!r}") from exc
    return Settings(**values).validate()
