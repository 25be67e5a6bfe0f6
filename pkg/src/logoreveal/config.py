"""Run configuration: lm.toml plus environment variables plus CLI overrides."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .repair import RepairSettings
from .stages import StageConfig
from .verify import Tolerances

ENV_API_KEY = "LM_API_KEY"
ENV_API_BASE = "LM_API_BASE"
ENV_MODEL = "LM_MODEL"


@dataclass(frozen=True)
class RunConfig:
    provider: str = "stub"  # 'stub' | 'live' | 'replay'
    model: str = "gpt-4-vision"
    api_base: str = ""
    api_key: str = ""
    scenario_path: Optional[Path] = None
    variants: int = 4
    seed: int = 0
    k: int = 4
    with_images: bool = True
    merge_mode: str = "ast"
    tolerances: Tolerances = Tolerances()
    max_calls: int = 200
    retries: int = 3
    concurrency: int = 4
    creative_temperature: float = 0.7
    deterministic_temperature: float = 0.0
    cache_dir: Optional[Path] = None

    def stage_config(self) -> StageConfig:
        return StageConfig(
            model=self.model,
            creative_temperature=self.creative_temperature,
            deterministic_temperature=self.deterministic_temperature,
        )

    def repair_settings(self) -> RepairSettings:
        return RepairSettings(
            k=self.k,
            with_images=self.with_images,
            merge_mode=self.merge_mode,
            tolerances=self.tolerances,
        )


def load_config(path: Optional[Path] = None) -> RunConfig:
    """Defaults <- lm.toml (when present) <- environment."""
    config = RunConfig()
    candidate = path or Path("lm.toml")
    if candidate.exists():
        data = tomllib.loads(candidate.read_text(encoding="utf-8"))
        provider = data.get("provider", {})
        pipeline = data.get("pipeline", {})
        repair = data.get("repair", {})
        tol = data.get("tolerances", {})
        gw = data.get("gateway", {})
        config = replace(
            config,
            provider=provider.get("kind", config.provider),
            model=provider.get("model", config.model),
            api_base=provider.get("base_url", config.api_base),
            variants=int(pipeline.get("variants", config.variants)),
            seed=int(pipeline.get("seed", config.seed)),
            creative_temperature=float(pipeline.get("creative_temperature", config.creative_temperature)),
            deterministic_temperature=float(
                pipeline.get("deterministic_temperature", config.deterministic_temperature)
            ),
            k=int(repair.get("k", config.k)),
            with_images=bool(repair.get("with_images", config.with_images)),
            merge_mode=repair.get("merge_mode", config.merge_mode),
            tolerances=Tolerances(
                eps_pos=float(tol.get("position", 1.0)),
                eps_size=float(tol.get("size", 1.0)),
                eps_opacity=float(tol.get("opacity", 0.01)),
            ),
            max_calls=int(gw.get("max_calls", config.max_calls)),
            retries=int(gw.get("retries", config.retries)),
            concurrency=int(gw.get("concurrency", config.concurrency)),
        )
    env_updates = {}
    if os.environ.get(ENV_API_KEY):
        env_updates["api_key"] = os.environ[ENV_API_KEY]
    if os.environ.get(ENV_API_BASE):
        env_updates["api_base"] = os.environ[ENV_API_BASE]
    if os.environ.get(ENV_MODEL):
        env_updates["model"] = os.environ[ENV_MODEL]
    if env_updates:
        config = replace(config, **env_updates)
    return config
