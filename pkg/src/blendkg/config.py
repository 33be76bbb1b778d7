"""Application configuration: JSON file, overridden by flags and environment.

Secrets never live in config files; the API key comes from LLM_API_KEY and
the LLM endpoint may come from LLM_BASE_URL. The fully resolved configuration
is echoed into every run manifest.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .prompts import DEFAULT_TEMPLATE_VERSION


@dataclass
class AppConfig:
    skg_url: str = ""
    llm_base_url: str = ""
    model_id: str = ""
    provider: str = "openai"
    cache_dir: str = "skg_cache"
    recordings_path: str = "recordings/recordings.jsonl"
    templates_dir: Optional[str] = None
    template_version: str = DEFAULT_TEMPLATE_VERSION
    preset: str = "lag"
    parallelism: int = 1
    mode: str = "live"  # live | record | replay
    requests_per_minute: Optional[int] = None
    seed: int = 0

    def echo(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> AppConfig:
    """Resolve config: file values, then environment, then explicit overrides."""
    values: dict = {}
    if path:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        values.update(json.loads(file_path.read_text(encoding="utf-8")))
    if os.environ.get("LLM_BASE_URL"):
        values["llm_base_url"] = os.environ["LLM_BASE_URL"]
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    known = {f.name for f in dataclasses.fields(AppConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return AppConfig(**values)
