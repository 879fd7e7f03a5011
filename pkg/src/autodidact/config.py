"""Service configuration: JSON file with environment-variable overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8080"
    gen_url: str = ""
    sum_url: str = ""
    emb_url: str = ""
    tts_url: str = ""
    api_key: str = ""
    gating_threshold: float = 0.7
    grading_threshold: float = 0.75
    relevance_threshold: float = 0.5
    slides_per_deck: int = 8
    min_slides: int = 3
    max_slides: int = 20
    gen_batch_size: int = 4
    min_nodes: int = 3
    max_nodes: int = 40
    max_narration_chars: int = 600
    chunk_size: int = 200
    chunk_overlap: int = 20
    retrieval_k: int = 4
    p_oracle: float = 0.8
    seed: int = 0
    store_root: str = "store"
    retry_attempts: int = 3
    retry_backoff_ms: int = 200
    request_timeout_s: float = 30.0

    def validate(self) -> None:
        for name in ("gating_threshold", "grading_threshold", "relevance_threshold"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if not 0 <= self.p_oracle <= 1:
            raise ValueError(f"p_oracle must be in [0, 1], got {self.p_oracle}")
        if not 0 <= self.chunk_overlap < self.chunk_size:
            raise ValueError("chunk_overlap must satisfy 0 <= overlap < chunk_size")
        if self.retrieval_k < 1:
            raise ValueError("retrieval_k must be >= 1")
        if not self.min_slides <= self.slides_per_deck <= self.max_slides:
            raise ValueError("slides_per_deck outside [min_slides, max_slides]")

    def to_json(self) -> dict:
        return asdict(self)


_ENV_OVERRIDES = {
    "AUTODIDACT_GEN_URL": "gen_url",
    "AUTODIDACT_SUM_URL": "sum_url",
    "AUTODIDACT_EMB_URL": "emb_url",
    "AUTODIDACT_TTS_URL": "tts_url",
    "AUTODIDACT_API_KEY": "api_key",
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Load config from a JSON file (optional) and apply env-var overrides."""
    data: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = ServiceConfig(**data)
    env = os.environ if env is None else env
    for var, attr in _ENV_OVERRIDES.items():
        if env.get(var):
            setattr(cfg, attr, env[var])
    cfg.validate()
    return cfg
