"""Chat clients: an OpenAI-compatible HTTP client and an offline fixture reader."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

import httpx

from ..errors import ApiError

ENV_ENDPOINT = "GRIDPLAN_LLM_ENDPOINT"
ENV_MODEL = "GRIDPLAN_LLM_MODEL"
ENV_KEY = "GRIDPLAN_LLM_KEY"


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ENV_KEY
    temperature: float = 0.0
    max_retries: int = 2
    timeout_s: float = 120.0
    offline_fixture_dir: Optional[str] = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.offline_fixture_dir is None and not self.endpoint:
            raise ValueError("online mode needs an endpoint (or set offline_fixture_dir)")

    @classmethod
    def from_env(cls, **overrides) -> "LlmClientConfig":
        base = {"endpoint": os.environ.get(ENV_ENDPOINT, ""), "model": os.environ.get(ENV_MODEL, "")}
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


class ChatClient(Protocol):
    def complete(self, stage: str, system: str, user: str, schema: dict, attempt: int) -> str:
        """Raw JSON text answered for ``stage``."""


class HttpChatClient:
    """POSTs to ``{endpoint}/chat/completions`` asking for schema-constrained JSON."""

    def __init__(self, cfg: LlmClientConfig, transport: Optional[httpx.BaseTransport] = None):
        key = os.environ.get(cfg.api_key_env)
        if not key:
            raise ApiError(f"environment variable {cfg.api_key_env} is not set")
        self.cfg = cfg
        self._client = httpx.Client(
            base_url=cfg.endpoint.rstrip("/"), timeout=cfg.timeout_s, transport=transport,
            headers={"Authorization": f"Bearer {key}"},
        )

    def complete(self, stage: str, system: str, user: str, schema: dict, attempt: int) -> str:
        body = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
            "response_format": {"type": "json_schema", "json_schema": {"name": stage, "schema": schema, "strict": True}},
        }
        try:
            r = self._client.post("/chat/completions", json=body)
        except httpx.HTTPError as e:
            raise ApiError(f"{stage}: transport error: {e}") from e
        if r.status_code in (401, 403):
            raise ApiError(f"{stage}: authentication failed ({r.status_code})")
        if r.status_code >= 400:
            raise ApiError(f"{stage}: HTTP {r.status_code}: {r.text[:300]}")
        try:
            return r.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ApiError(f"{stage}: unexpected response shape") from e

    def close(self) -> None:
        self._client.close()


class FixtureChatClient:
    """Answers from ``<dir>/<stage>.json``; retry ``n`` prefers ``<dir>/<stage>.<n>.json``."""

    def __init__(self, directory):
        self.dir = Path(directory)
        if not self.dir.is_dir():
            raise ApiError(f"fixture directory {self.dir} does not exist")

    def complete(self, stage: str, system: str, user: str, schema: dict, attempt: int) -> str:
        for n in range(attempt, 0, -1):
            p = self.dir / f"{stage}.{n}.json"
            if p.exists():
                return p.read_text()
        p = self.dir / f"{stage}.json"
        if not p.exists():
            raise ApiError(f"fixture {p} is missing")
        return p.read_text()

    def close(self) -> None:
        pass


def make_client(cfg: LlmClientConfig) -> ChatClient:
    if cfg.offline_fixture_dir is not None:
        return FixtureChatClient(cfg.offline_fixture_dir)
    return HttpChatClient(cfg)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
