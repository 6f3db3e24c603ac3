"""Pluggable model backend with record/replay response caching.

One call to `Backend.invoke` is exactly one model query (plus transport
retries).  The cache store is an append-friendly JSONL file, one record
per response:

    {"key": <sha256 digest>, "model": ..., "task": ...,
     "prompt": {"system": ..., "user": ...}, "response": ...,
     "timestamp": ...}

The digest covers (model, task, system text, user text); temperature is
pinned at 0 and therefore excluded.  Replay mode never touches the
network and fails loudly on a cache miss, which makes every downstream
run fully deterministic and offline.  Credentials come only from the
environment (PPA_API_KEY, falling back to OPENAI_API_KEY).
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

from .prompts import PromptMessages, TaskKind

API_KEY_ENV = "PPA_API_KEY"
API_KEY_FALLBACK_ENV = "OPENAI_API_KEY"
API_BASE_ENV = "PPA_API_BASE"
DEFAULT_API_BASE = "https://api.openai.com/v1"

RETRYABLE_HTTP = {408, 409, 429, 500, 502, 503, 504}


class BackendError(Exception):
    pass


class ConfigError(BackendError):
    pass


class TransportError(BackendError):
    pass


class ReplayMissError(BackendError):
    def __init__(self, digest: str, task: str):
        super().__init__(f"replay cache has no entry for digest {digest} (task {task})")
        self.digest = digest
        self.task = task


@dataclass(frozen=True)
class BackendConfig:
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.0          # pinned for reproducibility
    max_retries: int = 3
    cache_mode: str = "live"          # "live" | "record" | "replay"
    cache_path: Optional[Path] = None
    timeout: float = 60.0
    retry_base_delay: float = 0.5
    min_call_interval: float = 0.0    # simple global rate limit, seconds

    def __post_init__(self) -> None:
        if self.cache_mode not in ("live", "record", "replay"):
            raise ConfigError(f"unknown cache mode: {self.cache_mode!r}")
        if self.cache_mode in ("record", "replay") and self.cache_path is None:
            raise ConfigError(f"cache mode {self.cache_mode!r} requires a cache path")


def prompt_digest(model: str, task: str, prompt: PromptMessages) -> str:
    payload = json.dumps([model, task, prompt.system, prompt.user], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """JSONL-backed response store; writes are serialized."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path.exists():
            for line_no, line in enumerate(self.path.read_text(encoding="utf-8").split("\n"), 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise BackendError(f"corrupt cache line {line_no} in {self.path}: {exc}") from exc
                self._entries[record["key"]] = record

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, digest: str) -> bool:
        return digest in self._entries

    def get(self, digest: str) -> Optional[dict]:
        return self._entries.get(digest)

    def put(self, record: dict) -> None:
        with self._lock:
            fresh = record["key"] not in self._entries
            self._entries[record["key"]] = record
            if fresh:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(json.dumps(record, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class BackendResponse:
    raw: str
    digest: str
    from_cache: bool


def _read_api_key() -> str:
    key = os.environ.get(API_KEY_ENV) or os.environ.get(API_KEY_FALLBACK_ENV)
    if not key:
        raise ConfigError(
            f"no API credentials: set {API_KEY_ENV} (or {API_KEY_FALLBACK_ENV}) "
            "in the environment, or run with --replay"
        )
    return key


def http_chat_transport(prompt: PromptMessages, config: BackendConfig) -> str:
    """POST one chat completion to an OpenAI-compatible endpoint."""
    base = os.environ.get(API_BASE_ENV, DEFAULT_API_BASE).rstrip("/")
    body = json.dumps({
        "model": config.model_name,
        "temperature": config.temperature,
        "messages": [
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": prompt.user},
        ],
    }).encode("utf-8")
    request = urllib.request.Request(
        f"{base}/chat/completions",
        data=body,
        headers={
            "Content-Type": "application/json",
            "Authorization": f"Bearer {_read_api_key()}",
        },
    )
    try:
        with urllib.request.urlopen(request, timeout=config.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        if exc.code in RETRYABLE_HTTP:
            raise TransportError(f"HTTP {exc.code} from model endpoint") from exc
        raise BackendError(f"HTTP {exc.code} from model endpoint: {exc.read()[:200]!r}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise TransportError(f"transport failure: {exc}") from exc
    try:
        return payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"unexpected completion payload: {payload!r:.200}") from exc


Transport = Callable[[PromptMessages, BackendConfig], str]


class Backend:
    """Executes model queries under the configured cache mode.

    Thread-safe: the cache serializes writes, the rate limiter guards
    call spacing, and the invocation counter is lock-protected so tests
    can assert the one-query-per-step property.
    """

    def __init__(self, config: BackendConfig, transport: Optional[Transport] = None):
        self.config = config
        self.transport: Transport = transport or http_chat_transport
        self.cache = ResponseCache(config.cache_path) if config.cache_path else None
        self.invocations = 0
        self.transport_calls = 0
        self._count_lock = threading.Lock()
        self._rate_lock = threading.Lock()
        self._last_call = 0.0
        if config.cache_mode in ("live", "record") and self.transport is http_chat_transport:
            _read_api_key()  # fail before any processing, not mid-run

    def invoke(self, task: TaskKind, prompt: PromptMessages) -> BackendResponse:
        with self._count_lock:
            self.invocations += 1
        digest = prompt_digest(self.config.model_name, task.value, prompt)

        if self.config.cache_mode == "replay":
            record = self.cache.get(digest) if self.cache else None
            if record is None:
                raise ReplayMissError(digest, task.value)
            return BackendResponse(raw=record["response"], digest=digest, from_cache=True)

        raw = self._call_with_retries(prompt)
        if self.config.cache_mode == "record":
            self.cache.put({
                "key": digest,
                "model": self.config.model_name,
                "task": task.value,
                "prompt": {"system": prompt.system, "user": prompt.user},
                "response": raw,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            })
        return BackendResponse(raw=raw, digest=digest, from_cache=False)

    def _call_with_retries(self, prompt: PromptMessages) -> str:
        self._rate_limit()
        last: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            try:
                with self._count_lock:
                    self.transport_calls += 1
                return self.transport(prompt, self.config)
            except TransportError as exc:
                last = exc
                if attempt < self.config.max_retries:
                    time.sleep(self.config.retry_base_delay * (2 ** attempt))
        raise TransportError(
            f"transport failed after {self.config.max_retries + 1} attempts: {last}"
        ) from last

    def _rate_limit(self) -> None:
        if self.config.min_call_interval <= 0:
            return
        with self._rate_lock:
            wait = self._last_call + self.config.min_call_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()
