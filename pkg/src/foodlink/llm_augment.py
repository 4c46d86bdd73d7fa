"""Chat-LLM data augmentation: semantic expansion and rephrasing prompts.

The two prompt templates instruct a chat model to either expand a product
description with related words or to rephrase it. Remote calls go through a
pluggable client; a cassette wrapper records request/response pairs so every
experiment replays deterministically and offline.
"""

from __future__ import annotations

import json
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .knowledge import Entity
from .textutil import sha256_hex

P1_EXPAND_TEMPLATE = "Expand the semantic space of the query {q} by generating {d} related words"
P2_REPHRASE_TEMPLATE = "Rephrase {q}"

PROMPT_KINDS = ("p1_expand", "p2_rephrase")


@dataclass(frozen=True)
class AugPromptSpec:
    kind: str
    d: int = 3
    template: str = ""

    def __post_init__(self):
        if self.kind not in PROMPT_KINDS:
            raise ValueError(f"unknown prompt kind {self.kind!r}")
        if not self.template:
            default = P1_EXPAND_TEMPLATE if self.kind == "p1_expand" else P2_REPHRASE_TEMPLATE
            object.__setattr__(self, "template", default)
        if "{q}" not in self.template:
            raise ValueError("template missing {q} placeholder")
        if self.kind == "p1_expand":
            if self.d < 1:
                raise ValueError("d must be positive")
            if "{d}" not in self.template:
                raise ValueError("p1 template missing {d} placeholder")
        elif "{d}" in self.template:
            raise ValueError("p2 template must not contain {d}")


def render_aug_prompt(spec: AugPromptSpec, q: str) -> str:
    """Exact template substitution, nothing else."""
    rendered = spec.template.replace("{q}", q)
    if spec.kind == "p1_expand":
        rendered = rendered.replace("{d}", str(spec.d))
    return rendered


# ---------------------------------------------------------------------------
# chat-completion client
# ---------------------------------------------------------------------------

class ChatTransportError(RuntimeError):
    """Request never produced a usable HTTP response, retries exhausted."""


class ChatProtocolError(RuntimeError):
    """Response arrived but is not a valid chat completion; carries raw text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ChatClient(Protocol):
    model_name: str

    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class ChatClientConfig:
    endpoint: str
    model_name: str = "gpt-3.5-turbo"
    credential_env_var: str = "CHAT_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


class HttpChatClient:
    """Minimal chat-completion client: POST {model, messages}, read
    choices[0].message.content. Retries transport failures and 429/5xx with
    exponential backoff; a semaphore bounds concurrent in-flight requests."""

    def __init__(self, config: ChatClientConfig, backoff: float = 0.5, max_in_flight: int = 4):
        self.config = config
        self.model_name = config.model_name
        self._backoff = backoff
        self._gate = threading.Semaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        var = self.config.credential_env_var
        if var:
            credential = os.environ.get(var)
            if credential is None:
                raise ChatTransportError(f"credential environment variable {var!r} is not set")
            headers["Authorization"] = f"Bearer {credential}"
        return headers

    def complete(self, prompt: str) -> str:
        payload = json.dumps(
            {"model": self.config.model_name, "messages": [{"role": "user", "content": prompt}]}
        ).encode("utf-8")
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self._backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(self.config.endpoint, data=payload, headers=self._headers())
            try:
                with self._gate:
                    with urllib.request.urlopen(req, timeout=self.config.timeout) as resp:
                        body = resp.read()
            except urllib.error.HTTPError as exc:
                if exc.code == 429 or exc.code >= 500:
                    last_error = exc
                    continue
                raise ChatTransportError(f"chat endpoint returned {exc.code}") from exc
            except (urllib.error.URLError, OSError) as exc:
                last_error = exc
                continue
            return _parse_completion(body)
        raise ChatTransportError(f"chat endpoint unreachable after retries: {last_error}") from last_error


def _parse_completion(body: bytes) -> str:
    raw = body.decode("utf-8", "replace")
    try:
        data = json.loads(raw)
        return data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise ChatProtocolError("malformed chat completion response", raw=raw) from exc


class StaticChatClient:
    """Deterministic stub mapping prompt -> response; optionally a default."""

    def __init__(self, responses: dict[str, str], default: str | None = None,
                 model_name: str = "static"):
        self.responses = dict(responses)
        self.default = default
        self.model_name = model_name

    def complete(self, prompt: str) -> str:
        if prompt in self.responses:
            return self.responses[prompt]
        if self.default is not None:
            return self.default
        raise ChatTransportError(f"no canned response for prompt: {prompt[:80]!r}")


class CassetteChatClient:
    """Replayable cache keyed by (model_name, prompt).

    Known prompts answer from the cassette file; misses go to the inner
    client (when given) and are appended, so a recorded run replays
    byte-identically with no inner client at all.
    """

    def __init__(self, path: str | Path, inner: ChatClient | None = None,
                 model_name: str | None = None):
        self.path = Path(path)
        self.inner = inner
        self.model_name = model_name or (inner.model_name if inner else "cassette")
        self._lock = threading.Lock()
        self._cache: dict[str, str] = {}
        if self.path.exists():
            for line in self.path.read_text("utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._cache[rec["prompt_hash"]] = rec["response"]

    def _key(self, prompt: str) -> str:
        return sha256_hex(self.model_name + "\x00" + prompt)

    def complete(self, prompt: str) -> str:
        key = self._key(prompt)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        if self.inner is None:
            raise ChatTransportError(f"cassette miss with no inner client: {prompt[:80]!r}")
        response = self.inner.complete(prompt)
        record = {
            "prompt_hash": key,
            "prompt": prompt,
            "response": response,
            "timestamp": time.time(),
        }
        with self._lock:
            self._cache[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return response


# ---------------------------------------------------------------------------
# the two augmentation operations
# ---------------------------------------------------------------------------

def expand_semantics(q: str, d: int, client: ChatClient) -> list[Entity]:
    """Ask the model for d related words; parse a comma/newline word list."""
    spec = AugPromptSpec(kind="p1_expand", d=d)
    response = client.complete(render_aug_prompt(spec, q))
    words = []
    for chunk in response.replace("\n", ",").split(","):
        word = chunk.strip().lower()
        if word:
            words.append(word)
    if not words:
        raise ChatProtocolError("expansion response contained no words", raw=response)
    return [Entity(uri_or_id=f"llm:{w}", label=w, source="llm") for w in words[:d]]


def rephrase(q: str, client: ChatClient) -> str:
    """Ask the model to rephrase q; returns a trimmed single paragraph."""
    spec = AugPromptSpec(kind="p2_rephrase")
    response = client.complete(render_aug_prompt(spec, q))
    text = " ".join(response.split())
    if not text:
        raise ChatProtocolError("rephrase response was empty", raw=response)
    return text
