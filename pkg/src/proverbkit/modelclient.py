"""Single pluggable interface to all external models, with on-disk caching.

One generic JSON-over-HTTP contract covers every request kind:

    request:  {"kind": "chat"|"complete"|"score"|"embed",
               "model": ..., "temperature": ..., "payload": {...}}
    response: {"text": ...} | {"score": ...} | {"vector": [...]}

Responses are cached content-addressed under a digest of the canonicalized
request, so temperature-0 runs replay byte-identically. A deterministic mock
transport (endpoint ``mock:`` or ``mock:<fixtures.jsonl>``) makes every
pipeline stage reproducible without network access.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import requests

from .errors import ModelError, ProtocolError, ValidationError
from .prompts import ChatTurn

logger = logging.getLogger(__name__)

KINDS = ("chat", "complete", "score", "embed")


@dataclass(frozen=True)
class ModelClientConfig:
    endpoint: str
    model_name: str = "default"
    temperature: float = 0.0
    max_in_flight: int = 4
    cache_dir: str | None = None
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")


def canonical_request(endpoint: str, model: str, kind: str, payload: dict,
                      temperature: float = 0.0) -> bytes:
    """Canonical byte form of a request: sorted keys, compact separators.

    Only structure is canonicalized; string values (prompt content) are left
    untouched.
    """
    body = {"endpoint": endpoint, "model": model, "kind": kind,
            "temperature": temperature, "payload": payload}
    return json.dumps(body, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def cache_key(endpoint: str, model: str, kind: str, payload: dict,
              temperature: float = 0.0) -> str:
    return hashlib.sha256(
        canonical_request(endpoint, model, kind, payload, temperature)).hexdigest()


# ---------------------------------------------------------------------------
# Transports

class HttpTransport:
    """POSTs the generic request body to a JSON endpoint."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._session = requests.Session()

    def send(self, request: dict) -> dict:
        try:
            resp = self._session.post(self.endpoint, json=request,
                                      timeout=self.timeout)
        except requests.RequestException as exc:
            raise ModelError(f"transport failure contacting {self.endpoint}: {exc}") from exc
        if resp.status_code // 100 != 2:
            raise ModelError(
                f"{self.endpoint} returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON response body: {resp.text[:200]}") from exc


def _digest_int(request: dict) -> int:
    raw = json.dumps(request, sort_keys=True, separators=(",", ":"),
                     ensure_ascii=False).encode("utf-8")
    return int.from_bytes(hashlib.sha256(raw).digest()[:8], "big")


class MockTransport:
    """Deterministic stand-in for a model server.

    Responses come from a fixture file mapping cache keys to response objects
    when one is given; anything not covered falls back to rules keyed off the
    request digest, so replies are stable across runs and processes.
    """

    def __init__(self, endpoint: str, fixtures: dict[str, dict] | None = None,
                 model: str = "default", temperature: float = 0.0):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.fixtures = dict(fixtures or {})
        self.calls = 0

    @classmethod
    def from_endpoint(cls, endpoint: str, model: str, temperature: float) -> "MockTransport":
        fixtures: dict[str, dict] = {}
        path = endpoint[len("mock:"):]
        if path:
            with open(path, encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        record = json.loads(line)
                        fixtures[record["key"]] = record["response"]
        return cls(endpoint, fixtures, model=model, temperature=temperature)

    def send(self, request: dict) -> dict:
        self.calls += 1
        key = cache_key(self.endpoint, request["model"], request["kind"],
                        request["payload"], request["temperature"])
        if key in self.fixtures:
            return self.fixtures[key]
        return self._default_response(request)

    def _default_response(self, request: dict) -> dict:
        kind = request["kind"]
        payload = request["payload"]
        digest = _digest_int(request)
        if kind == "score":
            return {"score": (digest % 1000) / 999.0}
        if kind == "embed":
            vec = []
            text = payload.get("text", "")
            for i in range(8):
                h = hashlib.sha256(f"{text}:{i}".encode()).digest()
                vec.append(int.from_bytes(h[:4], "big") / 2 ** 32 - 0.5)
            return {"vector": vec}
        if kind == "complete":
            words = payload.get("prefix", "").split()[-3:]
            return {"text": " ".join(words) + f" mock{digest % 97}"}
        # chat: recognize the constrained-output instructions built elsewhere
        text = " ".join(t["content"] for t in payload.get("transcript", ()))
        if "Answer with exactly one word: Yes or No" in text:
            return {"text": "Yes" if digest % 4 else "No"}
        if "single integer from 1 to 5" in text:
            return {"text": str(1 + digest % 5)}
        if 'exactly one of: "A", "B", or "tie"' in text:
            return {"text": ("A", "B", "tie")[digest % 3]}
        return {"text": f"mock translation {digest % 100000}"}


def make_transport(config: ModelClientConfig):
    if config.endpoint.startswith("mock:"):
        return MockTransport.from_endpoint(config.endpoint, config.model_name,
                                           config.temperature)
    return HttpTransport(config.endpoint, config.timeout)


# ---------------------------------------------------------------------------
# Client

class ModelClient:
    """Thread-safe, caching client for chat / complete / score / embed calls."""

    def __init__(self, config: ModelClientConfig, transport=None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.transport = transport if transport is not None else make_transport(config)
        self._sleep = sleep
        self._cache_lock = threading.Lock()
        self._embed_dim: int | None = None
        if config.cache_dir:
            Path(config.cache_dir).mkdir(parents=True, exist_ok=True)

    # -- cache ------------------------------------------------------------

    def _cache_path(self, key: str) -> Path | None:
        if not self.config.cache_dir:
            return None
        return Path(self.config.cache_dir) / f"{key}.json"

    def _cache_get(self, key: str) -> dict | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)["response"]

    def _cache_put(self, key: str, request: dict, response: dict) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        with self._cache_lock:
            if path.exists():  # append-only: first writer wins
                return
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as handle:
                    json.dump({"request": request, "response": response},
                              handle, ensure_ascii=False)
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)

    # -- request machinery -------------------------------------------------

    def _call(self, kind: str, payload: dict) -> dict:
        if kind not in KINDS:
            raise ValidationError(f"unknown request kind {kind!r}")
        request = {"kind": kind, "model": self.config.model_name,
                   "temperature": self.config.temperature, "payload": payload}
        key = cache_key(self.config.endpoint, self.config.model_name, kind,
                        payload, self.config.temperature)
        cached = self._cache_get(key)
        if cached is not None:
            return cached
        attempts = []
        for attempt in range(self.config.retries):
            try:
                response = self.transport.send(request)
                self._cache_put(key, request, response)
                return response
            except ProtocolError:
                raise
            except ModelError as exc:
                attempts.append(str(exc))
                if attempt + 1 < self.config.retries:
                    self._sleep(self.config.backoff * 2 ** attempt)
        raise ModelError(
            f"{kind} request failed after {self.config.retries} attempts: "
            + " | ".join(attempts))

    # -- public operations -------------------------------------------------

    def chat(self, transcript: Sequence[ChatTurn]) -> str:
        if not transcript:
            raise ValidationError("chat transcript must be non-empty")
        if transcript[-1].role != "user":
            raise ValidationError("chat transcript must end with a user turn")
        payload = {"transcript": [{"role": t.role, "content": t.content}
                                  for t in transcript]}
        response = self._call("chat", payload)
        if "text" not in response:
            raise ProtocolError(f"chat response missing 'text': {response}")
        return str(response["text"])

    def complete(self, prefix: str, max_tokens: int | None = None) -> str:
        payload: dict = {"prefix": prefix}
        if max_tokens is not None:
            payload["max_tokens"] = max_tokens
        response = self._call("complete", payload)
        if "text" not in response:
            raise ProtocolError(f"complete response missing 'text': {response}")
        return str(response["text"])

    def da_qe(self, source: str, target: str) -> float:
        response = self._call("score", {"source": source, "target": target})
        try:
            score = float(response["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"unparsable score response: {response}") from exc
        if not 0.0 <= score <= 1.0:
            raise ProtocolError(f"DA-QE score {score} outside [0,1]")
        return score

    def embed(self, text: str) -> list[float]:
        response = self._call("embed", {"text": text})
        vector = response.get("vector")
        if not isinstance(vector, list) or not vector:
            raise ProtocolError(f"unparsable embed response: {response}")
        vector = [float(x) for x in vector]
        if self._embed_dim is None:
            self._embed_dim = len(vector)
        elif len(vector) != self._embed_dim:
            raise ProtocolError(
                f"embedding dimension changed mid-run: {len(vector)} != {self._embed_dim}")
        return vector

    def map_concurrent(self, func: Callable, items: Iterable) -> list:
        """Apply ``func`` over items with at most max_in_flight concurrent calls."""
        items = list(items)
        if self.config.max_in_flight == 1 or len(items) <= 1:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            return list(pool.map(func, items))
