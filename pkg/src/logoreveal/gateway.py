"""Provider-pluggable multimodal chat access: caching, retries, budgets,
transcripts, and a deterministic scripted stub for offline runs.

The live path speaks the OpenAI-compatible chat-completions protocol with image
parts; base URL and model come from configuration, so any compatible provider
works. With the scripted stub and a fixed scenario, whole pipeline runs are
bit-reproducible.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Union

MAX_IMAGE_BYTES = 20 * 1024 * 1024

STAGE_TAGS = ("caption", "hierarchy", "entrance", "grouping", "concept", "synthesis", "repair", "merge", "edit")


class GatewayError(Exception):
    pass


class Timeout(GatewayError):
    pass


class ProviderError(GatewayError):
    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(f"provider error {status}: {message}")


class BudgetExceeded(GatewayError):
    pass


class ScenarioMiss(GatewayError):
    pass


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    png: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.png) > MAX_IMAGE_BYTES:
            raise ValueError(f"image attachment is {len(self.png)} bytes, cap is {MAX_IMAGE_BYTES}")


Part = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    parts: tuple[Part, ...]

    @classmethod
    def user(cls, *parts: Part) -> "ChatMessage":
        return cls("user", tuple(parts))

    @classmethod
    def system(cls, text: str) -> "ChatMessage":
        return cls("system", (TextPart(text),))

    def text(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))

    def image_count(self) -> int:
        return sum(1 for p in self.parts if isinstance(p, ImagePart))


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    tag: str
    temperature: float = 0.0
    max_tokens: int = 1024
    element_id: Optional[str] = None
    attempt: Optional[int] = None
    sample_index: Optional[int] = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.tag not in STAGE_TAGS:
            raise ValueError(f"unknown stage tag {self.tag!r}")

    def image_count(self) -> int:
        return sum(m.image_count() for m in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: dict = field(default_factory=dict)
    latency_ms: float = 0.0
    provider_id: str = "unknown"


def cache_key(req: ChatRequest) -> str:
    """Stable content digest; identical requests replay from cache without a call.
    sample_index is hashed when set so resampled creative stages stay distinct."""
    h = hashlib.sha256()
    h.update(req.model.encode())
    h.update(f"|t={req.temperature}|m={req.max_tokens}".encode())
    if req.sample_index is not None:
        h.update(f"|s={req.sample_index}".encode())
    for message in req.messages:
        h.update(b"\x00" + message.role.encode())
        for part in message.parts:
            if isinstance(part, TextPart):
                h.update(b"\x01" + part.text.encode())
            else:
                h.update(b"\x02" + hashlib.sha256(part.png).digest())
    return h.hexdigest()


class Provider(Protocol):
    def complete(self, req: ChatRequest) -> ChatResponse: ...


# --- clocks -----------------------------------------------------------------------


class SystemClock:
    def now(self) -> float:
        return time.time()


class LogicalClock:
    """Deterministic stand-in for wall time; each reading advances by one step."""

    def __init__(self, start: float = 0.0, step: float = 1.0):
        self._value = start
        self._step = step
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            value = self._value
            self._value += self._step
            return value


# --- scripted stub -----------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioRule:
    response: str
    tag: Optional[str] = None
    element_id: Optional[str] = None
    attempt: Optional[int] = None
    sample_index: Optional[int] = None

    def matches(self, req: ChatRequest) -> bool:
        if self.tag is not None and self.tag != req.tag:
            return False
        if self.element_id is not None and self.element_id != req.element_id:
            return False
        if self.attempt is not None and self.attempt != req.attempt:
            return False
        if self.sample_index is not None and self.sample_index != req.sample_index:
            return False
        return True


@dataclass
class ScriptedScenario:
    rules: list[ScenarioRule] = field(default_factory=list)
    strict: bool = True

    @classmethod
    def load(cls, path: Path | str) -> "ScriptedScenario":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        rules = []
        for raw in data.get("rules", []):
            match = raw.get("match", {})
            if "response_file" in raw:
                response = (path.parent / raw["response_file"]).read_text(encoding="utf-8")
            else:
                response = raw.get("response", "")
            rules.append(
                ScenarioRule(
                    response=response,
                    tag=match.get("tag"),
                    element_id=match.get("element_id"),
                    attempt=match.get("attempt"),
                    sample_index=match.get("sample_index"),
                )
            )
        return cls(rules=rules, strict=bool(data.get("strict", True)))

    def respond(self, req: ChatRequest) -> Optional[str]:
        for rule in self.rules:
            if rule.matches(req):
                return rule.response
        return None


class ScriptedProvider:
    """Offline provider: first matching scenario rule wins."""

    def __init__(self, scenario: ScriptedScenario):
        self.scenario = scenario

    def complete(self, req: ChatRequest) -> ChatResponse:
        text = self.scenario.respond(req)
        if text is None:
            if self.scenario.strict:
                raise ScenarioMiss(
                    f"no scenario rule matches tag={req.tag!r} element_id={req.element_id!r} "
                    f"attempt={req.attempt!r} sample_index={req.sample_index!r}"
                )
            text = ""
        return ChatResponse(text=text, usage={}, latency_ms=0.0, provider_id="stub")


class ReplayProvider:
    """Replays a recorded transcript by request digest; any unrecorded request errors."""

    def __init__(self, transcript_path: Path | str):
        self._responses: dict[str, str] = {}
        for line in Path(transcript_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            self._responses[record["digest"]] = record["response"]["text"]

    def complete(self, req: ChatRequest) -> ChatResponse:
        digest = cache_key(req)
        if digest not in self._responses:
            raise ScenarioMiss(f"transcript has no response for digest {digest}")
        return ChatResponse(text=self._responses[digest], provider_id="replay")


# --- live provider ------------------------------------------------------------------


class HttpProvider:
    """OpenAI-compatible chat-completions endpoint with image parts."""

    def __init__(self, base_url: str, api_key: str = "", timeout_s: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout_s = timeout_s

    @staticmethod
    def _encode_message(message: ChatMessage) -> dict:
        content = []
        for part in message.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                b64 = base64.b64encode(part.png).decode("ascii")
                content.append({"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}})
        return {"role": message.role, "content": content}

    def complete(self, req: ChatRequest) -> ChatResponse:
        import requests

        payload = {
            "model": req.model,
            "messages": [self._encode_message(m) for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions", json=payload, headers=headers, timeout=self.timeout_s
            )
        except requests.Timeout as exc:
            raise Timeout(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise ProviderError(503, str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderError(resp.status_code, resp.text[:500])
        data = resp.json()
        text = data["choices"][0]["message"]["content"] or ""
        return ChatResponse(
            text=text,
            usage=data.get("usage", {}),
            latency_ms=(time.monotonic() - started) * 1000.0,
            provider_id=data.get("model", req.model),
        )


# --- gateway ------------------------------------------------------------------------


def _is_transient(exc: Exception) -> bool:
    if isinstance(exc, Timeout):
        return True
    return isinstance(exc, ProviderError) and (exc.status == 429 or exc.status >= 500)


def _request_record(req: ChatRequest) -> dict:
    messages = []
    for message in req.messages:
        parts = []
        for part in message.parts:
            if isinstance(part, TextPart):
                parts.append({"text": part.text})
            else:
                parts.append({"image_png_base64": base64.b64encode(part.png).decode("ascii")})
        messages.append({"role": message.role, "parts": parts})
    return {
        "model": req.model,
        "tag": req.tag,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
        "element_id": req.element_id,
        "attempt": req.attempt,
        "sample_index": req.sample_index,
        "messages": messages,
    }


class Gateway:
    """Thread-safe front door for all model calls: cache, retry, budget, transcript."""

    def __init__(
        self,
        provider: Provider,
        cache_dir: Optional[Path] = None,
        transcript_path: Optional[Path] = None,
        max_calls: int = 200,
        retries: int = 3,
        backoff_s: float = 0.5,
        max_concurrency: int = 4,
        clock=None,
        sleep=time.sleep,
    ):
        self.provider = provider
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.transcript_path = Path(transcript_path) if transcript_path else None
        self.max_calls = max_calls
        self.retries = retries
        self.backoff_s = backoff_s
        self.clock = clock or SystemClock()
        self.sleep = sleep
        self.provider_calls = 0
        self.cache_hits = 0
        self._lock = threading.Lock()
        self._sema = threading.Semaphore(max_concurrency)
        self._key_locks: dict[str, threading.Lock] = {}
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _cache_path(self, digest: str) -> Optional[Path]:
        return self.cache_dir / f"{digest}.json" if self.cache_dir else None

    def _key_lock(self, digest: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(digest, threading.Lock())

    def _read_cache(self, digest: str) -> Optional[ChatResponse]:
        path = self._cache_path(digest)
        if path is None:
            return None
        with self._key_lock(digest):
            if not path.exists():
                return None
            data = json.loads(path.read_text(encoding="utf-8"))
        return ChatResponse(
            text=data["text"],
            usage=data.get("usage", {}),
            latency_ms=0.0,
            provider_id=data.get("provider_id", "cache"),
        )

    def _write_cache(self, digest: str, resp: ChatResponse) -> None:
        path = self._cache_path(digest)
        if path is None:
            return
        payload = {"text": resp.text, "usage": resp.usage, "provider_id": resp.provider_id}
        with self._key_lock(digest):
            path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    def _log(self, digest: str, req: ChatRequest, resp: ChatResponse, cache_hit: bool, retries: int) -> None:
        if self.transcript_path is None:
            return
        record = {
            "ts": self.clock.now(),
            "digest": digest,
            "cache_hit": cache_hit,
            "retries": retries,
            "request": _request_record(req),
            "response": {
                "text": resp.text,
                "usage": resp.usage,
                "latency_ms": resp.latency_ms,
                "provider_id": resp.provider_id,
            },
        }
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            self.transcript_path.parent.mkdir(parents=True, exist_ok=True)
            with self.transcript_path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def chat(self, req: ChatRequest) -> ChatResponse:
        digest = cache_key(req)
        cached = self._read_cache(digest)
        if cached is not None:
            with self._lock:
                self.cache_hits += 1
            self._log(digest, req, cached, cache_hit=True, retries=0)
            return cached

        with self._lock:
            if self.provider_calls >= self.max_calls:
                raise BudgetExceeded(f"call budget of {self.max_calls} exhausted")
            self.provider_calls += 1

        attempts_left = self.retries
        retries_used = 0
        delay = self.backoff_s
        while True:
            try:
                with self._sema:
                    resp = self.provider.complete(req)
                break
            except Exception as exc:
                if _is_transient(exc) and attempts_left > 0:
                    attempts_left -= 1
                    retries_used += 1
                    self.sleep(delay)
                    delay *= 2
                    continue
                raise
        if resp.text is None:
            resp = ChatResponse(text="", usage=resp.usage, latency_ms=resp.latency_ms, provider_id=resp.provider_id)
        self._write_cache(digest, resp)
        self._log(digest, req, resp, cache_hit=False, retries=retries_used)
        return resp
