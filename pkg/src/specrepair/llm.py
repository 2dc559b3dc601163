"""Chat sessions over pluggable model backends, with token and dollar accounting.

Two backends ship: :class:`HTTPBackend` speaks the OpenAI-compatible
chat-completions wire format, and :class:`ReplayBackend` plays back a
scripted list of assistant replies for hermetic runs.
"""

from __future__ import annotations

import json
import logging
import os
import time
import uuid
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

import httpx

from .errors import BackendUnavailable, ContextOverflow, ReplayExhausted, SessionClosed, UnknownModel

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class LLMConfig:
    model_id: str = "gpt-4o"
    temperature: float = 1.0
    max_output_tokens: int = 4096
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")

    def __add__(self, other: TokenUsage) -> TokenUsage:
        return TokenUsage(self.input_tokens + other.input_tokens, self.output_tokens + other.output_tokens)

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens

    def to_dict(self) -> dict[str, int]:
        return {"input_tokens": self.input_tokens, "output_tokens": self.output_tokens}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TokenUsage:
        return cls(int(data.get("input_tokens", 0)), int(data.get("output_tokens", 0)))


class PricingTable(Mapping[str, tuple[float, float]]):
    """Dollars per million (input, output) tokens, keyed by model id."""

    def __init__(self, rates: Mapping[str, tuple[float, float]]) -> None:
        for model, (rin, rout) in rates.items():
            if rin <= 0 or rout <= 0:
                raise ValueError(f"rates for {model} must be positive")
        self._rates = {k: (v[0], v[1]) for k, v in rates.items()}

    def __getitem__(self, model_id: str) -> tuple[float, float]:
        return self._rates[model_id]

    def __iter__(self):
        return iter(self._rates)

    def __len__(self) -> int:
        return len(self._rates)


DEFAULT_PRICING = PricingTable({"gpt-4o": (5.0, 15.0), "gpt-4": (30.0, 60.0)})


def cost_exact(usage: TokenUsage, model_id: str, pricing: Mapping[str, tuple[float, float]]) -> Fraction:
    """Exact rational cost; linear in ``usage`` by construction."""
    try:
        rin, rout = pricing[model_id]
    except KeyError:
        raise UnknownModel(f"no pricing for model {model_id!r}") from None
    return (usage.input_tokens * Fraction(rin) + usage.output_tokens * Fraction(rout)) / 1_000_000


def cost(usage: TokenUsage, model_id: str, pricing: Mapping[str, tuple[float, float]] = DEFAULT_PRICING) -> float:
    return float(cost_exact(usage, model_id, pricing))


def approximate_tokens(text: str) -> int:
    """Whitespace-token count times 1.3, rounded up (integer arithmetic)."""
    words = len(text.split())
    return (words * 13 + 9) // 10


# -- messages and sessions ---------------------------------------------------


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class Completion:
    text: str
    usage: TokenUsage | None = None


@dataclass(frozen=True)
class LedgerEntry:
    session_id: str
    label: str
    turn: int
    model_id: str
    input_tokens: int
    output_tokens: int
    approximate: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "label": self.label,
            "turn": self.turn,
            "model_id": self.model_id,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "approximate": self.approximate,
        }


class Backend(Protocol):
    def complete(self, messages: Sequence[Message], config: LLMConfig) -> Completion: ...


@dataclass
class ChatSession:
    """Single-owner conversation. Not safe for concurrent use."""

    session_id: str
    config: LLMConfig
    backend: Backend | None = field(default=None, repr=False, compare=False)
    label: str = ""
    messages: list[Message] = field(default_factory=list)
    usage: TokenUsage = field(default_factory=TokenUsage)
    ledger: list[LedgerEntry] = field(default_factory=list)
    closed: bool = False

    def close(self) -> None:
        self.closed = True

    @property
    def turns(self) -> int:
        return sum(1 for m in self.messages if m.role == "assistant")

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "label": self.label,
            "model_id": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": [m.to_dict() for m in self.messages],
            "usage": self.usage.to_dict(),
            "ledger": [e.to_dict() for e in self.ledger],
            "closed": self.closed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], backend: Backend | None = None) -> ChatSession:
        return cls(
            session_id=data["session_id"],
            config=LLMConfig(model_id=data["model_id"], temperature=data.get("temperature", 1.0)),
            backend=backend,
            label=data.get("label", ""),
            messages=[Message(m["role"], m["content"]) for m in data["messages"]],
            usage=TokenUsage.from_dict(data["usage"]),
            ledger=[LedgerEntry(**e) for e in data.get("ledger", [])],
            closed=data.get("closed", False),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def open_session(
    config: LLMConfig,
    system_prompt: str,
    backend: Backend | None = None,
    session_id: str | None = None,
    label: str = "",
) -> ChatSession:
    return ChatSession(
        session_id=session_id or uuid.uuid4().hex,
        config=config,
        backend=backend,
        label=label,
        messages=[Message("system", system_prompt)],
    )


def send(session: ChatSession, message: str, role: str = "user") -> str:
    """Append a user (or tool) turn, query the backend, append its reply."""
    if session.closed:
        raise SessionClosed(f"session {session.session_id} is closed")
    if role not in ("user", "tool"):
        raise ValueError(f"cannot send a {role!r} turn")
    if session.backend is None:
        raise BackendUnavailable("session has no backend")
    session.messages.append(Message(role, message))
    try:
        completion = session.backend.complete(list(session.messages), session.config)
    except BaseException:
        session.messages.pop()
        raise
    session.messages.append(Message("assistant", completion.text))
    approximate = completion.usage is None
    if approximate:
        usage = TokenUsage(
            sum(approximate_tokens(m.content) for m in session.messages[:-1]),
            approximate_tokens(completion.text),
        )
    else:
        usage = completion.usage
    session.usage = session.usage + usage
    session.ledger.append(
        LedgerEntry(
            session_id=session.session_id,
            label=session.label,
            turn=session.turns,
            model_id=session.config.model_id,
            input_tokens=usage.input_tokens,
            output_tokens=usage.output_tokens,
            approximate=approximate,
        )
    )
    return completion.text


def export_ledger(sessions: Iterable[ChatSession], path: str | Path) -> int:
    """Write one JSON line per send across ``sessions``; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in sessions:
            for entry in s.ledger:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
                count += 1
    return count


# -- backends ----------------------------------------------------------------


class ReplayBackend:
    """Serves scripted replies in order, across every session that uses it.

    Script entries are either a reply string or an object with ``reply`` and
    optional ``usage`` (``input_tokens``/``output_tokens``). An entry
    ``{"error": "context_overflow"}`` or ``{"error": "unavailable"}`` raises
    the matching backend error instead.
    """

    def __init__(self, script: Sequence[Any]) -> None:
        self.script = list(script)
        self.cursor = 0

    @classmethod
    def from_file(cls, path: str | Path) -> ReplayBackend:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError(f"replay script {path} must be a JSON array")
        return cls(data)

    @property
    def remaining(self) -> int:
        return len(self.script) - self.cursor

    def complete(self, messages: Sequence[Message], config: LLMConfig) -> Completion:
        if self.cursor >= len(self.script):
            raise ReplayExhausted(f"replay script exhausted after {len(self.script)} replies")
        entry = self.script[self.cursor]
        self.cursor += 1
        if isinstance(entry, str):
            return Completion(entry)
        if "error" in entry:
            if entry["error"] == "context_overflow":
                raise ContextOverflow("scripted context overflow")
            raise BackendUnavailable(f"scripted backend error: {entry['error']}")
        usage = TokenUsage.from_dict(entry["usage"]) if "usage" in entry else None
        return Completion(entry["reply"], usage)


class RecordingBackend:
    """Wraps a live backend and keeps a replay script of what it returned."""

    def __init__(self, inner: Backend) -> None:
        self.inner = inner
        self.script: list[dict[str, Any]] = []

    def complete(self, messages: Sequence[Message], config: LLMConfig) -> Completion:
        completion = self.inner.complete(messages, config)
        entry: dict[str, Any] = {"reply": completion.text}
        if completion.usage is not None:
            entry["usage"] = completion.usage.to_dict()
        self.script.append(entry)
        return completion

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.script, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


class HTTPBackend:
    """OpenAI-compatible ``/chat/completions`` client with bounded retries."""

    RETRY_DELAYS = (1.0, 2.0, 4.0)

    def __init__(
        self,
        client: httpx.Client | None = None,
        timeout: float = 120.0,
        sleep: Callable[[float], None] = time.sleep,
        retry_delays: Sequence[float] = RETRY_DELAYS,
    ) -> None:
        self.client = client or httpx.Client(timeout=timeout)
        self.sleep = sleep
        self.retry_delays = tuple(retry_delays)

    @staticmethod
    def request_body(messages: Sequence[Message], config: LLMConfig) -> dict[str, Any]:
        wire = []
        for m in messages:
            if m.role == "tool":
                # plain chat APIs have no free-standing tool role
                wire.append({"role": "user", "content": f"Tool result:\n{m.content}"})
            else:
                wire.append(m.to_dict())
        return {
            "model": config.model_id,
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
            "messages": wire,
        }

    def complete(self, messages: Sequence[Message], config: LLMConfig) -> Completion:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = self.request_body(messages, config)
        last_error = "no attempt made"
        for attempt, delay in enumerate((0.0, *self.retry_delays)):
            if delay:
                self.sleep(delay)
            try:
                resp = self.client.post(config.endpoint, json=body, headers=headers)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                logger.warning("attempt %d failed: %s", attempt + 1, last_error)
                continue
            if resp.status_code == 200:
                return self._parse(resp)
            text = resp.text
            if resp.status_code == 400 and ("context_length" in text or "maximum context" in text):
                raise ContextOverflow(text[:500])
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                logger.warning("attempt %d failed: %s", attempt + 1, last_error)
                continue
            raise BackendUnavailable(f"HTTP {resp.status_code}: {text[:500]}")
        raise BackendUnavailable(f"giving up after {1 + len(self.retry_delays)} attempts: {last_error}")

    @staticmethod
    def _parse(resp: httpx.Response) -> Completion:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc
        usage = data.get("usage")
        if usage and "prompt_tokens" in usage and "completion_tokens" in usage:
            return Completion(text, TokenUsage(int(usage["prompt_tokens"]), int(usage["completion_tokens"])))
        return Completion(text)
