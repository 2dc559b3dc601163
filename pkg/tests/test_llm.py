from __future__ import annotations

import json
from fractions import Fraction

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from specrepair.errors import BackendUnavailable, ContextOverflow, ReplayExhausted, SessionClosed, UnknownModel
from specrepair.llm import (
    DEFAULT_PRICING,
    ChatSession,
    HTTPBackend,
    LLMConfig,
    PricingTable,
    RecordingBackend,
    ReplayBackend,
    TokenUsage,
    approximate_tokens,
    cost,
    cost_exact,
    export_ledger,
    open_session,
    send,
)


def test_config_validation():
    with pytest.raises(ValueError):
        LLMConfig(temperature=-0.1)
    with pytest.raises(ValueError):
        LLMConfig(max_output_tokens=0)
    with pytest.raises(ValueError):
        TokenUsage(-1, 0)
    with pytest.raises(ValueError):
        PricingTable({"m": (0.0, 1.0)})


def test_cost_unknown_model():
    with pytest.raises(UnknownModel):
        cost(TokenUsage(1, 1), "nope")


@given(st.integers(0, 10**7), st.integers(0, 10**7))
def test_cost_exact_matches_rational_formula(i, o):
    assert cost_exact(TokenUsage(i, o), "gpt-4o", DEFAULT_PRICING) == Fraction(5 * i + 15 * o, 10**6)


def test_approximate_tokens():
    assert approximate_tokens("") == 0
    assert approximate_tokens("one") == 2  # ceil(1.3)
    assert approximate_tokens("a b c d e f g h i j") == 13


def test_send_records_turns_usage_and_ledger():
    backend = ReplayBackend([{"reply": "hi", "usage": {"input_tokens": 10, "output_tokens": 3}}, "plain reply"])
    s = open_session(LLMConfig(), "sys", backend, "s1", "test")
    assert send(s, "hello") == "hi"
    assert send(s, "again") == "plain reply"
    assert [m.role for m in s.messages] == ["system", "user", "assistant", "user", "assistant"]
    assert s.turns == 2
    first, second = s.ledger
    assert (first.input_tokens, first.output_tokens, first.approximate) == (10, 3, False)
    assert second.approximate and second.turn == 2
    assert s.usage == TokenUsage(10 + second.input_tokens, 3 + second.output_tokens)


def test_failed_send_leaves_history_unchanged():
    s = open_session(LLMConfig(), "sys", ReplayBackend([{"error": "context_overflow"}, {"error": "unavailable"}]))
    with pytest.raises(ContextOverflow):
        send(s, "x")
    with pytest.raises(BackendUnavailable):
        send(s, "x")
    with pytest.raises(ReplayExhausted):
        send(s, "x")
    assert len(s.messages) == 1 and not s.ledger


def test_closed_session_and_bad_roles():
    s = open_session(LLMConfig(), "sys", ReplayBackend(["a"]))
    with pytest.raises(ValueError):
        send(s, "x", role="assistant")
    s.close()
    with pytest.raises(SessionClosed):
        send(s, "x")
    with pytest.raises(BackendUnavailable):
        send(open_session(LLMConfig(), "sys"), "x")


def test_session_serialization_round_trip():
    s = open_session(LLMConfig(), "sys", ReplayBackend(["a"]), "id", "lbl")
    send(s, "q")
    back = ChatSession.from_dict(json.loads(s.to_json()))
    assert back.to_dict() == s.to_dict()


def test_export_ledger(tmp_path):
    backend = ReplayBackend(["a", "b", "c"])
    sessions = [open_session(LLMConfig(), "sys", backend, f"s{i}") for i in range(2)]
    send(sessions[0], "x")
    send(sessions[0], "y")
    send(sessions[1], "z")
    out = tmp_path / "ledger.jsonl"
    assert export_ledger(sessions, out) == 3
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert [r["session_id"] for r in rows] == ["s0", "s0", "s1"]


def test_replay_from_file_and_recording(tmp_path):
    path = tmp_path / "script.json"
    path.write_text('["one", {"reply": "two", "usage": {"input_tokens": 1, "output_tokens": 2}}]')
    replay = ReplayBackend.from_file(path)
    rec = RecordingBackend(replay)
    s = open_session(LLMConfig(), "sys", rec)
    send(s, "a")
    send(s, "b")
    rec.save(tmp_path / "rec.json")
    assert json.loads((tmp_path / "rec.json").read_text()) == [
        {"reply": "one"},
        {"reply": "two", "usage": {"input_tokens": 1, "output_tokens": 2}},
    ]
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ValueError):
        ReplayBackend.from_file(tmp_path / "bad.json")


def _client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


def test_http_backend_parses_usage_and_maps_tool_role(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "k")
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(
            200, json={"choices": [{"message": {"content": "ok"}}], "usage": {"prompt_tokens": 7, "completion_tokens": 2}}
        )

    s = open_session(LLMConfig(), "sys", HTTPBackend(_client(handler)))
    assert send(s, '{"tool": "x"}', role="tool") == "ok"
    assert s.usage == TokenUsage(7, 2)
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["messages"][1] == {"role": "user", "content": 'Tool result:\n{"tool": "x"}'}


def test_http_backend_retries_then_gives_up():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503, text="busy")

    backend = HTTPBackend(_client(handler), sleep=lambda s: None)
    with pytest.raises(BackendUnavailable):
        backend.complete([], LLMConfig())
    assert len(calls) == 4


def test_http_backend_retry_recovers_and_overflow():
    replies = iter([httpx.Response(429), httpx.Response(200, json={"choices": [{"message": {"content": "late"}}]})])
    backend = HTTPBackend(_client(lambda r: next(replies)), sleep=lambda s: None)
    completion = backend.complete([], LLMConfig())
    assert completion.text == "late" and completion.usage is None
    overflow = HTTPBackend(_client(lambda r: httpx.Response(400, text="maximum context length exceeded")))
    with pytest.raises(ContextOverflow):
        overflow.complete([], LLMConfig())
    bad = HTTPBackend(_client(lambda r: httpx.Response(401, text="no")))
    with pytest.raises(BackendUnavailable):
        bad.complete([], LLMConfig())
    garbage = HTTPBackend(_client(lambda r: httpx.Response(200, json={"nope": 1})))
    with pytest.raises(BackendUnavailable):
        garbage.complete([], LLMConfig())
