"""Reasoning component: a tool-using agent plus historical-fix retrieval.

The agent talks a one-line JSON protocol. A reply holding a line
``{"tool": name, "args": {...}}`` is a tool request; any other reply is the
final answer, read through the labels ``Intended behavior:``,
``Root cause:`` and ``Repair suggestion:``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Protocol, Sequence

import httpx
import numpy as np

from .analysis.tools import ToolRegistry, to_jsonable
from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    MalformedTemplate,
    RepairError,
    StoreError,
    ToolCallParseError,
    ZeroVector,
)
from .llm import ChatSession, send
from .model import BugInstance, FlawedSpecInfo, iter_jsonl
from .pipeline import render_failures
from .prompts import default_templates_dir, numbered_items, read_template
from .transformer import extract_labeled, read_function_source, serialize_specifications

DEFAULT_DIMENSION = 256
DEFAULT_THRESHOLD = 0.6
DEFAULT_MAX_TOOL_CALLS = 12
SUPPORT_HEADING = "Specification-Repair Supporting Information"
SUPPORT_LABELS = ("Intended behavior", "Root cause", "Repair suggestion")
_TOKEN_RE = re.compile(r"[a-z0-9_]+")
_SAFE_NORM = 1e-150  # below this, squaring components may underflow


# -- embeddings --------------------------------------------------------------


class Embedder(Protocol):
    embedder_id: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Bag of hashed lowercase tokens, L2-normalized. Pure and offline.

    Text without any token maps to the zero vector, which
    :func:`is_degenerate` reports.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION) -> None:
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.embedder_id = f"hashing-bag/blake2b/d{dimension}"

    def bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension)
        for token in _TOKEN_RE.findall(text.lower()):
            vec[self.bucket(token)] += 1.0
        norm = np.linalg.norm(vec)
        return vec / norm if norm else vec


class HTTPEmbedder:
    """OpenAI-compatible ``/embeddings`` endpoint."""

    def __init__(
        self,
        model: str,
        dimension: int,
        endpoint: str = "https://api.openai.com/v1/embeddings",
        api_key_env: str = "OPENAI_API_KEY",
        client: httpx.Client | None = None,
        timeout: float = 60.0,
    ) -> None:
        self.model = model
        self.dimension = dimension
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.client = client or httpx.Client(timeout=timeout)
        self.embedder_id = f"http/{model}/d{dimension}"

    def embed(self, text: str) -> np.ndarray:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self.client.post(self.endpoint, json={"model": self.model, "input": text}, headers=headers)
            resp.raise_for_status()
            values = resp.json()["data"][0]["embedding"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendUnavailable(f"embedding request failed: {exc}") from exc
        vec = np.asarray(values, dtype=float)
        if vec.shape != (self.dimension,):
            raise DimensionMismatch(f"endpoint returned {vec.shape[0]} values, expected {self.dimension}")
        if not np.all(np.isfinite(vec)):
            raise BackendUnavailable("endpoint returned non-finite embedding values")
        return vec


def embed(text: str, embedder: Embedder) -> np.ndarray:
    return embedder.embed(text)


def is_degenerate(vec: np.ndarray) -> bool:
    return not np.any(vec)


def query_text(buggy_code: str, root_cause: str) -> str:
    return f"{buggy_code}\n{root_cause}"


def _unit(vec: np.ndarray) -> np.ndarray | None:
    """``vec`` scaled to unit length, or ``None`` for the zero vector.

    Dividing by the largest magnitude first keeps tiny non-zero vectors
    from underflowing to a zero norm.
    """
    norm = np.linalg.norm(vec)
    if norm > _SAFE_NORM:
        return vec / norm
    peak = np.max(np.abs(vec)) if vec.size else 0.0
    if peak == 0:
        return None
    scaled = vec / peak
    return scaled / np.linalg.norm(scaled)


def cosine_similarity(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare vectors of shape {a.shape} and {b.shape}")
    ua, ub = _unit(a), _unit(b)
    if ua is None or ub is None:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(ua, ub), -1.0, 1.0))


# -- example store -----------------------------------------------------------


@dataclass(frozen=True)
class ExampleTuple:
    buggy_code: str
    fix_code: str
    root_cause: str
    embedding: tuple[float, ...] = field(repr=False)

    def __post_init__(self) -> None:
        values = tuple(float(x) for x in self.embedding)
        if not all(math.isfinite(x) for x in values):
            raise StoreError("embedding values must be finite")
        object.__setattr__(self, "embedding", values)

    def to_dict(self, with_embedding: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {"buggy_code": self.buggy_code, "fix_code": self.fix_code, "root_cause": self.root_cause}
        if with_embedding:
            out["embedding"] = list(self.embedding)
        return out


@dataclass(frozen=True)
class ExampleStore:
    """Immutable example database; safe to share between threads."""

    entries: tuple[ExampleTuple, ...]
    dimension: int = DEFAULT_DIMENSION
    similarity_threshold: float = DEFAULT_THRESHOLD
    embedder_id: str = HashingEmbedder().embedder_id
    _units: np.ndarray = field(init=False, repr=False, compare=False)
    _live: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.dimension < 1:
            raise StoreError("dimension must be positive")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise StoreError("similarity_threshold must lie in [0, 1]")
        for i, e in enumerate(self.entries):
            if len(e.embedding) != self.dimension:
                raise StoreError(f"entry {i} has dimension {len(e.embedding)}, store expects {self.dimension}")
        units = np.zeros((len(self.entries), self.dimension))
        live = np.zeros(len(self.entries), dtype=bool)
        for i, e in enumerate(self.entries):
            u = _unit(np.asarray(e.embedding, dtype=float))
            if u is not None:
                units[i], live[i] = u, True
        units.setflags(write=False)
        live.setflags(write=False)
        object.__setattr__(self, "_units", units)
        object.__setattr__(self, "_live", live)

    def __len__(self) -> int:
        return len(self.entries)

    def similarities(self, query: np.ndarray) -> np.ndarray:
        """Cosine similarity of ``query`` to every entry (``-inf`` for zero entries)."""
        q = np.asarray(query, dtype=float)
        if q.shape != (self.dimension,):
            raise DimensionMismatch(f"query has shape {q.shape}, store dimension is {self.dimension}")
        uq = _unit(q)
        if uq is None:
            raise ZeroVector("query embedding is the zero vector")
        # a row-wise reduction gives identical entries bit-identical scores,
        # which a BLAS matvec does not guarantee; ties then go to the first entry
        dots = (self._units * uq).sum(axis=1)
        return np.where(self._live, np.clip(dots, -1.0, 1.0), -np.inf)


def best_match(query: np.ndarray, store: ExampleStore) -> tuple[int | None, float]:
    """Index of the most similar entry if it clears the threshold, with its score."""
    if not store.entries:
        return None, float("-inf")
    sims = store.similarities(query)
    best = int(np.argmax(sims))
    score = float(sims[best])
    return (best if score >= store.similarity_threshold else None), score


def retrieve_example(buggy_code: str, root_cause: str, store: ExampleStore, embedder: Embedder) -> ExampleTuple | None:
    if embedder.embedder_id != store.embedder_id:
        raise StoreError(f"store was built with {store.embedder_id!r}, query embedder is {embedder.embedder_id!r}")
    if not store.entries:
        return None
    q = embed(query_text(buggy_code, root_cause), embedder)
    if is_degenerate(q):
        return None
    best, _ = best_match(q, store)
    return None if best is None else store.entries[best]


def save_store(store: ExampleStore, path: str | Path) -> None:
    header = {
        "kind": "header",
        "dimension": store.dimension,
        "embedder_id": store.embedder_id,
        "similarity_threshold": store.similarity_threshold,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for e in store.entries:
            fh.write(json.dumps(e.to_dict(), ensure_ascii=False) + "\n")


def load_store(path: str | Path) -> ExampleStore:
    try:
        with open(path, encoding="utf-8") as fh:
            records = list(iter_jsonl(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise StoreError(f"cannot read example store {path}: {exc}") from exc
    if not records or records[0].get("kind") != "header":
        raise StoreError(f"{path}: first record must be the store header")
    header = records[0]
    try:
        entries = tuple(
            ExampleTuple(r["buggy_code"], r["fix_code"], r["root_cause"], tuple(r["embedding"])) for r in records[1:]
        )
    except KeyError as exc:
        raise StoreError(f"{path}: entry missing field {exc}") from None
    return ExampleStore(
        entries,
        dimension=int(header["dimension"]),
        similarity_threshold=float(header.get("similarity_threshold", DEFAULT_THRESHOLD)),
        embedder_id=header["embedder_id"],
    )


def build_store(
    triples: Iterable[Mapping[str, str]],
    embedder: Embedder,
    threshold: float = DEFAULT_THRESHOLD,
) -> ExampleStore:
    """Embed raw ``(buggy_code, fix_code, root_cause)`` records. Duplicates are kept."""
    entries = []
    for t in triples:
        vec = embed(query_text(t["buggy_code"], t["root_cause"]), embedder)
        entries.append(ExampleTuple(t["buggy_code"], t["fix_code"], t["root_cause"], tuple(vec.tolist())))
    return ExampleStore(tuple(entries), embedder.dimension, threshold, embedder.embedder_id)


# -- agent -------------------------------------------------------------------


@dataclass(frozen=True)
class AgentPlan:
    steps: tuple[str, ...]
    max_tool_calls: int = DEFAULT_MAX_TOOL_CALLS

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if len(self.steps) != 4:
            raise MalformedTemplate(f"agent plan needs exactly 4 steps, got {len(self.steps)}")
        if self.max_tool_calls < 0:
            raise ValueError("max_tool_calls must be >= 0")


@dataclass(frozen=True)
class AgentPrompt:
    role: str
    protocol: str
    plan: AgentPlan

    def system_prompt(self, tools: ToolRegistry) -> str:
        steps = "\n".join(f"{i}. {s}" for i, s in enumerate(self.plan.steps, 1))
        return (
            f"{self.role}\n\nAvailable tools:\n{tools.describe()}\n\n{self.protocol}\n\n"
            f"Plan:\n{steps}\n\nYou may call at most {self.plan.max_tool_calls} tools."
        )


def build_agent_prompt(templates_dir: str | Path | None = None, max_tool_calls: int = DEFAULT_MAX_TOOL_CALLS) -> AgentPrompt:
    root = Path(templates_dir) if templates_dir is not None else default_templates_dir()
    steps = numbered_items(read_template(root, "agent/plan.txt"))
    return AgentPrompt(
        role=read_template(root, "agent/role.txt"),
        protocol=read_template(root, "agent/protocol.txt"),
        plan=AgentPlan(tuple(steps), max_tool_calls),
    )


@dataclass(frozen=True)
class ToolCall:
    tool: str
    args: dict[str, Any]


@dataclass(frozen=True)
class TraceEntry:
    tool: str
    args: dict[str, Any]
    digest: str
    ok: bool

    def to_dict(self) -> dict[str, Any]:
        return {"tool": self.tool, "args": self.args, "digest": self.digest, "ok": self.ok}


@dataclass(frozen=True)
class RepairSupportInfo:
    intended_behavior: str
    root_cause: str
    repair_suggestion: str
    retrieved_example: ExampleTuple | None = None
    tool_trace: tuple[TraceEntry, ...] = ()
    complete: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "tool_trace", tuple(self.tool_trace))

    def render(self) -> str:
        out = [
            f"{SUPPORT_HEADING}:",
            f"Intended behavior: {self.intended_behavior}",
            f"Root cause: {self.root_cause}",
            f"Repair suggestion: {self.repair_suggestion}",
        ]
        ex = self.retrieved_example
        if ex is not None:
            out.append(f"Similar historical fix (root cause: {ex.root_cause})")
            out.append(f"Buggy code:\n```\n{ex.buggy_code.rstrip()}\n```")
            out.append(f"Fixed code:\n```\n{ex.fix_code.rstrip()}\n```")
        return "\n".join(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "intended_behavior": self.intended_behavior,
            "root_cause": self.root_cause,
            "repair_suggestion": self.repair_suggestion,
            "retrieved_example": None if self.retrieved_example is None else self.retrieved_example.to_dict(False),
            "tool_trace": [t.to_dict() for t in self.tool_trace],
            "complete": self.complete,
        }


_TOOLISH = re.compile(r'^\s*\{.*"tool"')


def parse_tool_request(reply: str) -> ToolCall | None:
    """The tool request in ``reply``, ``None`` for a final answer.

    Raises :class:`ToolCallParseError` when a line looks like a request but
    is not a well-formed one.
    """
    candidates = [line.strip() for line in reply.splitlines() if _TOOLISH.match(line)]
    for m in re.finditer(r"```(?:json)?\s*\n(\{.*?\})\s*```", reply, re.DOTALL):
        if '"tool"' in m.group(1):
            candidates.append(m.group(1))
    if not candidates:
        return None
    problem = "unparseable JSON"
    for text in candidates:
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict) or not isinstance(data.get("tool"), str):
            problem = "missing string field 'tool'"
            continue
        args = data.get("args", {})
        if not isinstance(args, dict):
            problem = "'args' must be an object"
            continue
        return ToolCall(data["tool"], args)
    raise ToolCallParseError(f"malformed tool request: {problem}")


def _digest(result: Any) -> str:
    return hashlib.sha256(json.dumps(result, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def agent_kickoff(info: FlawedSpecInfo, bug: BugInstance, sources: Sequence[str]) -> str:
    code = "\n".join(
        f"{locus.file} lines {locus.start_line}-{locus.end_line}:\n```\n{src.rstrip()}\n```"
        for locus, src in zip(bug.target_functions, sources)
    )
    tests = render_failures(info.failing_tests) or "No failing tests available."
    return (
        f"Target function code:\n{code}\n\n"
        f"Flawed specification:\n{serialize_specifications(info.specifications)}\n\n"
        f"Failing tests:\n{tests}"
    )


_CROSS_CHECK = "Cross-check your intended behavior and root cause against this example before answering."
_BUDGET_SPENT = "The tool budget is used up. Give your final answer now, using the three labels."
_REASK = (
    "That tool request was not valid. Put exactly one JSON object "
    '{"tool": "<name>", "args": {...}} on a line by itself, or give the final answer.'
)


def run_agent(
    info: FlawedSpecInfo,
    bug: BugInstance,
    tools: ToolRegistry,
    store: ExampleStore | None,
    session: ChatSession,
    plan: AgentPlan,
    embedder: Embedder | None = None,
    sources: Sequence[str] | None = None,
) -> RepairSupportInfo:
    """Reason-act loop until a final answer or until ``plan.max_tool_calls`` is spent.

    Unknown tools and bad arguments come back to the agent as error results.
    When the budget runs out the agent is asked once for its answer and the
    result is flagged incomplete.
    """
    if sources is None:
        sources = [read_function_source(bug.workspace_root, l) for l in bug.target_functions]
    embedder = embedder or HashingEmbedder(store.dimension if store else DEFAULT_DIMENSION)
    trace: list[TraceEntry] = []
    example: ExampleTuple | None = None
    exhausted = False

    def reply_to(message: str, role: str = "user") -> ToolCall | str:
        reply = send(session, message, role)
        try:
            call = parse_tool_request(reply)
        except ToolCallParseError:
            reply = send(session, _REASK)
            call = parse_tool_request(reply)
        return reply if call is None else call

    def run_tool(call: ToolCall) -> Any:
        nonlocal example
        if call.tool == "example_retrieval":
            if store is None:
                return {"example": None, "reason": "no example database configured"}
            try:
                found = retrieve_example(str(call.args.get("buggy_code", "")), str(call.args.get("root_cause", "")), store, embedder)
            except RepairError as exc:
                return {"error": str(exc)}
            if found is None:
                return {"example": None, "reason": f"no stored example reaches similarity {store.similarity_threshold}"}
            example = found
            return {"example": found.to_dict(False), "note": _CROSS_CHECK}
        try:
            return tools.dispatch(call.tool, call.args)
        except (RepairError, TypeError) as exc:
            return {"error": str(exc)}

    step = reply_to(agent_kickoff(info, bug, sources))
    while isinstance(step, ToolCall):
        if len(trace) >= plan.max_tool_calls:
            exhausted = True
            step = send(session, _BUDGET_SPENT)
            break
        result = to_jsonable(run_tool(step))
        ok = not (isinstance(result, dict) and "error" in result)
        trace.append(TraceEntry(step.tool, step.args, _digest(result), ok))
        payload = json.dumps({"tool": step.tool, "result": result}, sort_keys=True, ensure_ascii=False)
        step = reply_to(payload, role="tool")

    fields = extract_labeled(step, SUPPORT_LABELS)
    complete = not exhausted and all(fields.get(label) for label in SUPPORT_LABELS)
    return RepairSupportInfo(
        intended_behavior=fields.get("Intended behavior", "(not provided)"),
        root_cause=fields.get("Root cause", "(not provided)"),
        repair_suggestion=fields.get("Repair suggestion", "(not provided)"),
        retrieved_example=example,
        tool_trace=tuple(trace),
        complete=complete,
    )
