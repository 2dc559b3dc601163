"""Per-bug repair loop: transform once, then budgeted attempts and feedback rounds."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .agent import DEFAULT_MAX_TOOL_CALLS, Embedder, ExampleStore, RepairSupportInfo, build_agent_prompt, run_agent
from .analysis import SourceIndex, build_index, build_registry
from .errors import (
    BackendUnavailable,
    CodeExtractError,
    ContextOverflow,
    IOFailure,
    ReplayExhausted,
    ReportSchemaError,
    SpecParseError,
    SpliceError,
    ToolCallParseError,
)
from .llm import DEFAULT_PRICING, Backend, ChatSession, LLMConfig, TokenUsage, cost_exact, open_session
from .model import BugInstance, FlawedSpecInfo, Patch
from .pipeline import (
    Adapter,
    ValidationReport,
    apply_patch,
    discard_sandbox,
    generate_code,
    generation_system_prompt,
    patch_to_diff,
)
from .repairer import RepairOutcome, build_repair_prompt, incorporate_feedback, repair_spec
from .transformer import build_transform_prompt, read_function_source, transform

PHASES = ("transform", "agent", "repair", "generate")
SESSION_ABORTS = (BackendUnavailable, ReplayExhausted, ContextOverflow)
ATTEMPT_ABORTS = (SpecParseError, CodeExtractError, ToolCallParseError, SpliceError, ReportSchemaError, IOFailure)


class ReasoningStrategy(str, Enum):
    NONE = "none"
    MINIR = "minir"
    MAXR = "maxr"


class AttemptOutcome(str, Enum):
    PLAUSIBLE = "plausible"
    FAILED = "failed"
    ABORTED = "aborted"


class SessionResult(str, Enum):
    PLAUSIBLE = "plausible"
    EXHAUSTED = "exhausted"
    ABORTED = "aborted"


@dataclass(frozen=True)
class BudgetConfig:
    max_attempts: int = 5
    max_feedback_rounds: int = 3

    def __post_init__(self) -> None:
        if self.max_attempts < 1 or self.max_feedback_rounds < 1:
            raise ValueError("max_attempts and max_feedback_rounds must both be >= 1")

    @property
    def patch_space(self) -> int:
        return self.max_attempts * self.max_feedback_rounds

    def to_dict(self) -> dict[str, int]:
        return {"max_attempts": self.max_attempts, "max_feedback_rounds": self.max_feedback_rounds}


def strategy_gate(
    strategy: ReasoningStrategy | str,
    attempt_index: int,
    prior_outcomes: Sequence[AttemptOutcome | str],
) -> bool:
    """Whether the reasoning agent runs before attempt ``attempt_index``.

    MiniR switches it on once an earlier attempt ended without a plausible
    patch; an aborted attempt counts as a failed one.
    """
    strategy = ReasoningStrategy(strategy)
    if attempt_index < 1:
        raise ValueError("attempt_index starts at 1")
    if len(prior_outcomes) != attempt_index - 1:
        raise ValueError(f"attempt {attempt_index} needs {attempt_index - 1} prior outcomes, got {len(prior_outcomes)}")
    if strategy is ReasoningStrategy.NONE:
        return False
    if strategy is ReasoningStrategy.MAXR:
        return True
    return any(AttemptOutcome(o) is not AttemptOutcome.PLAUSIBLE for o in prior_outcomes)


# -- records -----------------------------------------------------------------


@dataclass
class RoundRecord:
    round_index: int
    patch: Patch
    diff: str
    report: ValidationReport

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.round_index,
            "patch": self.patch.to_dict(),
            "diff": self.diff,
            "report": self.report.to_dict(),
        }


@dataclass
class AttemptRecord:
    attempt_index: int
    reasoning: bool
    outcome: AttemptOutcome = AttemptOutcome.FAILED
    generation_calls: int = 0
    rounds: list[RoundRecord] = field(default_factory=list)
    support: RepairSupportInfo | None = None
    repair_outcomes: list[RepairOutcome] = field(default_factory=list)
    sessions: list[ChatSession] = field(default_factory=list)
    error: str | None = None

    @property
    def rounds_used(self) -> int:
        return self.generation_calls

    def to_dict(self) -> dict[str, Any]:
        return {
            "attempt": self.attempt_index,
            "reasoning": self.reasoning,
            "outcome": self.outcome.value,
            "rounds_used": self.rounds_used,
            "error": self.error,
            "support": None if self.support is None else self.support.to_dict(),
            "repair_outcomes": [o.to_dict() for o in self.repair_outcomes],
            "rounds": [r.to_dict() for r in self.rounds],
            "transcripts": [s.to_dict() for s in self.sessions],
        }


@dataclass
class RepairSession:
    bug_id: str
    strategy: ReasoningStrategy
    budget: BudgetConfig
    model_id: str
    pricing: Mapping[str, tuple[float, float]] = field(default=DEFAULT_PRICING, repr=False)
    transform_session: ChatSession | None = None
    flawed_spec: FlawedSpecInfo | None = None
    attempts: list[AttemptRecord] = field(default_factory=list)
    result: SessionResult = SessionResult.EXHAUSTED
    final_round: RoundRecord | None = None
    error: str | None = None
    wall_time: float = 0.0
    project_id: str = ""

    def all_sessions(self) -> list[ChatSession]:
        out = [self.transform_session] if self.transform_session is not None else []
        for a in self.attempts:
            out.extend(a.sessions)
        return out

    @property
    def generation_calls(self) -> int:
        return sum(a.generation_calls for a in self.attempts)

    @property
    def total_usage(self) -> TokenUsage:
        total = TokenUsage()
        for s in self.all_sessions():
            total = total + s.usage
        return total

    @property
    def total_cost(self) -> float:
        return ledger(self)["cost"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "project_id": self.project_id,
            "strategy": self.strategy.value,
            "budget": self.budget.to_dict(),
            "model_id": self.model_id,
            "result": self.result.value,
            "error": self.error,
            "flawed_spec": None if self.flawed_spec is None else self.flawed_spec.to_dict(),
            "transform_transcript": None if self.transform_session is None else self.transform_session.to_dict(),
            "attempts": [a.to_dict() for a in self.attempts],
            "final_patch": None if self.final_round is None else self.final_round.to_dict(),
            "ledger": ledger(self),
        }


def ledger(session: RepairSession) -> dict[str, Any]:
    """Call counts, tokens, dollars and time, overall and per phase."""
    phases: dict[str, dict[str, Any]] = {}
    total_cost = Fraction(0)
    for name in PHASES:
        phases[name] = {"llm_calls": 0, "input_tokens": 0, "output_tokens": 0, "cost": Fraction(0)}
    for s in session.all_sessions():
        row = phases.setdefault(s.label, {"llm_calls": 0, "input_tokens": 0, "output_tokens": 0, "cost": Fraction(0)})
        row["llm_calls"] += len(s.ledger)
        row["input_tokens"] += s.usage.input_tokens
        row["output_tokens"] += s.usage.output_tokens
        if s.ledger:
            row["cost"] += cost_exact(s.usage, s.config.model_id, session.pricing)
    for row in phases.values():
        total_cost += row["cost"]
        row["cost"] = float(row["cost"])
    usage = session.total_usage
    return {
        "generation_calls": session.generation_calls,
        "tool_calls": sum(len(a.support.tool_trace) for a in session.attempts if a.support is not None),
        "llm_calls": sum(row["llm_calls"] for row in phases.values()),
        "input_tokens": usage.input_tokens,
        "output_tokens": usage.output_tokens,
        "cost": float(total_cost),
        "wall_time": session.wall_time,
        "phases": phases,
    }


# -- the loop ----------------------------------------------------------------


@dataclass
class RepairContext:
    """Everything a repair run needs besides the bug itself."""

    backend: Backend
    adapter: Adapter
    llm: LLMConfig = field(default_factory=LLMConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    store: ExampleStore | None = None
    embedder: Embedder | None = None
    templates_dir: Path | None = None
    pricing: Mapping[str, tuple[float, float]] = field(default=DEFAULT_PRICING)
    max_tool_calls: int = DEFAULT_MAX_TOOL_CALLS
    sandbox_root: Path | None = None
    clock: Callable[[], float] = time.monotonic


class _Run:
    def __init__(self, bug: BugInstance, ctx: RepairContext, strategy: ReasoningStrategy, index: SourceIndex) -> None:
        self.bug = bug
        self.ctx = ctx
        self.strategy = strategy
        self.index = index
        self.sources = [read_function_source(bug.workspace_root, l) for l in bug.target_functions]
        self.transform_prompt = build_transform_prompt(ctx.templates_dir)
        self.repair_prompt = build_repair_prompt(ctx.templates_dir)
        self.generate_prompt = generation_system_prompt(ctx.templates_dir)
        self.agent_prompt = build_agent_prompt(ctx.templates_dir, ctx.max_tool_calls)
        self.session = RepairSession(
            bug.bug_id, strategy, ctx.budget, ctx.llm.model_id, ctx.pricing, project_id=bug.project_id
        )

    def open(self, system_prompt: str, suffix: str, label: str, record: AttemptRecord | None = None) -> ChatSession:
        s = open_session(self.ctx.llm, system_prompt, self.ctx.backend, f"{self.bug.bug_id}/{suffix}", label)
        if record is not None:
            record.sessions.append(s)
        return s

    def run(self) -> RepairSession:
        rs = self.session
        rs.transform_session = self.open(self.transform_prompt.system_prompt(), "transform", "transform")
        try:
            rs.flawed_spec = transform(self.bug, self.sources, rs.transform_session, self.transform_prompt)
        except (SpecParseError, *SESSION_ABORTS) as exc:
            rs.result, rs.error = SessionResult.ABORTED, f"transform: {type(exc).__name__}: {exc}"
            return rs
        finally:
            rs.transform_session.close()

        outcomes: list[AttemptOutcome] = []
        for a in range(1, self.ctx.budget.max_attempts + 1):
            record = AttemptRecord(a, strategy_gate(self.strategy, a, outcomes))
            rs.attempts.append(record)
            try:
                self.attempt(record)
            except ATTEMPT_ABORTS as exc:
                record.outcome, record.error = AttemptOutcome.ABORTED, f"{type(exc).__name__}: {exc}"
            except SESSION_ABORTS as exc:
                record.outcome, record.error = AttemptOutcome.ABORTED, f"{type(exc).__name__}: {exc}"
                rs.result, rs.error = SessionResult.ABORTED, record.error
                return rs
            finally:
                for s in record.sessions:
                    s.close()
            outcomes.append(record.outcome)
            if record.outcome is AttemptOutcome.PLAUSIBLE:
                rs.result = SessionResult.PLAUSIBLE
                return rs
        rs.result = SessionResult.EXHAUSTED
        return rs

    def attempt(self, record: AttemptRecord) -> None:
        a = record.attempt_index
        info = self.session.flawed_spec
        assert info is not None
        support = None
        if record.reasoning:
            tools = build_registry(self.index)
            agent_session = self.open(self.agent_prompt.system_prompt(tools), f"attempt-{a}/agent", "agent", record)
            support = run_agent(
                info, self.bug, tools, self.ctx.store, agent_session, self.agent_prompt.plan, self.ctx.embedder, self.sources
            )
            record.support = support
        repair_session = self.open(self.repair_prompt.system_prompt(), f"attempt-{a}/repair", "repair", record)
        outcome = repair_spec(info, support, repair_session)
        record.repair_outcomes.append(outcome)
        rounds = self.ctx.budget.max_feedback_rounds
        for r in range(1, rounds + 1):
            gen_session = self.open(self.generate_prompt, f"attempt-{a}/round-{r}/generate", "generate", record)
            record.generation_calls += 1
            patch = generate_code(outcome.fixed_specs, self.bug, gen_session, a, r)
            report = self.validate(patch)
            round_record = RoundRecord(r, patch, patch_to_diff(self.bug, patch), report)
            record.rounds.append(round_record)
            if report.passed:
                record.outcome = AttemptOutcome.PLAUSIBLE
                self.session.final_round = round_record
                return
            if r < rounds:
                outcome = incorporate_feedback(repair_session, report, len(self.bug.target_functions))
                record.repair_outcomes.append(outcome)
        record.outcome = AttemptOutcome.FAILED

    def validate(self, patch: Patch) -> ValidationReport:
        sandbox = apply_patch(self.bug, patch, self.index, self.ctx.sandbox_root)
        try:
            return self.ctx.adapter.run(sandbox, patch)
        finally:
            discard_sandbox(sandbox)


def repair_bug(
    bug: BugInstance,
    ctx: RepairContext,
    strategy: ReasoningStrategy | str = ReasoningStrategy.MINIR,
    index: SourceIndex | None = None,
) -> RepairSession:
    """Run the whole repair loop for one bug. Never raises for model or harness failures."""
    start = ctx.clock()
    run = _Run(bug, ctx, ReasoningStrategy(strategy), index or build_index(bug.workspace_root))
    try:
        return run.run()
    finally:
        run.session.wall_time = ctx.clock() - start


def session_outcomes(sessions: Iterable[RepairSession]) -> dict[str, int]:
    counts = {r.value: 0 for r in SessionResult}
    for s in sessions:
        counts[s.result.value] += 1
    return counts
