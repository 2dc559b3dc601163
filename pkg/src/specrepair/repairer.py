"""Repair phase: chain-of-thought revision of the flawed specification."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .agent import RepairSupportInfo
from .errors import MalformedTemplate
from .llm import ChatSession
from .model import SPEC_FIELDS, BehaviorSpecification, FlawedSpecInfo
from .pipeline import ValidationReport, extract_feedback, render_failures
from .prompts import default_templates_dir, numbered_items, read_template
from .transformer import SPEC_HEADER_RE, extract_labeled, send_for_specs, serialize_specifications

NO_FAILING_TESTS = "No failing tests available."
SPEC_SKELETON = "\n".join(f"{name}:" for name in SPEC_FIELDS)
OUTCOME_LABELS = ("Intended behavior", "Root cause")
# keyword each reasoning step must mention, in order
_STEP_KEYS = ("infer", "diagnos", "produce")
_EXCERPT_CHARS = 400


@dataclass(frozen=True)
class RepairPrompt:
    role_designation: str
    context_briefing: str
    reasoning_steps: tuple[str, ...]
    output_format: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "reasoning_steps", tuple(self.reasoning_steps))
        if len(self.reasoning_steps) != 3:
            raise MalformedTemplate(f"repair prompt needs exactly 3 reasoning steps, got {len(self.reasoning_steps)}")
        for i, (key, step) in enumerate(zip(_STEP_KEYS, self.reasoning_steps), 1):
            if key not in step.lower():
                raise MalformedTemplate(f"reasoning step {i} should be about {key!r}: {step!r}")

    def system_prompt(self) -> str:
        steps = "\n".join(f"{i}. {s}" for i, s in enumerate(self.reasoning_steps, 1))
        return (
            f"{self.role_designation}\n\n{self.context_briefing}\n\n"
            f"Work through these steps in order:\n{steps}\n\n{self.output_format}"
        )


def build_repair_prompt(templates_dir: str | Path | None = None) -> RepairPrompt:
    root = Path(templates_dir) if templates_dir is not None else default_templates_dir()
    return RepairPrompt(
        role_designation=read_template(root, "repair/role.txt"),
        context_briefing=read_template(root, "repair/context.txt"),
        reasoning_steps=tuple(numbered_items(read_template(root, "repair/steps.txt"))),
        output_format=read_template(root, "repair/output.txt"),
    )


@dataclass(frozen=True)
class RepairOutcome:
    fixed_specs: tuple[BehaviorSpecification, ...]
    inferred_intent: str
    root_cause: str
    raw_reply: str
    structured: bool

    @property
    def fixed_spec(self) -> BehaviorSpecification:
        return self.fixed_specs[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "fixed_specs": [s.to_dict() for s in self.fixed_specs],
            "inferred_intent": self.inferred_intent,
            "root_cause": self.root_cause,
            "structured": self.structured,
        }


def repair_message(info: FlawedSpecInfo, support: RepairSupportInfo | None = None) -> str:
    """Flawed spec, then the support block when present, then the failing tests."""
    parts = [f"Flawed specification:\n{serialize_specifications(info.specifications)}"]
    if support is not None:
        parts.append(support.render())
    parts.append(f"Failing tests:\n{render_failures(info.failing_tests) or NO_FAILING_TESTS}")
    return "\n\n".join(parts)


def _prose_before_spec(reply: str) -> str:
    lines = reply.splitlines()
    cut = next((i for i, line in enumerate(lines) if SPEC_HEADER_RE.match(line)), len(lines))
    text = "\n".join(lines[:cut]).strip()
    return text[:_EXCERPT_CHARS] if text else reply.strip()[:_EXCERPT_CHARS]


def read_outcome(reply: str, specs: list[BehaviorSpecification]) -> RepairOutcome:
    labeled = extract_labeled(reply, OUTCOME_LABELS)
    structured = all(label in labeled for label in OUTCOME_LABELS)
    excerpt = _prose_before_spec(reply)
    return RepairOutcome(
        fixed_specs=tuple(specs),
        inferred_intent=labeled.get("Intended behavior", excerpt),
        root_cause=labeled.get("Root cause", excerpt),
        raw_reply=reply,
        structured=structured,
    )


def repair_spec(info: FlawedSpecInfo, support: RepairSupportInfo | None, session: ChatSession) -> RepairOutcome:
    """First repair turn of an attempt. The session's system prompt is the repair prompt."""
    count = len(info.specifications)
    specs, reply = send_for_specs(session, repair_message(info, support), count, SPEC_SKELETON)
    return read_outcome(reply, specs)


def feedback_message(report: ValidationReport) -> str:
    return (
        f"{extract_feedback(report)}\n\n"
        "Revisit the specification with the same three steps and end with the complete repaired specification."
    )


def incorporate_feedback(session: ChatSession, report: ValidationReport, parts: int = 1) -> RepairOutcome:
    """Continue the attempt's repair conversation with validation feedback."""
    if report.passed:
        raise ValueError("a passing report has no feedback to send")
    specs, reply = send_for_specs(session, feedback_message(report), parts, SPEC_SKELETON)
    return read_outcome(reply, specs)

