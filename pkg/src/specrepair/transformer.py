"""Transformation phase: buggy code → flawed behavior specification.

Also home of the specification text grammar shared by the later phases:
six headed sections, numbered behavior steps, and an optional trailing
``(bug: ...)`` annotation per step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import MalformedTemplate, SpecParseError
from .llm import ChatSession, send
from .model import SPEC_FIELDS, BehaviorSpecification, BehaviorStep, BugInstance, FlawedSpecInfo, FunctionLocus
from .prompts import default_templates_dir, read_template

SPEC_HEADER_RE = re.compile(
    r"^\s*(?:#+\s*|>\s*|[-*]\s+)?\**\s*(Function|Purpose|Signature|Input|Output|Behavior)\s*\**\s*:\s*\**\s*(.*?)\s*$",
    re.IGNORECASE,
)
_STEP_RE = re.compile(r"^(?:\d+[.)]|[-*•])\s+(.*)$")
_NOTE_RE = re.compile(r"^bug\w*\b\s*[:\-\u2013\u2014]?\s*(.*)$", re.IGNORECASE | re.DOTALL)
_PART_RE = re.compile(r"^\s*\[Specification \d+ of \d+\]\s*$")
_FIELD_ATTRS = dict(zip(SPEC_FIELDS, ("function_name", "purpose", "signature", "input_desc", "output_desc")))


@dataclass(frozen=True)
class TransformPrompt:
    task_description: str
    spec_definition: str
    template_text: str

    def system_prompt(self) -> str:
        return (
            f"{self.task_description}\n\n"
            f"{self.spec_definition}\n\n"
            f"Specification template:\n{self.template_text}"
        )


def check_template_headers(template_text: str) -> None:
    """Each of the six headers must open exactly one line of the template."""
    for name in SPEC_FIELDS:
        hits = re.findall(rf"^{name}:", template_text, re.MULTILINE)
        if len(hits) != 1:
            raise MalformedTemplate(f"template must contain the header {name + ':'!r} exactly once (found {len(hits)})")


def build_transform_prompt(templates_dir: str | Path | None = None) -> TransformPrompt:
    root = Path(templates_dir) if templates_dir is not None else default_templates_dir()
    prompt = TransformPrompt(
        task_description=read_template(root, "transform/task.txt"),
        spec_definition=read_template(root, "transform/definition.txt"),
        template_text=read_template(root, "transform/template.txt"),
    )
    check_template_headers(prompt.template_text)
    return prompt


# -- specification text grammar ----------------------------------------------


def split_bug_note(text: str) -> tuple[str, str | None]:
    """Split a trailing ``(bug...: note)`` annotation off a step description."""
    t = text.rstrip()
    if not t.endswith(")"):
        return t.strip(), None
    depth = 0
    for i in range(len(t) - 1, -1, -1):
        if t[i] == ")":
            depth += 1
        elif t[i] == "(":
            depth -= 1
            if depth == 0:
                break
    else:
        return t.strip(), None
    inner = t[i + 1 : -1].strip()
    m = _NOTE_RE.match(inner)
    if m is None:
        return t.strip(), None
    note = m.group(1).strip() or inner
    return t[:i].strip(), note


def _parse_steps(lines: list[str]) -> tuple[BehaviorStep, ...]:
    enumerated = any(_STEP_RE.match(line) for line in lines)
    raw: list[str] = []
    for line in lines:
        m = _STEP_RE.match(line)
        if m:
            raw.append(m.group(1).strip())
        elif not line:
            continue
        elif enumerated and not raw:
            continue  # intro sentence before the list
        elif enumerated:
            raw[-1] = f"{raw[-1]} {line}".strip()
        else:
            raw.append(line)
    steps = []
    for i, text in enumerate(raw, start=1):
        desc, note = split_bug_note(text)
        steps.append(BehaviorStep(i, desc, note))
    return tuple(steps)


def _clean_lines(lines: list[str]) -> list[str]:
    out = [line.strip() for line in lines]
    while out and not out[0]:
        out.pop(0)
    while out and not out[-1]:
        out.pop()
    return out


def _header_lines(text: str) -> tuple[list[str], list[tuple[int, str, str]]]:
    lines = [line for line in text.splitlines() if not line.strip().startswith("```") and not _PART_RE.match(line)]
    headers = []
    for i, line in enumerate(lines):
        m = SPEC_HEADER_RE.match(line)
        if m:
            headers.append((i, m.group(1).capitalize(), m.group(2)))
    return lines, headers


def _parse_block(lines: list[str], headers: list[tuple[int, str, str]]) -> BehaviorSpecification:
    sections: dict[str, list[str]] = {}
    bounds = [h[0] for h in headers[1:]] + [len(lines)]
    for (start, name, rest), stop in zip(headers, bounds):
        sections.setdefault(name, []).extend([rest, *lines[start + 1 : stop]])
    missing = [name for name in SPEC_FIELDS if not _clean_lines(sections.get(name, []))]
    steps = _parse_steps(_clean_lines(sections.get("Behavior", [])))
    if "Behavior" not in missing and not steps:
        missing.append("Behavior")
    if missing:
        raise SpecParseError(f"specification is missing or has empty sections: {', '.join(missing)}", missing)
    values = {attr: "\n".join(_clean_lines(sections[name])) for name, attr in _FIELD_ATTRS.items()}
    return BehaviorSpecification(behavior_steps=steps, **values)


def parse_specifications(reply: str, count: int = 1) -> list[BehaviorSpecification]:
    """The last ``count`` specifications in ``reply`` (reasoning prose may precede them)."""
    lines, headers = _header_lines(reply)
    starts = [k for k, h in enumerate(headers) if h[1] == "Function"]
    if len(starts) < count:
        if not starts:
            found = {h[1] for h in headers}
            missing = [name for name in SPEC_FIELDS if name not in found] or ["Function"]
            raise SpecParseError(f"no specification found; missing headers: {', '.join(missing)}", missing)
        raise SpecParseError(f"expected {count} specifications, found {len(starts)}", [])
    chosen = starts[-count:]
    specs = []
    for n, k in enumerate(chosen):
        end = chosen[n + 1] if n + 1 < len(chosen) else len(headers)
        block_end_line = headers[end][0] if end < len(headers) else len(lines)
        block = headers[k:end]
        specs.append(_parse_block(lines[:block_end_line], block))
    return specs


def parse_specification(reply: str) -> BehaviorSpecification:
    return parse_specifications(reply, 1)[0]


def extract_labeled(text: str, labels: Sequence[str]) -> dict[str, str]:
    """Text following each ``Label:`` line, up to the next label or spec header.

    The last occurrence of a label wins. Absent labels are left out.
    """
    alternatives = "|".join(re.escape(label) for label in labels)
    label_re = re.compile(rf"^\s*(?:#+\s*|[-*]\s+)?\**\s*({alternatives})\s*\**\s*:\s*\**\s*(.*?)\s*$", re.IGNORECASE)
    canonical = {label.lower(): label for label in labels}
    found: dict[str, str] = {}
    current: str | None = None
    buffer: list[str] = []

    def flush() -> None:
        if current is not None:
            value = "\n".join(_clean_lines(buffer))
            if value:
                found[current] = value

    for line in text.splitlines():
        m = label_re.match(line)
        if m:
            flush()
            current, buffer = canonical[m.group(1).lower()], [m.group(2)]
        elif SPEC_HEADER_RE.match(line) or line.strip().startswith("```"):
            flush()
            current, buffer = None, []
        elif current is not None:
            buffer.append(line)
    flush()
    return found


def serialize_specification(spec: BehaviorSpecification) -> str:
    out = []
    for name, attr in _FIELD_ATTRS.items():
        out.append(f"{name}: {getattr(spec, attr)}")
    out.append("Behavior:")
    for step in spec.behavior_steps:
        line = f"{step.index}. {step.description}"
        if step.bug_note:
            line += f" (bug: {step.bug_note})"
        out.append(line)
    return "\n".join(out)


def serialize_specifications(specs: Sequence[BehaviorSpecification]) -> str:
    if len(specs) == 1:
        return serialize_specification(specs[0])
    parts = [f"[Specification {i} of {len(specs)}]\n{serialize_specification(s)}" for i, s in enumerate(specs, 1)]
    return "\n\n".join(parts)


# -- transformation ----------------------------------------------------------


def read_function_source(workspace_root: str | Path, locus: FunctionLocus) -> str:
    text = (Path(workspace_root) / locus.file).read_text(encoding="utf-8")
    lines = text.splitlines(keepends=True)
    if locus.end_line > len(lines):
        raise ValueError(f"{locus.file} has {len(lines)} lines; span {locus.span} is out of range")
    return "".join(lines[locus.start_line - 1 : locus.end_line])


def _function_message(locus: FunctionLocus, source: str) -> str:
    fence = source if source.endswith("\n") else source + "\n"
    return (
        f"Target function `{locus.function_name}` ({locus.file}, lines {locus.start_line}-{locus.end_line}):\n"
        f"```\n{fence}```\n"
        "Fill in the specification template for this function."
    )


def corrective_message(error: SpecParseError, template_text: str) -> str:
    missing = ", ".join(error.missing) or "unreadable structure"
    return (
        f"Your previous reply could not be read as a complete specification ({missing}). "
        f"Reply again with every section of this template filled in:\n{template_text}"
    )


def send_for_specs(session: ChatSession, message: str, count: int, template_text: str) -> tuple[list[BehaviorSpecification], str]:
    """Send ``message``; parse ``count`` specs, with one corrective re-ask."""
    reply = send(session, message)
    try:
        return parse_specifications(reply, count), reply
    except SpecParseError as exc:
        reply = send(session, corrective_message(exc, template_text))
        return parse_specifications(reply, count), reply


def transform(
    bug: BugInstance,
    sources: Sequence[str],
    session: ChatSession,
    prompt: TransformPrompt | None = None,
) -> FlawedSpecInfo:
    """One specification per target function, all within ``session``."""
    if len(sources) != len(bug.target_functions):
        raise ValueError("need one source text per target function")
    template_text = (prompt or build_transform_prompt()).template_text
    specs = []
    for locus, source in zip(bug.target_functions, sources):
        found, _ = send_for_specs(session, _function_message(locus, source), 1, template_text)
        specs.append(found[0])
    return FlawedSpecInfo(tuple(specs), bug.failing_tests)
