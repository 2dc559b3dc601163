"""Generation phase: code from fixed specifications, sandboxed splice, validation.

A validation run goes through an adapter. :class:`CommandAdapter` runs an
external harness that writes a JSON report; :class:`ScriptedAdapter` serves
canned reports keyed by a digest of the patched function texts so that whole
repair runs can be replayed without a JVM.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Protocol, Sequence

import jsonschema

from .diffs import make_diff
from .errors import ArityMismatch, CodeExtractError, IOFailure, ReportSchemaError, SpliceError, UnknownFile
from .llm import ChatSession, send
from .model import BehaviorSpecification, BugInstance, FailingTest, FunctionLocus, Patch
from .prompts import default_templates_dir, read_template
from .transformer import serialize_specifications

DEFAULT_TIMEOUT = 600.0
SANDBOX_PREFIX = "specrepair-"

REPORT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["compiled", "tests_total", "failures"],
    "properties": {
        "compiled": {"type": "boolean"},
        "compile_errors": {"type": "string"},
        "tests_total": {"type": "integer", "minimum": 0},
        "failures": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["test_id"],
                "properties": {
                    "test_id": {"type": "string", "minLength": 1},
                    "error_message": {"type": "string"},
                    "expected": {"type": ["string", "null"]},
                    "actual": {"type": ["string", "null"]},
                },
            },
        },
    },
}

_COMPILER_OUTPUT = re.compile(
    r"(\berror:|cannot find symbol|compilation failed|\.java:\d+:|incompatible types|unreachable statement)",
    re.IGNORECASE,
)
_FENCE_RE = re.compile(r"^[ \t]*```[^\n]*\n(.*?)^[ \t]*```[ \t]*$", re.DOTALL | re.MULTILINE)


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    compiled: bool
    compile_errors: str = ""
    tests_total: int = 0
    failures: tuple[FailingTest, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "failures", tuple(self.failures))
        if self.tests_total < 0:
            raise ValueError("tests_total must be >= 0")
        if not self.compiled and self.tests_total != 0:
            raise ValueError("a report that did not compile cannot have run tests")
        if self.compiled and self.compile_errors:
            raise ValueError("compile_errors must be empty when compiled")

    @property
    def passed(self) -> bool:
        return self.compiled and not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "compiled": self.compiled,
            "compile_errors": self.compile_errors,
            "tests_total": self.tests_total,
            "failures": [f.to_dict() for f in self.failures],
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ValidationReport:
        try:
            jsonschema.validate(dict(data), REPORT_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ReportSchemaError(f"report does not match schema: {exc.message}") from None
        try:
            return cls(
                compiled=data["compiled"],
                compile_errors=data.get("compile_errors", ""),
                tests_total=data["tests_total"],
                failures=tuple(FailingTest.from_dict(f) for f in data["failures"]),
            )
        except ValueError as exc:
            raise ReportSchemaError(str(exc)) from None


def failing_report(bug: BugInstance, tests_total: int | None = None) -> ValidationReport:
    """The report an unrepaired build produces: the bug's own failing tests."""
    failures = bug.failing_tests or (FailingTest("<unrepaired>", "the bug is still present"),)
    total = tests_total if tests_total is not None else max(len(failures), 1)
    return ValidationReport(True, "", total, failures)


# -- generation --------------------------------------------------------------


def generation_system_prompt(templates_dir: str | Path | None = None) -> str:
    root = Path(templates_dir) if templates_dir is not None else default_templates_dir()
    return read_template(root, "generate/task.txt")


def generation_message(specs: Sequence[BehaviorSpecification], bug: BugInstance) -> str:
    targets = "\n".join(
        f"{i}. {locus.signature or locus.function_name} ({locus.file})"
        for i, locus in enumerate(bug.target_functions, 1)
    )
    return (
        f"Target functions, in order:\n{targets}\n\n"
        f"Specifications:\n{serialize_specifications(specs)}\n\n"
        "Return one fenced code block per target function, in this order."
    )


def extract_code_blocks(reply: str) -> list[str]:
    blocks = []
    for m in _FENCE_RE.finditer(reply):
        body = m.group(1)
        if body.strip():
            blocks.append(body if body.endswith("\n") else body + "\n")
    return blocks


def _declares(block: str, name: str) -> bool:
    head = block.split("{", 1)[0]
    return re.search(rf"\b{re.escape(name)}\s*\(", head) is not None


def map_blocks(blocks: Sequence[str], targets: Sequence[FunctionLocus]) -> list[tuple[FunctionLocus, str]]:
    """Pair code blocks with target loci.

    When every block declares exactly one distinct target by name, that
    pairing wins; otherwise blocks are taken in order.
    """
    if len(blocks) != len(targets):
        raise ArityMismatch(f"reply has {len(blocks)} code blocks for {len(targets)} target functions")
    by_name: list[FunctionLocus | None] = []
    for block in blocks:
        hits = [t for t in targets if _declares(block, t.function_name.rsplit(".", 1)[-1])]
        by_name.append(hits[0] if len(hits) == 1 else None)
    if None not in by_name and len(set(by_name)) == len(targets):
        order = {t: i for i, t in enumerate(targets)}
        pairs = sorted(zip(by_name, blocks), key=lambda p: order[p[0]])
        return [(locus, block) for locus, block in pairs]  # type: ignore[misc]
    return list(zip(targets, blocks))


def generate_code(
    specs: Sequence[BehaviorSpecification],
    bug: BugInstance,
    session: ChatSession,
    attempt_index: int = 1,
    round_index: int = 1,
) -> Patch:
    """Ask for an implementation of ``specs``; one re-ask if no code block comes back."""
    reply = send(session, generation_message(specs, bug))
    blocks = extract_code_blocks(reply)
    if not blocks:
        reply = send(session, "Your reply contained no fenced code block. Reply with the code only, one fenced block per function.")
        blocks = extract_code_blocks(reply)
        if not blocks:
            raise CodeExtractError("no fenced code block in the reply after one re-ask")
    return Patch(tuple(map_blocks(blocks, bug.target_functions)), attempt_index, round_index)


# -- splicing ----------------------------------------------------------------


def splice_text(text: str, edits: Iterable[tuple[tuple[int, int], str]]) -> str:
    """Replace 1-based inclusive line spans of ``text``, bottom-up."""
    lines = text.splitlines(keepends=True)
    ordered = sorted(edits, key=lambda e: e[0][0], reverse=True)
    prev_start = len(lines) + 1
    for (start, end), replacement in ordered:
        if end > len(lines):
            raise SpliceError(f"span {start}-{end} is past the end of the file ({len(lines)} lines)")
        if end >= prev_start:
            raise SpliceError(f"overlapping replacements at lines {start}-{end}")
        if lines[end - 1].endswith("\n") and not replacement.endswith("\n"):
            replacement += "\n"
        lines[start - 1 : end] = replacement.splitlines(keepends=True)
        prev_start = start
    return "".join(lines)


def _edits_by_file(patch: Patch) -> dict[str, list[tuple[tuple[int, int], str]]]:
    grouped: dict[str, list[tuple[tuple[int, int], str]]] = {}
    for locus, text in patch.replacements:
        grouped.setdefault(locus.file, []).append((locus.span, text))
    return grouped


def _check_fresh(bug: BugInstance, patch: Patch, index) -> None:
    for locus, _ in patch.replacements:
        try:
            record = index.file(locus.file)
        except UnknownFile:
            raise SpliceError(f"{locus.file} is not in the source index") from None
        raw = (bug.workspace_root / locus.file).read_bytes()
        if hashlib.sha256(raw).hexdigest() != record.sha256:
            raise SpliceError(f"{locus.file} changed since it was indexed")
        simple = locus.function_name.rsplit(".", 1)[-1]
        if index.method_at(locus.file, simple, locus.span) is None:
            raise SpliceError(f"lines {locus.start_line}-{locus.end_line} of {locus.file} no longer hold {locus.function_name}")


def apply_patch(bug: BugInstance, patch: Patch, index, sandbox_root: str | Path | None = None) -> Path:
    """Copy the workspace into a fresh sandbox and splice the patch into it.

    The original workspace is only read. Returns the sandbox workspace path;
    release it with :func:`discard_sandbox`.
    """
    patch.check_targets(bug)
    try:
        _check_fresh(bug, patch, index)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    holder = Path(tempfile.mkdtemp(prefix=SANDBOX_PREFIX, dir=sandbox_root))
    sandbox = holder / "workspace"
    try:
        shutil.copytree(bug.workspace_root, sandbox, symlinks=True)
        for rel, edits in _edits_by_file(patch).items():
            target = sandbox / rel
            original = target.read_bytes().decode("utf-8")
            # write through a fresh inode so hard links back to the original stay untouched
            target.unlink()
            target.write_bytes(splice_text(original, edits).encode("utf-8"))
    except SpliceError:
        shutil.rmtree(holder, ignore_errors=True)
        raise
    except OSError as exc:
        shutil.rmtree(holder, ignore_errors=True)
        raise IOFailure(str(exc)) from exc
    return sandbox


def discard_sandbox(sandbox: str | Path) -> None:
    holder = Path(sandbox).parent
    if holder.name.startswith(SANDBOX_PREFIX):
        shutil.rmtree(holder, ignore_errors=True)


def patch_to_diff(bug: BugInstance, patch: Patch) -> str:
    out = []
    for rel, edits in sorted(_edits_by_file(patch).items()):
        before = (bug.workspace_root / rel).read_text(encoding="utf-8")
        out.append(make_diff(rel, before, splice_text(before, edits)))
    return "".join(out)


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class TestAdapterConfig:
    __test__ = False  # not a pytest class

    command: tuple[str, ...]
    report_path: str = "report.json"
    timeout: float = DEFAULT_TIMEOUT
    environment: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "command", tuple(self.command))
        if not self.command:
            raise ValueError("adapter command must be non-empty")
        if self.timeout <= 0:
            raise ValueError("adapter timeout must be positive")


def timeout_report(seconds: float) -> ValidationReport:
    return ValidationReport(True, "", 1, (FailingTest("<timeout>", f"validation exceeded {seconds:g} s"),))


def validate(sandbox: str | Path, adapter: TestAdapterConfig) -> ValidationReport:
    """Run the harness command inside ``sandbox`` and read its JSON report."""
    sandbox = Path(sandbox)
    report_file = sandbox / adapter.report_path
    report_file.unlink(missing_ok=True)
    try:
        proc = subprocess.run(
            list(adapter.command),
            cwd=sandbox,
            env={**os.environ, **adapter.environment},
            capture_output=True,
            text=True,
            timeout=adapter.timeout,
        )
    except subprocess.TimeoutExpired:
        return timeout_report(adapter.timeout)
    except OSError as exc:
        raise IOFailure(f"cannot run {adapter.command[0]}: {exc}") from exc
    if report_file.is_file():
        try:
            data = json.loads(report_file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ReportSchemaError(f"report is not JSON: {exc}") from None
        return ValidationReport.from_dict(data)
    output = (proc.stderr + proc.stdout).strip()
    if proc.returncode != 0 and _COMPILER_OUTPUT.search(output):
        return ValidationReport(False, output)
    raise ReportSchemaError(f"harness exited with status {proc.returncode} and wrote no report")


class Adapter(Protocol):
    def run(self, sandbox: Path, patch: Patch) -> ValidationReport: ...


class CommandAdapter:
    def __init__(self, config: TestAdapterConfig) -> None:
        self.config = config

    def run(self, sandbox: Path, patch: Patch) -> ValidationReport:
        return validate(sandbox, self.config)


def normalize_code(text: str) -> str:
    lines = [line.rstrip() for line in text.strip("\n").splitlines()]
    return "\n".join(lines)


def patch_key(texts: Iterable[str]) -> str:
    """Digest of patched function texts, insensitive to trailing whitespace."""
    joined = "\n\x00\n".join(normalize_code(t) for t in texts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


class ScriptedAdapter:
    """Canned reports keyed by :func:`patch_key`; anything else gets ``default``."""

    def __init__(self, reports: Mapping[str, ValidationReport], default: ValidationReport) -> None:
        self.reports = dict(reports)
        self.default = default
        self.calls = 0

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], bug: BugInstance) -> ScriptedAdapter:
        reports = {k: ValidationReport.from_dict(v) for k, v in data.get("reports", {}).items()}
        default = data.get("default")
        return cls(reports, ValidationReport.from_dict(default) if default else failing_report(bug))

    @classmethod
    def from_file(cls, path: str | Path, bug: BugInstance) -> ScriptedAdapter:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IOFailure(f"cannot read adapter script {path}: {exc}") from exc
        return cls.from_dict(data, bug)

    def run(self, sandbox: Path, patch: Patch) -> ValidationReport:
        self.calls += 1
        return self.reports.get(patch_key(patch.texts()), self.default)


# -- feedback ----------------------------------------------------------------


def render_failures(failures: Iterable[FailingTest]) -> str:
    out = []
    for f in failures:
        out.append(f"- {f.test_id}")
        if f.error_message:
            out.append(f"  Error: {f.error_message}")
        if f.expected is not None:
            out.append(f"  Expected: {f.expected}")
        if f.actual is not None:
            out.append(f"  Actual: {f.actual}")
    return "\n".join(out)


def extract_feedback(report: ValidationReport) -> str:
    """Failure text for the repair session; empty for a passing report."""
    if report.passed:
        return ""
    parts = ["The code generated from your repaired specification did not pass validation."]
    if not report.compiled:
        parts.append(f"Compilation error messages:\n{report.compile_errors or '(no compiler output)'}")
    if report.failures:
        ordered = sorted(report.failures, key=lambda f: f.test_id)
        parts.append(f"Failing tests ({len(ordered)} of {report.tests_total}):\n{render_failures(ordered)}")
    return "\n\n".join(parts)
