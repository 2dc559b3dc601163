"""Shared domain types: bugs, loci, behavior specifications, patches."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .errors import ManifestError


@dataclass(frozen=True)
class FunctionLocus:
    file: str
    function_name: str
    signature: str
    span: tuple[int, int]

    def __post_init__(self) -> None:
        start, end = self.span
        if start < 1 or start > end:
            raise ManifestError(f"invalid span {self.span} for {self.function_name}")
        object.__setattr__(self, "span", (int(start), int(end)))

    @property
    def start_line(self) -> int:
        return self.span[0]

    @property
    def end_line(self) -> int:
        return self.span[1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "file": self.file,
            "function_name": self.function_name,
            "signature": self.signature,
            "span": list(self.span),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FunctionLocus:
        try:
            return cls(
                file=data["file"],
                function_name=data["function_name"],
                signature=data.get("signature", ""),
                span=tuple(data["span"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad function locus {data!r}: {exc}") from exc


@dataclass(frozen=True)
class FailingTest:
    test_id: str
    error_message: str = ""
    expected: str | None = None
    actual: str | None = None

    def __post_init__(self) -> None:
        if not self.test_id:
            raise ManifestError("test_id must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"test_id": self.test_id, "error_message": self.error_message}
        if self.expected is not None:
            out["expected"] = self.expected
        if self.actual is not None:
            out["actual"] = self.actual
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FailingTest:
        return cls(
            test_id=data.get("test_id", ""),
            error_message=data.get("error_message", ""),
            expected=data.get("expected"),
            actual=data.get("actual"),
        )


@dataclass(frozen=True)
class BugInstance:
    """A pre-localized bug: where it lives and which tests expose it."""

    bug_id: str
    project_id: str
    workspace_root: Path
    target_functions: tuple[FunctionLocus, ...]
    failing_tests: tuple[FailingTest, ...] = ()
    reference_patch: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "workspace_root", Path(self.workspace_root))
        object.__setattr__(self, "target_functions", tuple(self.target_functions))
        object.__setattr__(self, "failing_tests", tuple(self.failing_tests))
        if not self.target_functions:
            raise ManifestError(f"{self.bug_id}: target_functions must be non-empty")

    def check_workspace(self) -> None:
        """Every locus must resolve to a file under the workspace root."""
        root = self.workspace_root.resolve()
        for locus in self.target_functions:
            path = (root / locus.file).resolve()
            if root not in path.parents or not path.is_file():
                raise ManifestError(f"{self.bug_id}: {locus.file} is not a file under {root}")

    def to_dict(self, relative_to: Path | None = None) -> dict[str, Any]:
        root = self.workspace_root
        if relative_to is not None:
            root = Path(os.path.relpath(root.resolve(), Path(relative_to).resolve()))
        out: dict[str, Any] = {
            "bug_id": self.bug_id,
            "project_id": self.project_id,
            "workspace_root": root.as_posix(),
            "target_functions": [t.to_dict() for t in self.target_functions],
            "failing_tests": [t.to_dict() for t in self.failing_tests],
        }
        if self.reference_patch is not None:
            out["reference_patch"] = self.reference_patch
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> BugInstance:
        missing = [k for k in ("bug_id", "project_id", "workspace_root", "target_functions") if k not in data]
        if missing:
            raise ManifestError(f"manifest missing fields: {', '.join(missing)}")
        root = Path(data["workspace_root"])
        if not root.is_absolute() and base_dir is not None:
            root = Path(base_dir) / root
        return cls(
            bug_id=str(data["bug_id"]),
            project_id=str(data["project_id"]),
            workspace_root=root,
            target_functions=tuple(FunctionLocus.from_dict(t) for t in data["target_functions"]),
            failing_tests=tuple(FailingTest.from_dict(t) for t in data.get("failing_tests", [])),
            reference_patch=data.get("reference_patch"),
        )


def load_manifest(path: str | Path) -> BugInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    return BugInstance.from_dict(data, base_dir=path.parent)


def load_corpus(path: str | Path) -> list[BugInstance]:
    """Load every ``*.json`` bug manifest under a directory (or a single file).

    Bugs come back sorted by bug id so batch runs are order-stable.
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"corpus manifest not found: {path}")
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    bugs = [load_manifest(f) for f in files]
    seen: set[str] = set()
    for bug in bugs:
        if bug.bug_id in seen:
            raise ManifestError(f"duplicate bug id {bug.bug_id}")
        seen.add(bug.bug_id)
    return sorted(bugs, key=lambda b: b.bug_id)


# -- behavior specifications -------------------------------------------------

SPEC_FIELDS = ("Function", "Purpose", "Signature", "Input", "Output", "Behavior")


@dataclass(frozen=True)
class BehaviorStep:
    index: int
    description: str
    bug_note: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"index": self.index, "description": self.description, "bug_note": self.bug_note}


@dataclass(frozen=True)
class BehaviorSpecification:
    function_name: str
    purpose: str
    signature: str
    input_desc: str
    output_desc: str
    behavior_steps: tuple[BehaviorStep, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "behavior_steps", tuple(self.behavior_steps))

    def missing_fields(self) -> list[str]:
        values = (
            self.function_name,
            self.purpose,
            self.signature,
            self.input_desc,
            self.output_desc,
            self.behavior_steps,
        )
        return [name for name, value in zip(SPEC_FIELDS, values) if not value]

    @property
    def is_valid(self) -> bool:
        return not self.missing_fields()

    @property
    def has_bug_notes(self) -> bool:
        return any(step.bug_note for step in self.behavior_steps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "function_name": self.function_name,
            "purpose": self.purpose,
            "signature": self.signature,
            "input_desc": self.input_desc,
            "output_desc": self.output_desc,
            "behavior_steps": [s.to_dict() for s in self.behavior_steps],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BehaviorSpecification:
        return cls(
            function_name=data["function_name"],
            purpose=data["purpose"],
            signature=data["signature"],
            input_desc=data["input_desc"],
            output_desc=data["output_desc"],
            behavior_steps=tuple(
                BehaviorStep(s["index"], s["description"], s.get("bug_note")) for s in data["behavior_steps"]
            ),
        )


@dataclass(frozen=True)
class FlawedSpecInfo:
    """Flawed specification(s) plus the failing tests that contradict them.

    Multi-function bugs carry one specification per target function, in
    target order.
    """

    specifications: tuple[BehaviorSpecification, ...]
    failing_tests: tuple[FailingTest, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "specifications", tuple(self.specifications))
        object.__setattr__(self, "failing_tests", tuple(self.failing_tests))
        if not self.specifications:
            raise ValueError("FlawedSpecInfo needs at least one specification")

    @property
    def specification(self) -> BehaviorSpecification:
        return self.specifications[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "specifications": [s.to_dict() for s in self.specifications],
            "failing_tests": [t.to_dict() for t in self.failing_tests],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FlawedSpecInfo:
        return cls(
            specifications=tuple(BehaviorSpecification.from_dict(s) for s in data["specifications"]),
            failing_tests=tuple(FailingTest.from_dict(t) for t in data.get("failing_tests", [])),
        )


@dataclass(frozen=True)
class Patch:
    """Replacement source text for each target function."""

    replacements: tuple[tuple[FunctionLocus, str], ...]
    attempt_index: int = 1
    round_index: int = 1

    def __post_init__(self) -> None:
        items = self.replacements.items() if isinstance(self.replacements, dict) else self.replacements
        object.__setattr__(self, "replacements", tuple((k, v) for k, v in items))
        for locus, text in self.replacements:
            if not text.strip():
                raise ValueError(f"empty replacement for {locus.function_name}")

    def texts(self) -> list[str]:
        return [text for _, text in self.replacements]

    def check_targets(self, bug: BugInstance) -> None:
        extra = [l for l, _ in self.replacements if l not in bug.target_functions]
        if extra:
            raise ValueError(f"patch touches non-target functions: {[l.function_name for l in extra]}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "attempt_index": self.attempt_index,
            "round_index": self.round_index,
            "replacements": [{"locus": l.to_dict(), "text": t} for l, t in self.replacements],
        }


class Partition(str, Enum):
    MF = "MF"
    SF = "SF"


@dataclass(frozen=True)
class RepairScenario:
    partition: Partition
    single_hunk: bool
    single_line: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "partition", Partition(self.partition))
        if self.single_line and not self.single_hunk:
            raise ValueError("single_line implies single_hunk")
        if self.single_hunk and self.partition is not Partition.SF:
            raise ValueError("single_hunk implies SF")

    def labels(self) -> list[str]:
        out = [self.partition.value]
        if self.single_hunk:
            out.append("SH")
        if self.single_line:
            out.append("SL")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"partition": self.partition.value, "single_hunk": self.single_hunk, "single_line": self.single_line}


def dump_json(data: Any) -> str:
    """Canonical JSON used for every persisted artifact (stable bytes)."""
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def iter_jsonl(lines: Iterable[str]) -> Iterable[dict[str, Any]]:
    for raw in lines:
        raw = raw.strip()
        if raw:
            yield json.loads(raw)
