"""Exception hierarchy shared by every phase of the repair pipeline."""

from __future__ import annotations


class RepairError(Exception):
    """Base class for all errors raised by specrepair."""


# -- core model / diffs ------------------------------------------------------


class DiffParseError(RepairError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnmappedChange(RepairError):
    """A changed line does not fall inside any known function span."""


class ManifestError(RepairError):
    """A bug manifest is missing fields or violates its invariants."""


# -- llm gateway -------------------------------------------------------------


class BackendUnavailable(RepairError):
    pass


class ReplayExhausted(RepairError):
    pass


class ContextOverflow(RepairError):
    pass


class UnknownModel(RepairError):
    pass


class SessionClosed(RepairError):
    """A send was attempted on a session whose lifecycle has ended."""


# -- prompts / parsing -------------------------------------------------------


class MissingTemplateFile(RepairError):
    pass


class MalformedTemplate(RepairError):
    pass


class SpecParseError(RepairError):
    def __init__(self, message: str, missing: list[str] | None = None) -> None:
        self.missing = list(missing or [])
        super().__init__(message)


class CodeExtractError(RepairError):
    pass


class ArityMismatch(CodeExtractError):
    pass


# -- reasoning agent ---------------------------------------------------------


class ToolCallParseError(RepairError):
    pass


class DimensionMismatch(RepairError):
    pass


class ZeroVector(RepairError):
    pass


class StoreError(RepairError):
    """Example store file is malformed or mixes embedders/dimensions."""


# -- analysis toolkit --------------------------------------------------------


class ParseError(RepairError):
    def __init__(self, message: str, file: str | None = None, line: int | None = None) -> None:
        self.file = file
        self.line = line
        where = ":".join(str(p) for p in (file, line) if p is not None)
        super().__init__(f"{where}: {message}" if where else message)


class EmptyWorkspace(RepairError):
    pass


class UnknownFile(RepairError):
    pass


class UnknownMethod(RepairError):
    pass


class UnknownClass(RepairError):
    pass


class ToolArgumentError(RepairError):
    pass


class UnknownTool(RepairError):
    pass


# -- patch pipeline ----------------------------------------------------------


class SpliceError(RepairError):
    pass


class IOFailure(RepairError):
    pass


class AdapterTimeout(RepairError):
    pass


class ReportSchemaError(RepairError):
    pass


# -- cli / bench -------------------------------------------------------------


class ConfigError(RepairError):
    pass


class AnnotationError(RepairError):
    """Correctness annotations contradict the plausible-patch results."""
