"""Code-analysis tools over a :class:`SourceIndex`, plus the JSON tool registry.

Resolution is name-based: overloads are reported together, and a plain
identifier inside a method binds to the closest preceding local/parameter
declaration of that name, else to a field of the enclosing class chain.
Dataflow is intra-procedural and line-ordered; branches are not
distinguished, so a use in either arm attaches to the nearest preceding
definition.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Any, Callable

import jsonschema

from ..errors import ToolArgumentError, UnknownFile, UnknownTool
from .index import SourceIndex, VariableRecord


@dataclass(frozen=True)
class VariableSites:
    name: str
    scope: str
    kind: str
    file: str
    decl: int
    refs: tuple[int, ...]


@dataclass(frozen=True)
class AssignmentSite:
    file: str
    line: int
    scope: str


@dataclass(frozen=True)
class DefUseChain:
    variable: str  # declaring scope
    file: str
    definition: int | None  # None: uses reached from outside the scope
    uses: tuple[int, ...]


@dataclass(frozen=True)
class CallSite:
    file: str
    line: int
    caller: str


@dataclass(frozen=True)
class ClassLocation:
    file: str
    start_line: int
    end_line: int


@dataclass(frozen=True)
class ClassDefinition:
    name: str
    qualified: str
    file: str
    span: tuple[int, int]
    text: str
    fields: tuple[str, ...]
    methods: tuple[str, ...]


@dataclass(frozen=True)
class ConstructSite:
    kind: str
    line: int
    end_line: int
    depth: int
    method: str


@dataclass(frozen=True)
class MethodReport:
    name: str
    qualified: str
    file: str
    span: tuple[int, int]
    signature: str
    return_type: str | None
    modifiers: tuple[str, ...]
    parameters: tuple[tuple[str, str], ...]
    locals: tuple[str, ...]
    called_methods: tuple[str, ...]
    control_flow: dict[str, int]
    has_body: bool


def _scope_match(qualified: str | None, scope: str) -> bool:
    if qualified is None:
        return False
    return qualified == scope or qualified.endswith("." + scope) or qualified.startswith(scope + ".")


def _method_match(qualified: str | None, scope: str) -> bool:
    return qualified is not None and (qualified == scope or qualified.endswith("." + scope))


def _scoped(index: SourceIndex, name: str, scope: str | None):
    """Yield ``(record, assignment_sites, read_sites)`` visible in ``scope``."""
    for v in index.variables:
        if v.name != name:
            continue
        if scope is None or scope == v.file or _scope_match(v.scope, scope):
            yield v, v.assignment_sites, v.read_sites
        elif v.kind == "field":
            assign = tuple(s for s in v.assignment_sites if _method_match(s.method, scope))
            reads = tuple(s for s in v.read_sites if _method_match(s.method, scope))
            if assign or reads:
                yield v, assign, reads


def _lines(sites) -> tuple[int, ...]:
    return tuple(sorted({s.line for s in sites}))


def identify_variable(index: SourceIndex, name: str, file: str) -> list[VariableSites]:
    """Declarations of ``name`` in ``file`` with the lines that mention each."""
    index.file(file)
    out = []
    for v in index.variables:
        if v.file == file and v.name == name:
            out.append(VariableSites(v.name, v.scope, v.kind, v.file, v.decl_line, _lines(v.reference_sites)))
    return out


def find_variable_assignments(index: SourceIndex, name: str, scope: str | None = None) -> list[AssignmentSite]:
    """Lines where ``name`` receives a value (initializer, ``=``, compound, ``++``/``--``).

    Parameters count as assigned on their declaration line.
    """
    found = {
        AssignmentSite(v.file, line, v.scope)
        for v, assign, _ in _scoped(index, name, scope)
        for line in _lines(assign)
    }
    return sorted(found, key=lambda s: (s.file, s.line, s.scope))


def track_variable_dataflow(index: SourceIndex, name: str, scope: str | None = None) -> list[DefUseChain]:
    """Def-use chains, one per definition line plus an entry chain when needed.

    Within one line, a declaration initializer comes first, then the reads,
    then any other write: ``x = f(x)`` and ``x++`` read the previous value,
    while ``for (int i = 0; i < n; i++)`` reads the initializer. A read
    belongs to the last definition ordered before it; reads with no such
    definition form a chain with ``definition=None``. Every read line
    lands in exactly one chain.
    """
    chains: list[DefUseChain] = []
    for v, assign, reads in _scoped(index, name, scope):
        defs = _lines(assign)

        def order(line: int) -> float:
            return line - 0.5 if v.has_initializer and line == v.decl_line else line + 0.5

        owner: dict[int | None, list[int]] = {d: [] for d in defs}
        owner[None] = []
        for u in _lines(reads):
            before = [d for d in defs if order(d) < u]
            owner[before[-1] if before else None].append(u)
        if owner[None]:
            chains.append(DefUseChain(v.scope, v.file, None, tuple(owner[None])))
        chains.extend(DefUseChain(v.scope, v.file, d, tuple(owner[d])) for d in defs)
    return chains


def trace_method_usage(index: SourceIndex, method_name: str) -> list[CallSite]:
    out = [
        CallSite(m.file, line, m.qualified)
        for m in index.methods
        for called, line in m.calls
        if called == method_name
    ]
    return sorted(out, key=lambda c: (c.file, c.line, c.caller))


def analyze_method_details(index: SourceIndex, method_name: str, file: str) -> list[MethodReport]:
    reports = []
    for m in index.methods_named(method_name, file):
        callees: list[str] = []
        for called, _ in m.calls:
            if called not in callees:
                callees.append(called)
        reports.append(
            MethodReport(
                name=m.name,
                qualified=m.qualified,
                file=m.file,
                span=m.span,
                signature=m.signature,
                return_type=m.return_type,
                modifiers=m.modifiers,
                parameters=m.parameters,
                locals=m.locals,
                called_methods=tuple(callees),
                control_flow=m.control_summary(),
                has_body=m.has_body,
            )
        )
    return reports


def find_method_in_file(index: SourceIndex, method_name: str, file: str) -> list[ConstructSite]:
    out = [
        ConstructSite(c.kind, c.line, c.end_line, c.depth, m.qualified)
        for m in index.methods_named(method_name, file)
        for c in m.control_flow
    ]
    return sorted(out, key=lambda c: (c.line, c.depth, c.method))


def find_class_loc(index: SourceIndex, class_name: str) -> list[ClassLocation]:
    return [ClassLocation(c.file, c.span[0], c.span[1]) for c in index.classes_named(class_name)]


def identify_class(index: SourceIndex, class_name: str) -> list[ClassDefinition]:
    out = []
    for c in index.classes_named(class_name):
        text = index.file(c.file).lines(*c.span)
        out.append(ClassDefinition(c.name, c.qualified, c.file, c.span, text, c.fields, c.methods))
    return out


def get_imports(index: SourceIndex, file: str) -> list[str]:
    if file not in index.imports:
        raise UnknownFile(file)
    return list(index.imports[file])


# -- registry ----------------------------------------------------------------


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


@dataclass(frozen=True)
class Tool:
    name: str
    description: str
    schema: dict[str, Any]
    handler: Callable[..., Any]

    def usage(self) -> str:
        props = self.schema.get("properties", {})
        required = set(self.schema.get("required", []))
        args = ", ".join(f"{k}{'' if k in required else '?'}: {v.get('type', 'any')}" for k, v in props.items())
        return f"- {self.name}({args}): {self.description}"


def _schema(required: list[str], optional: list[str] = ()) -> dict[str, Any]:
    props = {k: {"type": "string"} for k in [*required, *optional]}
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


TOOL_NAMES = (
    "example_retrieval",
    "identify_variable",
    "find_variable_assignments",
    "track_variable_dataflow",
    "trace_method_usage",
    "analyze_method_details",
    "find_method_in_file",
    "find_class_loc",
    "identify_class",
    "get_imports",
)


class ToolRegistry:
    """Name → tool mapping with JSON-schema checked dispatch."""

    def __init__(self, tools: list[Tool]) -> None:
        self._tools = {t.name: t for t in tools}

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list[str]:
        return list(self._tools)

    def get(self, name: str) -> Tool:
        try:
            return self._tools[name]
        except KeyError:
            raise UnknownTool(f"unknown tool {name!r}; available: {', '.join(self._tools)}") from None

    def describe(self) -> str:
        return "\n".join(t.usage() for t in self._tools.values())

    def dispatch(self, name: str, args: dict[str, Any]) -> Any:
        """Validate ``args`` and run the tool. Returns a JSON-serializable value."""
        tool = self.get(name)
        try:
            jsonschema.validate(args, tool.schema)
        except jsonschema.ValidationError as exc:
            raise ToolArgumentError(f"{name}: {exc.message}") from None
        return to_jsonable(tool.handler(**args))

    def dispatch_json(self, name: str, args_json: str) -> str:
        try:
            args = json.loads(args_json)
        except json.JSONDecodeError as exc:
            raise ToolArgumentError(f"arguments are not valid JSON: {exc}") from None
        if not isinstance(args, dict):
            raise ToolArgumentError("arguments must be a JSON object")
        return json.dumps(self.dispatch(name, args), sort_keys=True)


def _no_examples(buggy_code: str, root_cause: str) -> dict[str, Any]:
    return {"example": None, "reason": "no example database configured"}


def build_registry(
    index: SourceIndex,
    example_retrieval: Callable[[str, str], Any] | None = None,
) -> ToolRegistry:
    """All ten tools bound to ``index``; retrieval is supplied by the caller."""
    tools = [
        Tool(
            "example_retrieval",
            "Look up a historical bug fix whose root cause resembles the given buggy code and root cause.",
            _schema(["buggy_code", "root_cause"]),
            example_retrieval or _no_examples,
        ),
        Tool(
            "identify_variable",
            "Declaration line and every referencing line of a variable within one file.",
            _schema(["name", "file"]),
            lambda name, file: identify_variable(index, name, file),
        ),
        Tool(
            "find_variable_assignments",
            "Lines where a variable is given a value (initializers, assignments, ++/--).",
            _schema(["name"], ["scope"]),
            lambda name, scope=None: find_variable_assignments(index, name, scope),
        ),
        Tool(
            "track_variable_dataflow",
            "Def-use chains of a variable: each definition with the uses it reaches (line ordered, branches merged).",
            _schema(["name"], ["scope"]),
            lambda name, scope=None: track_variable_dataflow(index, name, scope),
        ),
        Tool(
            "trace_method_usage",
            "Every call site of a method name, with file, line and calling method.",
            _schema(["method_name"]),
            lambda method_name: trace_method_usage(index, method_name),
        ),
        Tool(
            "analyze_method_details",
            "Signature, parameters, locals, callees and control-flow counts of a method.",
            _schema(["method_name", "file"]),
            lambda method_name, file: analyze_method_details(index, method_name, file),
        ),
        Tool(
            "find_method_in_file",
            "Conditionals and loops inside a method, with lines and nesting depth.",
            _schema(["method_name", "file"]),
            lambda method_name, file: find_method_in_file(index, method_name, file),
        ),
        Tool(
            "find_class_loc",
            "File and line span where a class is defined.",
            _schema(["class_name"]),
            lambda class_name: find_class_loc(index, class_name),
        ),
        Tool(
            "identify_class",
            "Full source of a class with its field and method names.",
            _schema(["class_name"]),
            lambda class_name: identify_class(index, class_name),
        ),
        Tool(
            "get_imports",
            "Import declarations of a file, in order.",
            _schema(["file"]),
            lambda file: get_imports(index, file),
        ),
    ]
    return ToolRegistry(tools)


def variables_named(index: SourceIndex, name: str) -> list[VariableRecord]:
    return [v for v in index.variables if v.name == name]
