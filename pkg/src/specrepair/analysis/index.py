"""Immutable project model backing the code-analysis tools."""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from ..errors import EmptyWorkspace, ParseError, UnknownClass, UnknownFile, UnknownMethod
from .javalite import ControlConstruct, Declaration, NameUse, ParsedFile, parse_java

logger = logging.getLogger(__name__)


class Analyzer(Protocol):
    suffixes: tuple[str, ...]

    def parse(self, text: str, path: str) -> ParsedFile: ...


class JavaSubsetAnalyzer:
    suffixes = (".java",)

    def parse(self, text: str, path: str) -> ParsedFile:
        return parse_java(text, path)


ANALYZERS: dict[str, Analyzer] = {"java-subset": JavaSubsetAnalyzer()}


def register_analyzer(name: str, analyzer: Analyzer) -> None:
    ANALYZERS[name] = analyzer


@dataclass(frozen=True)
class FileRecord:
    path: str
    line_count: int
    sha256: str
    package: str
    text: str = field(repr=False, compare=False)

    def lines(self, start: int, end: int) -> str:
        """Text of lines ``start..end`` (1-based, inclusive), newlines kept."""
        return "".join(self.text.splitlines(keepends=True)[start - 1 : end])


@dataclass(frozen=True)
class ClassRecord:
    name: str
    qualified: str
    kind: str
    file: str
    span: tuple[int, int]
    fields: tuple[str, ...]
    methods: tuple[str, ...]


@dataclass(frozen=True)
class MethodRecord:
    name: str
    qualified: str
    class_name: str
    file: str
    span: tuple[int, int]
    signature: str
    parameters: tuple[tuple[str, str], ...]
    return_type: str | None
    modifiers: tuple[str, ...]
    has_body: bool
    locals: tuple[str, ...]
    calls: tuple[tuple[str, int], ...]
    control_flow: tuple[ControlConstruct, ...]

    def control_summary(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.control_flow:
            counts[c.kind] = counts.get(c.kind, 0) + 1
        return counts


@dataclass(frozen=True, order=True)
class Site:
    line: int
    method: str | None = None


@dataclass(frozen=True)
class VariableRecord:
    name: str
    kind: str  # field | param | local
    scope: str  # qualified class (fields) or method
    file: str
    decl_line: int
    has_initializer: bool
    assignment_sites: tuple[Site, ...]
    reference_sites: tuple[Site, ...]
    read_sites: tuple[Site, ...] = ()


@dataclass(frozen=True)
class SourceIndex:
    root: Path
    files: tuple[FileRecord, ...]
    classes: tuple[ClassRecord, ...]
    methods: tuple[MethodRecord, ...]
    variables: tuple[VariableRecord, ...]
    imports: dict[str, tuple[str, ...]]
    errors: tuple[ParseError, ...] = field(default=(), compare=False)

    # -- lookups --
    def has_file(self, path: str) -> bool:
        return any(f.path == path for f in self.files)

    def file(self, path: str) -> FileRecord:
        for f in self.files:
            if f.path == path:
                return f
        raise UnknownFile(path)

    def function_spans(self, path: str) -> list[tuple[str, int, int]]:
        return [(m.qualified, m.span[0], m.span[1]) for m in self.methods if m.file == path]

    def methods_named(self, name: str, file: str | None = None) -> list[MethodRecord]:
        if file is not None:
            self.file(file)
        found = [m for m in self.methods if m.name == name and (file is None or m.file == file)]
        if not found:
            raise UnknownMethod(name if file is None else f"{name} in {file}")
        return found

    def classes_named(self, name: str) -> list[ClassRecord]:
        found = [c for c in self.classes if c.name == name or c.qualified == name]
        if not found:
            raise UnknownClass(name)
        return found

    def method_at(self, file: str, name: str, span: tuple[int, int]) -> MethodRecord | None:
        for m in self.methods:
            if m.file == file and m.name == name and m.span == tuple(span):
                return m
        return None

    def summary(self) -> dict[str, int]:
        return {
            "files": len(self.files),
            "classes": len(self.classes),
            "methods": len(self.methods),
            "variables": len(self.variables),
            "errors": len(self.errors),
        }


# -- building ----------------------------------------------------------------


class _VarBuilder:
    def __init__(self, decl: Declaration, scope: str, file: str, method: str | None) -> None:
        self.decl = decl
        self.scope = scope
        self.file = file
        self.assign: set[Site] = set()
        self.refs: set[Site] = set()
        self.reads: set[Site] = set()
        if decl.has_init:
            self.assign.add(Site(decl.line, method))

    def record(self) -> VariableRecord:
        return VariableRecord(
            name=self.decl.name,
            kind=self.decl.kind,
            scope=self.scope,
            file=self.file,
            decl_line=self.decl.line,
            has_initializer=self.decl.has_init,
            assignment_sites=tuple(sorted(self.assign, key=_site_key)),
            reference_sites=tuple(sorted(self.refs, key=_site_key)),
            read_sites=tuple(sorted(self.reads, key=_site_key)),
        )


def _site_key(s: Site) -> tuple[int, str]:
    return (s.line, s.method or "")


def _resolve_file(parsed: ParsedFile) -> list[VariableRecord]:
    fields: dict[str, dict[str, _VarBuilder]] = {}
    order: list[_VarBuilder] = []
    for cls in parsed.classes:
        table: dict[str, _VarBuilder] = {}
        for d in cls.fields:
            b = _VarBuilder(d, cls.path, parsed.path, None)
            table.setdefault(d.name, b)
            order.append(b)
        fields[cls.path] = table

    def field_for(class_path: str, name: str) -> _VarBuilder | None:
        parts = class_path.split(".")
        while parts:
            hit = fields.get(".".join(parts), {}).get(name)
            if hit is not None:
                return hit
            parts.pop()
        return None

    def note(b: _VarBuilder, use: NameUse, method: str | None) -> None:
        site = Site(use.line, method)
        b.refs.add(site)
        if use.reads:
            b.reads.add(site)
        if use.assigns:
            b.assign.add(site)

    for cls in parsed.classes:
        for use in cls.field_uses:
            b = field_for(cls.path, use.name)
            if b is not None:
                note(b, use, None)

    for m in parsed.methods:
        decls = sorted(m.params + m.locals, key=lambda d: d.token)
        builders = {d.token: _VarBuilder(d, m.qualified, parsed.path, m.qualified) for d in decls}
        order.extend(builders[d.token] for d in decls)
        for use in m.uses:
            target = None
            if not use.via_this:
                for d in decls:
                    if d.name == use.name and d.token <= use.token:
                        target = builders[d.token]
            if target is None:
                target = field_for(m.class_path, use.name)
            if target is not None:
                note(target, use, m.qualified)
    return [b.record() for b in order]


def _source_files(root: Path, suffixes: tuple[str, ...]) -> list[Path]:
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
        for name in sorted(filenames):
            if name.endswith(suffixes):
                out.append(Path(dirpath) / name)
    return out


def build_index(workspace_root: str | Path, language_profile: str = "java-subset") -> SourceIndex:
    """Parse every source file under ``workspace_root`` into a :class:`SourceIndex`.

    Files that fail to parse are recorded in ``errors`` and skipped.
    """
    root = Path(workspace_root)
    try:
        analyzer = ANALYZERS[language_profile]
    except KeyError:
        raise ValueError(f"unknown language profile {language_profile!r}; known: {sorted(ANALYZERS)}") from None
    paths = _source_files(root, analyzer.suffixes) if root.is_dir() else []
    if not paths:
        raise EmptyWorkspace(f"no {'/'.join(analyzer.suffixes)} sources under {root}")

    files: list[FileRecord] = []
    classes: list[ClassRecord] = []
    methods: list[MethodRecord] = []
    variables: list[VariableRecord] = []
    imports: dict[str, tuple[str, ...]] = {}
    errors: list[ParseError] = []
    for path in paths:
        rel = path.relative_to(root).as_posix()
        raw = path.read_bytes()
        text = raw.decode("utf-8", errors="replace")
        try:
            parsed = analyzer.parse(text, rel)
        except ParseError as exc:
            logger.warning("skipping %s: %s", rel, exc)
            errors.append(exc)
            continue
        files.append(
            FileRecord(
                path=rel,
                line_count=len(text.splitlines()),
                sha256=hashlib.sha256(raw).hexdigest(),
                package=parsed.package,
                text=text,
            )
        )
        imports[rel] = tuple(parsed.imports)
        for c in parsed.classes:
            classes.append(
                ClassRecord(
                    name=c.name,
                    qualified=c.path,
                    kind=c.kind,
                    file=rel,
                    span=(c.start_line, c.end_line),
                    fields=tuple(d.name for d in c.fields),
                    methods=tuple(c.method_names),
                )
            )
        for m in parsed.methods:
            methods.append(
                MethodRecord(
                    name=m.name,
                    qualified=m.qualified,
                    class_name=m.class_path,
                    file=rel,
                    span=(m.start_line, m.end_line),
                    signature=m.signature,
                    parameters=tuple((d.type_text, d.name) for d in m.params),
                    return_type=m.return_type,
                    modifiers=tuple(m.modifiers),
                    has_body=m.has_body,
                    locals=tuple(d.name for d in m.locals),
                    calls=tuple(m.calls),
                    control_flow=tuple(m.control),
                )
            )
        variables.extend(_resolve_file(parsed))

    classes.sort(key=lambda c: (c.file, c.span))
    methods.sort(key=lambda m: (m.file, m.span))
    return SourceIndex(
        root=root,
        files=tuple(files),
        classes=tuple(classes),
        methods=tuple(methods),
        variables=tuple(variables),
        imports=imports,
        errors=tuple(errors),
    )
