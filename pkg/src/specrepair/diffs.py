"""Unified-diff parsing/serialization and repair-scenario classification."""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .errors import DiffParseError, UnknownFile, UnmappedChange
from .model import Partition, RepairScenario

if TYPE_CHECKING:
    from .analysis.index import SourceIndex

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$")
_NO_EOL = "\\ No newline at end of file"


@dataclass(frozen=True)
class Hunk:
    """One ``@@`` block. ``lines`` keep their one-character prefix."""

    old_file: str
    new_file: str
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[str, ...]
    section: str = ""
    header: tuple[str, ...] = field(default=(), compare=False)

    @property
    def file(self) -> str:
        return self.new_file if self.new_file != "/dev/null" else self.old_file

    @property
    def old_span(self) -> tuple[int, int]:
        return (self.old_start, self.old_len)

    @property
    def new_span(self) -> tuple[int, int]:
        return (self.new_start, self.new_len)


def _strip_prefix(path: str) -> str:
    path = path.split("\t", 1)[0].strip()
    if path.startswith(("a/", "b/")):
        return path[2:]
    return path


def parse_unified_diff(text: str) -> list[Hunk]:
    """Parse ``text`` into hunks. Raises :class:`DiffParseError` on bad input."""
    hunks: list[Hunk] = []
    lines = text.splitlines()
    old_file = new_file = None
    preamble: list[str] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- ") and i + 1 < len(lines) and lines[i + 1].startswith("+++ "):
            old_file = _strip_prefix(line[4:])
            new_file = _strip_prefix(lines[i + 1][4:])
            preamble.extend([line, lines[i + 1]])
            i += 2
            continue
        if line.startswith("@@"):
            m = _HUNK_RE.match(line)
            if not m:
                raise DiffParseError(f"malformed hunk header {line!r}", i + 1)
            if old_file is None:
                raise DiffParseError("hunk before file header", i + 1)
            o_start, o_len, n_start, n_len = (
                int(m.group(1)),
                int(m.group(2)) if m.group(2) is not None else 1,
                int(m.group(3)),
                int(m.group(4)) if m.group(4) is not None else 1,
            )
            body: list[str] = []
            seen_old = seen_new = 0
            i += 1
            while i < len(lines) and (seen_old < o_len or seen_new < n_len):
                cur = lines[i]
                tag = cur[:1]
                if tag == " " or cur == "":
                    seen_old += 1
                    seen_new += 1
                    cur = cur or " "
                elif tag == "-":
                    seen_old += 1
                elif tag == "+":
                    seen_new += 1
                elif tag == "\\":
                    pass
                else:
                    raise DiffParseError(f"unexpected line in hunk {cur!r}", i + 1)
                body.append(cur)
                i += 1
            if seen_old != o_len or seen_new != n_len:
                raise DiffParseError(
                    f"hunk line counts disagree with header (old {seen_old}/{o_len}, new {seen_new}/{n_len})", i
                )
            while i < len(lines) and lines[i].startswith("\\"):
                body.append(lines[i])
                i += 1
            hunks.append(
                Hunk(
                    old_file=old_file,
                    new_file=new_file,
                    old_start=o_start,
                    old_len=o_len,
                    new_start=n_start,
                    new_len=n_len,
                    lines=tuple(body),
                    section=m.group(5).strip(),
                    header=tuple(preamble),
                )
            )
            preamble = []
            continue
        if line.startswith(("diff ", "index ", "new file", "deleted file", "similarity", "rename ", "old mode", "new mode")):
            preamble.append(line)
            i += 1
            continue
        if not line.strip():
            i += 1
            continue
        raise DiffParseError(f"unexpected line outside hunk {line!r}", i + 1)
    return hunks


def _span_text(start: int, length: int) -> str:
    return f"{start}" if length == 1 else f"{start},{length}"


def serialize_hunks(hunks: Iterable[Hunk]) -> str:
    out: list[str] = []
    current: tuple[str, str] | None = None
    for h in hunks:
        if (h.old_file, h.new_file) != current:
            old = h.old_file if h.old_file == "/dev/null" else f"a/{h.old_file}"
            new = h.new_file if h.new_file == "/dev/null" else f"b/{h.new_file}"
            out.append(f"--- {old}")
            out.append(f"+++ {new}")
            current = (h.old_file, h.new_file)
        section = f" {h.section}" if h.section else ""
        out.append(f"@@ -{_span_text(h.old_start, h.old_len)} +{_span_text(h.new_start, h.new_len)} @@{section}")
        out.extend(h.lines)
    return "\n".join(out) + ("\n" if out else "")


def make_diff(path: str, before: str, after: str, context: int = 3) -> str:
    """Unified diff of one file, with ``a/``/``b/`` prefixes."""
    lines = difflib.unified_diff(
        before.splitlines(keepends=True),
        after.splitlines(keepends=True),
        fromfile=f"a/{path}",
        tofile=f"b/{path}",
        n=context,
    )
    out = []
    for line in lines:
        if not line.endswith("\n"):
            line = line + "\n" + _NO_EOL + "\n"
        out.append(line)
    return "".join(out)


# -- scenario classification -------------------------------------------------


def _changed_positions(h: Hunk) -> tuple[list[int], int]:
    """Old-file positions touched by a hunk and the number of changed units.

    Removed lines map to their own old line. Added lines map to the old line
    they are inserted before. A run of ``k`` removals followed by ``m``
    additions counts as ``max(k, m)`` units (paired lines are modifications).
    """
    positions: list[int] = []
    units = 0
    old_line = h.old_start if h.old_len else h.old_start + 1
    removed = added = 0

    def close_run() -> None:
        nonlocal units, removed, added
        units += max(removed, added)
        removed = added = 0

    for line in h.lines:
        tag = line[:1]
        if tag == "-":
            if added:
                close_run()
            positions.append(old_line)
            removed += 1
            old_line += 1
        elif tag == "+":
            positions.append(-old_line)
            added += 1
        elif tag == "\\":
            continue
        else:
            close_run()
            old_line += 1
    close_run()
    return positions, units


def classify_scenario(reference_patch: str, index: SourceIndex, strict: bool = False) -> RepairScenario:
    """Label a reference patch as MF/SF with single-hunk / single-line flags.

    Changed lines outside every function span count as extra context and
    force MF (``strict=True`` raises :class:`UnmappedChange` instead).
    """
    hunks = parse_unified_diff(reference_patch)
    if not hunks:
        raise DiffParseError("diff contains no hunks")
    functions: set[tuple[str, str]] = set()
    unmapped = False
    total_units = 0
    for h in hunks:
        if not index.has_file(h.old_file):
            raise UnknownFile(f"diff touches file unknown to the index: {h.old_file}")
        spans = index.function_spans(h.old_file)
        positions, units = _changed_positions(h)
        total_units += units
        for pos in positions:
            owner = None
            for name, start, end in spans:
                if pos > 0 and start <= pos <= end:
                    owner = name
                elif pos < 0 and start < -pos <= end:
                    owner = name
            if owner is None:
                if strict:
                    raise UnmappedChange(f"{h.old_file}: change at line {abs(pos)} is outside every function")
                unmapped = True
            else:
                functions.add((h.old_file, owner))
    partition = Partition.MF if unmapped or len(functions) >= 2 else Partition.SF
    single_hunk = len(hunks) == 1 and partition is Partition.SF
    single_line = single_hunk and total_units == 1
    return RepairScenario(partition, single_hunk, single_line)
