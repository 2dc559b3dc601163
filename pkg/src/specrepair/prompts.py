"""Loading of versioned plain-text prompt templates."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .errors import MalformedTemplate, MissingTemplateFile

_VERSION_RE = re.compile(r"^@version\s+\S+\s*$")


def default_templates_dir() -> Path:
    return Path(str(resources.files("specrepair") / "templates"))


def read_template(templates_dir: str | Path, name: str) -> str:
    """Body of ``templates_dir/name`` without its ``@version`` header line."""
    path = Path(templates_dir) / name
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingTemplateFile(str(path)) from None
    lines = raw.splitlines()
    if not lines or not _VERSION_RE.match(lines[0]):
        raise MalformedTemplate(f"{path}: first line must be an '@version <id>' header")
    body = "\n".join(lines[1:]).strip()
    if not body:
        raise MalformedTemplate(f"{path}: template body is empty")
    return body


def numbered_items(text: str) -> list[str]:
    """Items of a ``1. ...`` list; continuation lines join the previous item."""
    items: list[str] = []
    for line in text.splitlines():
        m = re.match(r"^\s*\d+[.)]\s+(.*)$", line)
        if m:
            items.append(m.group(1).strip())
        elif line.strip() and items:
            items[-1] += " " + line.strip()
    return items
