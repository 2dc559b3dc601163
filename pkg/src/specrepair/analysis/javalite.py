"""Reference analyzer for a Java-like subset.

Covers package/import declarations, (nested) class/interface/enum bodies,
fields, methods and constructors with brace matching, local variable
declarations, assignments, call expressions and if/for/while/do/switch
constructs. It is a structural recognizer, not a compiler front end:
anything it does not understand inside a method body is treated as an
opaque expression statement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError

KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue default do double
    else enum extends final finally float for goto if implements import instanceof int interface
    long native new package private protected public return short static strictfp super switch
    synchronized this throw throws transient try void volatile while true false null
    """.split()
)
PRIMITIVES = frozenset("boolean byte char short int long float double void var".split())
MODIFIERS = frozenset(
    "public private protected static final abstract native synchronized transient volatile strictfp default".split()
)
TYPE_KEYWORDS = frozenset({"class", "interface", "enum", "record"})
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="})
INCDEC = frozenset({"++", "--"})
CONTROL_KINDS = ("if", "for", "while", "do", "switch")
# contextual words that start statements but are never a declared type
_NOT_A_TYPE = frozenset({"yield", "record"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<badcomment>/\*)
  | (?P<textblock>\"\"\".*?\"\"\")
  | (?P<str>"(?:\\.|[^"\\\n])*")
  | (?P<chr>'(?:\\.|[^'\\\n])+')
  | (?P<num>0[xXbB][0-9a-fA-F_]+[lL]?|\d[\d_]*(?:\.\d*)?(?:[eE][+-]?\d+)?[fFdDlL]?|\.\d+(?:[eE][+-]?\d+)?[fFdD]?)
  | (?P<id>[A-Za-z_$][\w$]*)
  | (?P<op>>>>=|<<=|>>=|>>>|\.\.\.|->|::|\+\+|--|&&|\|\||==|!=|<=|>=|\+=|-=|\*=|/=|%=|&=|\|=|\^=|<<|>>|[{}()\[\];,.@=<>!~?:+\-*/&|^%])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # id | kw | num | str | op
    text: str
    line: int
    start: int
    end: int


def tokenize(text: str, file: str | None = None) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", file, line)
        kind = m.lastgroup
        value = m.group()
        if kind == "badcomment":
            raise ParseError("unterminated block comment", file, line)
        if kind not in ("ws", "comment"):
            if kind == "id" and value in KEYWORDS:
                kind = "kw"
            elif kind in ("textblock", "chr"):
                kind = "str"
            tokens.append(Token(kind, value, line, m.start(), m.end()))
        line += value.count("\n")
        pos = m.end()
    return tokens


def match_brackets(tokens: list[Token], file: str | None = None) -> dict[int, int]:
    """Map every bracket token index to its partner. Raises on imbalance."""
    pairs = {"(": ")", "[": "]", "{": "}"}
    closers = {v: k for k, v in pairs.items()}
    stack: list[int] = []
    match: dict[int, int] = {}
    for i, tok in enumerate(tokens):
        if tok.kind != "op":
            continue
        if tok.text in pairs:
            stack.append(i)
        elif tok.text in closers:
            if not stack or tokens[stack[-1]].text != closers[tok.text]:
                raise ParseError(f"unbalanced {tok.text!r}", file, tok.line)
            j = stack.pop()
            match[i] = j
            match[j] = i
    if stack:
        tok = tokens[stack[-1]]
        raise ParseError(f"unclosed {tok.text!r}", file, tok.line)
    return match


# -- parse results -----------------------------------------------------------


@dataclass
class ControlConstruct:
    kind: str
    line: int
    end_line: int
    depth: int


@dataclass
class Declaration:
    """A variable declaration site (field, parameter or local)."""

    name: str
    kind: str  # field | param | local
    line: int
    token: int
    has_init: bool
    type_text: str = ""


@dataclass
class NameUse:
    name: str
    line: int
    token: int
    assigns: bool
    via_this: bool
    reads: bool = True  # False only for the target of a plain ``=``


@dataclass
class ParsedMethod:
    name: str
    class_path: str
    start_line: int
    end_line: int
    signature: str
    modifiers: list[str]
    return_type: str | None
    params: list[Declaration]
    has_body: bool
    body: tuple[int, int] | None  # token range, exclusive of braces
    locals: list[Declaration] = field(default_factory=list)
    calls: list[tuple[str, int]] = field(default_factory=list)
    control: list[ControlConstruct] = field(default_factory=list)
    uses: list[NameUse] = field(default_factory=list)

    @property
    def qualified(self) -> str:
        return f"{self.class_path}.{self.name}"


@dataclass
class ParsedClass:
    name: str
    path: str  # Outer.Inner
    kind: str
    start_line: int
    end_line: int
    fields: list[Declaration] = field(default_factory=list)
    method_names: list[str] = field(default_factory=list)
    field_uses: list[NameUse] = field(default_factory=list)
    field_calls: list[tuple[str, int]] = field(default_factory=list)


@dataclass
class ParsedFile:
    path: str
    package: str
    imports: list[str]
    classes: list[ParsedClass]
    methods: list[ParsedMethod]


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, path: str) -> None:
        self.text = text
        self.path = path
        self.toks = tokenize(text, path)
        self.match = match_brackets(self.toks, path)
        self.classes: list[ParsedClass] = []
        self.methods: list[ParsedMethod] = []

    # small helpers
    def t(self, i: int) -> str:
        return self.toks[i].text if 0 <= i < len(self.toks) else ""

    def is_name(self, i: int) -> bool:
        return 0 <= i < len(self.toks) and self.toks[i].kind == "id"

    def err(self, msg: str, i: int) -> ParseError:
        line = self.toks[min(i, len(self.toks) - 1)].line if self.toks else 1
        return ParseError(msg, self.path, line)

    def source(self, i: int, j: int) -> str:
        """Source text for tokens ``i..j`` inclusive, whitespace collapsed."""
        return " ".join(self.text[self.toks[i].start : self.toks[j].end].split())

    # -- compilation unit --
    def parse(self) -> ParsedFile:
        package = ""
        imports: list[str] = []
        i = 0
        n = len(self.toks)
        while i < n:
            tok = self.t(i)
            if tok == "package":
                j = self._until(i, ";")
                package = "".join(self.t(k) for k in range(i + 1, j))
                i = j + 1
            elif tok == "import":
                j = self._until(i, ";")
                parts = [self.t(k) for k in range(i + 1, j)]
                if parts and parts[0] == "static":
                    imports.append("static " + "".join(parts[1:]))
                else:
                    imports.append("".join(parts))
                i = j + 1
            elif tok == ";":
                i += 1
            else:
                start = i
                i, _ = self._modifiers(i)
                if self.t(i) in TYPE_KEYWORDS or (self.t(i) == "@" and self.t(i + 1) == "interface"):
                    i = self._type_decl(i, start, outer=None)
                else:
                    raise self.err(f"expected a type declaration, found {self.t(i)!r}", i)
        return ParsedFile(self.path, package, imports, self.classes, self.methods)

    def _until(self, i: int, text: str) -> int:
        while i < len(self.toks) and self.t(i) != text:
            i += 1
        if i >= len(self.toks):
            raise self.err(f"missing {text!r}", i - 1)
        return i

    def _modifiers(self, i: int) -> tuple[int, list[str]]:
        mods: list[str] = []
        while True:
            if self.t(i) == "@" and self.t(i + 1) != "interface":
                i += 2
                while self.t(i) == "." and self.is_name(i + 1):
                    i += 2
                if self.t(i) == "(":
                    i = self.match[i] + 1
            elif self.t(i) in MODIFIERS and not (self.t(i) == "default" and self.t(i + 1) in (":", "->")):
                mods.append(self.t(i))
                i += 1
            elif self.t(i) == "sealed" and self.is_name(i + 1):
                i += 1
            elif self.t(i) == "non" and self.t(i + 1) == "-" and self.t(i + 2) == "sealed":
                i += 3
            else:
                return i, mods

    def _skip_angles(self, i: int) -> int | None:
        """``i`` is at ``<``; return index after the matching ``>``."""
        depth = 0
        allowed = {",", "?", ".", "&", "[", "]", "extends", "super"}
        while i < len(self.toks):
            tok = self.t(i)
            if tok == "<":
                depth += 1
            elif tok in (">", ">>", ">>>"):
                depth -= len(tok)
                if depth <= 0:
                    return i + 1 if depth == 0 else None
            elif not (self.is_name(i) or tok in PRIMITIVES or tok in allowed or tok == "@"):
                return None
            i += 1
        return None

    def _type(self, i: int, allow_varargs: bool = False) -> int | None:
        """Parse a type starting at ``i``; return the index just past it."""
        tok = self.t(i)
        if not (tok in PRIMITIVES or (self.is_name(i) and tok not in _NOT_A_TYPE)):
            return None
        i += 1
        while True:
            if self.t(i) == "<":
                j = self._skip_angles(i)
                if j is None:
                    return None
                i = j
            if self.t(i) == "." and self.is_name(i + 1):
                i += 2
                continue
            break
        while self.t(i) == "[" and self.t(i + 1) == "]":
            i += 2
        if allow_varargs and self.t(i) == "...":
            i += 1
        return i

    # -- types --
    def _type_decl(self, i: int, start: int, outer: ParsedClass | None) -> int:
        if self.t(i) == "@":
            kind = "annotation"
            i += 2
        else:
            kind = self.t(i)
            i += 1
        if not self.is_name(i):
            raise self.err("expected type name", i)
        name = self.t(i)
        j = i + 1
        while j < len(self.toks) and self.t(j) != "{":
            if self.t(j) in ("(", "["):
                j = self.match[j]
            elif self.t(j) in (";", "}"):
                raise self.err(f"expected body for {kind} {name}", j)
            j += 1
        if j >= len(self.toks):
            raise self.err(f"expected body for {kind} {name}", j - 1)
        close = self.match[j]
        cls = ParsedClass(
            name=name,
            path=f"{outer.path}.{name}" if outer else name,
            kind=kind,
            start_line=self.toks[start].line,
            end_line=self.toks[close].line,
        )
        self.classes.append(cls)
        self._class_body(cls, j + 1, close)
        return close + 1

    def _class_body(self, cls: ParsedClass, i: int, end: int) -> None:
        if cls.kind == "enum":
            while i < end and self.t(i) != ";":
                if self.t(i) in ("(", "{"):
                    i = self.match[i]
                i += 1
        while i < end:
            tok = self.t(i)
            if tok == ";":
                i += 1
                continue
            if tok == "{" or (tok == "static" and self.t(i + 1) == "{"):
                brace = i if tok == "{" else i + 1
                i = self.match[brace] + 1
                continue
            start = i
            i, mods = self._modifiers(i)
            if (self.t(i) in TYPE_KEYWORDS and self.is_name(i + 1)) or (
                self.t(i) == "@" and self.t(i + 1) == "interface"
            ):
                i = self._type_decl(i, start, cls)
                continue
            if self.t(i) == "<":
                j = self._skip_angles(i)
                if j is None:
                    raise self.err("bad type parameters", i)
                i = j
            if self.is_name(i) and self.t(i + 1) == "(":
                i = self._method(cls, start, mods, None, i)
                continue
            j = self._type(i)
            if j is None or not self.is_name(j):
                raise self.err(f"cannot parse member starting at {self.t(i)!r}", i)
            return_type = self.source(i, j - 1)
            if self.t(j + 1) == "(":
                i = self._method(cls, start, mods, return_type, j)
            else:
                i = self._fields(cls, j, return_type, end)

    def _fields(self, cls: ParsedClass, i: int, type_text: str, end: int) -> int:
        decls, stop = self._declarators(i, end, "field", type_text)
        cls.fields.extend(decls)
        return stop + 1

    def _declarators(self, i: int, end: int, kind: str, type_text: str) -> tuple[list[Declaration], int]:
        """Parse ``name [= init] (, name [= init])* ;`` starting at a name."""
        decls: list[Declaration] = []
        while i < end:
            if not self.is_name(i):
                raise self.err("expected variable name", i)
            name_tok = i
            i += 1
            while self.t(i) == "[" and self.t(i + 1) == "]":
                i += 2
            has_init = self.t(i) == "="
            decls.append(Declaration(self.t(name_tok), kind, self.toks[name_tok].line, name_tok, has_init, type_text))
            if has_init:
                i += 1
                while i < end and self.t(i) != ";":
                    if self.t(i) in ("(", "[", "{"):
                        i = self.match[i] + 1
                        continue
                    if self.t(i) == "," and self.is_name(i + 1) and self.t(i + 2) in ("=", ",", ";", "["):
                        break
                    i += 1
            if self.t(i) == ",":
                i += 1
                continue
            if self.t(i) == ";" or i >= end:
                return decls, i
            raise self.err(f"unexpected {self.t(i)!r} in declaration", i)
        return decls, i

    def _method(self, cls: ParsedClass, start: int, mods: list[str], return_type: str | None, name_i: int) -> int:
        name = self.t(name_i)
        open_p = name_i + 1
        close_p = self.match[open_p]
        params = self._params(open_p + 1, close_p)
        i = close_p + 1
        while self.t(i) == "[" and self.t(i + 1) == "]":
            i += 2
        if self.t(i) == "throws":
            while i < len(self.toks) and self.t(i) not in ("{", ";"):
                i += 1
        if self.t(i) == "default":  # annotation element default
            while i < len(self.toks) and self.t(i) != ";":
                if self.t(i) in ("(", "{", "["):
                    i = self.match[i]
                i += 1
        if self.t(i) == "{":
            close = self.match[i]
            body: tuple[int, int] | None = (i + 1, close)
            sig_end = i - 1
            has_body = True
        elif self.t(i) == ";":
            close = i
            body = None
            sig_end = i - 1
            has_body = False
        else:
            raise self.err(f"expected method body for {name}", i)
        sig_start = start
        while self.t(sig_start) == "@" and self.t(sig_start + 1) != "interface":
            sig_start += 2
            while self.t(sig_start) == "." and self.is_name(sig_start + 1):
                sig_start += 2
            if self.t(sig_start) == "(":
                sig_start = self.match[sig_start] + 1
        method = ParsedMethod(
            name=name,
            class_path=cls.path,
            start_line=self.toks[start].line,
            end_line=self.toks[close].line,
            signature=self.source(sig_start, sig_end),
            modifiers=mods,
            return_type=return_type,
            params=params,
            has_body=has_body,
            body=body,
        )
        if body is not None:
            _BodyScanner(self, method).run()
        cls.method_names.append(name)
        self.methods.append(method)
        return close + 1

    def _params(self, i: int, end: int) -> list[Declaration]:
        params: list[Declaration] = []
        if i >= end:
            return params
        seg_start = i
        depth = 0
        k = i
        segments: list[tuple[int, int]] = []
        while k < end:
            tok = self.t(k)
            if tok == "<":
                depth += 1
            elif tok in (">", ">>", ">>>"):
                depth -= len(tok)
            elif tok in ("(", "["):
                k = self.match[k]
            elif tok == "," and depth == 0:
                segments.append((seg_start, k))
                seg_start = k + 1
            k += 1
        segments.append((seg_start, end))
        for s, e in segments:
            s, _ = self._modifiers(s)
            name_i = e - 1
            while self.t(name_i) == "]" and name_i > s:
                name_i -= 2
            if not self.is_name(name_i) or name_i == s:
                if self.t(name_i) == "this":  # receiver parameter
                    continue
                raise self.err("malformed parameter", s)
            type_text = self.source(s, name_i - 1)
            params.append(Declaration(self.t(name_i), "param", self.toks[name_i].line, name_i, True, type_text))
        return params


class _BodyScanner:
    """Statement walk over one method body plus a flat name-use scan."""

    def __init__(self, parser: _Parser, method: ParsedMethod) -> None:
        self.p = parser
        self.m = method
        self.decl_tokens: set[int] = set()

    def run(self) -> None:
        start, end = self.m.body
        self._block(start, end, 0)
        self._lambda_params(start, end)
        self._flat_scan(start, end)
        self.m.locals.sort(key=lambda d: d.token)
        self.m.control.sort(key=lambda c: (c.line, c.depth))

    # -- statements --
    def _block(self, i: int, end: int, depth: int) -> None:
        while i < end:
            i = self._stmt(i, end, depth)

    def _stmt(self, i: int, end: int, depth: int) -> int:
        p = self.p
        tok = p.t(i)
        if tok == "{":
            close = p.match[i]
            self._block(i + 1, close, depth)
            return close + 1
        if tok == ";":
            return i + 1
        if p.is_name(i) and p.t(i + 1) == ":" and tok != "default":
            return i + 2
        if tok in ("if", "while", "for", "switch", "synchronized") and p.t(i + 1) == "(":
            open_p = i + 1
            close_p = p.match[open_p]
            if tok == "for":
                self._for_header(open_p + 1, close_p)
            else:
                self._expr_extras(open_p + 1, close_p, depth)
            if tok == "synchronized":
                return self._stmt(close_p + 1, end, depth)
            node = ControlConstruct(tok, p.toks[i].line, p.toks[i].line, depth)
            self.m.control.append(node)
            if tok == "switch":
                brace = close_p + 1
                close = p.match[brace]
                self._switch_body(brace + 1, close, depth + 1)
                node.end_line = p.toks[close].line
                return close + 1
            k = self._stmt(close_p + 1, end, depth + 1)
            if tok == "if" and p.t(k) == "else":
                if p.t(k + 1) == "if":
                    k = self._stmt(k + 1, end, depth)
                else:
                    k = self._stmt(k + 1, end, depth + 1)
            node.end_line = p.toks[k - 1].line
            return k
        if tok == "do":
            node = ControlConstruct("do", p.toks[i].line, p.toks[i].line, depth)
            self.m.control.append(node)
            k = self._stmt(i + 1, end, depth + 1)
            if p.t(k) == "while" and p.t(k + 1) == "(":
                close_p = p.match[k + 1]
                self._expr_extras(k + 2, close_p, depth)
                k = close_p + 1
                if p.t(k) == ";":
                    k += 1
            node.end_line = p.toks[k - 1].line
            return k
        if tok == "try":
            k = i + 1
            if p.t(k) == "(":
                close_p = p.match[k]
                for s, e in self._split(k + 1, close_p, ";"):
                    self._maybe_decl(s, e)
                k = close_p + 1
            k = self._stmt(k, end, depth)
            while p.t(k) == "catch" and p.t(k + 1) == "(":
                close_p = p.match[k + 1]
                name_i = close_p - 1
                if p.is_name(name_i):
                    self._add_local(name_i, True, p.source(k + 2, name_i - 1) if name_i - 1 >= k + 2 else "")
                k = self._stmt(close_p + 1, end, depth)
            if p.t(k) == "finally":
                k = self._stmt(k + 1, end, depth)
            return k
        if tok in TYPE_KEYWORDS and p.is_name(i + 1):
            # local type declaration: skip it wholesale
            j = i
            while j < end and p.t(j) != "{":
                j += 1
            return p.match[j] + 1 if j < end else end
        # simple statement
        k = i
        while k < end and p.t(k) != ";":
            if p.t(k) in ("(", "["):
                k = p.match[k] + 1
                continue
            if p.t(k) == "{":
                if p.t(k - 1) == "->":
                    self._block(k + 1, p.match[k], depth)
                k = p.match[k] + 1
                continue
            k += 1
        self._maybe_decl(i, k)
        self._expr_extras(i, k, depth)
        return k + 1

    def _switch_body(self, i: int, end: int, depth: int) -> None:
        p = self.p
        while i < end:
            if p.t(i) in ("case", "default"):
                i += 1
                while i < end and p.t(i) not in (":", "->"):
                    if p.t(i) in ("(", "["):
                        i = p.match[i]
                    i += 1
                i += 1
                continue
            i = self._stmt(i, end, depth)

    def _split(self, i: int, end: int, sep: str) -> list[tuple[int, int]]:
        p = self.p
        out = []
        s = i
        while i < end:
            if p.t(i) in ("(", "[", "{"):
                i = p.match[i] + 1
                continue
            if p.t(i) == sep:
                out.append((s, i))
                s = i + 1
            i += 1
        out.append((s, end))
        return [seg for seg in out if seg[0] < seg[1]]

    def _for_header(self, i: int, end: int) -> None:
        p = self.p
        segments = self._split(i, end, ";")
        colon = [k for k in range(i, end) if p.t(k) == ":"]
        if len(segments) == 1 and colon and ";" not in {p.t(k) for k in range(i, end)}:
            s = i
            while p.t(s) == "final" or p.t(s) == "@":
                s = s + 1 if p.t(s) == "final" else s + 2
            j = p._type(s)
            if j is not None and p.is_name(j) and p.t(j + 1) == ":":
                self._add_local(j, True, p.source(s, j - 1))
            return
        if segments and segments[0][0] == i:
            self._maybe_decl(*segments[0])

    def _maybe_decl(self, s: int, e: int) -> None:
        p = self.p
        while s < e and (p.t(s) == "final" or p.t(s) == "@"):
            if p.t(s) == "@":
                s += 2
                if p.t(s) == "(":
                    s = p.match[s] + 1
            else:
                s += 1
        if p.t(s) in KEYWORDS and p.t(s) not in PRIMITIVES:
            return
        j = p._type(s)
        if j is None or j >= e or not p.is_name(j):
            return
        if not (p.t(j + 1) in ("=", ";", ",", "[") or j + 1 == e):
            return
        type_text = p.source(s, j - 1)
        decls, _ = p._declarators(j, e, "local", type_text)
        for d in decls:
            self._register(d)

    def _add_local(self, name_i: int, has_init: bool, type_text: str = "") -> None:
        p = self.p
        self._register(Declaration(p.t(name_i), "local", p.toks[name_i].line, name_i, has_init, type_text))

    def _register(self, d: Declaration) -> None:
        if d.token in self.decl_tokens:
            return
        self.decl_tokens.add(d.token)
        self.m.locals.append(d)

    def _expr_extras(self, i: int, end: int, depth: int) -> None:
        """Pattern-matching ``instanceof T name`` binds a local."""
        p = self.p
        for k in range(i, end):
            if p.t(k) == "instanceof":
                j = p._type(k + 1)
                if j is not None and p.is_name(j) and j < end:
                    self._add_local(j, True, p.source(k + 1, j - 1))

    def _lambda_params(self, i: int, end: int) -> None:
        p = self.p
        for k in range(i, end):
            if p.t(k) != "->":
                continue
            if p.is_name(k - 1):
                if not self._in_case_label(k - 1):
                    self._add_local(k - 1, True)
            elif p.t(k - 1) == ")":
                open_p = p.match[k - 1]
                if self._in_case_label(open_p):
                    continue
                for s, e in self._split(open_p + 1, k - 1, ","):
                    if p.is_name(e - 1):
                        self._add_local(e - 1, True, p.source(s, e - 2) if e - 2 >= s else "")

    def _in_case_label(self, k: int) -> bool:
        p = self.p
        k -= 1
        while k >= 0 and (p.is_name(k) or p.t(k) in (",", ".")):
            k -= 1
        return p.t(k) == "case"

    # -- flat scan --
    def _flat_scan(self, i: int, end: int) -> None:
        p = self.p
        param_tokens = {d.token for d in self.m.params}
        for k in range(i, end):
            tok = p.toks[k]
            if tok.kind != "id":
                continue
            nxt = p.t(k + 1)
            prev = p.t(k - 1)
            if nxt == "(":
                if prev not in ("::", "new"):
                    self.m.calls.append((tok.text, tok.line))
                continue
            if prev == "::" or nxt in ("::",):
                continue
            if prev == "." and p.t(k - 2) != "this":
                continue
            if k in self.decl_tokens or k in param_tokens:
                continue
            if nxt == ":" and p.t(k - 1) in (";", "{", "}"):
                continue  # label
            if prev in ("break", "continue"):
                continue
            assigns = nxt in ASSIGN_OPS or nxt in INCDEC or prev in INCDEC
            self.m.uses.append(
                NameUse(tok.text, tok.line, k, assigns, prev == "." and p.t(k - 2) == "this", reads=nxt != "=")
            )


def scan_field_initializers(parser: _Parser, cls: ParsedClass) -> None:
    """Name uses and calls inside field initializers (no enclosing method)."""
    for d in cls.fields:
        if not d.has_init:
            continue
        k = d.token + 1
        while parser.t(k) != "=":
            k += 1
        k += 1
        while k < len(parser.toks) and parser.t(k) not in (";",):
            if parser.t(k) == "," and parser.is_name(k + 1) and parser.t(k + 2) in ("=", ",", ";", "["):
                break
            tok = parser.toks[k]
            if tok.kind == "id":
                nxt, prev = parser.t(k + 1), parser.t(k - 1)
                if nxt == "(":
                    if prev != "new":
                        cls.field_calls.append((tok.text, tok.line))
                elif prev != "." and prev != "::":
                    cls.field_uses.append(NameUse(tok.text, tok.line, k, nxt in ASSIGN_OPS, False, reads=nxt != "="))
            k += 1


def parse_java(text: str, path: str) -> ParsedFile:
    """Parse one source file. Raises :class:`ParseError` on malformed input."""
    parser = _Parser(text, path)
    parsed = parser.parse()
    for cls in parsed.classes:
        scan_field_initializers(parser, cls)
    return parsed
