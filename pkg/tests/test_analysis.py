from __future__ import annotations

import hashlib
import json

import pytest

from specrepair.analysis import TOOL_NAMES, build_index, build_registry
from specrepair.analysis.javalite import parse_java, tokenize
from specrepair.errors import EmptyWorkspace, ParseError, ToolArgumentError, UnknownFile, UnknownTool

TRICKY = """package p;
import java.util.*;
import static java.lang.Math.max;

@SuppressWarnings("x")
public abstract class A<T extends Comparable<T>> implements Runnable {
    /* block { comment */
    private final String s = "brace { in string";
    private char c = '}';
    abstract int f(T t);
    public <U> List<U> g(List<? super U> xs, int... rest) throws Exception {
        Runnable r = () -> { int k = 1; };
        for (int i = 0; i < rest.length; i++) { h(i); }
        do { xs.clear(); } while (false);
        return new ArrayList<>();
    }
    void h(int q) {}
    enum E { X, Y; int v() { return 1; } }
    interface I { void z(); }
}
"""


def test_tricky_source_structure():
    pf = parse_java(TRICKY, "A.java")
    assert pf.package == "p"
    assert pf.imports == ["java.util.*", "static java.lang.Math.max"]
    assert [(c.path, c.kind, c.start_line, c.end_line) for c in pf.classes] == [
        ("A", "class", 5, 20),
        ("A.E", "enum", 18, 18),
        ("A.I", "interface", 19, 19),
    ]
    assert [f.name for f in pf.classes[0].fields] == ["s", "c"]
    methods = {m.qualified: m for m in pf.methods}
    assert set(methods) == {"A.f", "A.g", "A.h", "A.E.v", "A.I.z"}
    assert not methods["A.f"].has_body and not methods["A.I.z"].has_body
    g = methods["A.g"]
    assert (g.start_line, g.end_line) == (11, 16)
    assert g.calls == [("h", 13), ("clear", 14)]  # constructor calls are not method calls
    assert [(c.kind, c.line) for c in g.control] == [("for", 13), ("do", 14)]
    assert [d.name for d in g.params] == ["xs", "rest"]
    assert sorted(d.name for d in g.locals) == ["i", "k", "r"]


@pytest.mark.parametrize("bad", ["class A { void f() { }", "class A { void f() { ) } }"])
def test_unbalanced_source_raises(bad):
    with pytest.raises(ParseError, match="B.java:1"):
        parse_java(bad, "B.java")


def test_tokenizer_skips_comments_and_strings():
    toks = [t.text for t in tokenize('a /* { */ "}" // }\n b', "x")]
    assert "{" not in toks and "}" not in toks
    assert toks[0] == "a" and toks[-1] == "b"


def test_index_summary(fixture_index):
    assert fixture_index.summary() == {"files": 6, "classes": 8, "methods": 21, "variables": 44, "errors": 0}


def test_index_errors(tmp_path, fixture_index):
    with pytest.raises(EmptyWorkspace):
        build_index(tmp_path)
    with pytest.raises(UnknownFile):
        fixture_index.file("src/Nope.java")


def test_unparseable_file_is_skipped_and_recorded(workspace):
    (workspace / "src" / "Broken.java").write_text("class Broken { void f() {\n", encoding="utf-8")
    index = build_index(workspace)
    assert index.summary()["errors"] == 1
    assert index.summary()["files"] == 6
    assert not index.has_file("src/Broken.java")


def test_file_records_hash_and_lines(fixture_root, fixture_index):
    rec = fixture_index.file("src/demo/util/Counter.java")
    assert rec.lines(10, 13).splitlines()[0] == "    public void increment() {"
    raw = (fixture_root / "src/demo/util/Counter.java").read_bytes()
    assert rec.sha256 == hashlib.sha256(raw).hexdigest()


def test_method_at(fixture_index):
    assert fixture_index.method_at("src/demo/util/Counter.java", "total", (15, 21)) is not None
    assert fixture_index.method_at("src/demo/util/Counter.java", "total", (15, 20)) is None


def test_registry_lists_all_tools(fixture_index):
    registry = build_registry(fixture_index)
    assert registry.names() == list(TOOL_NAMES)
    assert len(TOOL_NAMES) == 10
    for name in TOOL_NAMES:
        assert name in registry.describe()


def test_registry_errors(fixture_index):
    registry = build_registry(fixture_index)
    with pytest.raises(UnknownTool):
        registry.dispatch("nope", {})
    with pytest.raises(ToolArgumentError):
        registry.dispatch("get_imports", {})
    with pytest.raises(ToolArgumentError):
        registry.dispatch("get_imports", {"file": "x", "extra": "y"})
    with pytest.raises(ToolArgumentError):
        registry.dispatch_json("get_imports", "not json")
    with pytest.raises(ToolArgumentError):
        registry.dispatch_json("get_imports", "[1]")
    with pytest.raises(UnknownFile):
        registry.dispatch("get_imports", {"file": "src/Nope.java"})


def test_dispatch_json_is_canonical(fixture_index):
    registry = build_registry(fixture_index)
    out = registry.dispatch_json("find_class_loc", '{"class_name": "Empty"}')
    assert out == json.dumps([{"end_line": 14, "file": "src/demo/model/Shape.java", "start_line": 13}], sort_keys=True)


def test_retrieval_without_store(fixture_index):
    registry = build_registry(fixture_index)
    assert registry.dispatch("example_retrieval", {"buggy_code": "x", "root_cause": "y"})["example"] is None


def test_field_written_through_this(fixture_index):
    registry = build_registry(fixture_index)
    sites = registry.dispatch("find_variable_assignments", {"name": "cache"})
    # the constructor parameter of the same name is a separate variable
    assert sites == [
        {"file": "src/demo/app/App.java", "line": 11, "scope": "App.App"},
        {"file": "src/demo/app/App.java", "line": 12, "scope": "App"},
    ]


def test_same_line_read_and_write(fixture_index):
    registry = build_registry(fixture_index)
    chains = registry.dispatch("track_variable_dataflow", {"name": "i", "scope": "sumTo"})
    assert [(c["definition"], c["uses"]) for c in chains] == [(25, [25, 26, 27])]
    chains = registry.dispatch("track_variable_dataflow", {"name": "pos"})
    assert [(c["definition"], c["uses"]) for c in chains] == [(None, [23]), (23, [31]), (31, [])]
