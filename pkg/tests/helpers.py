"""Shared builders for tests over the fixture tree."""

from __future__ import annotations

from pathlib import Path

from specrepair.model import BugInstance, FailingTest, FunctionLocus

TESTS = Path(__file__).resolve().parent
FIXTURE_ROOT = TESTS / "fixtures" / "javaproj"
GOLDEN_DIR = TESTS / "golden"


def counter_bug(root: Path, failing: bool = True) -> BugInstance:
    """Bug over ``Counter.total`` (lines 15-21) in a copy of the fixture tree."""
    tests = (FailingTest("demo.util.CounterTest::testTotal", "expected:<7> but was:<4>", "7", "4"),) if failing else ()
    return BugInstance(
        "fixture-1",
        "fixture",
        root,
        (FunctionLocus("src/demo/util/Counter.java", "total", "public int total(int base)", (15, 21)),),
        tests,
    )


def two_function_bug(root: Path) -> BugInstance:
    """Bug over ``Counter.total`` and ``Counter.sumTo`` in one file."""
    return BugInstance(
        "fixture-2",
        "fixture",
        root,
        (
            FunctionLocus("src/demo/util/Counter.java", "total", "public int total(int base)", (15, 21)),
            FunctionLocus("src/demo/util/Counter.java", "sumTo", "public int sumTo(int n)", (23, 31)),
        ),
        (FailingTest("demo.util.CounterTest::testSum", "boom"),),
    )


SPEC_REPLY = """Function:
total

Purpose:
Combines a base value with derived values.

Signature:
int total(int base)

Input:
base: int starting value.

Output:
int: the combined value.

Behavior:
1. Copy base into x.
2. Compute y as x plus one and z as twice x.
3. Return y plus z. (bug: should also add base)
"""

SUMTO_REPLY = SPEC_REPLY.replace("Function:\ntotal", "Function:\nsumTo").replace(
    "int total(int base)", "int sumTo(int n)"
)

TOTAL_CODE = """    public int total(int base) {
        int x = base;
        return x + 7;
    }
"""

SUMTO_CODE = """    public int sumTo(int n) {
        return n;
    }
"""


def fenced(*blocks: str) -> str:
    return "\n".join(f"```java\n{b}```" for b in blocks)
