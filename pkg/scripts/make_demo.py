"""Author the bundled demo corpus and, with --goldens, the golden session files.

Everything under src/specrepair/demo is generated by this script:
three small Java projects with a seeded bug each, one manifest per bug,
scripted-adapter reports, replay scripts for every reasoning strategy and
a small example database. Spans and reference patches are computed from
the sources, never typed by hand.

    python3 scripts/make_demo.py            # rewrite the demo corpus
    python3 scripts/make_demo.py --goldens  # also rewrite tests/golden
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from specrepair.agent import HashingEmbedder, build_store, query_text, save_store  # noqa: E402
from specrepair.analysis import build_index  # noqa: E402
from specrepair.diffs import classify_scenario, make_diff  # noqa: E402
from specrepair.model import BugInstance, FailingTest, FunctionLocus, dump_json  # noqa: E402
from specrepair.pipeline import ValidationReport, patch_key, splice_text  # noqa: E402

DEMO = ROOT / "src" / "specrepair" / "demo"
GOLDEN = ROOT / "tests" / "golden"
STRATEGIES = ("none", "minir", "maxr")

USAGE = {
    "transform": {"input_tokens": 900, "output_tokens": 260},
    "agent": {"input_tokens": 1200, "output_tokens": 90},
    "repair": {"input_tokens": 1500, "output_tokens": 640},
    "generate": {"input_tokens": 700, "output_tokens": 310},
}


def reply(phase: str, text: str) -> dict:
    return {"reply": text, "usage": USAGE[phase]}


def spec_text(function: str, purpose: str, signature: str, inp: str, out: str, steps: list[str]) -> str:
    body = "\n".join(f"{i}. {s}" for i, s in enumerate(steps, 1))
    return (
        f"Function:\n{function}\n\nPurpose:\n{purpose}\n\nSignature:\n{signature}\n\n"
        f"Input:\n{inp}\n\nOutput:\n{out}\n\nBehavior:\n{body}\n"
    )


def repair_reply(intent: str, cause: str, specs: list[str]) -> str:
    return (
        "Step 1. I compare the failing expectations with the specification.\n"
        "Step 2. I locate the step that produces the wrong result.\n"
        "Step 3. I rewrite that step.\n\n"
        f"Intended behavior: {intent}\nRoot cause: {cause}\n\n" + "\n".join(specs)
    )


def code_reply(methods: list[str]) -> str:
    return "\n".join(f"```java\n{m}```" for m in methods)


def tool_line(thought: str, tool: str, **args: str) -> str:
    return f"{thought}\n" + json.dumps({"tool": tool, "args": args})


def final_answer(intent: str, cause: str, suggestion: str) -> str:
    return f"Intended behavior: {intent}\nRoot cause: {cause}\nRepair suggestion: {suggestion}"


# -- bug 1: inclusive range count (single line) ------------------------------

RANGE_FILE = "src/demo/RangeCounter.java"
RANGE_SRC = """package demo;

public class RangeCounter {
    private int hits;

    public RangeCounter() {
        this.hits = 0;
    }

    // Counts how many values fall inside [low, high], both ends included.
    public int countInRange(int[] values, int low, int high) {
        int count = 0;
        for (int v : values) {
            if (v > low && v <= high) { // bug: the lower bound is excluded
                count++;
            }
        }
        hits += count;
        return count;
    }

    public int totalHits() {
        return hits;
    }
}
"""
RANGE_FIX = """    public int countInRange(int[] values, int low, int high) {
        int count = 0;
        for (int v : values) {
            if (v >= low && v <= high) {
                count++;
            }
        }
        hits += count;
        return count;
    }
"""
RANGE_TEST = """package demo;

import static org.junit.Assert.assertEquals;

import org.junit.Test;

public class RangeCounterTest {
    @Test
    public void testLowerBoundInclusive() {
        RangeCounter c = new RangeCounter();
        assertEquals(3, c.countInRange(new int[] {1, 2, 3, 4}, 1, 3));
    }
}
"""
RANGE_FAILING = [FailingTest("demo.RangeCounterTest::testLowerBoundInclusive", "expected:<3> but was:<2>", "3", "2")]

RANGE_SPEC_FLAWED = spec_text(
    "countInRange",
    "Counts the values of an array that lie in a range and adds the count to the running hit total.",
    "int countInRange(int[] values, int low, int high)",
    "values: int[] to scan; low: int lower bound; high: int upper bound (inclusive).",
    "int: how many values were counted. Side effect: the hit total grows by that count.",
    [
        "Start a counter at zero.",
        "For each value, count it when it is greater than low and at most high. (bug: the lower bound is excluded)",
        "Add the counter to the hit total.",
        "Return the counter.",
    ],
)
RANGE_SPEC_FIXED = spec_text(
    "countInRange",
    "Counts the values of an array that lie in the closed range [low, high] and adds the count to the running hit total.",
    "int countInRange(int[] values, int low, int high)",
    "values: int[] to scan; low: int lower bound (inclusive); high: int upper bound (inclusive).",
    "int: how many values were counted. Side effect: the hit total grows by that count.",
    [
        "Start a counter at zero.",
        "For each value, count it when it is at least low and at most high.",
        "Add the counter to the hit total.",
        "Return the counter.",
    ],
)


def range_script(strategy: str) -> list:
    script = [reply("transform", RANGE_SPEC_FLAWED)]
    if strategy == "maxr":
        script += [
            reply("agent", tool_line("I want the loop and branch layout first.", "find_method_in_file",
                                     method_name="countInRange", file=RANGE_FILE)),
            reply("agent", final_answer(
                "Values equal to low are inside the range and must be counted.",
                "The range check treats the lower bound as exclusive.",
                "Describe the check as low <= value <= high.",
            )),
        ]
    script += [
        reply("repair", repair_reply(
            "A value equal to low belongs to the range.",
            "Step 2 of the specification excludes the lower bound.",
            [RANGE_SPEC_FIXED],
        )),
        reply("generate", code_reply([RANGE_FIX])),
    ]
    return script


# -- bug 2: option flattening that stops at non-options (feedback round) ------

PARSER_FILE = "src/demo/cli/PosixParser.java"
OPTIONS_SRC = """package demo.cli;

import java.util.HashSet;
import java.util.Set;

public class Options {
    private final Set<String> names = new HashSet<>();

    public Options addOption(String name) {
        names.add("-" + name);
        return this;
    }

    public boolean hasOption(String name) {
        return names.contains(name);
    }
}
"""
PARSER_SRC = """package demo.cli;

import java.util.ArrayList;
import java.util.List;

public class PosixParser {
    private final Options options;
    private boolean eatTheRest;

    public PosixParser(Options options) {
        this.options = options;
    }

    public List<String> flatten(String[] arguments, boolean stopAtNonOption) {
        List<String> tokens = new ArrayList<>();
        eatTheRest = false;
        for (int i = 0; i < arguments.length; i++) {
            String token = arguments[i];
            if (eatTheRest) {
                tokens.add(token);
            } else if ("--".equals(token)) {
                tokens.add(token);
                eatTheRest = true;
            } else if (token.startsWith("--")) {
                tokens.add(token);
            } else if (token.startsWith("-") && token.length() > 1) {
                if (options.hasOption(token.substring(0, 2))) {
                    burst(token, tokens);
                } else if (stopAtNonOption) {
                    burst(token, tokens); // bug: splits even when option unknown
                } else {
                    tokens.add(token);
                }
            } else {
                tokens.add(token);
                if (stopAtNonOption) {
                    eatTheRest = true;
                }
            }
        }
        return tokens;
    }

    private void burst(String token, List<String> tokens) {
        for (int j = 1; j < token.length(); j++) {
            tokens.add("-" + token.charAt(j));
        }
    }
}
"""
_FLATTEN_HEAD = """    public List<String> flatten(String[] arguments, boolean stopAtNonOption) {
        List<String> tokens = new ArrayList<>();
        eatTheRest = false;
        for (int i = 0; i < arguments.length; i++) {
            String token = arguments[i];
            if (eatTheRest) {
                tokens.add(token);
            } else if ("--".equals(token)) {
                tokens.add(token);
                eatTheRest = true;
            } else if (token.startsWith("--")) {
                tokens.add(token);
            } else if (token.startsWith("-") && token.length() > 1) {
                if (options.hasOption(token.substring(0, 2))) {
                    burst(token, tokens);
                } else if (stopAtNonOption) {
                    tokens.add(token);
"""
_FLATTEN_TAIL = """                } else {
                    tokens.add(token);
                }
            } else {
                tokens.add(token);
                if (stopAtNonOption) {
                    eatTheRest = true;
                }
            }
        }
        return tokens;
    }
"""
FLATTEN_ROUND1 = _FLATTEN_HEAD + _FLATTEN_TAIL
FLATTEN_FIX = _FLATTEN_HEAD + "                    eatTheRest = true;\n" + _FLATTEN_TAIL
PARSER_TEST = """package demo.cli;

import static org.junit.Assert.assertEquals;

import java.util.Arrays;
import org.junit.Test;

public class PosixParserTest {
    private final Options options = new Options().addOption("a").addOption("b");

    @Test
    public void testStopAtNonOptionKeepsUnknownToken() {
        PosixParser p = new PosixParser(options);
        assertEquals(Arrays.asList("-zx", "foo"), p.flatten(new String[] {"-zx", "foo"}, true));
    }

    @Test
    public void testStopAtNonOptionEatsRest() {
        PosixParser p = new PosixParser(options);
        assertEquals(Arrays.asList("-zx", "-ab"), p.flatten(new String[] {"-zx", "-ab"}, true));
    }
}
"""
PARSER_FAILING = [
    FailingTest(
        "demo.cli.PosixParserTest::testStopAtNonOptionKeepsUnknownToken",
        "expected:<[-zx, foo]> but was:<[-z, -x, foo]>",
        "[-zx, foo]",
        "[-z, -x, foo]",
    ),
    FailingTest(
        "demo.cli.PosixParserTest::testStopAtNonOptionEatsRest",
        "expected:<[-zx, -ab]> but was:<[-z, -x, -a, -b]>",
        "[-zx, -ab]",
        "[-z, -x, -a, -b]",
    ),
]
PARSER_ROUND1_REPORT = ValidationReport(
    True,
    "",
    2,
    (
        FailingTest(
            "demo.cli.PosixParserTest::testStopAtNonOptionEatsRest",
            "expected:<[-zx, -ab]> but was:<[-zx, -a, -b]>",
            "[-zx, -ab]",
            "[-zx, -a, -b]",
        ),
    ),
)

_FLATTEN_COMMON = dict(
    function="flatten",
    signature="List<String> flatten(String[] arguments, boolean stopAtNonOption)",
    inp="arguments: String[] command-line tokens; stopAtNonOption: boolean, stop processing options at the first token that is not a known option.",
    out="List<String>: the flattened tokens, in order.",
)
FLATTEN_SPEC_FLAWED = spec_text(
    purpose="Turns raw command-line tokens into a flat token list, splitting bundled short options such as -ab into -a -b.",
    steps=[
        "Start with an empty token list and clear the eat-the-rest flag.",
        "When the flag is set, copy the token unchanged.",
        'A "--" token is copied and sets the flag.',
        'A token starting with "--" is copied unchanged.',
        'For a token starting with "-": if its first option is known, split it into single-letter options; otherwise, when stopAtNonOption is set, split it as well (bug: splits even when option unknown); otherwise copy it.',
        "Any other token is copied, and sets the flag when stopAtNonOption is set.",
        "Return the list.",
    ],
    **_FLATTEN_COMMON,
)
FLATTEN_SPEC_ROUND1 = spec_text(
    purpose="Turns raw command-line tokens into a flat token list, splitting bundled short options whose first option is known.",
    steps=[
        "Start with an empty token list and clear the eat-the-rest flag.",
        "When the flag is set, copy the token unchanged.",
        'A "--" token is copied and sets the flag.',
        'A token starting with "--" is copied unchanged.',
        'For a token starting with "-": if its first option is known, split it into single-letter options; otherwise copy it unchanged.',
        "Any other token is copied, and sets the flag when stopAtNonOption is set.",
        "Return the list.",
    ],
    **_FLATTEN_COMMON,
)
FLATTEN_SPEC_FIXED = spec_text(
    purpose="Turns raw command-line tokens into a flat token list, splitting bundled short options whose first option is known and passing everything after the first unknown token through untouched when stopAtNonOption is set.",
    steps=[
        "Start with an empty token list and clear the eat-the-rest flag.",
        "When the flag is set, copy the token unchanged.",
        'A "--" token is copied and sets the flag.',
        'A token starting with "--" is copied unchanged.',
        'For a token starting with "-": if its first option is known, split it into single-letter options; otherwise, when stopAtNonOption is set, copy it unchanged and set the flag so every later token is copied as is; otherwise copy it.',
        "Any other token is copied, and sets the flag when stopAtNonOption is set.",
        "Return the list.",
    ],
    **_FLATTEN_COMMON,
)


def parser_script(strategy: str) -> list:
    script = [reply("transform", FLATTEN_SPEC_FLAWED)]
    if strategy == "maxr":
        script += [
            reply("agent", tool_line("Which branches does flatten have?", "analyze_method_details",
                                     method_name="flatten", file=PARSER_FILE)),
            reply("agent", tool_line("Is there a known fix for this kind of splitting?", "example_retrieval",
                                     buggy_code=PARSER_SRC, root_cause="unknown options are split into letters")),
            reply("agent", final_answer(
                "With stopAtNonOption set, an unknown option token is kept whole.",
                "The specification splits unknown option tokens into single letters.",
                "Copy an unknown option token unchanged when stopAtNonOption is set.",
            )),
        ]
    script += [
        reply("repair", repair_reply(
            "An unknown option token must be kept whole when stopAtNonOption is set.",
            "Step 5 splits unknown option tokens into letters.",
            [FLATTEN_SPEC_ROUND1],
        )),
        reply("generate", code_reply([FLATTEN_ROUND1])),
        reply("repair", repair_reply(
            "After the first unknown token, later tokens must not be processed as options.",
            "Step 5 keeps the unknown token whole but does not stop option processing.",
            [FLATTEN_SPEC_FIXED],
        )),
        reply("generate", code_reply([FLATTEN_FIX])),
    ]
    return script


# -- bug 3: two functions, fixed only with reasoning support ------------------

SUMMARY_FILE = "src/demo/stats/Summary.java"
SUMMARY_SRC = """package demo.stats;

public final class Summary {
    private Summary() {
    }

    public static double mean(double[] xs) {
        if (xs.length == 0) {
            return 0.0;
        }
        double sum = 0.0;
        for (int i = 1; i < xs.length; i++) { // bug: skips the first element
            sum += xs[i];
        }
        return sum / xs.length;
    }

    public static double variance(double[] xs) {
        if (xs.length < 2) {
            return 0.0;
        }
        double m = mean(xs);
        double acc = 0.0;
        for (double x : xs) {
            acc += (x - m) * (x - m);
        }
        return acc / xs.length;
    }
}
"""
MEAN_FIX = """    public static double mean(double[] xs) {
        if (xs.length == 0) {
            return 0.0;
        }
        double sum = 0.0;
        for (int i = 0; i < xs.length; i++) {
            sum += xs[i];
        }
        return sum / xs.length;
    }
"""
VARIANCE_BUGGY = """    public static double variance(double[] xs) {
        if (xs.length < 2) {
            return 0.0;
        }
        double m = mean(xs);
        double acc = 0.0;
        for (double x : xs) {
            acc += (x - m) * (x - m);
        }
        return acc / xs.length;
    }
"""
VARIANCE_FIX = VARIANCE_BUGGY.replace("return acc / xs.length;", "return acc / (xs.length - 1);")
SUMMARY_TEST = """package demo.stats;

import static org.junit.Assert.assertEquals;

import org.junit.Test;

public class SummaryTest {
    @Test
    public void testMeanIncludesFirst() {
        assertEquals(2.0, Summary.mean(new double[] {1, 2, 3}), 1e-9);
    }

    @Test
    public void testSampleVariance() {
        assertEquals(1.6666666666666667, Summary.variance(new double[] {1, 2, 3, 4}), 1e-9);
    }
}
"""
SUMMARY_FAILING = [
    FailingTest(
        "demo.stats.SummaryTest::testMeanIncludesFirst",
        "expected:<2.0> but was:<1.6666666666666667>",
        "2.0",
        "1.6666666666666667",
    ),
    FailingTest("demo.stats.SummaryTest::testSampleVariance", "expected:<1.6666666666666667> but was:<1.3125>", "1.6666666666666667", "1.3125"),
]
SUMMARY_PARTIAL_REPORT = ValidationReport(
    True,
    "",
    2,
    (FailingTest("demo.stats.SummaryTest::testSampleVariance", "expected:<1.6666666666666667> but was:<1.25>", "1.6666666666666667", "1.25"),),
)

MEAN_SPEC_FLAWED = spec_text(
    "mean",
    "Arithmetic mean of an array of doubles.",
    "static double mean(double[] xs)",
    "xs: double[] sample values.",
    "double: the mean, or 0.0 for an empty array.",
    [
        "Return 0.0 when the array is empty.",
        "Add up the elements from the second one onwards. (bug: skips the first element)",
        "Divide the sum by the array length and return it.",
    ],
)
VARIANCE_SPEC_FLAWED = spec_text(
    "variance",
    "Variance of an array of doubles.",
    "static double variance(double[] xs)",
    "xs: double[] sample values.",
    "double: the variance, or 0.0 for fewer than two values.",
    [
        "Return 0.0 when there are fewer than two values.",
        "Compute the mean.",
        "Add up the squared deviations from the mean.",
        "Divide that sum by the number of values and return it.",
    ],
)
MEAN_SPEC_FIXED = spec_text(
    "mean",
    "Arithmetic mean of an array of doubles.",
    "static double mean(double[] xs)",
    "xs: double[] sample values.",
    "double: the mean, or 0.0 for an empty array.",
    [
        "Return 0.0 when the array is empty.",
        "Add up every element.",
        "Divide the sum by the array length and return it.",
    ],
)
VARIANCE_SPEC_SAMPLE = spec_text(
    "variance",
    "Sample variance of an array of doubles.",
    "static double variance(double[] xs)",
    "xs: double[] sample values.",
    "double: the sample variance, or 0.0 for fewer than two values.",
    [
        "Return 0.0 when there are fewer than two values.",
        "Compute the mean.",
        "Add up the squared deviations from the mean.",
        "Divide that sum by the number of values minus one and return it.",
    ],
)
VARIANCE_QUERY_CODE = VARIANCE_BUGGY
VARIANCE_QUERY_CAUSE = "variance divides the sum of squared deviations by n instead of n - 1 for a sample"


def _summary_default_attempt() -> list:
    partial = repair_reply(
        "The mean must include every element.",
        "The mean specification starts summing at the second element.",
        [MEAN_SPEC_FIXED, VARIANCE_SPEC_FLAWED],
    )
    again = repair_reply(
        "The mean must include every element, and the variance test still fails.",
        "The variance value follows from the mean, which is now correct; the specification already describes it.",
        [MEAN_SPEC_FIXED, VARIANCE_SPEC_FLAWED],
    )
    code = code_reply([MEAN_FIX, VARIANCE_BUGGY])
    return [
        reply("repair", partial),
        reply("generate", code),
        reply("repair", again),
        reply("generate", code),
        reply("repair", again),
        reply("generate", code),
    ]


def _summary_agent() -> list:
    return [
        reply("agent", tool_line("Who calls mean?", "trace_method_usage", method_name="mean")),
        reply("agent", tool_line("Look for a past fix of a variance formula.", "example_retrieval",
                                 buggy_code=VARIANCE_QUERY_CODE, root_cause=VARIANCE_QUERY_CAUSE)),
        reply("agent", final_answer(
            "mean averages every element; variance is the sample variance, dividing by n - 1.",
            "The mean specification skips the first element, and the variance specification divides by n, "
            "which gives the population variance the tests do not expect.",
            "Sum every element in mean; divide by the number of values minus one in variance, as in the retrieved fix.",
        )),
    ]


def _summary_fixed_attempt() -> list:
    return [
        reply("repair", repair_reply(
            "mean covers every element and variance is the sample variance.",
            "mean skips the first element; variance divides by n instead of n - 1.",
            [MEAN_SPEC_FIXED, VARIANCE_SPEC_SAMPLE],
        )),
        reply("generate", code_reply([MEAN_FIX, VARIANCE_FIX])),
    ]


def summary_script(strategy: str) -> list:
    script = [reply("transform", MEAN_SPEC_FLAWED), reply("transform", VARIANCE_SPEC_FLAWED)]
    if strategy == "none":
        for _ in range(5):
            script += _summary_default_attempt()
    elif strategy == "minir":
        script += _summary_default_attempt() + _summary_agent() + _summary_fixed_attempt()
    else:
        script += _summary_agent() + _summary_fixed_attempt()
    return script


EXAMPLES = [
    {
        "buggy_code": "public static double sampleVariance(double[] xs) {\n"
        "    double m = mean(xs);\n    double acc = 0.0;\n    for (double x : xs) {\n"
        "        acc += (x - m) * (x - m);\n    }\n    return acc / xs.length;\n}\n",
        "fix_code": "public static double sampleVariance(double[] xs) {\n"
        "    double m = mean(xs);\n    double acc = 0.0;\n    for (double x : xs) {\n"
        "        acc += (x - m) * (x - m);\n    }\n    return acc / (xs.length - 1);\n}\n",
        "root_cause": "sample variance divides the sum of squared deviations by n instead of n - 1",
    },
    {
        "buggy_code": "public String[] split(String s) {\n    return s.split(\",\");\n}\n",
        "fix_code": "public String[] split(String s) {\n    return s.split(\",\", -1);\n}\n",
        "root_cause": "trailing empty fields are dropped by String.split",
    },
    {
        "buggy_code": "for (int i = 0; i <= items.size(); i++) {\n    total += items.get(i);\n}\n",
        "fix_code": "for (int i = 0; i < items.size(); i++) {\n    total += items.get(i);\n}\n",
        "root_cause": "loop bound runs one past the end of the list",
    },
]


# -- assembly ----------------------------------------------------------------

BUGS = [
    {
        "bug_id": "counter-1",
        "project_id": "counter",
        "files": {RANGE_FILE: RANGE_SRC, "test/demo/RangeCounterTest.java": RANGE_TEST},
        "fixes": [(RANGE_FILE, "countInRange", RANGE_FIX)],
        "failing": RANGE_FAILING,
        "reports": {},
        "script": range_script,
    },
    {
        "bug_id": "cli-1",
        "project_id": "cli",
        "files": {
            PARSER_FILE: PARSER_SRC,
            "src/demo/cli/Options.java": OPTIONS_SRC,
            "test/demo/cli/PosixParserTest.java": PARSER_TEST,
        },
        "fixes": [(PARSER_FILE, "flatten", FLATTEN_FIX)],
        "failing": PARSER_FAILING,
        "reports": {patch_key([FLATTEN_ROUND1]): PARSER_ROUND1_REPORT},
        "script": parser_script,
    },
    {
        "bug_id": "stats-1",
        "project_id": "stats",
        "files": {SUMMARY_FILE: SUMMARY_SRC, "test/demo/stats/SummaryTest.java": SUMMARY_TEST},
        "fixes": [(SUMMARY_FILE, "mean", MEAN_FIX), (SUMMARY_FILE, "variance", VARIANCE_FIX)],
        "failing": SUMMARY_FAILING,
        "reports": {patch_key([MEAN_FIX, VARIANCE_BUGGY]): SUMMARY_PARTIAL_REPORT},
        "script": summary_script,
    },
]


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def build_bug(spec: dict) -> BugInstance:
    project = DEMO / "projects" / spec["project_id"]
    for rel, text in spec["files"].items():
        write(project / rel, text)
    index = build_index(project)
    loci = []
    for rel, name, _ in spec["fixes"]:
        (method,) = [m for m in index.methods if m.file == rel and m.name == name]
        loci.append(FunctionLocus(rel, name, method.signature, method.span))
    edits: dict[str, list] = {}
    for locus, (_, _, fix) in zip(loci, spec["fixes"]):
        edits.setdefault(locus.file, []).append((locus.span, fix))
    reference = "".join(
        make_diff(rel, spec["files"][rel], splice_text(spec["files"][rel], file_edits)) for rel, file_edits in sorted(edits.items())
    )
    bug = BugInstance(
        spec["bug_id"], spec["project_id"], project, tuple(loci), tuple(spec["failing"]), reference
    )
    manifest = bug.to_dict(relative_to=DEMO / "corpus")
    write(DEMO / "corpus" / f"{bug.bug_id}.json", dump_json(manifest))

    passing = ValidationReport(True, "", len(spec["failing"]) + 3, ())
    reports = {patch_key([fix for _, _, fix in spec["fixes"]]): passing, **spec["reports"]}
    write(DEMO / "adapter" / f"{bug.bug_id}.json", dump_json({"reports": {k: v.to_dict() for k, v in reports.items()}}))
    for strategy in STRATEGIES:
        write(DEMO / "replay" / f"{bug.bug_id}.{strategy}.json", dump_json(spec["script"](strategy)))
    print(f"{bug.bug_id}: loci {[l.span for l in loci]}, scenario {classify_scenario(reference, index).labels()}")
    return bug


def build_examples() -> None:
    embedder = HashingEmbedder()
    write(DEMO / "examples_raw.json", dump_json(EXAMPLES))
    store = build_store(EXAMPLES, embedder)
    save_store(store, DEMO / "examples.jsonl")
    q = embedder.embed(query_text(VARIANCE_QUERY_CODE, VARIANCE_QUERY_CAUSE))
    sims = [float(q @ embedder.embed(query_text(e["buggy_code"], e["root_cause"]))) for e in EXAMPLES]
    print(f"stats-1 retrieval similarities: {[round(s, 3) for s in sims]}")
    if not sims[0] >= 0.6 or max(sims[1:]) >= 0.6:
        raise SystemExit("demo example store does not separate the variance example")


def write_goldens() -> None:
    from specrepair.bench import config_from_dict, load_run_store, make_context
    from specrepair.model import load_corpus
    from specrepair.orchestrator import repair_bug

    config_data = json.loads((DEMO / "config.json").read_text(encoding="utf-8"))
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for strategy in STRATEGIES:
        data = {**config_data, "strategy": strategy, "output_dir": "unused"}
        config = config_from_dict(data, DEMO)
        store = load_run_store(config)
        for bug in load_corpus(config.corpus):
            ctx = make_context(config, bug, store)
            ctx.clock = lambda: 0.0
            session = repair_bug(bug, ctx, config.strategy)
            write(GOLDEN / f"{bug.bug_id}.{strategy}.json", dump_json(session.to_dict()))
            attempts = [(a.attempt_index, a.outcome.value, a.rounds_used, a.reasoning) for a in session.attempts]
            print(f"golden {bug.bug_id} [{strategy}]: {session.result.value} {attempts}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--goldens", action="store_true", help="also rewrite tests/golden")
    args = parser.parse_args()
    for sub in ("projects", "corpus", "adapter", "replay"):
        shutil.rmtree(DEMO / sub, ignore_errors=True)
    for spec in BUGS:
        build_bug(spec)
    build_examples()
    config = {
        "corpus": "corpus",
        "strategy": "minir",
        "replay": "replay",
        "adapter": {"kind": "scripted", "scripts_dir": "adapter"},
        "example_store": "examples.jsonl",
    }
    write(DEMO / "config.json", dump_json(config))
    if args.goldens:
        write_goldens()


if __name__ == "__main__":
    main()
