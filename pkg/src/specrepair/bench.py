"""Run configuration, batch runner and benchmark report."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .agent import Embedder, ExampleStore, HashingEmbedder, HTTPEmbedder, build_store, load_store, save_store
from .analysis import build_index
from .diffs import classify_scenario
from .errors import AnnotationError, ConfigError, RepairError
from .llm import HTTPBackend, LLMConfig, ReplayBackend
from .model import BugInstance, dump_json, iter_jsonl, load_corpus
from .orchestrator import BudgetConfig, ReasoningStrategy, RepairContext, RepairSession, repair_bug
from .pipeline import Adapter, CommandAdapter, ScriptedAdapter, TestAdapterConfig, failing_report

logger = logging.getLogger(__name__)

SCENARIOS = ("MF", "SF", "SH", "SL")


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class AdapterSettings:
    kind: str = "scripted"  # scripted | command
    scripts_dir: Path | None = None  # scripted: <dir>/<bug_id>.json
    command: tuple[str, ...] = ()
    report_path: str = "report.json"
    timeout: float = 600.0
    environment: Mapping[str, str] = field(default_factory=dict)

    def for_bug(self, bug: BugInstance) -> Adapter:
        if self.kind == "scripted":
            script = self.scripts_dir / f"{bug.bug_id}.json" if self.scripts_dir else None
            if script is not None and script.is_file():
                return ScriptedAdapter.from_file(script, bug)
            return ScriptedAdapter({}, failing_report(bug))
        if self.kind == "command":
            return CommandAdapter(TestAdapterConfig(self.command, self.report_path, self.timeout, dict(self.environment)))
        raise ConfigError(f"unknown adapter kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    corpus: Path
    output_dir: Path
    model: LLMConfig = field(default_factory=LLMConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    strategy: ReasoningStrategy = ReasoningStrategy.MINIR
    adapter: AdapterSettings = field(default_factory=AdapterSettings)
    example_store: Path | None = None
    no_retrieval: bool = False
    embedder: Mapping[str, Any] = field(default_factory=dict)
    replay: Path | None = None
    live_endpoint: bool = False
    parallelism: int = 1
    annotations: Path | None = None
    templates_dir: Path | None = None
    max_tool_calls: int = 12

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.strategy is not ReasoningStrategy.NONE and self.example_store is None and not self.no_retrieval:
            raise ConfigError(f"strategy {self.strategy.value} needs example_store (or no_retrieval)")
        if self.replay is not None and self.live_endpoint:
            raise ConfigError("replay mode cannot be combined with a live endpoint")


_PATH_KEYS = ("corpus", "output_dir", "example_store", "replay", "annotations", "templates_dir")


def _path(value: Any, base: Path) -> Path | None:
    if value is None:
        return None
    p = Path(value).expanduser()
    return p if p.is_absolute() else base / p


def config_from_dict(data: Mapping[str, Any], base_dir: Path = Path(".")) -> RunConfig:
    """Build a :class:`RunConfig`; relative paths resolve against ``base_dir``."""
    known = {*_PATH_KEYS, "model", "budget", "strategy", "adapter", "no_retrieval", "embedder", "parallelism", "max_tool_calls"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("corpus", "output_dir"):
        if not data.get(key):
            raise ConfigError(f"config needs {key!r}")
    try:
        model_data = dict(data.get("model", {}))
        adapter_data = dict(data.get("adapter", {}))
        adapter = AdapterSettings(
            kind=adapter_data.get("kind", "scripted"),
            scripts_dir=_path(adapter_data.get("scripts_dir"), base_dir),
            command=tuple(adapter_data.get("command", ())),
            report_path=adapter_data.get("report_path", "report.json"),
            timeout=float(adapter_data.get("timeout", 600.0)),
            environment=dict(adapter_data.get("environment", {})),
        )
        return RunConfig(
            corpus=_path(data["corpus"], base_dir),
            output_dir=_path(data["output_dir"], base_dir),
            model=LLMConfig(**model_data),
            budget=BudgetConfig(**dict(data.get("budget", {}))),
            strategy=ReasoningStrategy(data.get("strategy", "minir")),
            adapter=adapter,
            example_store=_path(data.get("example_store"), base_dir),
            no_retrieval=bool(data.get("no_retrieval", False)),
            embedder=dict(data.get("embedder", {})),
            replay=_path(data.get("replay"), base_dir),
            live_endpoint="endpoint" in model_data,
            parallelism=int(data.get("parallelism", 1)),
            annotations=_path(data.get("annotations"), base_dir),
            templates_dir=_path(data.get("templates_dir"), base_dir),
            max_tool_calls=int(data.get("max_tool_calls", 12)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data, path.parent)


def override(config: RunConfig, **changes: Any) -> RunConfig:
    """Apply CLI overrides (``None`` means "not given"), re-checking invariants."""
    changes = {k: v for k, v in changes.items() if v is not None}
    budget = config.budget
    if "max_attempts" in changes or "max_rounds" in changes:
        budget = BudgetConfig(
            changes.pop("max_attempts", budget.max_attempts), changes.pop("max_rounds", budget.max_feedback_rounds)
        )
    if "adapter_kind" in changes:
        changes["adapter"] = replace(config.adapter, kind=changes.pop("adapter_kind"))
    if "strategy" in changes:
        changes["strategy"] = ReasoningStrategy(changes["strategy"])
    try:
        return replace(config, budget=budget, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- wiring ------------------------------------------------------------------


def make_embedder(settings: Mapping[str, Any], store: ExampleStore | None = None) -> Embedder:
    kind = settings.get("kind", "hashing")
    dimension = int(settings.get("dimension", store.dimension if store else 256))
    if kind == "hashing":
        return HashingEmbedder(dimension)
    if kind == "http":
        if "model" not in settings:
            raise ConfigError("http embedder needs a model name")
        extra = {k: settings[k] for k in ("endpoint", "api_key_env") if k in settings}
        return HTTPEmbedder(settings["model"], dimension, **extra)
    raise ConfigError(f"unknown embedder kind {kind!r}")


def replay_script_for(replay: Path, bug_id: str, strategy: ReasoningStrategy) -> Path:
    """A replay file, or ``<dir>/<bug>.<strategy>.json`` falling back to ``<dir>/<bug>.json``."""
    if replay.is_file():
        return replay
    for name in (f"{bug_id}.{strategy.value}.json", f"{bug_id}.json"):
        if (replay / name).is_file():
            return replay / name
    raise ConfigError(f"no replay script for {bug_id} under {replay}")


def make_context(config: RunConfig, bug: BugInstance, store: ExampleStore | None) -> RepairContext:
    if config.replay is not None:
        backend = ReplayBackend.from_file(replay_script_for(config.replay, bug.bug_id, config.strategy))
    else:
        backend = HTTPBackend()
    return RepairContext(
        backend=backend,
        adapter=config.adapter.for_bug(bug),
        llm=config.model,
        budget=config.budget,
        store=store,
        embedder=make_embedder(config.embedder, store) if store is not None else None,
        templates_dir=config.templates_dir,
        max_tool_calls=config.max_tool_calls,
    )


def load_run_store(config: RunConfig) -> ExampleStore | None:
    if config.example_store is None or config.strategy is ReasoningStrategy.NONE:
        return None
    return load_store(config.example_store)


def find_bug(config: RunConfig, bug_id: str) -> BugInstance:
    for bug in load_corpus(config.corpus):
        if bug.bug_id == bug_id:
            return bug
    raise ConfigError(f"bug {bug_id!r} is not in the corpus {config.corpus}")


def write_session(session: RepairSession, out_dir: Path, bug: BugInstance) -> Path:
    sessions = out_dir / "sessions"
    patches = out_dir / "patches"
    sessions.mkdir(parents=True, exist_ok=True)
    path = sessions / f"{session.bug_id}.json"
    path.write_text(dump_json(session.to_dict()), encoding="utf-8")
    if session.final_round is not None:
        patches.mkdir(parents=True, exist_ok=True)
        (patches / f"{session.bug_id}.diff").write_text(session.final_round.diff, encoding="utf-8")
        (patches / f"{session.bug_id}.json").write_text(dump_json(session.final_round.patch.to_dict()), encoding="utf-8")
    return path


def run_one(config: RunConfig, bug: BugInstance, store: ExampleStore | None = None) -> RepairSession:
    session = repair_bug(bug, make_context(config, bug, store), config.strategy)
    write_session(session, config.output_dir, bug)
    return session


def run_batch(config: RunConfig, bugs: Sequence[BugInstance]) -> list[RepairSession]:
    """Repair every bug with a bounded worker pool; results come back in input order."""
    store = load_run_store(config)
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        return list(pool.map(lambda b: run_one(config, b, store), bugs))


# -- reporting ---------------------------------------------------------------


def scenario_labels(bugs: Iterable[BugInstance]) -> dict[str, list[str]]:
    """MF/SF/SH/SL labels per bug with a reference patch."""
    out = {}
    for bug in bugs:
        if not bug.reference_patch:
            continue
        try:
            out[bug.bug_id] = classify_scenario(bug.reference_patch, build_index(bug.workspace_root)).labels()
        except RepairError as exc:
            logger.warning("cannot classify %s: %s", bug.bug_id, exc)
    return out


def load_annotations(path: str | Path) -> dict[str, bool | None]:
    """``{bug_id: correct}`` from a JSON object or a list of ``{bug_id, correct}`` records."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise AnnotationError(f"cannot read annotations {path}: {exc}") from exc
    if isinstance(data, dict) and "annotations" in data:
        data = data["annotations"]
    if isinstance(data, list):
        try:
            data = {r["bug_id"]: r.get("correct") for r in data}
        except (KeyError, TypeError) as exc:
            raise AnnotationError(f"bad annotation record: {exc}") from None
    if not isinstance(data, dict):
        raise AnnotationError("annotations must be an object or a list of records")
    for bug_id, value in data.items():
        if value is not None and not isinstance(value, bool):
            raise AnnotationError(f"{bug_id}: 'correct' must be true, false or null")
    return data


def read_sessions(results_dir: str | Path) -> list[dict[str, Any]]:
    files = sorted((Path(results_dir) / "sessions").glob("*.json"))
    return [json.loads(f.read_text(encoding="utf-8")) for f in files]


def _tally() -> dict[str, Any]:
    return {"bugs": 0, "plausible": 0, "correct": 0}


def build_report(
    sessions: Sequence[Mapping[str, Any]],
    scenarios: Mapping[str, Sequence[str]] | None = None,
    annotations: Mapping[str, bool | None] | None = None,
) -> dict[str, Any]:
    """Aggregate session summaries into per-project and per-scenario counts.

    Annotations may only mark plausible bugs as correct; anything else is
    rejected with :class:`AnnotationError`.
    """
    annotations = dict(annotations or {})
    scenarios = scenarios or {}
    by_id = {s["bug_id"]: s for s in sessions}
    for bug_id, correct in annotations.items():
        if bug_id not in by_id:
            raise AnnotationError(f"annotation for unknown bug {bug_id}")
        if correct and by_id[bug_id]["result"] != "plausible":
            raise AnnotationError(f"{bug_id} is annotated correct but has no plausible patch")

    projects: dict[str, dict[str, Any]] = {}
    per_scenario = {label: _tally() for label in SCENARIOS}
    total = _tally()
    time_sum = cost_sum = 0.0
    for s in sorted(sessions, key=lambda s: s["bug_id"]):
        plausible = s["result"] == "plausible"
        correct = plausible and bool(annotations.get(s["bug_id"]))
        rows = [projects.setdefault(s.get("project_id") or "unknown", _tally()), total]
        rows += [per_scenario[label] for label in scenarios.get(s["bug_id"], ())]
        for row in rows:
            row["bugs"] += 1
            row["plausible"] += plausible
            row["correct"] += correct
        time_sum += s["ledger"]["wall_time"]
        cost_sum += s["ledger"]["cost"]
    n = len(sessions)
    return {
        "projects": [{"project": p, **projects[p]} for p in sorted(projects)],
        "total": total,
        "scenarios": per_scenario,
        "annotated": bool(annotations),
        "avg_time": time_sum / n if n else 0.0,
        "avg_cost": cost_sum / n if n else 0.0,
    }


def overlap(results: Mapping[str, Iterable[str]]) -> dict[str, Any]:
    """Shared and unique plausible fixes across tools (named result sets)."""
    sets = {name: set(ids) for name, ids in results.items()}
    unique = {}
    for name, ids in sets.items():
        others = set().union(*(v for k, v in sets.items() if k != name))
        unique[name] = sorted(ids - others)
    shared = sorted(set.intersection(*sets.values())) if sets else []
    return {
        "fixed": {name: sorted(ids) for name, ids in sorted(sets.items())},
        "unique": dict(sorted(unique.items())),
        "shared_by_all": shared,
        "union": sorted(set().union(*sets.values())) if sets else [],
    }


def plausible_ids(sessions: Iterable[Mapping[str, Any]]) -> list[str]:
    return sorted(s["bug_id"] for s in sessions if s["result"] == "plausible")


def render_report(report: Mapping[str, Any]) -> str:
    def cell(row: Mapping[str, Any]) -> str:
        return f"{row['correct']}/{row['plausible']}" if report["annotated"] else f"-/{row['plausible']}"

    lines = [f"{'project':<20} {'bugs':>5} {'correct/plausible':>18}"]
    for row in report["projects"]:
        lines.append(f"{row['project']:<20} {row['bugs']:>5} {cell(row):>18}")
    lines.append(f"{'total':<20} {report['total']['bugs']:>5} {cell(report['total']):>18}")
    lines.append("")
    lines.append(f"{'scenario':<20} {'bugs':>5} {'correct/plausible':>18}")
    for label, row in report["scenarios"].items():
        lines.append(f"{label:<20} {row['bugs']:>5} {cell(row):>18}")
    lines.append("")
    lines.append(f"average time per bug: {report['avg_time']:.2f} s")
    lines.append(f"average cost per bug: ${report['avg_cost']:.4f}")
    if "overlap" in report:
        lines.append("")
        for name, ids in report["overlap"]["unique"].items():
            lines.append(f"unique to {name}: {len(ids)} {' '.join(ids)}".rstrip())
        shared = report["overlap"]["shared_by_all"]
        lines.append(f"fixed by all: {len(shared)} {' '.join(shared)}".rstrip())
    return "\n".join(lines) + "\n"


def write_review_queue(out_dir: Path, sessions: Sequence[Mapping[str, Any]], bugs: Mapping[str, BugInstance]) -> Path:
    """One markdown page per plausible patch plus an annotation form to fill in."""
    review = out_dir / "review"
    review.mkdir(parents=True, exist_ok=True)
    form = []
    for s in sorted(sessions, key=lambda s: s["bug_id"]):
        if s["result"] != "plausible":
            continue
        bug = bugs.get(s["bug_id"])
        reference = bug.reference_patch if bug is not None and bug.reference_patch else "(no reference patch)\n"
        page = (
            f"# {s['bug_id']}\n\n## Generated patch\n\n```diff\n{s['final_patch']['diff']}```\n\n"
            f"## Reference patch\n\n```diff\n{reference}```\n"
        )
        (review / f"{s['bug_id']}.md").write_text(page, encoding="utf-8")
        form.append({"bug_id": s["bug_id"], "correct": None})
    path = review / "annotations.json"
    path.write_text(dump_json({"annotations": form}), encoding="utf-8")
    return path


def write_report(out_dir: Path, report: Mapping[str, Any]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dump_json(report), encoding="utf-8")
    (out_dir / "report.txt").write_text(render_report(report), encoding="utf-8")


def evaluate(config: RunConfig) -> dict[str, Any]:
    bugs = load_corpus(config.corpus)
    sessions = [s.to_dict() for s in run_batch(config, bugs)]
    annotations = load_annotations(config.annotations) if config.annotations else None
    report = build_report(sessions, scenario_labels(bugs), annotations)
    write_report(config.output_dir, report)
    write_review_queue(config.output_dir, sessions, {b.bug_id: b for b in bugs})
    return report


# -- ingest ------------------------------------------------------------------


def read_triples(path: str | Path) -> list[dict[str, str]]:
    """Raw ``{buggy_code, fix_code, root_cause}`` records from JSON or JSON Lines."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    records = json.loads(text) if stripped.startswith("[") else list(iter_jsonl(text.splitlines()))
    for i, r in enumerate(records):
        missing = [k for k in ("buggy_code", "fix_code", "root_cause") if k not in r]
        if missing:
            raise ConfigError(f"record {i} is missing {', '.join(missing)}")
    return records


def ingest(triples_path: str | Path, embedder: Embedder, out_path: str | Path, threshold: float = 0.6) -> ExampleStore:
    store = build_store(read_triples(triples_path), embedder, threshold)
    save_store(store, out_path)
    return store
