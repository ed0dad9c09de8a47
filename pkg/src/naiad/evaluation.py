"""Gold-task loading, per-run scoring, and metric aggregation.

A gold task pins the expected tool set, a required tool-order subsequence,
and salient parameter assertions for one prompt. Scoring yields four boolean
judgments per task; the correctness rate is the arithmetic mean of the
input / tool / order rates, reported as half-up 2-decimal percentages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import EmptyDataset, EmptyInput, ParseError, RunMismatch
from .executor import ExecutionTrace
from .planning import QueryParameters

ARTIFACT_RESOLUTIONS = ("executed", "skipped_cached", "replaced_by_fallback")


@dataclass
class GoldTask:
    task_id: str
    prompt: str
    expertise: str = "practitioner"
    expected_tools: set[str] = field(default_factory=set)
    expected_order: list[str] = field(default_factory=list)
    expected_params: dict = field(default_factory=dict)
    relevant_override: bool | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "prompt": self.prompt,
            "expertise": self.expertise,
            "expected_tools": sorted(self.expected_tools),
            "expected_order": list(self.expected_order),
            "expected_params": dict(self.expected_params),
            "relevant_override": self.relevant_override,
            "notes": self.notes,
        }


@dataclass
class ScoreCard:
    task_id: str
    input_correct: bool
    tools_correct: bool
    order_correct: bool
    relevant: bool
    anomalies: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "input_correct": self.input_correct,
            "tools_correct": self.tools_correct,
            "order_correct": self.order_correct,
            "relevant": self.relevant,
            "anomalies": list(self.anomalies),
        }


@dataclass
class EvalSummary:
    n_tasks: int
    input_rate: float
    tool_rate: float
    order_rate: float
    correctness_rate: float
    relevancy_rate: float
    cards: list[ScoreCard]
    model: str = "scripted"
    correctness_pct: str = "0.00"
    relevancy_pct: str = "0.00"

    def to_dict(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "input_rate": self.input_rate,
            "tool_rate": self.tool_rate,
            "order_rate": self.order_rate,
            "correctness_rate": self.correctness_rate,
            "relevancy_rate": self.relevancy_rate,
            "correctness_pct": self.correctness_pct,
            "relevancy_pct": self.relevancy_pct,
            "model": self.model,
            "cards": [c.to_dict() for c in self.cards],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render_table(self) -> str:
        header = f"{'Model':<16}{'Parameters':<14}{'Correctness %':<16}{'Relevancy %':<14}"
        row = f"{self.model:<16}{'-':<14}{self.correctness_pct:<16}{self.relevancy_pct:<14}"
        rule = "-" * len(header)
        return "\n".join([header, rule, row])


def load_gold(path: str | Path) -> list[GoldTask]:
    """Parse a JSON-lines gold file; malformed lines fail with line numbers."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"gold file not found: {path}")
    tasks: list[GoldTask] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: invalid JSON: {exc}", line=lineno) from exc
        try:
            task = GoldTask(
                task_id=str(data["task_id"]),
                prompt=str(data["prompt"]),
                expertise=data.get("expertise", "practitioner"),
                expected_tools=set(data.get("expected_tools", [])),
                expected_order=list(data.get("expected_order", [])),
                expected_params=dict(data.get("expected_params", {})),
                relevant_override=data.get("relevant_override"),
                notes=data.get("notes", ""),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"line {lineno}: bad task: {exc}", line=lineno) from exc
        if not task.prompt.strip():
            raise ParseError(f"line {lineno}: empty prompt", line=lineno)
        if not set(task.expected_order) <= task.expected_tools:
            raise ParseError(
                f"line {lineno}: expected_order is not a subset of expected_tools",
                line=lineno,
            )
        tasks.append(task)
    if not tasks:
        raise EmptyDataset(f"no tasks in {path}")
    return tasks


def executed_tool_sequence(trace: ExecutionTrace) -> list[str]:
    """Tool names that contributed artifacts, in trace order.

    An activated fallback stands in for its primary: it is counted under the
    primary tool's name (its declared output equivalence), and the exhausted
    primary itself is not counted.
    """
    by_node = {e.node_id: e for e in trace.entries}
    sequence = []
    for entry in trace.entries:
        if entry.artifact is None:
            continue
        if entry.resolution == "replaced_by_fallback":
            primary_id = entry.note.removeprefix("replaces:") if entry.note else ""
            primary = by_node.get(primary_id)
            sequence.append(primary.tool if primary else entry.tool)
        elif entry.resolution in ("executed", "skipped_cached"):
            sequence.append(entry.tool)
    return sequence


def is_subsequence(needle: list[str], haystack: list[str]) -> bool:
    it = iter(haystack)
    return all(any(x == y for y in it) for x in needle)


def _param_matches(key: str, expected, params: QueryParameters) -> bool:
    actual = params.to_dict()
    if key == "start_date":
        return actual["window"] is not None and actual["window"][0] == expected
    if key == "stop_date":
        return actual["window"] is not None and actual["window"][1] == expected
    if key == "water_body_name":
        got = actual["water_body_name"]
        return got is not None and got.lower() == str(expected).lower()
    return actual.get(key) == expected


def score_task(task: GoldTask, params: QueryParameters, trace: ExecutionTrace,
               relevant: bool | None = None) -> ScoreCard:
    """Judge one run against its gold annotation."""
    if trace is None:
        raise RunMismatch(f"task '{task.task_id}' has no trace")
    input_correct = all(
        _param_matches(key, expected, params)
        for key, expected in task.expected_params.items()
    )
    sequence = executed_tool_sequence(trace)
    executed = set(sequence)
    tools_correct = executed == task.expected_tools
    order_correct = is_subsequence(task.expected_order, sequence)

    anomalies = []
    for extra in sorted(executed - task.expected_tools):
        anomalies.append(f"redundant tool: {extra}")
    for entry in trace.entries:
        if entry.resolution == "failed":
            reason = entry.note or (entry.attempts[-1].outcome if entry.attempts else "")
            if "unavailable" in reason.lower() or "offline" in reason.lower():
                anomalies.append(f"service downtime: {entry.tool}")
            else:
                anomalies.append(f"node failed: {entry.node_id}")

    if task.relevant_override is not None:
        relevant_flag = bool(task.relevant_override)
    else:
        relevant_flag = bool(relevant)
    return ScoreCard(
        task_id=task.task_id,
        input_correct=input_correct,
        tools_correct=tools_correct,
        order_correct=order_correct,
        relevant=relevant_flag,
        anomalies=anomalies,
    )


def _pct(numerator: int, denominator: int) -> str:
    value = Decimal(numerator) * 100 / Decimal(denominator)
    return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def aggregate(cards: list[ScoreCard], model: str = "scripted") -> EvalSummary:
    """Fold score cards into rates; correctness is the mean of three rates."""
    if not cards:
        raise EmptyInput("no score cards to aggregate")
    n = len(cards)
    n_input = sum(c.input_correct for c in cards)
    n_tool = sum(c.tools_correct for c in cards)
    n_order = sum(c.order_correct for c in cards)
    n_rel = sum(c.relevant for c in cards)
    input_rate = n_input / n
    tool_rate = n_tool / n
    order_rate = n_order / n
    correctness = (input_rate + tool_rate + order_rate) / 3
    correctness_pct = str(
        (Decimal(n_input + n_tool + n_order) * 100 / (3 * Decimal(n)))
        .quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    )
    return EvalSummary(
        n_tasks=n,
        input_rate=input_rate,
        tool_rate=tool_rate,
        order_rate=order_rate,
        correctness_rate=correctness,
        relevancy_rate=n_rel / n,
        cards=list(cards),
        model=model,
        correctness_pct=correctness_pct,
        relevancy_pct=_pct(n_rel, n),
    )


def run_suite(tasks: list[GoldTask], engine, out_dir: str | Path | None = None) -> EvalSummary:
    """Run every gold task end-to-end through the engine and score it.

    Per-task failures never abort the suite: they become all-false cards
    tagged with the failure as an anomaly.
    """
    cards = []
    for task in tasks:
        try:
            result = engine.run(task.prompt, expertise=task.expertise, run_id=task.task_id)
            card = score_task(
                task, result.params, result.trace,
                relevant=result.verdict.relevant if result.verdict else None,
            )
        except Exception as exc:  # scored as failure, not fatal
            card = ScoreCard(
                task_id=task.task_id,
                input_correct=False,
                tools_correct=False,
                order_correct=False,
                relevant=False,
                anomalies=[f"run failed: {exc}"],
            )
        cards.append(card)
        if out_dir is not None:
            task_dir = Path(out_dir) / task.task_id
            task_dir.mkdir(parents=True, exist_ok=True)
            (task_dir / "card.json").write_text(
                json.dumps(card.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
            )
    summary = aggregate(cards, model=getattr(engine, "model_id", "scripted"))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(summary.to_json(), encoding="utf-8")
        (out / "summary.txt").write_text(summary.render_table() + "\n", encoding="utf-8")
    return summary
