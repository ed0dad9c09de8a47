"""Report synthesis, the reflection/correction loop, and the feedback log.

Sections are grouped by the semantic type of each artifact's outputs so
every artifact-bearing node is cited by at least one section. Reflection
asks the provider to judge the report against the original query; flagged
sections are regenerated up to a bounded number of rounds. Irrelevant or
flagged outcomes are appended to a persistent feedback log whose digest is
surfaced into future planning prompts.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    EmptyTrace,
    PreconditionViolation,
    RevisionExhausted,
    StorageFailure,
    UnparseableVerdict,
)
from .executor import ExecutionTrace
from .planning import UserQuery

SECTION_GROUPS = (
    ("observations", ("scene-list",)),
    ("indices", ("ndci-value", "ndwi-value", "index-raster")),
    ("predictions", ("chl-a-ug-per-l", "bloom-severity")),
    ("weather context", ("weather-series",)),
)

SECTION_SYSTEM = (
    "[stage:report-section] Write the body of one report section for an "
    "inland-water quality report. Match the language and detail level to the "
    "stated audience. Reply with the section prose only."
)

REFLECT_SYSTEM = (
    "[stage:reflect] Judge whether the report answers the original query. "
    "Reply with JSON only: {\"relevant\": bool, \"revise\": bool, "
    "\"issues\": [string, ...]}."
)

REVISE_SYSTEM = (
    "[stage:revise] Rewrite the flagged report section to address the issues. "
    "Reply with the corrected section prose only."
)

DEFAULT_MAX_ROUNDS = 2
FEEDBACK_DIGEST_SIZE = 10


@dataclass
class ReportSection:
    heading: str
    body: str
    sources: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"heading": self.heading, "body": self.body, "sources": list(self.sources)}


@dataclass
class Report:
    run_id: str
    audience: str
    original_query: str
    sections: list[ReportSection] = field(default_factory=list)
    summary: str = ""
    generated_at: float = 0.0
    revisions: int = 0
    unresolved_issues: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "audience": self.audience,
            "original_query": self.original_query,
            "sections": [s.to_dict() for s in self.sections],
            "summary": self.summary,
            "generated_at": self.generated_at,
            "revisions": self.revisions,
            "unresolved_issues": list(self.unresolved_issues),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [
            f"# Water quality report (run {self.run_id})",
            f"Query: {self.original_query}",
            f"Audience: {self.audience}",
            "",
            f"Summary: {self.summary}",
            "",
        ]
        for s in self.sections:
            lines.append(f"## {s.heading}")
            lines.append(s.body)
            lines.append(f"(sources: {', '.join(s.sources) or 'none'})")
            lines.append("")
        return "\n".join(lines)


@dataclass
class ReflectionVerdict:
    relevant: bool
    issues: list[str]
    revise: bool
    attempt: int = 1

    def to_dict(self) -> dict:
        return {
            "relevant": self.relevant,
            "issues": list(self.issues),
            "revise": self.revise,
            "attempt": self.attempt,
        }


def _render_value(semantic_type: str, value) -> str:
    if semantic_type == "scene-list":
        scenes = value if isinstance(value, list) else []
        ids = ", ".join(s.get("scene_id", "?") for s in scenes if isinstance(s, dict))
        return f"{len(scenes)} scene(s): {ids}" if scenes else "no scenes found"
    if semantic_type in ("ndci-value", "ndwi-value"):
        return f"{semantic_type.split('-')[0].upper()} = {value:.4f}"
    if semantic_type == "chl-a-ug-per-l":
        return f"chlorophyll-a estimate: {value:.3f} ug/L"
    if semantic_type == "bloom-severity":
        if isinstance(value, dict):
            return (
                f"cyanobacteria density {value.get('density_cells_per_ml', '?')} cells/mL, "
                f"severity {value.get('severity', '?')}"
            )
        return f"bloom severity: {value}"
    if semantic_type == "weather-series":
        samples = value.get("samples", []) if isinstance(value, dict) else []
        return f"{len(samples)} daily weather sample(s)"
    return json.dumps(value, sort_keys=True, default=str)


def generate_report(trace: ExecutionTrace, q: UserQuery, context: str,
                    provider, generated_at: float = 0.0) -> Report:
    """Build the user-adapted report from a succeeded or partial trace."""
    if not trace.entries:
        raise EmptyTrace("trace has no entries")
    if trace.status not in ("succeeded", "partial"):
        raise PreconditionViolation(f"cannot report on a '{trace.status}' trace")

    grouped: dict[str, list[tuple[str, str]]] = {name: [] for name, _ in SECTION_GROUPS}
    grouped["other results"] = []
    failed: list[tuple[str, str]] = []
    for entry in trace.entries:
        if entry.artifact is None:
            if entry.resolution == "failed":
                reason = entry.note or (entry.attempts[-1].outcome if entry.attempts else "")
                failed.append((entry.node_id, f"{entry.node_id} ({entry.tool}): {reason}"))
            continue
        placed = False
        for fname, ftype in sorted(entry.artifact.types.items()):
            if ftype == "report-text":
                placed = True
                continue
            line = _render_value(ftype, entry.artifact.fields.get(fname))
            if entry.artifact.provenance != "live":
                line += f" [{entry.artifact.provenance}]"
            for group, types in SECTION_GROUPS:
                if ftype in types:
                    grouped[group].append((entry.node_id, line))
                    placed = True
                    break
        if not placed:
            grouped["other results"].append(
                (entry.node_id, _render_value("", entry.artifact.fields))
            )

    sections: list[ReportSection] = []
    summary_bits: list[str] = []
    for heading in [name for name, _ in SECTION_GROUPS] + ["other results"]:
        items = grouped[heading]
        if not items:
            continue
        data_lines = [line for _, line in items]
        prose = provider.complete(
            SECTION_SYSTEM,
            f"Audience: {q.expertise}\nQuery: {q.original}\n"
            f"Section: {heading}\nFindings:\n" + "\n".join(data_lines),
            temperature=0.7,
        ).strip()
        body = "\n".join(data_lines) + "\n\n" + prose
        sections.append(
            ReportSection(
                heading=heading,
                body=body,
                sources=sorted({node_id for node_id, _ in items}),
            )
        )
        summary_bits.append(f"{heading}: {data_lines[0]}")

    if failed:
        caveat_lines = [line for _, line in failed]
        sections.append(
            ReportSection(
                heading="caveats",
                body="The following steps did not complete:\n" + "\n".join(caveat_lines),
                sources=sorted({node_id for node_id, _ in failed}),
            )
        )

    return Report(
        run_id=trace.run_id,
        audience=q.expertise,
        original_query=q.original,
        sections=sections,
        summary="; ".join(summary_bits) or "no results produced",
        generated_at=generated_at,
    )


def _parse_verdict(text: str) -> dict:
    data = json.loads(text)
    if not isinstance(data, dict) or "relevant" not in data:
        raise ValueError("verdict JSON lacks 'relevant'")
    return data


def reflect(report: Report, q: UserQuery, provider, attempt: int = 1) -> ReflectionVerdict:
    """Provider-judged relevance of the report against the original query."""
    prompt = (
        f"Original query: {q.original}\n"
        f"Report summary: {report.summary}\n"
        f"Sections: {', '.join(s.heading for s in report.sections)}"
    )
    text = provider.complete(REFLECT_SYSTEM, prompt, temperature=0.0)
    try:
        data = _parse_verdict(text)
    except (ValueError, json.JSONDecodeError):
        text = provider.complete(
            REFLECT_SYSTEM, prompt + "\nReply with JSON only.", temperature=0.0
        )
        try:
            data = _parse_verdict(text)
        except (ValueError, json.JSONDecodeError) as exc:
            raise UnparseableVerdict(f"verdict not valid JSON: {exc}") from exc
    issues = [str(i) for i in data.get("issues", [])]
    revise_flag = bool(data.get("revise", False))
    if revise_flag and not issues:
        raise UnparseableVerdict("verdict requests revision but names no issues")
    return ReflectionVerdict(
        relevant=bool(data["relevant"]), issues=issues, revise=revise_flag, attempt=attempt
    )


def _flagged_sections(report: Report, issues: list[str]) -> list[ReportSection]:
    flagged = [
        s for s in report.sections
        if any(s.heading.lower() in issue.lower() for issue in issues)
    ]
    return flagged or list(report.sections)


def revise(report: Report, verdict: ReflectionVerdict, q: UserQuery, provider,
           max_rounds: int = DEFAULT_MAX_ROUNDS) -> tuple[Report, ReflectionVerdict]:
    """Regenerate flagged sections until the critic is satisfied or budget ends.

    Raises RevisionExhausted carrying the last report tagged with the
    unresolved issues.
    """
    if not verdict.revise:
        raise PreconditionViolation("revise called with a verdict that does not request it")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    current = report
    for round_no in range(1, max_rounds + 1):
        for section in _flagged_sections(current, verdict.issues):
            section.body = provider.complete(
                REVISE_SYSTEM,
                f"Audience: {current.audience}\nQuery: {q.original}\n"
                f"Section: {section.heading}\nIssues: {'; '.join(verdict.issues)}\n"
                f"Current body:\n{section.body}",
                temperature=0.7,
            ).strip()
        current.revisions = round_no
        verdict = reflect(current, q, provider, attempt=verdict.attempt + 1)
        if verdict.relevant and not verdict.revise:
            return current, verdict
    current.unresolved_issues = list(verdict.issues)
    raise RevisionExhausted(
        f"report still flagged after {max_rounds} revision rounds", report=current
    )


@dataclass
class FeedbackRecord:
    run_id: str
    verdict: dict
    offending_sections: list[str]
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "verdict": self.verdict,
            "offending_sections": list(self.offending_sections),
            "timestamp": self.timestamp,
        }


class FeedbackLog:
    """Append-only JSON-lines log of flagged runs."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: FeedbackRecord) -> int:
        try:
            with self._lock:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
                return sum(1 for _ in open(self.path, encoding="utf-8"))
        except OSError as exc:
            raise StorageFailure(f"cannot append feedback: {exc}") from exc

    def records(self) -> list[FeedbackRecord]:
        if not self.path.exists():
            return []
        out = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            data = json.loads(line)
            out.append(
                FeedbackRecord(
                    run_id=data["run_id"],
                    verdict=data["verdict"],
                    offending_sections=data.get("offending_sections", []),
                    timestamp=data.get("timestamp", 0.0),
                )
            )
        return out

    def digest(self, limit: int = FEEDBACK_DIGEST_SIZE) -> str:
        """Compact summary of the most recent flagged runs for planning prompts."""
        recent = self.records()[-limit:]
        if not recent:
            return ""
        lines = []
        for r in recent:
            issues = "; ".join(r.verdict.get("issues", [])) or "irrelevant output"
            lines.append(f"- run {r.run_id}: {issues}")
        return "\n".join(lines)


def record_feedback(verdict: ReflectionVerdict, report: Report, log: FeedbackLog,
                    timestamp: float = 0.0) -> int:
    """Append a feedback record; only flagged verdicts qualify."""
    if verdict.relevant and not verdict.issues:
        raise PreconditionViolation("nothing to record: verdict is clean")
    record = FeedbackRecord(
        run_id=report.run_id,
        verdict=verdict.to_dict(),
        offending_sections=[
            s.heading for s in report.sections
            if any(s.heading.lower() in issue.lower() for issue in verdict.issues)
        ],
        timestamp=timestamp,
    )
    return log.append(record)
