"""Query rewriting, parameter extraction, and plan synthesis/repair.

All language-model interaction flows through the provider contract; prompts
carry a stage marker so scripted providers can key their response tables.
The original query text is preserved verbatim for the whole pipeline.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import (
    EmptyQuery,
    PlanningExhausted,
    ProviderFailure,
    UnknownWaterBody,
    UnparseableExtraction,
    UnparseablePlan,
)
from .registry import ToolRegistry
from .workflow import PlanGraph, ValidationReport, validate

EXPERTISE_LEVELS = ("novice", "practitioner", "expert")
DEFAULT_EXPERTISE = "practitioner"

REWRITE_SYSTEM = (
    "[stage:rewrite] You refine user questions about inland water quality "
    "monitoring. Rewrite the query to be precise about the water body, the "
    "quantity of interest, and the time frame. Reply with the rewritten "
    "query only."
)

EXTRACT_SYSTEM = (
    "[stage:extract] Extract spatial and temporal parameters from the query. "
    "Reply with JSON only: {\"water_body_name\": string|null, "
    "\"lat_lon_polygon\": [[lon,lat],...]|null, \"start_date\": \"YYYY-MM-DD\"|null, "
    "\"stop_date\": \"YYYY-MM-DD\"|null, "
    "\"expertise\": \"novice\"|\"practitioner\"|\"expert\"|null}. "
    "Never guess values that are not in the query."
)

PLAN_SYSTEM = (
    "[stage:plan] Build an execution plan as JSON: {\"nodes\": [{\"id\", \"tool\", "
    "\"kind\", \"params\", \"fallback_for\", \"skip_if_cached\"}], \"edges\": "
    "[[from, to], ...]}. Use only tools from the catalog below; the plan must be "
    "acyclic and end in a single terminal report node.\n\n"
)


@dataclass
class UserQuery:
    original: str
    rewritten: str
    expertise: str = DEFAULT_EXPERTISE
    id: str = ""


@dataclass
class QueryParameters:
    water_body_name: str | None = None
    aoi: list | None = None                       # [[lon, lat], ...]
    window: tuple[date, date] | None = None

    def to_dict(self) -> dict:
        return {
            "water_body_name": self.water_body_name,
            "aoi": self.aoi,
            "window": [self.window[0].isoformat(), self.window[1].isoformat()]
            if self.window else None,
        }


class Gazetteer:
    """Local mapping of water-body names to polygons (lon/lat, degrees)."""

    def __init__(self, entries: dict | None = None):
        # name (lowercase) -> {"polygon": [...], "surface_km2": float}
        self._entries = {k.lower(): v for k, v in (entries or {}).items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def names(self) -> list[str]:
        return sorted(self._entries)

    def lookup(self, name: str) -> list | None:
        key = name.lower().replace("lake", "").strip()
        entry = self._entries.get(key)
        if entry is None:
            return None
        return entry["polygon"]

    def metadata(self, name: str) -> dict | None:
        return self._entries.get(name.lower().replace("lake", "").strip())


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def rewrite_query(q: str, provider, run_id: str | None = None) -> UserQuery:
    """Rewrite a raw query for the monitoring domain; original kept verbatim."""
    if not q or not q.strip():
        raise EmptyQuery("query is empty")
    rewritten = provider.complete(REWRITE_SYSTEM, q, temperature=0.0).strip()
    if not rewritten:
        raise ProviderFailure("rewrite produced an empty completion")
    return UserQuery(original=q, rewritten=rewritten, id=run_id or new_run_id())


def _parse_extraction(text: str) -> dict:
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("extraction is not a JSON object")
    return data


def extract_parameters(q: UserQuery, provider, gazetteer: Gazetteer) -> QueryParameters:
    """Parse the provider's structured extraction; resolve names via gazetteer.

    Explicit coordinates win over a water-body name. Absent fields stay None.
    One re-ask is made on malformed JSON before failing.
    """
    prompt = f"Original query: {q.original}\nRewritten query: {q.rewritten}"
    text = provider.complete(EXTRACT_SYSTEM, prompt, temperature=0.0)
    try:
        data = _parse_extraction(text)
    except (ValueError, json.JSONDecodeError):
        retry_prompt = prompt + "\nYour previous answer was not valid JSON. Reply with JSON only."
        text = provider.complete(EXTRACT_SYSTEM, retry_prompt, temperature=0.0)
        try:
            data = _parse_extraction(text)
        except (ValueError, json.JSONDecodeError) as exc:
            raise UnparseableExtraction(f"extraction not valid JSON: {exc}") from exc

    name = data.get("water_body_name")
    aoi = data.get("lat_lon_polygon")
    start, stop = data.get("start_date"), data.get("stop_date")
    expertise = data.get("expertise")
    if expertise in EXPERTISE_LEVELS:
        q.expertise = expertise

    window = None
    if start and stop:
        try:
            window = (date.fromisoformat(start), date.fromisoformat(stop))
        except ValueError as exc:
            raise UnparseableExtraction(f"bad window dates: {exc}") from exc
        if window[0] > window[1]:
            raise UnparseableExtraction(f"window start {start} after stop {stop}")

    if aoi is None and name:
        aoi = gazetteer.lookup(name)
        if aoi is None:
            raise UnknownWaterBody(f"'{name}' is not in the gazetteer and no coordinates given")
    return QueryParameters(water_body_name=name, aoi=aoi, window=window)


def _populate_params(g: PlanGraph, params: QueryParameters, registry: ToolRegistry) -> None:
    """Fill spatial/temporal inputs from extracted parameters where absent."""
    by_type = {}
    if params.aoi is not None:
        by_type["aoi-polygon"] = params.aoi
    if params.window is not None:
        by_type["time-window"] = {
            "start": params.window[0].isoformat(),
            "stop": params.window[1].isoformat(),
        }
    if params.water_body_name is not None:
        by_type["water-body-name"] = params.water_body_name
    for node in g.nodes:
        if not registry.has_tool(node.tool):
            continue
        for spec in registry.get_tool(node.tool).inputs:
            if spec.name in node.params:
                continue
            if spec.semantic_type in by_type:
                node.params[spec.name] = by_type[spec.semantic_type]


def _parse_plan(text: str, run_id: str) -> PlanGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UnparseablePlan(f"plan is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "nodes" not in data:
        raise UnparseablePlan("plan JSON lacks a 'nodes' array")
    try:
        g = PlanGraph.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UnparseablePlan(f"plan does not match schema: {exc}") from exc
    g.run_id = run_id
    return g


def synthesize_plan(q: UserQuery, params: QueryParameters, registry: ToolRegistry,
                    context: str, provider, feedback_digest: str = "") -> PlanGraph:
    """Draft a PlanGraph from the provider; validity is the caller's concern."""
    if not registry.names():
        raise ValueError("tool catalog is empty")
    system = PLAN_SYSTEM + "## tool catalog\n" + registry.render_catalog_prose()
    if context:
        system += "\n\n" + context
    if feedback_digest:
        system += "\n\n## feedback from earlier runs\n" + feedback_digest
    prompt = (
        f"Query: {q.rewritten}\n"
        f"Parameters: {json.dumps(params.to_dict(), sort_keys=True)}"
    )
    text = provider.complete(system, prompt, temperature=0.0)
    g = _parse_plan(text, q.id)
    _populate_params(g, params, registry)
    return g


@dataclass
class RepairResult:
    graph: PlanGraph
    attempts: int
    report: ValidationReport


def repair_plan(draft: PlanGraph, errors: ValidationReport, provider,
                registry: ToolRegistry, max_attempts: int = 3,
                params: QueryParameters | None = None) -> RepairResult:
    """Bounded re-prompt loop: feed violations back until the plan validates.

    An already-valid draft is returned unchanged with zero provider calls.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if errors.ok:
        return RepairResult(graph=draft, attempts=0, report=errors)
    system = PLAN_SYSTEM + "## tool catalog\n" + registry.render_catalog_prose()
    current, report = draft, errors
    for attempt in range(1, max_attempts + 1):
        prompt = (
            "The previous plan failed validation.\n"
            f"Plan: {current.to_json()}\n"
            f"Violations: {report.summary()}\n"
            "Reply with a corrected plan as JSON only."
        )
        text = provider.complete(system, prompt, temperature=0.0)
        try:
            current = _parse_plan(text, draft.run_id)
        except UnparseablePlan as exc:
            report = ValidationReport(ok=False, violations=[])
            if attempt == max_attempts:
                raise PlanningExhausted(str(exc), report=report) from exc
            continue
        if params is not None:
            _populate_params(current, params, registry)
        report = validate(current, registry)
        if report.ok:
            return RepairResult(graph=current, attempts=attempt, report=report)
    raise PlanningExhausted(
        f"plan failed validation after {max_attempts} repair attempts: {report.summary()}",
        report=report,
    )
