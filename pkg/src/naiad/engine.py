"""End-to-end run orchestration: query in, persisted report out.

The Engine owns the wiring between planner, validator, executor, retrieval
and reporting. `Engine.scripted()` builds a fully deterministic instance
from packaged fixtures (scripted provider, mock catalog, stub clients,
tick clock, single worker) for tests, evaluation and offline demos.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import fixtures
from .aquatools import MockSceneCatalog, StubBloomClient, SyntheticWeatherClient
from .config import EngineConfig
from .errors import RevisionExhausted, UnknownTank
from .executor import ExecutionContext, ExecutionTrace, SystemClock, TickClock, execute
from .knowledge import KnowledgeStore, inject_context
from .planning import (
    Gazetteer,
    QueryParameters,
    UserQuery,
    extract_parameters,
    repair_plan,
    rewrite_query,
    synthesize_plan,
)
from .providers import RecordingTransport, Transport
from .registry import ToolRegistry
from .reporting import (
    FeedbackLog,
    Report,
    ReflectionVerdict,
    generate_report,
    record_feedback,
    reflect,
    revise,
)
from .tools import REPORT_GENERATOR, builtin_handlers, builtin_registry
from .workflow import PlanGraph, PrunedPlan, preview, prune, validate

DATA_PACKAGE = "naiad.data"


def data_path(*parts: str) -> Path:
    base = resources.files(DATA_PACKAGE)
    for part in parts:
        base = base.joinpath(part)
    return Path(str(base))


@dataclass
class RunResult:
    query: UserQuery
    params: QueryParameters
    plan: PlanGraph
    trace: ExecutionTrace | None = None
    report: Report | None = None
    verdict: ReflectionVerdict | None = None
    preview: dict | None = None


class Engine:
    def __init__(self, provider, registry: ToolRegistry, handlers: dict,
                 gazetteer: Gazetteer, store: KnowledgeStore,
                 config: EngineConfig | None = None,
                 transport: Transport | None = None, clock=None,
                 feedback_log: FeedbackLog | None = None,
                 workers: int | None = None, retry_delay: float | None = None,
                 max_repair_attempts: int = 3, max_reflection_rounds: int = 2):
        self.config = config or EngineConfig()
        self.provider = provider
        self.registry = registry
        self.handlers = dict(handlers)
        self.gazetteer = gazetteer
        self.store = store
        self.transport = transport or Transport()
        self.clock = clock or SystemClock()
        self.data_dir = Path(self.config.data_dir)
        self.feedback_log = feedback_log or FeedbackLog(self.data_dir / "feedback.jsonl")
        self.workers = workers if workers is not None else self.config.workers
        self.retry_delay = retry_delay if retry_delay is not None else self.config.retry_delay
        self.max_repair_attempts = max_repair_attempts
        self.max_reflection_rounds = max_reflection_rounds
        self.availability: dict[str, bool] = {}
        self.cache: dict = {}

    @property
    def model_id(self) -> str:
        return getattr(self.provider, "model_id", "unknown")

    @classmethod
    def scripted(cls, data_dir: str | Path | None = None,
                 transport: Transport | None = None) -> "Engine":
        """Deterministic engine over packaged fixtures; no network, no clock."""
        provider = fixtures.scripted_provider()
        registry = builtin_registry()
        catalog = MockSceneCatalog(path=data_path("scene_catalog.json"),
                                   base_dir=data_path("rasters"))
        handlers = builtin_handlers(
            catalog=catalog,
            weather_client=SyntheticWeatherClient(),
            bloom_client=StubBloomClient(default_density=12_000.0),
        )
        gazetteer = Gazetteer.from_file(data_path("gazetteer.json"))
        store = KnowledgeStore()
        store.load_tank(data_path("tanks", "limnology.json"))
        config = EngineConfig(
            data_dir=str(data_dir) if data_dir else "naiad-data", workers=1, retry_delay=0.0
        )
        return cls(
            provider=provider, registry=registry, handlers=handlers,
            gazetteer=gazetteer, store=store, config=config,
            transport=transport if transport is not None else RecordingTransport(),
            clock=TickClock(), workers=1, retry_delay=0.0,
        )

    @classmethod
    def from_config(cls, config: EngineConfig, provider: str = "endpoint",
                    transport: Transport | None = None) -> "Engine":
        """Build an engine per config; `provider` is "endpoint" or "scripted"."""
        config.validate()
        if provider == "scripted":
            engine = cls.scripted(data_dir=config.data_dir, transport=transport)
            engine.config = config
            return engine
        from .aquatools import HttpBloomClient, HttpWeatherClient, RemoteSceneCatalog
        from .providers import HttpProvider

        transport = transport or Transport()
        llm = HttpProvider(config.provider_url, config.provider_model, transport=transport)
        endpoints = config.tool_endpoints
        catalog = (
            RemoteSceneCatalog(endpoints["scene_catalog"], transport=transport)
            if "scene_catalog" in endpoints
            else MockSceneCatalog(path=data_path("scene_catalog.json"),
                                  base_dir=data_path("rasters"))
        )
        weather = (
            HttpWeatherClient(endpoints["weather"], transport=transport)
            if "weather" in endpoints else SyntheticWeatherClient()
        )
        bloom = (
            HttpBloomClient(endpoints["bloom"], transport=transport)
            if "bloom" in endpoints else StubBloomClient()
        )
        handlers = builtin_handlers(
            catalog=catalog, weather_client=weather, bloom_client=bloom,
            chl_coefficients=config.chl_coefficients,
            bloom_thresholds=config.bloom_thresholds,
        )
        registry = builtin_registry(retry_default=config.retry_default)
        store = KnowledgeStore()
        store.load_tank(data_path("tanks", "limnology.json"))
        return cls(
            provider=llm, registry=registry, handlers=handlers,
            gazetteer=Gazetteer.from_file(data_path("gazetteer.json")),
            store=store, config=config, transport=transport,
        )

    # --- retrieval helpers ----------------------------------------------------

    def _context(self, stage: str, query_text: str) -> str:
        tank = self.config.tank_stage_map.get(stage)
        if not tank:
            return ""
        try:
            results = self.store.retrieve(query_text, tank, k=10)
        except UnknownTank:
            return ""
        return inject_context(stage, results, self.store, tank)

    # --- report node handler ----------------------------------------------------

    def _report_handler(self, q: UserQuery, stash: dict):
        def handler(inputs, node_ctx):
            context = self._context("report", q.rewritten)
            report = generate_report(
                node_ctx.trace, q, context, self.provider,
                generated_at=self.clock.now(),
            )
            stash["report"] = report
            return {"report": report.to_text()}

        return handler

    # --- main pipeline ----------------------------------------------------------

    def plan(self, prompt: str, expertise: str | None = None,
             run_id: str | None = None) -> tuple[UserQuery, QueryParameters, PrunedPlan]:
        q = rewrite_query(prompt, self.provider, run_id=run_id)
        if expertise:
            q.expertise = expertise
        params = extract_parameters(q, self.provider, self.gazetteer)
        if expertise:
            q.expertise = expertise
        context = self._context("planning", q.rewritten)
        digest = self.feedback_log.digest()
        draft = synthesize_plan(q, params, self.registry, context, self.provider,
                                feedback_digest=digest)
        report = validate(draft, self.registry)
        if not report.ok:
            result = repair_plan(draft, report, self.provider, self.registry,
                                 max_attempts=self.max_repair_attempts, params=params)
            draft = result.graph
        pruned = prune(draft, cache=self.cache, availability=self.availability)
        return q, params, pruned

    def run(self, prompt: str, expertise: str | None = None,
            run_id: str | None = None, dry_run: bool = False) -> RunResult:
        q, params, pruned = self.plan(prompt, expertise=expertise, run_id=run_id)
        if dry_run:
            return RunResult(
                query=q, params=params, plan=pruned.graph, preview=preview(pruned)
            )

        stash: dict = {}
        handlers = dict(self.handlers)
        handlers[REPORT_GENERATOR] = self._report_handler(q, stash)
        context = ExecutionContext(
            handlers=handlers, transport=self.transport, clock=self.clock,
            workers=self.workers, retry_delay=self.retry_delay,
        )
        trace = execute(pruned, self.registry, context)

        report = stash.get("report")
        if report is None:
            # Report node itself failed: synthesize directly so the user
            # still receives the caveats.
            report = generate_report(trace, q, "", self.provider,
                                     generated_at=self.clock.now())
        verdict = reflect(report, q, self.provider, attempt=1)
        first_verdict = verdict
        if verdict.revise:
            try:
                report, verdict = revise(report, verdict, q, self.provider,
                                         max_rounds=self.max_reflection_rounds)
            except RevisionExhausted as exc:
                report = exc.report
        # Any flagged verdict feeds the planner's digest, even if a later
        # revision satisfied the critic.
        if not first_verdict.relevant or first_verdict.issues:
            record_feedback(first_verdict, report, self.feedback_log,
                            timestamp=self.clock.now())
        self._persist(pruned.graph, trace, report, verdict)
        return RunResult(query=q, params=params, plan=pruned.graph,
                         trace=trace, report=report, verdict=verdict)

    def _persist(self, plan: PlanGraph, trace: ExecutionTrace,
                 report: Report, verdict: ReflectionVerdict) -> None:
        run_dir = self.data_dir / "runs" / trace.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(run_dir / "plan.json", plan.to_json())
        _atomic_write(run_dir / "trace.json", trace.to_json())
        _atomic_write(run_dir / "report.json", report.to_json())
        _atomic_write(
            run_dir / "verdict.json",
            json.dumps(verdict.to_dict(), indent=2, sort_keys=True),
        )


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
