"""Dependency-ordered plan execution with retries and fallback activation.

Nodes whose predecessors are complete may run concurrently up to a worker
limit. A node's failures are retried up to its budget with a fixed backoff;
once the budget is exhausted, a declared fallback node runs in the primary's
place. Node failures never raise: every outcome lands in the trace.
"""

from __future__ import annotations

import json
import random
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from .errors import PreconditionViolation
from .providers import Transport
from .registry import InProcessBinding, RemoteBinding, ToolRegistry
from .workflow import (
    PlanGraph,
    PrunedPlan,
    is_reference,
    parse_reference,
    prune,
    topological_order,
)

DEFAULT_RETRY_DELAY = 1.0
DEFAULT_WORKERS = 4


class SystemClock:
    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class TickClock:
    """Deterministic clock: now() advances by a fixed step, sleep is free."""

    def __init__(self, start: float = 0.0, step: float = 1.0):
        self._now = start
        self._step = step
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            value = self._now
            self._now += self._step
            return value

    def sleep(self, seconds: float) -> None:
        return None


@dataclass
class Artifact:
    producer: str
    fields: dict                 # field name -> value (JSON-serializable)
    types: dict                  # field name -> semantic type tag
    provenance: str = "live"     # live | cached | fallback

    def to_dict(self) -> dict:
        return {
            "producer": self.producer,
            "fields": self.fields,
            "types": self.types,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Artifact":
        return cls(
            producer=data["producer"],
            fields=dict(data["fields"]),
            types=dict(data["types"]),
            provenance=data.get("provenance", "live"),
        )


@dataclass
class Attempt:
    number: int
    outcome: str       # "success" or "failure: <message>"
    duration: float

    def to_dict(self) -> dict:
        return {"number": self.number, "outcome": self.outcome, "duration": self.duration}


@dataclass
class TraceEntry:
    node_id: str
    tool: str
    attempts: list[Attempt] = field(default_factory=list)
    artifact: Artifact | None = None
    resolution: str = "executed"  # executed | skipped_cached | replaced_by_fallback | failed
    note: str = ""  # failure reason when no invocation attempt was made

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "tool": self.tool,
            "attempts": [a.to_dict() for a in self.attempts],
            "artifact": self.artifact.to_dict() if self.artifact else None,
            "resolution": self.resolution,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TraceEntry":
        return cls(
            node_id=data["node_id"],
            tool=data["tool"],
            attempts=[Attempt(**a) for a in data.get("attempts", [])],
            artifact=Artifact.from_dict(data["artifact"]) if data.get("artifact") else None,
            resolution=data.get("resolution", "executed"),
            note=data.get("note", ""),
        )


@dataclass
class ExecutionTrace:
    run_id: str
    entries: list[TraceEntry] = field(default_factory=list)
    status: str = "partial"  # succeeded | failed | partial
    started: float = 0.0
    finished: float = 0.0

    def entry_for(self, node_id: str) -> TraceEntry | None:
        for e in self.entries:
            if e.node_id == node_id:
                return e
        return None

    def artifacts(self) -> dict[str, Artifact]:
        return {e.node_id: e.artifact for e in self.entries if e.artifact is not None}

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "entries": [e.to_dict() for e in self.entries],
            "status": self.status,
            "started": self.started,
            "finished": self.finished,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExecutionTrace":
        return cls(
            run_id=data["run_id"],
            entries=[TraceEntry.from_dict(e) for e in data.get("entries", [])],
            status=data.get("status", "partial"),
            started=data.get("started", 0.0),
            finished=data.get("finished", 0.0),
        )


@dataclass
class ExecutionContext:
    """Everything the executor needs besides the plan itself."""

    handlers: dict = field(default_factory=dict)  # handler id -> callable(inputs, ctx)
    transport: Transport = field(default_factory=Transport)
    clock: object = field(default_factory=SystemClock)
    workers: int = DEFAULT_WORKERS
    retry_delay: float = DEFAULT_RETRY_DELAY
    scheduler_seed: int | None = None  # shuffle ready nodes (property tests)
    extras: dict = field(default_factory=dict)  # opaque engine state for handlers


@dataclass
class NodeContext:
    """Passed to in-process handlers alongside their resolved inputs."""

    run_id: str
    node_id: str
    trace: ExecutionTrace
    extras: dict


@dataclass
class RetryPolicy:
    max_attempts: int = 2
    delay: float = DEFAULT_RETRY_DELAY


def run_node(node, resolved_inputs: dict, binding, retry_policy: RetryPolicy,
             context: ExecutionContext, registry: ToolRegistry,
             node_ctx: NodeContext) -> TraceEntry:
    """Invoke one node's binding with retries; outcome is data, never raised."""
    descriptor = registry.get_tool(node.tool)
    entry = TraceEntry(node_id=node.id, tool=node.tool)
    missing = [
        f.name for f in descriptor.inputs
        if f.required and f.name not in resolved_inputs
    ]
    if missing:
        # Immediate failure, zero invocation attempts.
        entry.resolution = "failed"
        entry.note = f"MissingRequiredInput: {missing}"
        return entry

    for attempt_no in range(1, max(1, retry_policy.max_attempts) + 1):
        start = context.clock.now()
        try:
            outputs = _invoke(binding, resolved_inputs, context, node_ctx)
            duration = max(0.0, context.clock.now() - start)
            entry.attempts.append(Attempt(attempt_no, "success", duration))
            types = {f.name: f.semantic_type for f in descriptor.outputs}
            entry.artifact = Artifact(
                producer=node.id,
                fields={k: v for k, v in outputs.items()},
                types={k: types.get(k, "document-context") for k in outputs},
            )
            entry.resolution = "executed"
            return entry
        except Exception as exc:  # tool failures become trace data
            duration = max(0.0, context.clock.now() - start)
            entry.attempts.append(
                Attempt(attempt_no, f"failure: {exc}", duration)
            )
            if attempt_no < retry_policy.max_attempts:
                context.clock.sleep(retry_policy.delay)
    entry.resolution = "failed"
    return entry


def _invoke(binding, inputs: dict, context: ExecutionContext, node_ctx: NodeContext) -> dict:
    if isinstance(binding, InProcessBinding):
        handler = context.handlers.get(binding.handler_id)
        if handler is None:
            raise RuntimeError(f"no handler registered for '{binding.handler_id}'")
        return handler(inputs, node_ctx)
    if isinstance(binding, RemoteBinding):
        url = binding.base_url.rstrip("/") + "/" + binding.path.lstrip("/")
        body = context.transport.post_json(
            url, {"inputs": inputs}, timeout=binding.timeout_seconds
        )
        if "error" in body:
            raise RuntimeError(body["error"])
        return body.get("outputs", {})
    raise RuntimeError("tool has no binding")


class _RunState:
    """Mutable per-run bookkeeping shared across worker threads."""

    def __init__(self, run_id: str):
        self.lock = threading.Lock()
        self.trace = ExecutionTrace(run_id=run_id)
        self.outputs: dict[str, Artifact] = {}  # node id -> artifact (env view)

    def record(self, entry: TraceEntry, env_ids: list[str]) -> None:
        with self.lock:
            self.trace.entries.append(entry)
            if entry.artifact is not None:
                for node_id in env_ids:
                    self.outputs[node_id] = entry.artifact


def execute(plan: PlanGraph | PrunedPlan, registry: ToolRegistry,
            context: ExecutionContext | None = None) -> ExecutionTrace:
    """Run a validated (optionally pruned) plan to a complete trace."""
    context = context or ExecutionContext()
    if isinstance(plan, PrunedPlan):
        pruned = plan
    else:
        if not plan.validated:
            raise PreconditionViolation("execute requires a validated plan")
        pruned = prune(plan)
    g = pruned.graph
    if not g.validated:
        raise PreconditionViolation("execute requires a validated plan")
    for n in g.nodes:
        registry.get_tool(n.tool)  # raises UnknownTool eagerly

    order = topological_order(g)
    node_map = g.node_map()
    fallback_of = {n.fallback_for: n.id for n in g.nodes if n.fallback_for is not None}
    schedulable = [nid for nid in order if node_map[nid].fallback_for is None]
    preds: dict[str, set[str]] = {nid: set() for nid in schedulable}
    succs: dict[str, list[str]] = {nid: [] for nid in schedulable}
    for a, b in g.edges:
        preds[b].add(a)
        succs[a].append(b)

    state = _RunState(run_id=g.run_id)
    state.trace.started = context.clock.now()
    rng = random.Random(context.scheduler_seed) if context.scheduler_seed is not None else None

    from .workflow import _upstream_sets

    upstream = _upstream_sets([n.id for n in g.nodes], list(g.edges))

    def process(node_id: str) -> str:
        _process_node(
            node_id, node_map, pruned, registry, context, state,
            fallback_of, upstream, order,
        )
        return node_id

    remaining = {nid: len(preds[nid]) for nid in schedulable}
    ready = sorted(nid for nid, d in remaining.items() if d == 0)
    workers = max(1, context.workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        in_flight = {}
        while ready or in_flight:
            while ready and len(in_flight) < workers:
                if rng is not None:
                    idx = rng.randrange(len(ready))
                else:
                    idx = 0
                node_id = ready.pop(idx)
                in_flight[pool.submit(process, node_id)] = node_id
            done, _ = wait(in_flight, return_when=FIRST_COMPLETED)
            for fut in done:
                node_id = in_flight.pop(fut)
                fut.result()
                for child in succs[node_id]:
                    remaining[child] -= 1
                    if remaining[child] == 0:
                        ready.append(child)
                ready.sort()

    _finalize(state.trace, g, node_map, context)
    return state.trace


def _finalize(trace: ExecutionTrace, g: PlanGraph, node_map, context) -> None:
    report_nodes = [n.id for n in g.nodes if n.kind == "report"]
    artifacts = trace.artifacts()
    if report_nodes and all(r in artifacts for r in report_nodes):
        trace.status = "succeeded"
    elif artifacts:
        trace.status = "partial"
    else:
        trace.status = "failed"
    trace.finished = context.clock.now()


def _resolve_inputs(node, registry: ToolRegistry, state: _RunState,
                    order: list[str], allowed: set[str]) -> tuple[dict, str | None]:
    """Literal params, then $refs, then auto-wiring by semantic type.

    Returns (inputs, error). Auto-wiring only considers upstream producers,
    scanned in reverse topological order so the producer nearest to the
    consumer wins deterministically.
    """
    descriptor = registry.get_tool(node.tool)
    inputs: dict = {}
    with state.lock:
        env = dict(state.outputs)
    for name, value in node.params.items():
        if is_reference(value):
            ref = parse_reference(value)
            if ref is None:
                return {}, f"malformed reference '{value}'"
            src_id, src_field = ref
            artifact = env.get(src_id)
            if artifact is None or src_field not in artifact.fields:
                continue  # upstream failed; required-input check will catch it
            inputs[name] = artifact.fields[src_field]
        else:
            inputs[name] = value
    for spec in descriptor.inputs:
        if spec.name in inputs:
            continue
        for candidate in reversed(order):
            if candidate not in allowed:
                continue
            artifact = env.get(candidate)
            if artifact is None:
                continue
            for fname, ftype in artifact.types.items():
                if ftype == spec.semantic_type:
                    inputs[spec.name] = artifact.fields[fname]
                    break
            if spec.name in inputs:
                break
    return inputs, None


def _process_node(node_id, node_map, pruned: PrunedPlan, registry, context,
                  state: _RunState, fallback_of, upstream, order) -> None:
    node = node_map[node_id]
    ann = pruned.annotations.get(node_id)
    if ann is not None and ann.status == "skipped_cached":
        artifact = ann.cached_artifact
        if isinstance(artifact, Artifact):
            artifact = Artifact(
                producer=node_id, fields=artifact.fields,
                types=artifact.types, provenance="cached",
            )
        entry = TraceEntry(
            node_id=node_id, tool=node.tool, artifact=artifact,
            resolution="skipped_cached",
        )
        state.record(entry, [node_id])
        return

    run_primary = ann is None or ann.status != "use_fallback"
    if ann is not None and ann.status == "unavailable":
        entry = TraceEntry(node_id=node_id, tool=node.tool, resolution="failed",
                           note=ann.reason)
        state.record(entry, [])
        return

    node_ctx = NodeContext(
        run_id=state.trace.run_id, node_id=node_id,
        trace=state.trace, extras=context.extras,
    )
    if run_primary:
        descriptor = registry.get_tool(node.tool)
        inputs, err = _resolve_inputs(node, registry, state, order, upstream[node_id])
        if err is not None:
            entry = TraceEntry(node_id=node_id, tool=node.tool, resolution="failed",
                               note=err)
        else:
            policy = RetryPolicy(
                max_attempts=descriptor.retry_default or 1, delay=context.retry_delay
            )
            entry = run_node(node, inputs, descriptor.binding, policy,
                             context, registry, node_ctx)
        if entry.resolution != "failed":
            state.record(entry, [node_id])
            return
        state.record(entry, [])
    else:
        entry = TraceEntry(node_id=node_id, tool=node.tool, resolution="failed",
                           note=ann.reason)
        state.record(entry, [])

    fb_id = fallback_of.get(node_id)
    if fb_id is None:
        return
    fb_node = node_map[fb_id]
    fb_descriptor = registry.get_tool(fb_node.tool)
    fb_inputs, err = _resolve_inputs(fb_node, registry, state, order, upstream[node_id])
    fb_ctx = NodeContext(
        run_id=state.trace.run_id, node_id=fb_id,
        trace=state.trace, extras=context.extras,
    )
    if err is not None:
        fb_entry = TraceEntry(node_id=fb_id, tool=fb_node.tool, resolution="failed",
                              note=err)
    else:
        policy = RetryPolicy(
            max_attempts=fb_descriptor.retry_default or 1, delay=context.retry_delay
        )
        fb_entry = run_node(fb_node, fb_inputs, fb_descriptor.binding, policy,
                            context, registry, fb_ctx)
    if fb_entry.artifact is not None:
        fb_entry.resolution = "replaced_by_fallback"
        fb_entry.artifact.provenance = "fallback"
        fb_entry.note = f"replaces:{node_id}"
        # Downstream references to the primary resolve to the fallback output.
        state.record(fb_entry, [fb_id, node_id])
    else:
        state.record(fb_entry, [])


def resume(trace: ExecutionTrace, plan: PlanGraph | PrunedPlan,
           registry: ToolRegistry, context: ExecutionContext | None = None) -> ExecutionTrace:
    """Re-execute only artifact-less nodes, treating prior artifacts as cache."""
    if trace.status != "partial":
        raise PreconditionViolation(f"resume requires a partial trace, got '{trace.status}'")
    context = context or ExecutionContext()
    if isinstance(plan, PrunedPlan):
        g = plan.graph
        base_annotations = dict(plan.annotations)
    else:
        g = plan
        base_annotations = None
    if not g.validated:
        raise PreconditionViolation("resume requires a validated plan")

    pruned = prune(g) if base_annotations is None else PrunedPlan(g, base_annotations)
    done = trace.artifacts()
    from .workflow import NodeAnnotation

    annotations = dict(pruned.annotations)
    for node_id, artifact in done.items():
        if node_id in annotations:
            annotations[node_id] = NodeAnnotation(
                status="skipped_cached", cached_artifact=artifact,
                reason="completed in prior run",
            )
    new_trace = execute(PrunedPlan(g, annotations), registry, context)

    # Merge: re-executed nodes keep their prior failed attempts prepended.
    prior = {e.node_id: e for e in trace.entries}
    for entry in new_trace.entries:
        old = prior.get(entry.node_id)
        if old is not None and old.artifact is None and old.attempts:
            entry.attempts = list(old.attempts) + list(entry.attempts)
    new_trace.started = trace.started or new_trace.started
    return new_trace
