"""Declarative plan graphs and their validation / ordering / pruning.

A PlanGraph is the in-memory JSON-shaped execution plan the planner emits:
nodes are tool invocations, edges are strict data/execution dependencies.
Drafts may be arbitrarily broken; validate() is total and returns violations
as data. Graphs are treated as immutable once validated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import NotValidated, UnskippableUnavailable
from .registry import ToolRegistry

NODE_KINDS = ("retrieval", "transformation", "report")

_REF_RE = re.compile(r"^\$(?P<node>[^.\s]+)\.(?P<field>\S+)$")


def is_reference(value) -> bool:
    return isinstance(value, str) and value.startswith("$")


def parse_reference(value: str) -> tuple[str, str] | None:
    m = _REF_RE.match(value)
    if m is None:
        return None
    return m.group("node"), m.group("field")


@dataclass
class PlanNode:
    id: str
    tool: str
    kind: str = "transformation"
    params: dict = field(default_factory=dict)
    fallback_for: str | None = None
    skip_if_cached: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tool": self.tool,
            "kind": self.kind,
            "params": dict(self.params),
            "fallback_for": self.fallback_for,
            "skip_if_cached": self.skip_if_cached,
        }


@dataclass
class PlanGraph:
    nodes: list[PlanNode]
    edges: list[tuple[str, str]]
    run_id: str = ""
    _validated: bool = field(default=False, repr=False, compare=False)

    def node_map(self) -> dict[str, PlanNode]:
        return {n.id: n for n in self.nodes}

    @property
    def validated(self) -> bool:
        return self._validated

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "nodes": [n.to_dict() for n in self.nodes],
            "edges": [[a, b] for a, b in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PlanGraph":
        nodes = [
            PlanNode(
                id=str(n["id"]),
                tool=str(n["tool"]),
                kind=str(n.get("kind", "transformation")),
                params=dict(n.get("params", {})),
                fallback_for=n.get("fallback_for"),
                skip_if_cached=bool(n.get("skip_if_cached", False)),
            )
            for n in data.get("nodes", [])
        ]
        edges = [(str(a), str(b)) for a, b in data.get("edges", [])]
        return cls(nodes=nodes, edges=edges, run_id=str(data.get("run_id", "")))

    @classmethod
    def from_json(cls, text: str) -> "PlanGraph":
        return cls.from_dict(json.loads(text))


@dataclass
class Violation:
    code: str  # Cycle | UnsatisfiedInput | NonTerminalReport | MissingReport
    #            | UnknownTool | BadReference | BadFallback
    nodes: list[str]
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "nodes": list(self.nodes), "message": self.message}


@dataclass
class ValidationReport:
    ok: bool
    violations: list[Violation]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}

    def summary(self) -> str:
        if self.ok:
            return "plan valid"
        return "; ".join(f"{v.code}[{','.join(v.nodes)}]: {v.message}" for v in self.violations)


def _upstream_sets(node_ids: list[str], edges: list[tuple[str, str]]) -> dict[str, set[str]]:
    """Transitive predecessors per node, by DFS over reversed edges."""
    preds: dict[str, set[str]] = {n: set() for n in node_ids}
    for a, b in edges:
        if a in preds and b in preds:
            preds[b].add(a)
    upstream: dict[str, set[str]] = {}
    for n in node_ids:
        seen: set[str] = set()
        stack = list(preds[n])
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(preds[u])
        upstream[n] = seen
    return upstream


def _cycle_members(node_ids: list[str], edges: list[tuple[str, str]]) -> list[str]:
    """Nodes that lie on some directed cycle (self-reachable)."""
    succ: dict[str, set[str]] = {n: set() for n in node_ids}
    for a, b in edges:
        if a in succ and b in succ:
            succ[a].add(b)
    members = []
    for n in node_ids:
        seen: set[str] = set()
        stack = list(succ[n])
        found = False
        while stack:
            u = stack.pop()
            if u == n:
                found = True
                break
            if u in seen:
                continue
            seen.add(u)
            stack.extend(succ[u])
        if found:
            members.append(n)
    return members


def validate(g: PlanGraph, registry: ToolRegistry) -> ValidationReport:
    """Total validation of a draft plan; violations are data, never raised."""
    violations: list[Violation] = []
    ids = [n.id for n in g.nodes]
    id_set = set()
    for n in g.nodes:
        if n.id in id_set:
            violations.append(
                Violation("BadReference", [n.id], f"duplicate node id '{n.id}'")
            )
        id_set.add(n.id)

    for a, b in g.edges:
        for endpoint in (a, b):
            if endpoint not in id_set:
                violations.append(
                    Violation("BadReference", [endpoint], f"edge endpoint '{endpoint}' is not a node")
                )

    edges = [(a, b) for a, b in g.edges if a in id_set and b in id_set]
    node_map = {n.id: n for n in g.nodes}

    cyclic = _cycle_members(ids, edges)
    if cyclic:
        violations.append(Violation("Cycle", sorted(set(cyclic)), "plan contains a cycle"))

    upstream = _upstream_sets(ids, edges)
    outgoing: dict[str, list[str]] = {n: [] for n in ids}
    for a, b in edges:
        outgoing[a].append(b)

    report_nodes = [n for n in g.nodes if n.kind == "report"]
    if len(report_nodes) != 1:
        violations.append(
            Violation(
                "MissingReport",
                [n.id for n in report_nodes],
                f"expected exactly one report node, found {len(report_nodes)}",
            )
        )
    for n in report_nodes:
        if outgoing.get(n.id):
            violations.append(
                Violation("NonTerminalReport", [n.id], "report node has outgoing edges")
            )

    for n in g.nodes:
        if not registry.has_tool(n.tool):
            violations.append(Violation("UnknownTool", [n.id], f"tool '{n.tool}' not registered"))

    for n in g.nodes:
        if n.fallback_for is None:
            continue
        target = node_map.get(n.fallback_for)
        if target is None:
            violations.append(
                Violation("BadFallback", [n.id], f"fallback target '{n.fallback_for}' missing")
            )
            continue
        if target.fallback_for is not None:
            violations.append(
                Violation("BadFallback", [n.id], "fallback target is itself a fallback")
            )
        touches_edges = any(n.id in (a, b) for a, b in edges)
        if touches_edges:
            violations.append(
                Violation("BadFallback", [n.id], "fallback node may not carry edges")
            )
        if registry.has_tool(n.tool) and registry.has_tool(target.tool):
            primary_out = {f.semantic_type for f in registry.get_tool(target.tool).outputs}
            fallback_out = {f.semantic_type for f in registry.get_tool(n.tool).outputs}
            if not primary_out <= fallback_out:
                violations.append(
                    Violation(
                        "BadFallback",
                        [n.id],
                        f"fallback outputs {sorted(fallback_out)} do not cover "
                        f"primary outputs {sorted(primary_out)}",
                    )
                )

    # Input satisfaction + reference checking. A fallback node resolves its
    # inputs in its primary's environment.
    for n in g.nodes:
        if not registry.has_tool(n.tool):
            continue
        descriptor = registry.get_tool(n.tool)
        if n.fallback_for is not None and n.fallback_for in upstream:
            env_upstream = upstream[n.fallback_for]
        else:
            env_upstream = upstream.get(n.id, set())
        producers = {
            f.semantic_type
            for u in env_upstream
            if u in node_map and registry.has_tool(node_map[u].tool)
            for f in registry.get_tool(node_map[u].tool).outputs
        }
        for name, value in n.params.items():
            if not is_reference(value):
                continue
            ref = parse_reference(value)
            if ref is None:
                violations.append(
                    Violation("BadReference", [n.id], f"malformed reference '{value}'")
                )
                continue
            src_id, src_field = ref
            if src_id not in env_upstream:
                violations.append(
                    Violation(
                        "BadReference", [n.id], f"'{value}' does not name an upstream node"
                    )
                )
                continue
            src = node_map[src_id]
            if registry.has_tool(src.tool):
                out_names = {f.name for f in registry.get_tool(src.tool).outputs}
                if src_field not in out_names:
                    violations.append(
                        Violation(
                            "BadReference",
                            [n.id],
                            f"'{src_id}' declares no output field '{src_field}'",
                        )
                    )
        for spec in descriptor.inputs:
            if not spec.required:
                continue
            value = n.params.get(spec.name)
            if value is not None and not is_reference(value):
                continue
            if value is not None and is_reference(value):
                continue  # reference problems already reported above
            if spec.semantic_type not in producers:
                violations.append(
                    Violation(
                        "UnsatisfiedInput",
                        [n.id],
                        f"required input '{spec.name}' ({spec.semantic_type}) has no "
                        f"value and no upstream producer",
                    )
                )

    report = ValidationReport(ok=not violations, violations=violations)
    if report.ok:
        g._validated = True
    return report


def topological_order(g: PlanGraph) -> list[str]:
    """Deterministic linear extension; lexicographic tie-break on node id."""
    if not g.validated:
        raise NotValidated("topological_order requires a validated graph")
    indegree = {n.id: 0 for n in g.nodes}
    succ: dict[str, list[str]] = {n.id: [] for n in g.nodes}
    for a, b in g.edges:
        succ[a].append(b)
        indegree[b] += 1
    ready = sorted(n for n, d in indegree.items() if d == 0)
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        changed = False
        for child in succ[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
                changed = True
        if changed:
            ready.sort()
    return order


@dataclass
class NodeAnnotation:
    """Prune verdict for one node; topology is never altered."""

    status: str  # scheduled | skipped_cached | use_fallback | unavailable
    cached_artifact: object = None
    fallback_node: str | None = None
    reason: str = ""


@dataclass
class PrunedPlan:
    graph: PlanGraph
    annotations: dict[str, NodeAnnotation]

    def annotation(self, node_id: str) -> NodeAnnotation:
        return self.annotations[node_id]


def canonical_params(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


def cache_key(tool: str, params: dict) -> tuple[str, str]:
    return (tool, canonical_params(params))


def prune(g: PlanGraph, cache: dict | None = None, availability: dict | None = None) -> PrunedPlan:
    """Annotate cached-skip and fallback-substitution decisions.

    Raises UnskippableUnavailable when an unavailable tool has no declared
    fallback and its outputs feed downstream nodes.
    """
    if not g.validated:
        raise NotValidated("prune requires a validated graph")
    cache = cache or {}
    availability = availability or {}
    fallbacks = {n.fallback_for: n.id for n in g.nodes if n.fallback_for is not None}
    has_downstream = {n.id: False for n in g.nodes}
    for a, _ in g.edges:
        has_downstream[a] = True

    annotations: dict[str, NodeAnnotation] = {}
    for n in g.nodes:
        if n.fallback_for is not None:
            annotations[n.id] = NodeAnnotation(status="scheduled", reason="standby fallback")
            continue
        key = cache_key(n.tool, n.params)
        if n.skip_if_cached and key in cache:
            annotations[n.id] = NodeAnnotation(
                status="skipped_cached", cached_artifact=cache[key], reason="cache hit"
            )
            continue
        if availability.get(n.tool, True):
            annotations[n.id] = NodeAnnotation(status="scheduled")
            continue
        if n.id in fallbacks:
            annotations[n.id] = NodeAnnotation(
                status="use_fallback",
                fallback_node=fallbacks[n.id],
                reason=f"tool '{n.tool}' unavailable",
            )
        elif has_downstream[n.id]:
            raise UnskippableUnavailable(
                f"tool '{n.tool}' (node '{n.id}') is unavailable, has no fallback, "
                f"and downstream nodes depend on it"
            )
        else:
            annotations[n.id] = NodeAnnotation(
                status="unavailable", reason=f"tool '{n.tool}' unavailable"
            )
    return PrunedPlan(graph=g, annotations=annotations)


def preview(g: PlanGraph | PrunedPlan) -> dict:
    """Dry-run plan: ordered nodes with input provenance, zero invocations."""
    if isinstance(g, PrunedPlan):
        pruned, graph = g, g.graph
    else:
        pruned, graph = None, g
    if not graph.validated:
        raise NotValidated("preview requires a validated graph")
    order = topological_order(graph)
    node_map = graph.node_map()
    steps = []
    for node_id in order:
        n = node_map[node_id]
        inputs = {}
        for name, value in n.params.items():
            if is_reference(value):
                inputs[name] = {"source": "upstream", "reference": value}
            else:
                inputs[name] = {"source": "literal", "value": value}
        step = {
            "id": n.id,
            "tool": n.tool,
            "kind": n.kind,
            "inputs": inputs,
            "fallback_for": n.fallback_for,
        }
        if pruned is not None:
            ann = pruned.annotations[node_id]
            step["status"] = ann.status
            if ann.reason:
                step["reason"] = ann.reason
        steps.append(step)
    return {"run_id": graph.run_id, "order": order, "steps": steps}
