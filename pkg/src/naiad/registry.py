"""Tool registry: structured metadata for every analytical tool.

The planner consults the registry to know what tools exist, what semantic
types they consume and produce, and how edges can be wired between them.
Descriptors are immutable after registration; the registry is read-mostly
and guards registration with a lock.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

from .errors import DuplicateName, InvalidDescriptor, UnknownTool

# Seed vocabulary of semantic type tags. A registry may extend this via
# configuration, but unknown tags at registration time are hard errors.
SEED_VOCABULARY = (
    "aoi-polygon",
    "water-body-name",
    "time-window",
    "scene-list",
    "index-raster",
    "ndci-value",
    "ndwi-value",
    "chl-a-ug-per-l",
    "bloom-severity",
    "weather-series",
    "document-context",
    "report-text",
)

TERMINAL_CONTEXT = "terminal"


@dataclass(frozen=True)
class FieldSpec:
    """One named input or output slot of a tool."""

    name: str
    semantic_type: str
    required: bool = True


@dataclass(frozen=True)
class InProcessBinding:
    handler_id: str


@dataclass(frozen=True)
class RemoteBinding:
    base_url: str
    path: str
    timeout_seconds: float = 30.0


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    inputs: tuple[FieldSpec, ...]
    outputs: tuple[FieldSpec, ...]
    temporal_scope: str = "none"  # instant | interval | none
    invocation_contexts: tuple[str, ...] = ()
    binding: InProcessBinding | RemoteBinding | None = None
    retry_default: int = 2

    def is_terminal(self) -> bool:
        return TERMINAL_CONTEXT in self.invocation_contexts

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "inputs": [
                {"name": f.name, "semantic_type": f.semantic_type, "required": f.required}
                for f in self.inputs
            ],
            "outputs": [
                {"name": f.name, "semantic_type": f.semantic_type, "required": f.required}
                for f in self.outputs
            ],
            "temporal_scope": self.temporal_scope,
            "invocation_contexts": list(self.invocation_contexts),
            "binding": _binding_to_dict(self.binding),
            "retry_default": self.retry_default,
        }


def _binding_to_dict(binding) -> dict | None:
    if binding is None:
        return None
    if isinstance(binding, InProcessBinding):
        return {"kind": "in_process", "handler_id": binding.handler_id}
    return {
        "kind": "remote",
        "base_url": binding.base_url,
        "path": binding.path,
        "timeout_seconds": binding.timeout_seconds,
    }


class ToolRegistry:
    """Holds descriptors and answers I/O-compatibility questions."""

    def __init__(self, vocabulary=SEED_VOCABULARY):
        self._tools: dict[str, ToolDescriptor] = {}
        self._vocabulary = set(vocabulary)
        self._lock = threading.Lock()

    @property
    def vocabulary(self) -> set[str]:
        return set(self._vocabulary)

    def extend_vocabulary(self, tags) -> None:
        with self._lock:
            self._vocabulary.update(tags)

    def register_tool(self, descriptor: ToolDescriptor) -> str:
        """Validate and store a descriptor; returns the tool name as handle."""
        self._check_descriptor(descriptor)
        with self._lock:
            if descriptor.name in self._tools:
                raise DuplicateName(f"tool '{descriptor.name}' already registered")
            self._tools[descriptor.name] = descriptor
        return descriptor.name

    def _check_descriptor(self, d: ToolDescriptor) -> None:
        if not d.name or not d.name.strip():
            raise InvalidDescriptor("descriptor name is empty")
        if d.retry_default < 0:
            raise InvalidDescriptor(f"'{d.name}': retry_default is negative")
        for side, specs in (("inputs", d.inputs), ("outputs", d.outputs)):
            seen = set()
            for f in specs:
                if f.name in seen:
                    raise InvalidDescriptor(
                        f"'{d.name}': duplicate field name '{f.name}' in {side}"
                    )
                seen.add(f.name)
                if f.semantic_type not in self._vocabulary:
                    raise InvalidDescriptor(
                        f"'{d.name}': unknown semantic type '{f.semantic_type}'"
                    )
        if d.is_terminal():
            # Terminal tools may only emit report-text, which no tool consumes.
            bad = [f.semantic_type for f in d.outputs if f.semantic_type != "report-text"]
            if bad:
                raise InvalidDescriptor(
                    f"'{d.name}': terminal tool declares consumable outputs {bad}"
                )
        if any(f.semantic_type == "report-text" for f in d.inputs):
            raise InvalidDescriptor(f"'{d.name}': report-text cannot be a tool input")

    def get_tool(self, name: str) -> ToolDescriptor:
        try:
            return self._tools[name]
        except KeyError:
            raise UnknownTool(f"no tool named '{name}'") from None

    def has_tool(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list[str]:
        return sorted(self._tools)

    def all_tools(self) -> list[ToolDescriptor]:
        return [self._tools[n] for n in sorted(self._tools)]

    def compatible(self, producer: str, consumer: str) -> list[tuple[str, str]]:
        """Every (output field, input field) pair whose semantic types match."""
        p = self.get_tool(producer)
        c = self.get_tool(consumer)
        return [
            (out.name, inp.name)
            for out in p.outputs
            for inp in c.inputs
            if out.semantic_type == inp.semantic_type
        ]

    def render_catalog(self) -> str:
        """Stable JSON catalog of all descriptors, lexicographic by name."""
        return json.dumps([t.to_dict() for t in self.all_tools()], indent=2, sort_keys=True)

    def render_catalog_prose(self) -> str:
        """Human/planner-readable catalog for inclusion in prompts."""
        lines = []
        for t in self.all_tools():
            ins = ", ".join(
                f"{f.name}:{f.semantic_type}{'' if f.required else '?'}" for f in t.inputs
            ) or "none"
            outs = ", ".join(f"{f.name}:{f.semantic_type}" for f in t.outputs) or "none"
            ctx = ", ".join(t.invocation_contexts) or "-"
            lines.append(
                f"- {t.name}: {t.description}\n"
                f"  inputs: {ins}\n  outputs: {outs}\n"
                f"  temporal scope: {t.temporal_scope}; contexts: {ctx}"
            )
        return "\n".join(lines)
