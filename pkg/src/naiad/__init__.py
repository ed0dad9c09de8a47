"""naiad: agentic workflow orchestration for inland-water quality monitoring."""

from .config import EngineConfig
from .engine import Engine, RunResult
from .errors import NaiadError
from .registry import FieldSpec, InProcessBinding, RemoteBinding, ToolDescriptor, ToolRegistry
from .workflow import PlanGraph, PlanNode, validate

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "EngineConfig",
    "FieldSpec",
    "InProcessBinding",
    "NaiadError",
    "PlanGraph",
    "PlanNode",
    "RemoteBinding",
    "RunResult",
    "ToolDescriptor",
    "ToolRegistry",
    "validate",
    "__version__",
]
