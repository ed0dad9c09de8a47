import pytest

from naiad.registry import FieldSpec, InProcessBinding, ToolDescriptor, ToolRegistry


def make_tool(name, inputs=(), outputs=(), terminal=False, retry_default=2):
    """Small helper for synthetic tools in graph/executor tests."""
    return ToolDescriptor(
        name=name,
        description=f"synthetic tool {name}",
        inputs=tuple(FieldSpec(n, t, required=req) for n, t, req in inputs),
        outputs=tuple(FieldSpec(n, t) for n, t in outputs),
        invocation_contexts=("terminal",) if terminal else (),
        binding=InProcessBinding(name),
        retry_default=retry_default,
    )


@pytest.fixture
def toy_registry():
    """source -> transform -> report, on generic semantic types."""
    r = ToolRegistry()
    r.register_tool(make_tool(
        "source", outputs=[("data", "scene-list")],
    ))
    r.register_tool(make_tool(
        "transform",
        inputs=[("data", "scene-list", True)],
        outputs=[("value", "ndci-value")],
    ))
    r.register_tool(make_tool(
        "alt_transform",
        inputs=[("data", "scene-list", True)],
        outputs=[("value", "ndci-value")],
    ))
    r.register_tool(make_tool(
        "finish",
        inputs=[("value", "ndci-value", False), ("data", "scene-list", False)],
        outputs=[("report", "report-text")],
        terminal=True,
    ))
    return r


@pytest.fixture
def scripted_engine(tmp_path):
    from naiad.engine import Engine

    return Engine.scripted(data_dir=tmp_path / "naiad-data")
