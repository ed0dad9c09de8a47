import json
from datetime import date

import pytest

from naiad.errors import EmptyDataset, EmptyInput, ParseError
from naiad.evaluation import (
    EvalSummary,
    GoldTask,
    ScoreCard,
    aggregate,
    executed_tool_sequence,
    is_subsequence,
    load_gold,
    score_task,
)
from naiad.executor import Artifact, Attempt, ExecutionTrace, TraceEntry
from naiad.planning import QueryParameters


def card(task_id="t", input_c=True, tools_c=True, order_c=True, relevant=True):
    return ScoreCard(task_id, input_c, tools_c, order_c, relevant)


def entry(node_id, tool, resolution="executed", note="", with_artifact=True):
    return TraceEntry(
        node_id=node_id, tool=tool, resolution=resolution, note=note,
        attempts=[Attempt(1, "success" if with_artifact else "failure: x", 0.1)],
        artifact=Artifact(producer=node_id, fields={}, types={}) if with_artifact else None,
    )


# --- gold loading ----------------------------------------------------------------


def write_gold(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")


def test_load_gold_roundtrip(tmp_path):
    path = tmp_path / "gold.jsonl"
    write_gold(path, [{
        "task_id": "t1", "prompt": "weather for lake x",
        "expected_tools": ["weather_fetcher", "report_generator"],
        "expected_order": ["weather_fetcher"],
        "expected_params": {"water_body_name": "X"},
    }])
    tasks = load_gold(path)
    assert tasks[0].expected_tools == {"weather_fetcher", "report_generator"}
    assert tasks[0].expertise == "practitioner"


def test_load_gold_bad_json_names_line(tmp_path):
    path = tmp_path / "gold.jsonl"
    path.write_text('{"task_id": "t1", "prompt": "p"}\n{broken\n')
    with pytest.raises(ParseError, match="line 2") as info:
        load_gold(path)
    assert info.value.line == 2


def test_load_gold_order_must_subset_tools(tmp_path):
    path = tmp_path / "gold.jsonl"
    write_gold(path, [{
        "task_id": "t1", "prompt": "p",
        "expected_tools": ["a"], "expected_order": ["a", "b"],
    }])
    with pytest.raises(ParseError, match="line 1"):
        load_gold(path)


def test_load_gold_empty_file(tmp_path):
    path = tmp_path / "gold.jsonl"
    path.write_text("\n\n")
    with pytest.raises(EmptyDataset):
        load_gold(path)


def test_load_gold_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_gold(tmp_path / "missing.jsonl")


def test_load_gold_blank_prompt(tmp_path):
    path = tmp_path / "gold.jsonl"
    write_gold(path, [{"task_id": "t1", "prompt": "  "}])
    with pytest.raises(ParseError):
        load_gold(path)


# --- sequence extraction ------------------------------------------------------------


def test_executed_tool_sequence_skips_failures():
    trace = ExecutionTrace(run_id="r", entries=[
        entry("n1", "scene_search"),
        entry("n2", "index_calculator", resolution="failed", with_artifact=False),
        entry("n3", "report_generator"),
    ])
    assert executed_tool_sequence(trace) == ["scene_search", "report_generator"]


def test_fallback_counts_as_primary_tool():
    trace = ExecutionTrace(run_id="r", entries=[
        entry("n1", "weather_fetcher", resolution="failed", with_artifact=False),
        entry("fb", "climatology_fallback", resolution="replaced_by_fallback",
              note="replaces:n1"),
        entry("n2", "report_generator"),
    ])
    assert executed_tool_sequence(trace) == ["weather_fetcher", "report_generator"]


def test_skipped_cached_counts():
    trace = ExecutionTrace(run_id="r", entries=[
        entry("n1", "scene_search", resolution="skipped_cached"),
        entry("n2", "report_generator"),
    ])
    assert executed_tool_sequence(trace) == ["scene_search", "report_generator"]


def test_is_subsequence():
    assert is_subsequence([], ["a"])
    assert is_subsequence(["a", "c"], ["a", "b", "c"])
    assert not is_subsequence(["c", "a"], ["a", "b", "c"])
    assert not is_subsequence(["a", "a"], ["a", "b"])


# --- scoring ----------------------------------------------------------------------


def gold():
    return GoldTask(
        task_id="t1", prompt="p",
        expected_tools={"scene_search", "report_generator"},
        expected_order=["scene_search", "report_generator"],
        expected_params={"water_body_name": "Trichonida",
                         "start_date": "2024-06-01", "stop_date": "2024-06-30"},
    )


def good_params():
    return QueryParameters(
        water_body_name="trichonida", aoi=[[0, 0], [1, 0], [1, 1]],
        window=(date(2024, 6, 1), date(2024, 6, 30)),
    )


def good_trace():
    return ExecutionTrace(run_id="t1", status="succeeded", entries=[
        entry("n1", "scene_search"), entry("n2", "report_generator"),
    ])


def test_score_task_all_true():
    c = score_task(gold(), good_params(), good_trace(), relevant=True)
    assert (c.input_correct, c.tools_correct, c.order_correct, c.relevant) == (
        True, True, True, True)
    assert c.anomalies == []


def test_score_water_body_case_insensitive():
    c = score_task(gold(), good_params(), good_trace(), relevant=True)
    assert c.input_correct


def test_score_wrong_window():
    params = good_params()
    params.window = (date(2024, 7, 1), date(2024, 7, 30))
    assert not score_task(gold(), params, good_trace()).input_correct


def test_score_redundant_tool_anomaly():
    trace = good_trace()
    trace.entries.insert(1, entry("nx", "weather_fetcher"))
    c = score_task(gold(), good_params(), trace, relevant=True)
    assert not c.tools_correct
    assert "redundant tool: weather_fetcher" in c.anomalies


def test_score_order_is_subsequence_semantics():
    task = gold()
    task.expected_tools = {"scene_search", "weather_fetcher", "report_generator"}
    trace = good_trace()
    trace.entries.insert(1, entry("nx", "weather_fetcher"))
    c = score_task(task, good_params(), trace)
    assert c.order_correct  # expected_order is still a subsequence


def test_score_downtime_anomaly():
    trace = good_trace()
    trace.entries.append(TraceEntry(
        node_id="n9", tool="bloom_predictor", resolution="failed",
        note="tool 'bloom_predictor' unavailable",
    ))
    c = score_task(gold(), good_params(), trace)
    assert "service downtime: bloom_predictor" in c.anomalies


def test_score_failed_node_anomaly():
    trace = good_trace()
    trace.entries.append(TraceEntry(
        node_id="n9", tool="bloom_predictor", resolution="failed",
        attempts=[Attempt(1, "failure: boom", 0.1)],
    ))
    c = score_task(gold(), good_params(), trace)
    assert "node failed: n9" in c.anomalies


def test_relevant_override():
    task = gold()
    task.relevant_override = False
    c = score_task(task, good_params(), good_trace(), relevant=True)
    assert not c.relevant


# --- aggregation ---------------------------------------------------------------------


def test_aggregate_empty_rejected():
    with pytest.raises(EmptyInput):
        aggregate([])


def test_aggregate_paper_table_figures():
    """39/47 on all three components and 37/47 relevant reproduce the
    published 82.98 / 78.72 after half-up 2-decimal rounding."""
    cards = []
    for i in range(47):
        ok = i < 39
        cards.append(card(f"t{i}", ok, ok, ok, relevant=i < 37))
    summary = aggregate(cards)
    assert summary.correctness_pct == "82.98"
    assert summary.relevancy_pct == "78.72"


def test_aggregate_second_relevancy_figure():
    cards = [card(f"t{i}", relevant=i < 32) for i in range(47)]
    assert aggregate(cards).relevancy_pct == "68.09"


def test_aggregate_half_up_rounding():
    # 1/3 of components true -> 33.333... -> 33.33; 1/8 = 12.5 exactly
    cards = [card("a", True, False, False, False),
             card("b", False, False, False, False),
             card("c", False, False, False, False)]
    assert aggregate(cards).correctness_pct == "11.11"
    cards = [card(str(i), i == 0, i == 0, i == 0, relevant=(i == 0)) for i in range(8)]
    assert aggregate(cards).correctness_pct == "12.50"
    assert aggregate(cards).relevancy_pct == "12.50"


def test_aggregate_rates():
    cards = [card("a"), card("b", input_c=False, relevant=False)]
    s = aggregate(cards, model="m")
    assert s.input_rate == 0.5
    assert s.tool_rate == 1.0
    assert s.relevancy_rate == 0.5
    assert s.model == "m"


def test_render_table_shape():
    s = aggregate([card("a")])
    table = s.render_table()
    lines = table.splitlines()
    assert lines[0].startswith("Model")
    assert "Correctness %" in lines[0]
    assert "100.00" in lines[2]


def test_summary_json_roundtrip():
    s = aggregate([card("a")])
    data = json.loads(s.to_json())
    assert data["n_tasks"] == 1
    assert data["cards"][0]["task_id"] == "a"
