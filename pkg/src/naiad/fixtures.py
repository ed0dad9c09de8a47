"""Scripted-provider response tables and demo wiring for hermetic runs.

The rules below drive the packaged 10-task gold suite end to end without
any network or live model: one rewrite, one extraction, and one plan per
prompt, plus catch-all report-section and reflection rules. Rules are
ordered most-specific first; the first match wins.
"""

from __future__ import annotations

import json

from .providers import ScriptRule, ScriptedProvider
from .tools import (
    BLOOM_PREDICTOR,
    CHLOROPHYLL_ESTIMATOR,
    INDEX_CALCULATOR,
    REPORT_GENERATOR,
    SCENE_SEARCH,
    WEATHER_FETCHER,
)


def _node(node_id, tool, kind="transformation", params=None, fallback_for=None,
          skip_if_cached=False):
    return {
        "id": node_id, "tool": tool, "kind": kind, "params": params or {},
        "fallback_for": fallback_for, "skip_if_cached": skip_if_cached,
    }


def _plan(nodes, edges):
    return json.dumps({"nodes": nodes, "edges": edges})


def weather_plan() -> str:
    return _plan(
        [
            _node("n1_weather", WEATHER_FETCHER, "retrieval"),
            _node("n2_report", REPORT_GENERATOR, "report"),
        ],
        [["n1_weather", "n2_report"]],
    )


def bloom_plan() -> str:
    return _plan(
        [
            _node("n1_bloom", BLOOM_PREDICTOR, "retrieval"),
            _node("n2_report", REPORT_GENERATOR, "report"),
        ],
        [["n1_bloom", "n2_report"]],
    )


def bloom_weather_plan() -> str:
    return _plan(
        [
            _node("n1_bloom", BLOOM_PREDICTOR, "retrieval"),
            _node("n2_weather", WEATHER_FETCHER, "retrieval"),
            _node("n3_report", REPORT_GENERATOR, "report"),
        ],
        [["n1_bloom", "n3_report"], ["n2_weather", "n3_report"]],
    )


def index_plan(kind: str, stat: str) -> str:
    return _plan(
        [
            _node("n1_scenes", SCENE_SEARCH, "retrieval"),
            _node("n2_index", INDEX_CALCULATOR, params={"kind": kind, "stat": stat}),
            _node("n3_report", REPORT_GENERATOR, "report"),
        ],
        [["n1_scenes", "n2_index"], ["n2_index", "n3_report"]],
    )


def chlorophyll_plan() -> str:
    return _plan(
        [
            _node("n1_scenes", SCENE_SEARCH, "retrieval"),
            _node("n2_index", INDEX_CALCULATOR, params={"kind": "NDCI", "stat": "mean"}),
            _node("n3_chl", CHLOROPHYLL_ESTIMATOR),
            _node("n4_report", REPORT_GENERATOR, "report"),
        ],
        [["n1_scenes", "n2_index"], ["n2_index", "n3_chl"], ["n3_chl", "n4_report"]],
    )


def full_assessment_plan() -> str:
    return _plan(
        [
            _node("n1_scenes", SCENE_SEARCH, "retrieval"),
            _node("n2_index", INDEX_CALCULATOR, params={"kind": "NDCI", "stat": "mean"}),
            _node("n3_chl", CHLOROPHYLL_ESTIMATOR),
            _node("n4_weather", WEATHER_FETCHER, "retrieval"),
            _node("n5_report", REPORT_GENERATOR, "report"),
        ],
        [
            ["n1_scenes", "n2_index"], ["n2_index", "n3_chl"],
            ["n3_chl", "n5_report"], ["n4_weather", "n5_report"],
        ],
    )


def _extraction(name, start, stop, expertise) -> str:
    return json.dumps(
        {
            "water_body_name": name,
            "lat_lon_polygon": None,
            "start_date": start,
            "stop_date": stop,
            "expertise": expertise,
        }
    )


# (match tokens, rewrite, extraction, plan) per gold task. Tokens must occur
# in both the original prompt and the rewritten query.
_TASK_SCRIPTS = [
    (
        ["trichonida", "chlorophyll", "weather"],
        "Provide a chlorophyll-a estimate and daily weather context for Lake "
        "Trichonida over 2024-06-01 to 2024-06-30.",
        _extraction("Trichonida", "2024-06-01", "2024-06-30", "practitioner"),
        full_assessment_plan(),
    ),
    (
        ["trichonida", "chlorophyll"],
        "Estimate the mean chlorophyll-a concentration for Lake Trichonida "
        "during 2024-06-01 to 2024-06-30.",
        _extraction("Trichonida", "2024-06-01", "2024-06-30", "practitioner"),
        chlorophyll_plan(),
    ),
    (
        ["trichonida", "cyanobacteria"],
        "Assess cyanobacteria bloom severity and daily weather for Lake "
        "Trichonida from 2024-06-01 to 2024-06-07.",
        _extraction("Trichonida", "2024-06-01", "2024-06-07", "practitioner"),
        bloom_weather_plan(),
    ),
    (
        ["mornos", "weather"],
        "Summarize daily weather conditions (temperature, wind, precipitation) "
        "for Lake Mornos from 2024-06-10 to 2024-06-12.",
        _extraction("Mornos", "2024-06-10", "2024-06-12", "novice"),
        weather_plan(),
    ),
    (
        ["mornos", "cyanobacteria"],
        "Assess cyanobacteria bloom risk for Lake Mornos on 2024-06-15.",
        _extraction("Mornos", "2024-06-15", "2024-06-15", "practitioner"),
        bloom_plan(),
    ),
    (
        ["mornos", "chlorophyll"],
        "Estimate chlorophyll-a concentration from NDCI for Lake Mornos over "
        "2024-06-01 to 2024-06-30.",
        _extraction("Mornos", "2024-06-01", "2024-06-30", "expert"),
        chlorophyll_plan(),
    ),
    (
        ["lysimachia", "ndci"],
        "Compute the maximum NDCI for Lake Lysimachia during 2024-06-01 to "
        "2024-06-30.",
        _extraction("Lysimachia", "2024-06-01", "2024-06-30", "practitioner"),
        index_plan("NDCI", "max"),
    ),
    (
        ["lysimachia", "ndwi"],
        "Compute the mean NDWI water-extent index for Lake Lysimachia during "
        "2024-06-01 to 2024-06-30.",
        _extraction("Lysimachia", "2024-06-01", "2024-06-30", "practitioner"),
        index_plan("NDWI", "mean"),
    ),
    (
        ["lysimachia", "meteorolog"],
        "Report daily meteorology (temperature, wind speed, precipitation) for "
        "Lake Lysimachia from 2024-05-01 to 2024-05-03.",
        _extraction("Lysimachia", "2024-05-01", "2024-05-03", "expert"),
        weather_plan(),
    ),
    (
        ["lysimachia", "bloom"],
        "Assess cyanobacteria bloom severity for Lake Lysimachia on 2024-06-20.",
        _extraction("Lysimachia", "2024-06-20", "2024-06-20", "practitioner"),
        bloom_plan(),
    ),
]

SECTION_PROSE = (
    "These values come straight from the executed analysis steps; see the "
    "listed source nodes for provenance."
)

ALL_CLEAR_VERDICT = json.dumps({"relevant": True, "revise": False, "issues": []})


def scripted_rules() -> list[ScriptRule]:
    rules: list[ScriptRule] = []
    for tokens, rewritten, extraction, plan in _TASK_SCRIPTS:
        rules.append(ScriptRule(stage="rewrite", match=tokens, response=rewritten))
        rules.append(ScriptRule(stage="extract", match=tokens, response=extraction))
        rules.append(ScriptRule(stage="plan", match=tokens, response=plan))
    rules.append(ScriptRule(stage="report-section", response=SECTION_PROSE))
    rules.append(ScriptRule(stage="revise", response=SECTION_PROSE))
    rules.append(ScriptRule(stage="reflect", response=ALL_CLEAR_VERDICT))
    return rules


def scripted_provider() -> ScriptedProvider:
    return ScriptedProvider(scripted_rules())
