"""Descriptors and in-process handlers for the built-in tool suite.

Handlers take (inputs, node_ctx) and return a dict of output fields; they
raise on failure and leave retry/fallback policy to the executor. Spatial
inputs arrive as lon/lat polygons, temporal ones as {"start", "stop"} ISO
dates, exactly as the planner populates them.
"""

from __future__ import annotations

from datetime import date

from . import aquatools as aq
from .errors import NoOverlap
from .registry import FieldSpec, InProcessBinding, ToolDescriptor, ToolRegistry

SCENE_SEARCH = "scene_search"
INDEX_CALCULATOR = "index_calculator"
CHLOROPHYLL_ESTIMATOR = "chlorophyll_estimator"
BLOOM_PREDICTOR = "bloom_predictor"
WEATHER_FETCHER = "weather_fetcher"
CLIMATOLOGY_FALLBACK = "climatology_fallback"
REPORT_GENERATOR = "report_generator"


def builtin_registry(retry_default: int = 2) -> ToolRegistry:
    registry = ToolRegistry()
    descriptors = [
        ToolDescriptor(
            name=SCENE_SEARCH,
            description="Find satellite scenes intersecting the area of interest "
                        "within a date window.",
            inputs=(
                FieldSpec("aoi", "aoi-polygon"),
                FieldSpec("window", "time-window"),
            ),
            outputs=(FieldSpec("scenes", "scene-list"),),
            temporal_scope="interval",
            invocation_contexts=("requires-aoi",),
            binding=InProcessBinding(SCENE_SEARCH),
            retry_default=retry_default,
        ),
        ToolDescriptor(
            name=INDEX_CALCULATOR,
            description="Compute a normalized-difference index (NDCI or NDWI) over "
                        "the best scene and reduce it to a zonal statistic.",
            inputs=(
                FieldSpec("scenes", "scene-list"),
                FieldSpec("aoi", "aoi-polygon"),
                FieldSpec("kind", "document-context", required=False),
                FieldSpec("stat", "document-context", required=False),
            ),
            outputs=(
                FieldSpec("ndci", "ndci-value"),
                FieldSpec("ndwi", "ndwi-value"),
            ),
            temporal_scope="instant",
            invocation_contexts=("requires-aoi",),
            binding=InProcessBinding(INDEX_CALCULATOR),
            retry_default=retry_default,
        ),
        ToolDescriptor(
            name=CHLOROPHYLL_ESTIMATOR,
            description="Estimate chlorophyll-a concentration (ug/L) from an NDCI value.",
            inputs=(FieldSpec("ndci", "ndci-value"),),
            outputs=(FieldSpec("chl_a", "chl-a-ug-per-l"),),
            temporal_scope="instant",
            binding=InProcessBinding(CHLOROPHYLL_ESTIMATOR),
            retry_default=retry_default,
        ),
        ToolDescriptor(
            name=BLOOM_PREDICTOR,
            description="Query the cyanobacteria bloom prediction service for the "
                        "area's centroid at the end of the window.",
            inputs=(
                FieldSpec("aoi", "aoi-polygon"),
                FieldSpec("window", "time-window"),
            ),
            outputs=(FieldSpec("bloom", "bloom-severity"),),
            temporal_scope="instant",
            invocation_contexts=("requires-aoi",),
            binding=InProcessBinding(BLOOM_PREDICTOR),
            retry_default=retry_default,
        ),
        ToolDescriptor(
            name=WEATHER_FETCHER,
            description="Fetch daily temperature, wind and precipitation for the "
                        "area's centroid over the window.",
            inputs=(
                FieldSpec("aoi", "aoi-polygon"),
                FieldSpec("window", "time-window"),
            ),
            outputs=(FieldSpec("weather", "weather-series"),),
            temporal_scope="interval",
            invocation_contexts=("requires-aoi",),
            binding=InProcessBinding(WEATHER_FETCHER),
            retry_default=retry_default,
        ),
        ToolDescriptor(
            name=CLIMATOLOGY_FALLBACK,
            description="Long-term monthly climatology standing in when the live "
                        "weather service is unavailable.",
            inputs=(
                FieldSpec("aoi", "aoi-polygon"),
                FieldSpec("window", "time-window"),
            ),
            outputs=(FieldSpec("weather", "weather-series"),),
            temporal_scope="interval",
            invocation_contexts=("requires-aoi",),
            binding=InProcessBinding(CLIMATOLOGY_FALLBACK),
            retry_default=1,
        ),
        ToolDescriptor(
            name=REPORT_GENERATOR,
            description="Synthesize the final user-adapted report from all results.",
            inputs=(
                FieldSpec("scenes", "scene-list", required=False),
                FieldSpec("ndci", "ndci-value", required=False),
                FieldSpec("ndwi", "ndwi-value", required=False),
                FieldSpec("chl_a", "chl-a-ug-per-l", required=False),
                FieldSpec("bloom", "bloom-severity", required=False),
                FieldSpec("weather", "weather-series", required=False),
                FieldSpec("context", "document-context", required=False),
            ),
            outputs=(FieldSpec("report", "report-text"),),
            temporal_scope="none",
            invocation_contexts=("terminal",),
            binding=InProcessBinding(REPORT_GENERATOR),
            retry_default=1,
        ),
    ]
    for d in descriptors:
        registry.register_tool(d)
    return registry


def _parse_window(value) -> tuple[date, date]:
    return (date.fromisoformat(value["start"]), date.fromisoformat(value["stop"]))


def _centroid_latlon(aoi) -> tuple[float, float]:
    lon, lat = aq.polygon_centroid([tuple(p) for p in aoi])
    return lat, lon


def builtin_handlers(catalog, weather_client, bloom_client,
                     chl_coefficients=aq.DEFAULT_CHL_COEFFICIENTS,
                     bloom_thresholds=aq.DEFAULT_BLOOM_THRESHOLDS) -> dict:
    """In-process handler table keyed by handler id."""

    def scene_search(inputs, ctx):
        scenes = aq.search_scenes(
            [tuple(p) for p in inputs["aoi"]], _parse_window(inputs["window"]), catalog
        )
        return {"scenes": [s.to_dict() for s in scenes]}

    def index_calculator(inputs, ctx):
        records = [aq.SceneRecord.from_dict(d) for d in inputs["scenes"]]
        if not records:
            raise NoOverlap("no scenes available for index computation")
        best = aq.select_best_scene(records)
        kind = inputs.get("kind", "NDCI")
        stat = inputs.get("stat", "mean")
        bands = {
            name: catalog.load_band(best, name) for name in aq.INDEX_BANDS[kind]
        }
        index = aq.compute_index(bands, kind)
        value = aq.zonal_stats(index, [tuple(p) for p in inputs["aoi"]], stat)
        key = "ndci" if kind == "NDCI" else "ndwi"
        return {key: value}

    def chlorophyll(inputs, ctx):
        return {"chl_a": aq.estimate_chlorophyll(inputs["ndci"], chl_coefficients)}

    def bloom(inputs, ctx):
        lat, lon = _centroid_latlon(inputs["aoi"])
        _, stop = _parse_window(inputs["window"])
        prediction = aq.predict_bloom(lat, lon, stop, bloom_client, bloom_thresholds)
        return {"bloom": prediction.to_dict()}

    def weather(inputs, ctx):
        lat, lon = _centroid_latlon(inputs["aoi"])
        series = aq.fetch_weather(lat, lon, _parse_window(inputs["window"]), weather_client)
        return {"weather": series.to_dict()}

    def climatology(inputs, ctx):
        # Deterministic long-term monthly means; independent of live services.
        lat, lon = _centroid_latlon(inputs["aoi"])
        start, stop = _parse_window(inputs["window"])
        monthly_temp = [9, 10, 12, 15, 20, 25, 28, 28, 24, 19, 14, 10]
        samples = []
        day = start
        from datetime import timedelta

        while day <= stop:
            samples.append(
                aq.WeatherSample(
                    date=day,
                    temperature_c=float(monthly_temp[day.month - 1]),
                    wind_speed_ms=3.0,
                    precipitation_mm=1.5,
                )
            )
            day += timedelta(days=1)
        return {"weather": aq.WeatherSeries(lat=lat, lon=lon, samples=samples).to_dict()}

    return {
        SCENE_SEARCH: scene_search,
        INDEX_CALCULATOR: index_calculator,
        CHLOROPHYLL_ESTIMATOR: chlorophyll,
        BLOOM_PREDICTOR: bloom,
        WEATHER_FETCHER: weather,
        CLIMATOLOGY_FALLBACK: climatology,
    }
