"""Built-in analytical tools for inland-water monitoring.

Scene search against a catalog client, normalized-difference index math,
zonal statistics over vector zones, chlorophyll-a estimation from NDCI,
bloom-prediction and weather clients. All computations are pure over
immutable inputs; the clients are small contracts with file/deterministic
stubs and remote HTTP implementations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    AllNodata,
    CatalogUnavailable,
    DegenerateAoi,
    InvalidCoordinates,
    InvalidWindow,
    MissingBand,
    NoOverlap,
    OutOfRangeNdci,
    ServiceUnavailable,
    ShapeMismatch,
)
from .providers import Transport

INDEX_BANDS = {"NDCI": ("B05", "B04"), "NDWI": ("B03", "B08")}

# Quadratic chl-a(NDCI) defaults from the standard NDCI calibration literature.
DEFAULT_CHL_COEFFICIENTS = (14.039, 86.115, 194.325)

# cells/mL boundaries: below first -> low, below second -> moderate, else high.
DEFAULT_BLOOM_THRESHOLDS = (20_000, 100_000)


# --- geometry helpers --------------------------------------------------------

def polygon_area(polygon: list[tuple[float, float]]) -> float:
    """Shoelace area in squared degrees (sign dropped)."""
    n = len(polygon)
    acc = 0.0
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def polygon_centroid(polygon: list[tuple[float, float]]) -> tuple[float, float]:
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def polygon_bbox(polygon) -> tuple[float, float, float, float]:
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    return (min(xs), min(ys), max(xs), max(ys))


def check_aoi(aoi) -> None:
    if aoi is None or len(aoi) < 3 or polygon_area(aoi) <= 0.0:
        raise DegenerateAoi("AOI must have >= 3 vertices and nonzero area")


def check_window(window) -> None:
    if window is None:
        raise InvalidWindow("window is missing")
    start, stop = window
    if start > stop:
        raise InvalidWindow(f"window start {start} is after stop {stop}")


def points_in_polygon(xs: np.ndarray, ys: np.ndarray, polygon) -> np.ndarray:
    """Vectorized even-odd ray casting; True where (x, y) is inside."""
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        crosses = (y1 > ys) != (y2 > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (ys - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (xs < x_at)
    return inside


# --- rasters -----------------------------------------------------------------

@dataclass
class RasterGrid:
    width: int
    height: int
    origin: tuple[float, float]  # (lon, lat) of the top-left corner
    pixel_size: float            # degrees; pixels step +lon, -lat
    values: np.ndarray           # shape (height, width), float64
    nodata: float = -9999.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(
            self.height, self.width
        )

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        lon0, lat0 = self.origin
        cols = lon0 + (np.arange(self.width) + 0.5) * self.pixel_size
        rows = lat0 - (np.arange(self.height) + 0.5) * self.pixel_size
        return np.meshgrid(cols, rows)

    def mask_valid(self) -> np.ndarray:
        return self.values != self.nodata


def write_raster(grid: RasterGrid, path: str | Path) -> None:
    """Fixture format: one JSON header line, then row-major float64 LE."""
    header = {
        "width": grid.width,
        "height": grid.height,
        "origin": list(grid.origin),
        "pixel_size": grid.pixel_size,
        "nodata": grid.nodata,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(grid.values.astype("<f8").tobytes())


def read_raster(path: str | Path) -> RasterGrid:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    values = np.frombuffer(raw, dtype="<f8").copy()
    expected = header["width"] * header["height"]
    if values.size != expected:
        raise ValueError(f"raster '{path}': expected {expected} values, got {values.size}")
    return RasterGrid(
        width=header["width"],
        height=header["height"],
        origin=tuple(header["origin"]),
        pixel_size=header["pixel_size"],
        values=values,
        nodata=header.get("nodata", -9999.0),
    )


# --- scene search ------------------------------------------------------------

@dataclass
class SceneRecord:
    scene_id: str
    acquisition_date: date
    tile_id: str
    cloud_cover: float
    bands: dict          # band name -> file locator
    bbox: tuple[float, float, float, float]  # (min_lon, min_lat, max_lon, max_lat)

    def __post_init__(self):
        if not 0.0 <= self.cloud_cover <= 100.0:
            raise ValueError(f"scene '{self.scene_id}': cloud cover out of [0, 100]")

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "acquisition_date": self.acquisition_date.isoformat(),
            "tile_id": self.tile_id,
            "cloud_cover": self.cloud_cover,
            "bands": dict(self.bands),
            "bbox": list(self.bbox),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneRecord":
        return cls(
            scene_id=data["scene_id"],
            acquisition_date=date.fromisoformat(data["acquisition_date"]),
            tile_id=data["tile_id"],
            cloud_cover=float(data["cloud_cover"]),
            bands=dict(data["bands"]),
            bbox=tuple(data["bbox"]),
        )


class MockSceneCatalog:
    """File-backed catalog: a JSON array of SceneRecord objects."""

    def __init__(self, path: str | Path | None = None, scenes: list[SceneRecord] | None = None,
                 base_dir: str | Path | None = None):
        if scenes is not None:
            self.scenes = list(scenes)
        elif path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            self.scenes = [SceneRecord.from_dict(d) for d in data]
            if base_dir is None:
                base_dir = Path(path).parent
        else:
            self.scenes = []
        self.base_dir = Path(base_dir) if base_dir is not None else None

    def search(self, bbox, window) -> list[SceneRecord]:
        start, stop = window
        hits = []
        for s in self.scenes:
            if not (start <= s.acquisition_date <= stop):
                continue
            sx0, sy0, sx1, sy1 = s.bbox
            bx0, by0, bx1, by1 = bbox
            if sx0 > bx1 or bx0 > sx1 or sy0 > by1 or by0 > sy1:
                continue
            hits.append(s)
        return hits

    def load_band(self, scene: SceneRecord, band: str) -> RasterGrid:
        try:
            locator = scene.bands[band]
        except KeyError:
            raise MissingBand(f"scene '{scene.scene_id}' has no band '{band}'") from None
        path = Path(locator)
        if self.base_dir is not None and not path.is_absolute():
            path = self.base_dir / path
        return read_raster(path)


class RemoteSceneCatalog:
    """Search-API client behind the same contract as the mock catalog."""

    def __init__(self, endpoint: str, transport: Transport | None = None,
                 timeout: float = 30.0):
        self.endpoint = endpoint
        self.transport = transport or Transport()
        self.timeout = timeout

    def search(self, bbox, window) -> list[SceneRecord]:
        payload = {
            "bbox": list(bbox),
            "start": window[0].isoformat(),
            "stop": window[1].isoformat(),
        }
        try:
            body = self.transport.post_json(self.endpoint, payload, timeout=self.timeout)
        except ConnectionError as exc:
            raise CatalogUnavailable(str(exc)) from exc
        return [SceneRecord.from_dict(d) for d in body.get("scenes", [])]

    def load_band(self, scene: SceneRecord, band: str) -> RasterGrid:
        raise CatalogUnavailable("remote catalog does not serve band rasters directly")


def search_scenes(aoi, window, catalog) -> list[SceneRecord]:
    """All catalog scenes intersecting the AOI within the window, date-ordered."""
    check_aoi(aoi)
    check_window(window)
    scenes = catalog.search(polygon_bbox(aoi), window)
    return sorted(scenes, key=lambda s: (s.acquisition_date, s.scene_id))


def select_best_scene(scenes: list[SceneRecord]) -> SceneRecord:
    """Lowest cloud cover wins; most recent breaks ties."""
    if not scenes:
        raise NoOverlap("no scenes to select from")
    return min(scenes, key=lambda s: (s.cloud_cover, -s.acquisition_date.toordinal()))


# --- index math ---------------------------------------------------------------

def compute_index(bands: dict[str, RasterGrid], kind: str) -> RasterGrid:
    """Per-pixel normalized difference (x - y) / (x + y) for NDCI or NDWI."""
    if kind not in INDEX_BANDS:
        raise ValueError(f"unknown index kind '{kind}'")
    x_name, y_name = INDEX_BANDS[kind]
    for name in (x_name, y_name):
        if name not in bands:
            raise MissingBand(f"{kind} requires band {name}")
    x, y = bands[x_name], bands[y_name]
    if (x.width, x.height) != (y.width, y.height) or x.origin != y.origin \
            or x.pixel_size != y.pixel_size:
        raise ShapeMismatch(f"{x_name} and {y_name} grids do not align")
    nodata = -9999.0
    valid = x.mask_valid() & y.mask_valid()
    denom = x.values + y.values
    safe = valid & (denom != 0.0)
    out = np.full_like(x.values, nodata)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[safe] = (x.values[safe] - y.values[safe]) / denom[safe]
    return RasterGrid(
        width=x.width, height=x.height, origin=x.origin,
        pixel_size=x.pixel_size, values=out, nodata=nodata,
    )


def zonal_stats(index: RasterGrid, zone, stat: str) -> float:
    """Mean or max over valid pixels whose centers fall inside the zone."""
    if stat not in ("mean", "max"):
        raise ValueError(f"unknown statistic '{stat}'")
    check_aoi(zone)
    xs, ys = index.pixel_centers()
    selected = points_in_polygon(xs, ys, zone)
    if not selected.any():
        raise NoOverlap("zone selects zero pixels")
    values = index.values[selected]
    valid = values != index.nodata
    if not valid.any():
        raise AllNodata("every selected pixel is nodata")
    values = values[valid]
    return float(values.mean() if stat == "mean" else values.max())


# --- chlorophyll --------------------------------------------------------------

def estimate_chlorophyll(ndci: float, coefficients=DEFAULT_CHL_COEFFICIENTS) -> float:
    """chl-a (ug/L) = max(0, c0 + c1*ndci + c2*ndci^2)."""
    if not math.isfinite(ndci) or not -1.0 <= ndci <= 1.0:
        raise OutOfRangeNdci(f"NDCI {ndci} outside [-1, 1]")
    c0, c1, c2 = coefficients
    return max(0.0, c0 + c1 * ndci + c2 * ndci * ndci)


# --- bloom prediction -----------------------------------------------------------

@dataclass
class BloomPrediction:
    lat: float
    lon: float
    date: date
    density_cells_per_ml: float
    severity: str  # low | moderate | high

    def to_dict(self) -> dict:
        return {
            "lat": self.lat,
            "lon": self.lon,
            "date": self.date.isoformat(),
            "density_cells_per_ml": self.density_cells_per_ml,
            "severity": self.severity,
        }


def severity_for(density: float, thresholds=DEFAULT_BLOOM_THRESHOLDS) -> str:
    low_cut, high_cut = thresholds
    if density < low_cut:
        return "low"
    if density < high_cut:
        return "moderate"
    return "high"


class StubBloomClient:
    """Deterministic bloom densities; optionally scripted offline."""

    def __init__(self, densities: dict | None = None, default_density: float = 12_000.0,
                 offline: bool = False):
        self.densities = densities or {}
        self.default_density = default_density
        self.offline = offline

    def predict(self, lat: float, lon: float, when: date) -> float:
        if self.offline:
            raise ServiceUnavailable("bloom service is offline")
        key = (round(lat, 2), round(lon, 2), when.isoformat())
        if key in self.densities:
            return self.densities[key]
        return self.default_density


class HttpBloomClient:
    """POST {lat, lon, date} -> {density_cells_per_ml, severity}."""

    def __init__(self, endpoint: str, transport: Transport | None = None,
                 timeout: float = 30.0):
        self.endpoint = endpoint
        self.transport = transport or Transport()
        self.timeout = timeout

    def predict(self, lat: float, lon: float, when: date) -> float:
        payload = {"lat": lat, "lon": lon, "date": when.isoformat()}
        try:
            body = self.transport.post_json(self.endpoint, payload, timeout=self.timeout)
        except ConnectionError as exc:
            raise ServiceUnavailable(str(exc)) from exc
        return float(body["density_cells_per_ml"])


def predict_bloom(lat: float, lon: float, when: date, client,
                  thresholds=DEFAULT_BLOOM_THRESHOLDS) -> BloomPrediction:
    if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
        raise InvalidCoordinates(f"({lat}, {lon}) outside valid ranges")
    density = float(client.predict(lat, lon, when))
    if density < 0:
        raise ValueError(f"negative bloom density {density}")
    return BloomPrediction(
        lat=lat, lon=lon, date=when,
        density_cells_per_ml=density,
        severity=severity_for(density, thresholds),
    )


# --- weather ----------------------------------------------------------------------

@dataclass
class WeatherSample:
    date: date
    temperature_c: float
    wind_speed_ms: float
    precipitation_mm: float

    def __post_init__(self):
        if self.precipitation_mm < 0:
            raise ValueError(f"{self.date}: negative precipitation")

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "temperature_c": self.temperature_c,
            "wind_speed_ms": self.wind_speed_ms,
            "precipitation_mm": self.precipitation_mm,
        }


@dataclass
class WeatherSeries:
    lat: float
    lon: float
    samples: list[WeatherSample] = field(default_factory=list)

    def __post_init__(self):
        for prev, cur in zip(self.samples, self.samples[1:]):
            if cur.date <= prev.date:
                raise ValueError("weather sample dates must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "location": {"lat": self.lat, "lon": self.lon},
            "samples": [s.to_dict() for s in self.samples],
        }


class SyntheticWeatherClient:
    """Deterministic daily weather derived from location and date only."""

    def __init__(self, offline: bool = False):
        self.offline = offline

    def daily(self, lat: float, lon: float, window) -> list[WeatherSample]:
        if self.offline:
            raise ServiceUnavailable("weather service is offline")
        start, stop = window
        samples = []
        day = start
        while day <= stop:
            seed = (day.toordinal() * 31 + int(lat * 100) * 7 + int(lon * 100) * 3) % 1000
            samples.append(
                WeatherSample(
                    date=day,
                    temperature_c=round(12.0 + (seed % 180) / 10.0, 1),
                    wind_speed_ms=round(1.0 + (seed % 70) / 10.0, 1),
                    precipitation_mm=round((seed % 50) / 10.0, 1),
                )
            )
            day += timedelta(days=1)
        return samples


class FixtureWeatherClient:
    """File-backed stub: JSON {location, samples:[...]}, parse-validated."""

    def __init__(self, path: str | Path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        loc = data["location"]
        self.lat, self.lon = float(loc["lat"]), float(loc["lon"])
        self.samples = [
            WeatherSample(
                date=date.fromisoformat(s["date"]),
                temperature_c=float(s["temperature_c"]),
                wind_speed_ms=float(s["wind_speed_ms"]),
                precipitation_mm=float(s["precipitation_mm"]),
            )
            for s in data["samples"]
        ]

    def daily(self, lat: float, lon: float, window) -> list[WeatherSample]:
        start, stop = window
        hits = [s for s in self.samples if start <= s.date <= stop]
        if not hits:
            raise ServiceUnavailable(
                f"fixture has no samples for {start}..{stop}"
            )
        return hits


class HttpWeatherClient:
    """POST {lat, lon, start, stop} -> {samples:[...]}."""

    def __init__(self, endpoint: str, transport: Transport | None = None,
                 timeout: float = 30.0):
        self.endpoint = endpoint
        self.transport = transport or Transport()
        self.timeout = timeout

    def daily(self, lat: float, lon: float, window) -> list[WeatherSample]:
        payload = {
            "lat": lat, "lon": lon,
            "start": window[0].isoformat(), "stop": window[1].isoformat(),
        }
        try:
            body = self.transport.post_json(self.endpoint, payload, timeout=self.timeout)
        except ConnectionError as exc:
            raise ServiceUnavailable(str(exc)) from exc
        return [
            WeatherSample(
                date=date.fromisoformat(s["date"]),
                temperature_c=float(s["temperature_c"]),
                wind_speed_ms=float(s["wind_speed_ms"]),
                precipitation_mm=float(s["precipitation_mm"]),
            )
            for s in body.get("samples", [])
        ]


def fetch_weather(lat: float, lon: float, window, client) -> WeatherSeries:
    if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
        raise InvalidCoordinates(f"({lat}, {lon}) outside valid ranges")
    check_window(window)
    samples = client.daily(lat, lon, window)
    return WeatherSeries(lat=lat, lon=lon, samples=list(samples))
