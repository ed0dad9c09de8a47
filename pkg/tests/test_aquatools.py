import math
import random
from datetime import date

import numpy as np
import pytest
from shapely.geometry import Point, Polygon

import naiad.aquatools as aq
from naiad.errors import (
    AllNodata,
    DegenerateAoi,
    InvalidCoordinates,
    InvalidWindow,
    MissingBand,
    NoOverlap,
    OutOfRangeNdci,
    ServiceUnavailable,
    ShapeMismatch,
)

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def grid(values, origin=(0.0, 1.0), pixel_size=0.1, nodata=-9999.0):
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    return aq.RasterGrid(width=w, height=h, origin=origin, pixel_size=pixel_size,
                         values=values, nodata=nodata)


# --- geometry ------------------------------------------------------------------


def test_polygon_area_and_centroid():
    assert aq.polygon_area(SQUARE) == pytest.approx(1.0)
    assert aq.polygon_centroid(SQUARE) == pytest.approx((0.5, 0.5))
    assert aq.polygon_bbox(SQUARE) == (0.0, 0.0, 1.0, 1.0)


def test_check_aoi_rejects_degenerate():
    with pytest.raises(DegenerateAoi):
        aq.check_aoi([(0, 0), (1, 1)])
    with pytest.raises(DegenerateAoi):
        aq.check_aoi([(0, 0), (1, 1), (2, 2)])  # collinear, zero area
    aq.check_aoi(SQUARE)


def test_check_window():
    with pytest.raises(InvalidWindow):
        aq.check_window((date(2024, 6, 2), date(2024, 6, 1)))
    with pytest.raises(InvalidWindow):
        aq.check_window(None)
    aq.check_window((date(2024, 6, 1), date(2024, 6, 1)))


def test_points_in_polygon_matches_shapely():
    rng = random.Random(11)
    for _ in range(50):
        poly = [(rng.uniform(0, 10), rng.uniform(0, 10)) for _ in range(3)]
        if aq.polygon_area(poly) < 1e-9:
            continue
        shp = Polygon(poly)
        xs = np.array([rng.uniform(-1, 11) for _ in range(100)])
        ys = np.array([rng.uniform(-1, 11) for _ in range(100)])
        got = aq.points_in_polygon(xs, ys, poly)
        for x, y, inside in zip(xs, ys, got):
            p = Point(x, y)
            if shp.boundary.distance(p) < 1e-9:
                continue  # boundary points: either verdict acceptable
            assert inside == shp.contains(p)


# --- raster io ---------------------------------------------------------------------


def test_raster_roundtrip(tmp_path):
    g = grid(np.arange(12, dtype=float).reshape(3, 4))
    path = tmp_path / "a.rst"
    aq.write_raster(g, path)
    back = aq.read_raster(path)
    assert (back.width, back.height) == (4, 3)
    assert back.origin == (0.0, 1.0)
    assert np.array_equal(back.values, g.values)


def test_raster_truncated_file_rejected(tmp_path):
    g = grid(np.ones((2, 2)))
    path = tmp_path / "a.rst"
    aq.write_raster(g, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        aq.read_raster(path)


def test_pixel_centers_geometry():
    g = grid(np.zeros((2, 3)), origin=(10.0, 50.0), pixel_size=0.5)
    xs, ys = g.pixel_centers()
    assert xs[0, 0] == pytest.approx(10.25)
    assert ys[0, 0] == pytest.approx(49.75)
    assert xs[1, 2] == pytest.approx(11.25)
    assert ys[1, 0] == pytest.approx(49.25)


# --- index math ----------------------------------------------------------------------


def test_ndci_known_value():
    b05 = grid(np.full((2, 2), 0.06))
    b04 = grid(np.full((2, 2), 0.04))
    out = aq.compute_index({"B05": b05, "B04": b04}, "NDCI")
    assert np.allclose(out.values, 0.2)


def test_index_antisymmetry_and_range():
    rng = np.random.default_rng(3)
    x = grid(rng.uniform(0.0, 1.0, (16, 16)))
    y = grid(rng.uniform(0.0, 1.0, (16, 16)))
    fwd = aq.compute_index({"B05": x, "B04": y}, "NDCI")
    rev = aq.compute_index({"B05": y, "B04": x}, "NDCI")
    valid = fwd.mask_valid() & rev.mask_valid()
    assert np.all(np.abs(fwd.values[valid] + rev.values[valid]) < 1e-12)
    assert np.all(fwd.values[valid] >= -1.0) and np.all(fwd.values[valid] <= 1.0)


def test_index_equal_bands_zero():
    x = grid(np.full((4, 4), 0.3))
    out = aq.compute_index({"B05": x, "B04": grid(np.full((4, 4), 0.3))}, "NDCI")
    assert np.allclose(out.values, 0.0)


def test_index_zero_denominator_is_nodata():
    x = grid(np.array([[0.0, 0.5]]))
    y = grid(np.array([[0.0, 0.5]]))
    y.values[0, 0] = -0.0
    out = aq.compute_index({"B05": x, "B04": y}, "NDCI")
    assert out.values[0, 0] == out.nodata
    assert out.values[0, 1] == 0.0


def test_index_nodata_propagates():
    x = grid(np.array([[0.5, -9999.0]]))
    y = grid(np.array([[0.25, 0.25]]))
    out = aq.compute_index({"B05": x, "B04": y}, "NDCI")
    assert out.values[0, 1] == out.nodata


def test_index_missing_band():
    with pytest.raises(MissingBand):
        aq.compute_index({"B05": grid(np.ones((2, 2)))}, "NDCI")


def test_index_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        aq.compute_index(
            {"B05": grid(np.ones((2, 2))), "B04": grid(np.ones((3, 3)))}, "NDCI"
        )


def test_index_unknown_kind():
    with pytest.raises(ValueError):
        aq.compute_index({}, "NDXI")


def test_ndwi_band_selection():
    b03 = grid(np.full((2, 2), 0.05))
    b08 = grid(np.full((2, 2), 0.02))
    out = aq.compute_index({"B03": b03, "B08": b08}, "NDWI")
    assert np.allclose(out.values, 0.03 / 0.07)


# --- zonal stats ----------------------------------------------------------------------


def zonal_oracle(index, zone, stat):
    """Brute-force loop over pixel centers (shapely-free, 1:1 semantics)."""
    xs, ys = index.pixel_centers()
    vals = []
    for r in range(index.height):
        for c in range(index.width):
            if aq.points_in_polygon(
                np.array([xs[r, c]]), np.array([ys[r, c]]), zone
            )[0] and index.values[r, c] != index.nodata:
                vals.append(index.values[r, c])
    if not vals:
        return None
    return sum(vals) / len(vals) if stat == "mean" else max(vals)


def test_zonal_stats_full_cover():
    g = grid(np.arange(100, dtype=float).reshape(10, 10))
    zone = [(-1, -1), (2, -1), (2, 2), (-1, 2)]
    assert aq.zonal_stats(g, zone, "mean") == pytest.approx(49.5)
    assert aq.zonal_stats(g, zone, "max") == 99.0


def test_zonal_stats_matches_pixel_loop_oracle():
    rng = random.Random(5)
    npr = np.random.default_rng(17)
    for _ in range(40):
        h, w = rng.randint(2, 20), rng.randint(2, 20)
        g = grid(npr.uniform(-1, 1, (h, w)), pixel_size=0.1)
        # random triangle in/around the raster footprint
        tri = [(rng.uniform(-0.5, w * 0.1 + 0.5), rng.uniform(1 - h * 0.1 - 0.5, 1.5))
               for _ in range(3)]
        if aq.polygon_area(tri) < 1e-6:
            continue
        for stat in ("mean", "max"):
            expected = zonal_oracle(g, tri, stat)
            if expected is None:
                with pytest.raises(NoOverlap):
                    aq.zonal_stats(g, tri, stat)
            else:
                got = aq.zonal_stats(g, tri, stat)
                assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_zonal_stats_no_overlap():
    g = grid(np.ones((4, 4)))
    with pytest.raises(NoOverlap):
        aq.zonal_stats(g, [(50, 50), (51, 50), (51, 51)], "mean")


def test_zonal_stats_all_nodata():
    g = grid(np.full((4, 4), -9999.0))
    with pytest.raises(AllNodata):
        aq.zonal_stats(g, SQUARE, "mean")


def test_zonal_stats_bad_stat():
    with pytest.raises(ValueError):
        aq.zonal_stats(grid(np.ones((2, 2))), SQUARE, "median")


# --- scene search -------------------------------------------------------------------


def scene(scene_id, day, cloud, bbox=(0.0, 0.0, 1.0, 1.0)):
    return aq.SceneRecord(
        scene_id=scene_id, acquisition_date=date.fromisoformat(day),
        tile_id="T", cloud_cover=cloud, bands={}, bbox=bbox,
    )


def test_search_scenes_filters_and_sorts():
    catalog = aq.MockSceneCatalog(scenes=[
        scene("s-late", "2024-06-20", 10),
        scene("s-early", "2024-06-01", 20),
        scene("s-outside-window", "2024-07-10", 5),
        scene("s-outside-bbox", "2024-06-10", 5, bbox=(50, 50, 51, 51)),
    ])
    got = aq.search_scenes(SQUARE, (date(2024, 6, 1), date(2024, 6, 30)), catalog)
    assert [s.scene_id for s in got] == ["s-early", "s-late"]


def test_select_best_scene_cloud_then_recency():
    best = aq.select_best_scene([
        scene("a", "2024-06-01", 30),
        scene("b", "2024-06-05", 10),
        scene("c", "2024-06-10", 10),
    ])
    assert best.scene_id == "c"
    with pytest.raises(NoOverlap):
        aq.select_best_scene([])


def test_scene_cloud_cover_bounds():
    with pytest.raises(ValueError):
        scene("bad", "2024-06-01", 130)


def test_scene_record_roundtrip():
    s = scene("a", "2024-06-01", 30)
    assert aq.SceneRecord.from_dict(s.to_dict()) == s


# --- chlorophyll / bloom ---------------------------------------------------------------


def test_chlorophyll_paper_coefficients():
    assert aq.estimate_chlorophyll(0.2) == pytest.approx(39.035)
    assert aq.estimate_chlorophyll(0.0) == pytest.approx(14.039)


def test_chlorophyll_floor_at_zero():
    assert aq.estimate_chlorophyll(-0.9, (0.0, 10.0, 0.0)) == 0.0


def test_chlorophyll_out_of_range():
    for bad in (1.5, -1.01, float("nan")):
        with pytest.raises(OutOfRangeNdci):
            aq.estimate_chlorophyll(bad)


def test_severity_buckets():
    assert aq.severity_for(19_999.9) == "low"
    assert aq.severity_for(20_000) == "moderate"
    assert aq.severity_for(99_999.9) == "moderate"
    assert aq.severity_for(100_000) == "high"


def test_predict_bloom():
    client = aq.StubBloomClient(default_density=150_000)
    p = aq.predict_bloom(38.5, 21.5, date(2024, 6, 15), client)
    assert p.severity == "high"
    assert p.density_cells_per_ml == 150_000


def test_predict_bloom_offline():
    with pytest.raises(ServiceUnavailable):
        aq.predict_bloom(38.5, 21.5, date(2024, 6, 15),
                         aq.StubBloomClient(offline=True))


def test_predict_bloom_bad_coordinates():
    with pytest.raises(InvalidCoordinates):
        aq.predict_bloom(95.0, 21.5, date(2024, 6, 15), aq.StubBloomClient())


# --- weather ---------------------------------------------------------------------------


def test_synthetic_weather_deterministic():
    c = aq.SyntheticWeatherClient()
    w = (date(2024, 6, 10), date(2024, 6, 12))
    a = aq.fetch_weather(38.5, 22.1, w, c)
    b = aq.fetch_weather(38.5, 22.1, w, c)
    assert a.to_dict() == b.to_dict()
    assert len(a.samples) == 3
    assert [s.date.isoformat() for s in a.samples] == [
        "2024-06-10", "2024-06-11", "2024-06-12",
    ]


def test_weather_series_requires_increasing_dates():
    s = aq.WeatherSample(date(2024, 6, 1), 20.0, 3.0, 0.0)
    with pytest.raises(ValueError):
        aq.WeatherSeries(lat=0, lon=0, samples=[s, s])


def test_negative_precipitation_rejected():
    with pytest.raises(ValueError):
        aq.WeatherSample(date(2024, 6, 1), 20.0, 3.0, -0.1)


def test_fetch_weather_validates():
    c = aq.SyntheticWeatherClient()
    with pytest.raises(InvalidCoordinates):
        aq.fetch_weather(100.0, 0.0, (date(2024, 6, 1), date(2024, 6, 2)), c)
    with pytest.raises(InvalidWindow):
        aq.fetch_weather(38.0, 21.0, (date(2024, 6, 2), date(2024, 6, 1)), c)


def test_fixture_weather_client(tmp_path):
    import json

    path = tmp_path / "w.json"
    path.write_text(json.dumps({
        "location": {"lat": 38.5, "lon": 21.5},
        "samples": [
            {"date": "2024-06-01", "temperature_c": 22.0,
             "wind_speed_ms": 3.5, "precipitation_mm": 0.0},
        ],
    }))
    c = aq.FixtureWeatherClient(path)
    series = aq.fetch_weather(38.5, 21.5, (date(2024, 6, 1), date(2024, 6, 1)), c)
    assert series.samples[0].temperature_c == 22.0
    with pytest.raises(ServiceUnavailable):
        c.daily(38.5, 21.5, (date(2025, 1, 1), date(2025, 1, 2)))
