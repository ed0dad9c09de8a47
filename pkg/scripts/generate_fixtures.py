"""Regenerate the packaged demo fixtures under src/naiad/data/.

Idempotent and deterministic: gazetteer, mock scene catalog with band
rasters, the limnology knowledge tank, and the seed gold suite.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "naiad" / "data"

import sys

sys.path.insert(0, str(ROOT / "src"))

from naiad.aquatools import RasterGrid, write_raster  # noqa: E402
from naiad.knowledge import Document, KnowledgeStore  # noqa: E402

GAZETTEER = {
    "lysimachia": {
        "polygon": [[21.35, 38.54], [21.42, 38.54], [21.42, 38.58], [21.35, 38.58]],
        "surface_km2": 13.0,
    },
    "trichonida": {
        "polygon": [[21.46, 38.52], [21.64, 38.52], [21.64, 38.59], [21.46, 38.59]],
        "surface_km2": 97.0,
    },
    "mornos": {
        "polygon": [[22.07, 38.48], [22.17, 38.48], [22.17, 38.55], [22.07, 38.55]],
        "surface_km2": 15.5,
    },
}

# Two synthetic Sentinel-2 style tiles: DH covers Lysimachia/Trichonida,
# FH covers the Mornos reservoir.
TILES = {
    "DH": {"origin": (21.3, 38.7), "width": 20, "height": 12,
           "bbox": [21.3, 38.4, 21.8, 38.7]},
    "FH": {"origin": (21.95, 38.7), "width": 16, "height": 14,
           "bbox": [21.95, 38.35, 22.35, 38.7]},
}

SCENES = [
    ("S2A_20240510_DH", "2024-05-10", "DH", 5.0),
    ("S2A_20240603_DH", "2024-06-03", "DH", 12.0),
    ("S2B_20240618_DH", "2024-06-18", "DH", 35.0),
    ("S2A_20240605_FH", "2024-06-05", "FH", 8.0),
    ("S2B_20240620_FH", "2024-06-20", "FH", 55.0),
]

# Constant reflectances chosen for exact index values:
#   NDCI = (B05-B04)/(B05+B04) = 0.02/0.10 = 0.2
#   NDWI = (B03-B08)/(B03+B08) = 0.03/0.07
BAND_VALUES = {"B03": 0.05, "B04": 0.04, "B05": 0.06, "B08": 0.02}

TANK_DOCS = [
    ("lysimachia-overview", "Lake Lysimachia overview",
     "Lake Lysimachia is a shallow eutrophic lake in Aetolia-Acarnania, "
     "western Greece, adjacent to Lake Trichonida. Its shallow depth and "
     "agricultural runoff make it prone to summer algal blooms."),
    ("trichonida-overview", "Lake Trichonida overview",
     "Lake Trichonida is the largest natural lake in Greece by area. It is "
     "deep and oligo-mesotrophic, with generally good water quality, though "
     "nearshore chlorophyll peaks occur in late summer."),
    ("mornos-overview", "Mornos reservoir overview",
     "The Mornos reservoir is an artificial lake supplying drinking water to "
     "Athens. Water quality monitoring there prioritizes cyanobacteria "
     "screening because of its potable use."),
    ("ndci-guidance", "NDCI interpretation guidance",
     "The normalized difference chlorophyll index (NDCI) uses the red-edge "
     "band against red reflectance. Values near zero indicate clear water; "
     "values above 0.2 correspond to elevated chlorophyll-a, and above 0.5 "
     "to dense surface blooms."),
    ("ndwi-guidance", "NDWI interpretation guidance",
     "The normalized difference water index (NDWI) contrasts green and "
     "near-infrared reflectance to delineate open water. Positive values "
     "indicate water surface; values below zero indicate land or vegetation."),
    ("cyanobacteria-thresholds", "Cyanobacteria alert thresholds",
     "WHO recreational guidance treats cyanobacteria densities below 20,000 "
     "cells per milliliter as low concern, 20,000 to 100,000 as moderate, "
     "and above 100,000 cells per milliliter as high severity requiring "
     "public notification."),
]

GOLD = [
    {
        "task_id": "t01-mornos-weather",
        "prompt": "What was the weather like at Lake Mornos between 10 and 12 June 2024? I'm new to this.",
        "expertise": "novice",
        "expected_tools": ["weather_fetcher", "report_generator"],
        "expected_order": ["weather_fetcher", "report_generator"],
        "expected_params": {"water_body_name": "Mornos",
                            "start_date": "2024-06-10", "stop_date": "2024-06-12"},
    },
    {
        "task_id": "t02-trichonida-chl",
        "prompt": "How much chlorophyll was in Lake Trichonida in June 2024?",
        "expertise": "practitioner",
        "expected_tools": ["scene_search", "index_calculator",
                           "chlorophyll_estimator", "report_generator"],
        "expected_order": ["scene_search", "index_calculator",
                           "chlorophyll_estimator", "report_generator"],
        "expected_params": {"water_body_name": "Trichonida",
                            "start_date": "2024-06-01", "stop_date": "2024-06-30"},
    },
    {
        "task_id": "t03-lysimachia-ndci",
        "prompt": "What is the maximum NDCI for Lake Lysimachia in June 2024?",
        "expertise": "practitioner",
        "expected_tools": ["scene_search", "index_calculator", "report_generator"],
        "expected_order": ["scene_search", "index_calculator", "report_generator"],
        "expected_params": {"water_body_name": "Lysimachia",
                            "start_date": "2024-06-01", "stop_date": "2024-06-30"},
    },
    {
        "task_id": "t04-mornos-bloom",
        "prompt": "Is there cyanobacteria bloom risk at Lake Mornos on 15 June 2024?",
        "expertise": "practitioner",
        "expected_tools": ["bloom_predictor", "report_generator"],
        "expected_order": ["bloom_predictor", "report_generator"],
        "expected_params": {"water_body_name": "Mornos",
                            "start_date": "2024-06-15", "stop_date": "2024-06-15"},
    },
    {
        "task_id": "t05-trichonida-bloom-weather",
        "prompt": "Cyanobacteria and weather conditions for Lake Trichonida, first week of June 2024.",
        "expertise": "practitioner",
        "expected_tools": ["bloom_predictor", "weather_fetcher", "report_generator"],
        "expected_order": ["bloom_predictor", "weather_fetcher", "report_generator"],
        "expected_params": {"water_body_name": "Trichonida",
                            "start_date": "2024-06-01", "stop_date": "2024-06-07"},
    },
    {
        "task_id": "t06-lysimachia-ndwi",
        "prompt": "How extensive was the water surface (NDWI) of Lake Lysimachia in June 2024?",
        "expertise": "practitioner",
        "expected_tools": ["scene_search", "index_calculator", "report_generator"],
        "expected_order": ["scene_search", "index_calculator", "report_generator"],
        "expected_params": {"water_body_name": "Lysimachia",
                            "start_date": "2024-06-01", "stop_date": "2024-06-30"},
    },
    {
        "task_id": "t07-trichonida-full",
        "prompt": "Give me the full picture for Lake Trichonida in June 2024: chlorophyll and weather.",
        "expertise": "practitioner",
        "expected_tools": ["scene_search", "index_calculator", "chlorophyll_estimator",
                           "weather_fetcher", "report_generator"],
        "expected_order": ["scene_search", "index_calculator", "chlorophyll_estimator",
                           "weather_fetcher", "report_generator"],
        "expected_params": {"water_body_name": "Trichonida",
                            "start_date": "2024-06-01", "stop_date": "2024-06-30"},
    },
    {
        "task_id": "t08-lysimachia-weather",
        "prompt": "Daily meteorology for the Lake Lysimachia area from 1 to 3 May 2024.",
        "expertise": "expert",
        "expected_tools": ["weather_fetcher", "report_generator"],
        "expected_order": ["weather_fetcher", "report_generator"],
        "expected_params": {"water_body_name": "Lysimachia",
                            "start_date": "2024-05-01", "stop_date": "2024-05-03"},
    },
    {
        "task_id": "t09-mornos-chl",
        "prompt": "Estimate NDCI-based chlorophyll-a for the Mornos reservoir for June 2024.",
        "expertise": "expert",
        "expected_tools": ["scene_search", "index_calculator",
                           "chlorophyll_estimator", "report_generator"],
        "expected_order": ["scene_search", "index_calculator",
                           "chlorophyll_estimator", "report_generator"],
        "expected_params": {"water_body_name": "Mornos",
                            "start_date": "2024-06-01", "stop_date": "2024-06-30"},
    },
    {
        "task_id": "t10-lysimachia-bloom",
        "prompt": "Bloom status for Lake Lysimachia on 20 June 2024.",
        "expertise": "practitioner",
        "expected_tools": ["bloom_predictor", "report_generator"],
        "expected_order": ["bloom_predictor", "report_generator"],
        "expected_params": {"water_body_name": "Lysimachia",
                            "start_date": "2024-06-20", "stop_date": "2024-06-20"},
    },
]


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "rasters").mkdir(exist_ok=True)
    (DATA / "tanks").mkdir(exist_ok=True)

    (DATA / "gazetteer.json").write_text(
        json.dumps(GAZETTEER, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    catalog = []
    for scene_id, day, tile, cloud in SCENES:
        spec = TILES[tile]
        bands = {}
        for band, value in BAND_VALUES.items():
            grid = RasterGrid(
                width=spec["width"], height=spec["height"],
                origin=spec["origin"], pixel_size=0.025,
                values=np.full((spec["height"], spec["width"]), value),
            )
            name = f"{scene_id}_{band}.rst"
            write_raster(grid, DATA / "rasters" / name)
            bands[band] = name
        catalog.append({
            "scene_id": scene_id, "acquisition_date": day, "tile_id": tile,
            "cloud_cover": cloud, "bands": bands, "bbox": spec["bbox"],
        })
    (DATA / "scene_catalog.json").write_text(
        json.dumps(catalog, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    store = KnowledgeStore()
    for doc_id, title, body in TANK_DOCS:
        store.ingest(Document(id=doc_id, tank="limnology", title=title, body=body,
                              origin="curated", date="2024-05-01"))
    store.save_tank("limnology", DATA / "tanks" / "limnology.json")

    with open(DATA / "gold_seed.jsonl", "w", encoding="utf-8") as fh:
        for task in GOLD:
            fh.write(json.dumps(task, sort_keys=True) + "\n")

    print(f"fixtures written under {DATA}")


if __name__ == "__main__":
    main()
