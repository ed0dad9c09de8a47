"""Regenerate frontend/test/fixtures from the scripted engine.

Produces three captures: a clean four-node run, a run where the weather
service is down and the climatology fallback replaces it, and a gold-suite
eval summary.
"""

import json
import shutil
import tempfile
from pathlib import Path

from naiad import fixtures
from naiad.aquatools import MockSceneCatalog, StubBloomClient, SyntheticWeatherClient
from naiad.config import EngineConfig
from naiad.engine import Engine, data_path
from naiad.evaluation import load_gold, run_suite
from naiad.executor import TickClock
from naiad.knowledge import KnowledgeStore
from naiad.planning import Gazetteer
from naiad.providers import RecordingTransport, ScriptRule, ScriptedProvider
from naiad.tools import CLIMATOLOGY_FALLBACK, builtin_handlers, builtin_registry

OUT = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"


def fallback_engine(tmp: Path) -> Engine:
    plan = json.loads(fixtures.weather_plan())
    plan["nodes"].append({
        "id": "n9_clim", "tool": CLIMATOLOGY_FALLBACK, "kind": "retrieval",
        "params": {}, "fallback_for": "n1_weather", "skip_if_cached": False,
    })
    rules = [ScriptRule(stage="plan", match=["mornos", "weather"],
                        response=json.dumps(plan))] + list(fixtures.scripted_rules())
    store = KnowledgeStore()
    store.load_tank(data_path("tanks", "limnology.json"))
    return Engine(
        provider=ScriptedProvider(rules),
        registry=builtin_registry(),
        handlers=builtin_handlers(
            catalog=MockSceneCatalog(path=data_path("scene_catalog.json"),
                                     base_dir=data_path("rasters")),
            weather_client=SyntheticWeatherClient(offline=True),
            bloom_client=StubBloomClient(),
        ),
        gazetteer=Gazetteer.from_file(data_path("gazetteer.json")),
        store=store,
        config=EngineConfig(data_dir=str(tmp), workers=1, retry_delay=0.0),
        transport=RecordingTransport(), clock=TickClock(),
        workers=1, retry_delay=0.0,
    )


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp())
    tasks = load_gold(data_path("gold_seed.jsonl"))

    engine = fallback_engine(tmp)
    engine.run(tasks[0].prompt, run_id="fallback-run")
    for name in ("plan", "trace", "report"):
        shutil.copy(tmp / "runs" / "fallback-run" / f"{name}.json",
                    OUT / f"fallback_{name}.json")

    clean = Engine.scripted(data_dir=tmp / "clean")
    clean.run("How much chlorophyll was in Lake Trichonida in June 2024?",
              run_id="clean-run")
    for name in ("plan", "trace", "report"):
        shutil.copy(tmp / "clean" / "runs" / "clean-run" / f"{name}.json",
                    OUT / f"clean_{name}.json")

    run_suite(tasks, Engine.scripted(data_dir=tmp / "eval"),
              out_dir=tmp / "eval" / "out")
    shutil.copy(tmp / "eval" / "out" / "summary.json", OUT / "eval_summary.json")
    print("wrote", sorted(p.name for p in OUT.iterdir()))


if __name__ == "__main__":
    main()
