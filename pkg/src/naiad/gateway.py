"""HTTP service exposing query submission, run inspection, ingestion and eval.

Query submission is asynchronous: POST /query returns 202 with a run id and
the run proceeds on a background thread; clients poll GET /runs/{id} and
fetch plan/trace/report as they land on disk. Everything is persisted under
the engine's data directory — no database.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .engine import Engine, data_path
from .errors import NaiadError, PortInUse
from .evaluation import load_gold, run_suite
from .knowledge import Document
from .planning import new_run_id


class _Runs:
    """Thread-safe in-memory status board backing the polling endpoints."""

    def __init__(self):
        self._lock = threading.Lock()
        self._status: dict[str, dict] = {}

    def set(self, run_id: str, **fields) -> None:
        with self._lock:
            self._status.setdefault(run_id, {"run_id": run_id}).update(fields)

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            entry = self._status.get(run_id)
            return dict(entry) if entry else None


def _read_json(path: Path):
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="naiad gateway")
    runs = _Runs()
    evals = _Runs()
    app.state.engine = engine
    app.state.runs = runs

    def run_dir(run_id: str) -> Path:
        return engine.data_dir / "runs" / run_id

    def _background_run(prompt: str, expertise: str | None, run_id: str) -> None:
        try:
            result = engine.run(prompt, expertise=expertise, run_id=run_id)
            runs.set(run_id, status=result.trace.status)
        except Exception as exc:
            runs.set(run_id, status="failed", error=str(exc))

    @app.exception_handler(NaiadError)
    async def naiad_error_handler(request, exc: NaiadError):
        return JSONResponse(
            status_code=400, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "tools": len(engine.registry.names()),
            "tanks": len(engine.store.tanks()),
        }

    @app.get("/tools")
    def tools():
        return json.loads(engine.registry.render_catalog())

    @app.post("/query", status_code=202)
    def submit_query(body: dict):
        prompt = (body or {}).get("prompt", "")
        if not prompt or not prompt.strip():
            return JSONResponse(status_code=422, content={"error": "EmptyQuery",
                                                          "detail": "prompt is required"})
        run_id = new_run_id()
        runs.set(run_id, status="running")
        t = threading.Thread(
            target=_background_run, args=(prompt, body.get("expertise"), run_id),
            daemon=True,
        )
        t.start()
        return {"run_id": run_id}

    @app.get("/runs/{run_id}")
    def run_status(run_id: str):
        entry = runs.get(run_id)
        if entry is None:
            trace = _read_json(run_dir(run_id) / "trace.json")
            if trace is None:
                return JSONResponse(status_code=404, content={"error": "NotFound",
                                                              "detail": run_id})
            entry = {"run_id": run_id, "status": trace["status"]}
        return entry

    def _run_file(run_id: str, name: str):
        data = _read_json(run_dir(run_id) / name)
        if data is None:
            known = runs.get(run_id)
            code = 409 if known and known.get("status") == "running" else 404
            return JSONResponse(
                status_code=code,
                content={"error": "NotFound" if code == 404 else "Pending",
                         "detail": f"{run_id}/{name}"},
            )
        return data

    @app.get("/runs/{run_id}/plan")
    def run_plan(run_id: str):
        return _run_file(run_id, "plan.json")

    @app.get("/runs/{run_id}/trace")
    def run_trace(run_id: str):
        return _run_file(run_id, "trace.json")

    @app.get("/runs/{run_id}/report")
    def run_report(run_id: str):
        return _run_file(run_id, "report.json")

    @app.post("/documents")
    def ingest_documents(body: dict):
        tank = (body or {}).get("tank", "")
        docs = (body or {}).get("docs", [])
        if not tank or not isinstance(docs, list):
            return JSONResponse(status_code=422, content={"error": "BadRequest",
                                                          "detail": "tank and docs[] required"})
        ingested = []
        for d in docs:
            doc = Document(
                id=d["id"], tank=tank, title=d.get("title", ""), body=d.get("body", ""),
                origin=d.get("origin", ""), date=d.get("date", ""),
            )
            ingested.append(engine.store.ingest(doc))
        return {"tank": tank, "ingested": ingested}

    def _background_eval(gold_path: str, eval_id: str) -> None:
        try:
            tasks = load_gold(gold_path)
            out_dir = engine.data_dir / "evals" / eval_id
            summary = run_suite(tasks, engine, out_dir=out_dir)
            evals.set(eval_id, status="succeeded", summary=summary.to_dict())
        except Exception as exc:
            evals.set(eval_id, status="failed", error=str(exc))

    @app.post("/eval", status_code=202)
    def submit_eval(body: dict):
        gold_path = (body or {}).get("gold_path") or str(data_path("gold_seed.jsonl"))
        eval_id = new_run_id()
        evals.set(eval_id, status="running")
        t = threading.Thread(target=_background_eval, args=(gold_path, eval_id), daemon=True)
        t.start()
        return {"eval_id": eval_id}

    @app.get("/eval/{eval_id}")
    def eval_status(eval_id: str):
        entry = evals.get(eval_id)
        if entry is None:
            summary = _read_json(engine.data_dir / "evals" / eval_id / "summary.json")
            if summary is None:
                return JSONResponse(status_code=404, content={"error": "NotFound",
                                                              "detail": eval_id})
            entry = {"run_id": eval_id, "status": "succeeded", "summary": summary}
        return entry

    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8400) -> None:
    """Run the gateway under uvicorn; blocks until interrupted."""
    import errno
    import socket

    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(f"{host}:{port} is already in use") from exc
        raise
    finally:
        probe.close()

    app = create_app(engine)
    uvicorn.run(app, host=host, port=port, log_level="warning")
