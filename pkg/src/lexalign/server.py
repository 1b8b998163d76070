"""HTTP service for runs, review decisions, and termbase search.

The API is deliberately small: list/create runs, read quality reports, list
review tasks, post decisions (which can trigger re-runs), and search the
termbase. Reads are served concurrently with a running pipeline; mutations on
one run are serialized behind a per-run lock, and the run directory's own
lock file guards against other processes.

Set a bearer token (argument or LEXALIGN_TOKEN) to require
``Authorization: Bearer <token>`` on every /api route except /api/health.
"""
from __future__ import annotations

import os
import re
import threading
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import __version__
from .config import PipelineConfig
from .model import entry_to_dict, load_termbase
from .pipeline import (ARTIFACTS, STAGES, CorpusError, PipelineRun, RunLocked,
                       StageError)
from .review import (AlreadyDecided, FeedbackRequired, ReviewTask, UnknownTask,
                     task_to_dict)

_RUN_ID_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_-]*")

_SEARCH_FIELDS = {"zh": "chinese", "en": "english", "ja": "japanese"}

# read-only artifacts a client may fetch verbatim, by exact file name
_READABLE_ARTIFACTS = frozenset(
    name for names in ARTIFACTS.values() for name in names)


class _Runs:
    """Run discovery plus per-run mutation locks."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock_for(self, run_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(run_id, threading.Lock())

    def ids(self) -> list[str]:
        if not self.output_dir.exists():
            return []
        return sorted(
            path.name for path in self.output_dir.iterdir()
            if path.is_dir() and (path / "manifest.json").exists()
        )

    def open(self, run_id: str) -> PipelineRun:
        if not _RUN_ID_RE.fullmatch(run_id):
            raise HTTPException(status_code=404, detail=f"unknown run: {run_id!r}")
        run_dir = self.output_dir / run_id
        if not (run_dir / "manifest.json").exists():
            raise HTTPException(status_code=404, detail=f"unknown run: {run_id!r}")
        return PipelineRun.open(run_dir)

    def latest(self) -> PipelineRun:
        ids = self.ids()
        if not ids:
            raise HTTPException(status_code=404, detail="no runs yet")
        return self.open(ids[-1])

    def resolve(self, run_id: str | None) -> PipelineRun:
        return self.open(run_id) if run_id else self.latest()


def _execute(runs: _Runs, run: PipelineRun, until: str | None,
             wait: bool) -> None:
    def work() -> None:
        with runs.lock_for(run.run_id):
            try:
                run.execute(until=until)
            except StageError:
                pass  # recorded in the manifest as status=failed

    if wait:
        work()
    else:
        threading.Thread(target=work, daemon=True).start()


def _task_payload(task: ReviewTask) -> dict[str, Any]:
    return task_to_dict(task)


def create_app(config: PipelineConfig, *, frontend_dir: str | Path | None = None,
               token: str | None = None) -> FastAPI:
    app = FastAPI(title="termbase pipeline service", version=__version__)
    runs = _Runs(config)
    bearer = token if token is not None else os.environ.get("LEXALIGN_TOKEN") or None

    @app.middleware("http")
    async def check_token(request: Request, call_next):  # type: ignore[no-untyped-def]
        path = request.url.path
        if bearer and path.startswith("/api") and path != "/api/health":
            header = request.headers.get("authorization", "")
            if header != f"Bearer {bearer}":
                return JSONResponse({"detail": "missing or bad bearer token"},
                                    status_code=401)
        return await call_next(request)

    @app.get("/api/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.get("/api/runs")
    def list_runs() -> dict[str, Any]:
        return {"runs": [runs.open(run_id).summary() for run_id in runs.ids()]}

    @app.post("/api/runs", status_code=201)
    def create_run(body: dict[str, Any] | None = Body(None)) -> dict[str, Any]:
        body = body or {}
        run_id = body.get("run_id")
        until = body.get("until")
        wait = bool(body.get("wait", False))
        if until is not None and until not in STAGES:
            raise HTTPException(status_code=400,
                                detail=f"unknown stage {until!r}; stages are {list(STAGES)}")
        try:
            run = PipelineRun.create(runs.config, run_id=run_id)
        except RunLocked as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except CorpusError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        _execute(runs, run, until, wait)
        return runs.open(run.run_id).summary()

    @app.get("/api/runs/{run_id}")
    def run_summary(run_id: str) -> dict[str, Any]:
        return runs.open(run_id).summary()

    @app.get("/api/runs/{run_id}/report")
    def run_report(run_id: str) -> Response:
        run = runs.open(run_id)
        path = run.run_dir / "evaluation_report.json"
        if not path.exists():
            raise HTTPException(status_code=404,
                                detail="no evaluation report yet for this run")
        return Response(content=path.read_bytes(), media_type="application/json")

    @app.get("/api/runs/{run_id}/artifacts/{name}")
    def run_artifact(run_id: str, name: str) -> Response:
        if name not in _READABLE_ARTIFACTS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown artifact {name!r}; readable artifacts are "
                       f"{sorted(_READABLE_ARTIFACTS)}")
        run = runs.open(run_id)
        path = run.run_dir / name
        if not path.exists():
            raise HTTPException(status_code=404,
                                detail=f"artifact {name} not produced yet")
        return Response(content=path.read_bytes(), media_type="application/json")

    @app.get("/api/tasks")
    def list_tasks(stage: str | None = Query(None), status: str | None = Query(None),
                   run: str | None = Query(None)) -> dict[str, Any]:
        target = runs.resolve(run)
        tasks = target.queue.list(stage=stage, status=status)
        return {"run_id": target.run_id, "tasks": [_task_payload(t) for t in tasks]}

    @app.post("/api/tasks/{task_id}/decision")
    def decide_task(task_id: str,
                    body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        decision = body.get("decision")
        feedback = body.get("feedback")
        wait = bool(body.get("wait", False))
        target = runs.resolve(body.get("run"))
        with runs.lock_for(target.run_id):
            try:
                task = target.queue.decide(task_id, decision, feedback=feedback)
            except UnknownTask as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            except AlreadyDecided as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except FeedbackRequired as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            if task.status == "rejected":
                target.apply_rejection(task)
        rerun = task.status == "rejected" or (task.status == "approved"
                                              and task.kind == "gate")
        if rerun:
            _execute(runs, target, None, wait)
        return {"task": _task_payload(task),
                "run": runs.open(target.run_id).summary(),
                "rerun_started": rerun}

    @app.get("/api/termbase/search")
    def search_termbase(q: str = Query(""), lang: str | None = Query(None),
                        run: str | None = Query(None),
                        limit: int = Query(50, ge=1, le=500)) -> dict[str, Any]:
        if lang is not None and lang not in _SEARCH_FIELDS:
            raise HTTPException(status_code=400,
                                detail=f"lang must be one of {sorted(_SEARCH_FIELDS)}")
        target = runs.resolve(run)
        path = target.run_dir / "standardized.termbase.json"
        if not path.exists():
            path = target.run_dir / "raw.termbase.json"
        if not path.exists():
            raise HTTPException(status_code=404,
                                detail="no termbase artifact yet for this run")
        termbase = load_termbase(path)
        needle = q.casefold()
        fields = [_SEARCH_FIELDS[lang]] if lang else list(_SEARCH_FIELDS.values())

        def matches(entry: Any) -> bool:
            if not needle:
                return True
            for field in fields:
                value = getattr(entry, field)
                if value and needle in value.casefold():
                    return True
            return False

        hits = [entry for entry in termbase.entries if matches(entry)]
        return {
            "run_id": target.run_id,
            "count": len(hits),
            "entries": [entry_to_dict(e) for e in hits[:limit]],
        }

    if frontend_dir is not None:
        static_root = Path(frontend_dir)
        if static_root.is_dir():
            app.mount("/", StaticFiles(directory=static_root, html=True),
                      name="frontend")

    return app
