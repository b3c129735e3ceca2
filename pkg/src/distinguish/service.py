"""Local HTTP + server-sent-events facade over the engine.

One process hosts many independent runs in memory. Writes to a run are
funneled through its lock; snapshot reads are lock-free against
append-only history. Historical snapshots are immutable: the response
for a given (run, step) never changes once that step exists.
"""

from __future__ import annotations

import argparse
import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from .engine import (
    RunState,
    config_from_dict,
    drilled_path_at,
    history_text,
    init_run,
    misfit_series,
    record_to_dict,
    score,
    step,
)

ACTIONS = ("accept", "up", "hold", "down", "stop")

_KEEPALIVE_EVERY = 20  # idle polls between keepalive comments
_POLL_S = 0.5


@dataclass
class RunEntry:
    run_id: str
    created_at: str
    state: RunState
    debug: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)
    cond: threading.Condition = field(default_factory=threading.Condition)

    @property
    def status(self) -> str:
        return "terminated" if self.state.terminated else "active"

    def info(self) -> dict:
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "status": self.status,
            "latest_step": len(self.state.history),
            "termination_reason": self.state.termination_reason,
        }


class RunRegistry:
    """In-memory run table; optionally persists each run after every step."""

    def __init__(self, persist_dir: str | Path | None = None):
        self._runs: dict[str, RunEntry] = {}
        self._lock = threading.Lock()
        self.persist_dir = Path(persist_dir) if persist_dir else None
        if self.persist_dir:
            self.persist_dir.mkdir(parents=True, exist_ok=True)

    def create(self, payload: dict) -> RunEntry:
        if not isinstance(payload, dict):
            raise ValueError("config payload must be a JSON object")
        payload = dict(payload)
        debug = bool(payload.pop("debug", False))
        cfg = config_from_dict(payload)
        state = init_run(cfg)
        entry = RunEntry(
            run_id=uuid.uuid4().hex[:12],
            created_at=datetime.now(timezone.utc).isoformat(),
            state=state,
            debug=debug,
        )
        with self._lock:
            self._runs[entry.run_id] = entry
        self.persist(entry)
        return entry

    def get(self, run_id: str) -> RunEntry | None:
        with self._lock:
            return self._runs.get(run_id)

    def list(self) -> list[RunEntry]:
        with self._lock:
            return list(self._runs.values())

    def persist(self, entry: RunEntry) -> None:
        if self.persist_dir:
            path = self.persist_dir / f"{entry.run_id}.ndjson"
            path.write_text(history_text(entry.state), encoding="utf-8")


def snapshot_dict(entry: RunEntry, k: int) -> dict:
    """Immutable view of a run after its first k steps."""
    state = entry.state
    n = len(state.history)
    if not 0 <= k <= n:
        raise IndexError(f"step {k} out of range 0..{n}")
    terminal = state.terminated and k == n
    path = drilled_path_at(state, k)
    geo = state.config.geometry
    snap = {
        "run_id": entry.run_id,
        "step": k,
        "status": "terminated" if terminal else "active",
        "termination_reason": state.termination_reason if terminal else None,
        "geometry": {"n_cols": geo.n_cols, "n_rows": geo.n_rows,
                     "dx": geo.dx, "dz": geo.dz},
        "bit": [path[-1].col, path[-1].row],
        "drilled_path": [[p.col, p.row] for p in path],
        "map": [[float(v) for v in row] for row in state.maps[k].values],
        "recommendation": None,
        "applied": None,
        "fan": [],
        "misfits": misfit_series(state)[:k],
        "score": score(state) if terminal else None,
    }
    if k >= 1:
        rec = state.history[k - 1]
        snap["recommendation"] = {
            "action": rec.decision.action,
            "scores": {name: float(v) for name, v in rec.decision.scores.items()},
            "chosen_value": float(rec.decision.chosen_value),
        }
        snap["applied"] = rec.applied
        snap["fan"] = [a.tolist() for a in state.fans[k - 1]]
    if entry.debug:
        snap["truth_cells"] = state.truth.cells.tolist()
    return snap


def _event_payload(entry: RunEntry, k: int) -> dict:
    state = entry.state
    rec = state.history[k]
    last = k == len(state.history) - 1
    return {
        "step": rec.step_index,
        "snapshot_step": k + 1,
        "action": rec.decision.action,
        "applied": rec.applied,
        "bit": [rec.observation.position.col, rec.observation.position.row],
        "terminated": bool(state.terminated and last),
    }


def _sse(event: str, eid: int, data: dict) -> str:
    return f"id: {eid}\nevent: {event}\ndata: {json.dumps(data, separators=(',', ':'))}\n\n"


def build_app(registry: RunRegistry | None = None) -> FastAPI:
    registry = registry or RunRegistry()
    app = FastAPI(title="distinguish service")
    app.state.registry = registry

    def not_found(detail: str) -> JSONResponse:
        return JSONResponse({"detail": detail}, status_code=404)

    def bad_request(detail: str) -> JSONResponse:
        return JSONResponse({"detail": detail}, status_code=400)

    async def read_json(request: Request) -> dict | None:
        body = await request.body()
        if not body:
            return {}
        try:
            return json.loads(body)
        except json.JSONDecodeError:
            return None

    @app.get("/api/runs")
    def list_runs():
        return [e.info() for e in registry.list()]

    @app.post("/api/runs", status_code=201)
    async def create_run(request: Request):
        payload = await read_json(request)
        if payload is None:
            return bad_request("body must be JSON")
        try:
            entry = registry.create(payload)
        except (ValueError, OSError) as e:
            return bad_request(str(e))
        return entry.info()

    @app.get("/api/runs/{run_id}")
    def run_info(run_id: str):
        entry = registry.get(run_id)
        if entry is None:
            return not_found("unknown run")
        return entry.info()

    @app.get("/api/runs/{run_id}/state")
    def get_state(run_id: str, step: int | None = None):
        entry = registry.get(run_id)
        if entry is None:
            return not_found("unknown run")
        k = len(entry.state.history) if step is None else step
        try:
            return snapshot_dict(entry, k)
        except IndexError as e:
            return not_found(str(e))

    @app.post("/api/runs/{run_id}/step")
    async def post_step(run_id: str, request: Request):
        entry = registry.get(run_id)
        if entry is None:
            return not_found("unknown run")
        payload = await read_json(request)
        if payload is None or not isinstance(payload, dict):
            return bad_request("body must be a JSON object")
        action = payload.get("action")
        if action not in ACTIONS:
            return bad_request(f"action must be one of {list(ACTIONS)}")
        with entry.lock:
            if entry.state.terminated:
                return JSONResponse({"detail": "run is terminated"}, status_code=409)
            override = None if action == "accept" else action
            try:
                rec = step(entry.state, override=override)
            except ValueError as e:
                return bad_request(str(e))
            registry.persist(entry)
        with entry.cond:
            entry.cond.notify_all()
        out = record_to_dict(rec)
        out["status"] = entry.status
        return out

    @app.get("/api/runs/{run_id}/events")
    def stream_events(run_id: str, request: Request):
        entry = registry.get(run_id)
        if entry is None:
            return not_found("unknown run")
        start = 0
        last_id = request.headers.get("last-event-id")
        if last_id is not None:
            try:
                start = int(last_id) + 1
            except ValueError:
                return bad_request("Last-Event-ID must be an integer")
        raw_from = request.query_params.get("from")
        if raw_from is not None:
            try:
                start = int(raw_from)
            except ValueError:
                return bad_request("from must be an integer")

        def gen():
            i = max(0, start)
            idle = 0
            while True:
                n = len(entry.state.history)
                while i < n:
                    yield _sse("step", i, _event_payload(entry, i))
                    i += 1
                    idle = 0
                if entry.state.terminated:
                    yield _sse("end", len(entry.state.history), {
                        "status": "terminated",
                        "reason": entry.state.termination_reason,
                        "score": score(entry.state),
                    })
                    return
                with entry.cond:
                    entry.cond.wait(_POLL_S)
                idle += 1
                if idle >= _KEEPALIVE_EVERY:
                    yield ": keepalive\n\n"
                    idle = 0

        return StreamingResponse(gen(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    @app.get("/api/runs/{run_id}/export")
    def export_run(run_id: str):
        entry = registry.get(run_id)
        if entry is None:
            return not_found("unknown run")
        return Response(
            content=history_text(entry.state),
            media_type="application/x-ndjson",
            headers={"Content-Disposition":
                     f'attachment; filename="{entry.run_id}.ndjson"'},
        )

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="distinguish-service",
                                     description="serve the drilling loop over HTTP")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--persist-dir", default=None)
    args = parser.parse_args(argv)
    import uvicorn

    app = build_app(RunRegistry(persist_dir=args.persist_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
