"""HTTP query service over an event store: filtered events, choropleth layers,
timelines, topic lists, threshold marks, posteriors, async fit jobs, exports."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import geoexport, relevance, thematic
from .config import AppConfig
from .errors import EventMapError, FitBusyError, StoreError
from .ingest import geoevent_to_json
from .store import EventFilter, EventStore, FitSpec

KML_MEDIA_TYPE = "application/vnd.google-earth.kml+xml"


@dataclass
class JobStatus:
    job_id: str
    status: str  # queued | running | done | failed
    model_id: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {"job_id": self.job_id, "status": self.status, "model_id": self.model_id, "error": self.error}


class JobManager:
    """One background fit at a time; states are polled, never pushed."""

    def __init__(self, store: EventStore):
        self.store = store
        self.jobs: dict[str, JobStatus] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def busy(self) -> bool:
        return any(j.status in ("queued", "running") for j in self.jobs.values())

    def submit(self, spec: FitSpec) -> str:
        with self._lock:
            if self.busy():
                raise FitBusyError("a fit job is already running")
            self._counter += 1
            job_id = f"job-{self._counter:04d}"
            self.jobs[job_id] = JobStatus(job_id=job_id, status="queued")
        thread = threading.Thread(target=self._run, args=(job_id, spec), daemon=True)
        thread.start()
        return job_id

    def _run(self, job_id: str, spec: FitSpec) -> None:
        job = self.jobs[job_id]
        job.status = "running"
        try:
            job.model_id = self.store.run_fit(spec)
            job.status = "done"
        except Exception as exc:  # propagate component errors into job status
            job.status = "failed"
            job.error = str(exc)


def _json_response(payload, status_code: int = 200) -> Response:
    body = json.dumps(payload, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return Response(content=body, media_type="application/json", status_code=status_code)


def _parse_date(value: str | None) -> date | None:
    return date.fromisoformat(value) if value else None


def _table_from_model(store: EventStore, model_id: str | None) -> relevance.ProportionTable:
    loaded = store.load_model(model_id or store.latest_model_id())
    events = store.events[: loaded.theta.shape[0]]
    return relevance.build_table(loaded.theta, events)


def create_app(config: AppConfig, webui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="eventmap", docs_url=None, redoc_url=None)
    store = EventStore(config.store_path)
    jobs = JobManager(store)
    tables: dict[str, relevance.ProportionTable] = {}
    for name, path in config.tables.items():
        tables[name] = relevance.load_table(Path(path).read_bytes())
    app.state.store = store
    app.state.jobs = jobs
    app.state.tables = tables
    app.state.config = config

    @app.exception_handler(EventMapError)
    async def _on_error(_: Request, exc: EventMapError):
        status = 409 if isinstance(exc, FitBusyError) else 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _on_value_error(_: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/meta")
    def meta():
        return _json_response(
            {
                "events": len(store),
                "models": store.list_models(),
                "tables": sorted(tables),
                "topics_by_table": {name: sorted(t.topics) for name, t in tables.items()},
            }
        )

    @app.get("/api/events")
    def events(
        request: Request,
        fips: str | None = None,
        event_type: str | None = None,
        topic: int | None = None,
        min_prop: float | None = None,
        model: str | None = None,
        format: str = "json",
    ):
        flt = EventFilter(
            date_from=_parse_date(request.query_params.get("from")),
            date_to=_parse_date(request.query_params.get("to")),
            fips=fips,
            event_type=event_type,
            topic=topic,
            min_prop=min_prop if min_prop is not None else (0.0 if topic is not None else None),
            model_id=model,
        )
        result = store.query(flt)
        if format == "geojson":
            return Response(content=geoexport.write_geojson(result), media_type="application/geo+json")
        rows = [geoevent_to_json(ev) for ev in result]
        if model is not None:
            loaded = store.load_model(model)
            pos = {ev.id: store.by_id[ev.id] for ev in result}
            for row in rows:
                i = pos[row["id"]]
                row["theta"] = list(loaded.theta[i]) if i < loaded.theta.shape[0] else None
        return _json_response({"count": len(rows), "events": rows})

    @app.get("/api/choropleth")
    def choropleth(
        metric: str = "count",
        topic: str | None = None,
        year: int | None = None,
        classes: int = 5,
        scheme: str = "quantile",
        ramp: str = "sequential_red",
        model: str | None = None,
        table: str | None = None,
    ):
        if metric == "count":
            values = thematic.aggregate_counts(store.events, year)
        else:
            if topic is None:
                raise ValueError("topic_prop needs a topic")
            if table is not None:
                if table not in tables:
                    raise StoreError(f"unknown table {table!r}")
                src = tables[table]
            else:
                src = _table_from_model(store, model)
            values = thematic.aggregate_topic_prop(src, topic, year)
        if not values:
            return _json_response({"metric": metric, "scheme": scheme, "breaks": [], "colors": [], "values": {}})
        layer = thematic.build_layer(
            values, metric=metric, scheme=scheme, n_classes=classes, ramp=ramp,
            scope=str(year) if year is not None else "all",
        )
        return Response(content=layer.to_json(), media_type="application/json")

    @app.get("/api/timeline")
    def timeline(scale: str = "monthly", fips: str | None = None):
        series = thematic.timeline_series(store.events, scale=scale, fips=fips)
        return Response(content=geoexport.write_timeline_json(series), media_type="application/json")

    @app.get("/api/topics")
    def topics(model: str | None = None):
        loaded = store.load_model(model or store.latest_model_id())
        payload = [
            {"topic_id": i, "label": loaded.labels[i], "top_words": _top_words(loaded, i)}
            for i in range(loaded.theta.shape[1])
        ]
        return _json_response(payload)

    def _top_words(loaded, topic: int, n: int = 10) -> list[str]:
        return loaded.model.top_words(topic, n) if loaded.kind == "lda" else loaded.model.top_words(topic, n=n)

    @app.get("/api/marks")
    def marks(
        topic: str,
        threshold: float = 0.02,
        year: int = 2000,
        model: str | None = None,
        table: str | None = None,
    ):
        if table is not None:
            if table not in tables:
                raise StoreError(f"unknown table {table!r}")
            src = tables[table]
        else:
            src = _table_from_model(store, model)
        marked = relevance.mark_events(src, topic, threshold, year)
        return _json_response({"topic": topic, "threshold": threshold, "year": year,
                               "marked": sorted(f for f, _ in marked)})

    @app.get("/api/posterior")
    def posterior(topic: int, bucket: str = "year", model: str | None = None):
        loaded = store.load_model(model or store.latest_model_id())
        events_at_fit = store.events[: loaded.theta.shape[0]]
        post = relevance.location_time_posterior(loaded.theta, events_at_fit, topic, bucket)
        cells = [[fips, label, p] for (fips, label), p in sorted(post.items())]
        return _json_response({"topic": topic, "bucket": bucket, "cells": cells})

    @app.post("/api/admin/fit")
    async def admin_fit(request: Request):
        body = await request.json()
        spec = FitSpec(
            model=body.get("model", "lda"),
            k=int(body.get("k", config.defaults.get("k", 10))),
            seed=int(body.get("seed", 0)),
            params=dict(body.get("params", {})),
            min_count=int(body.get("min_count", config.defaults.get("min_count", 1))),
            stopwords_path=config.stopwords_path,
        )
        job_id = jobs.submit(spec)
        return _json_response({"job_id": job_id})

    @app.get("/api/admin/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": f"no job {job_id!r}"})
        return _json_response(job.to_dict())

    @app.get("/api/export/kml")
    def export_kml(request: Request, fips: str | None = None, event_type: str | None = None):
        flt = EventFilter(
            date_from=_parse_date(request.query_params.get("from")),
            date_to=_parse_date(request.query_params.get("to")),
            fips=fips,
            event_type=event_type,
        )
        return Response(content=geoexport.write_kml(store.query(flt)), media_type=KML_MEDIA_TYPE)

    @app.get("/api/polygons")
    def polygons():
        if not config.polygons_path:
            return JSONResponse(status_code=404, content={"error": "no polygon file configured"})
        return Response(content=Path(config.polygons_path).read_bytes(), media_type="application/geo+json")

    if webui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=webui_dir, html=True), name="webui")

    return app
