"""REST surface: search, hit pages, exports, entity autocomplete, metrics.

All request and response bodies are UTF-8 JSON; errors come back as
{"code", "message"} with a 400-class status.
"""

from __future__ import annotations

from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from ..analyzers.topics import TOPIC_LABELS
from ..broker import Broker
from ..pipeline import PipelineRunner
from .ast import QueryError, parse_query
from .engine import ExportCapExceeded, QueryEngine


class SearchRequest(BaseModel):
    query: dict
    date_from: date
    date_to: date
    bucket: Literal["day", "week", "month"] = "day"
    name: str | None = None


class HitsRequest(BaseModel):
    query: dict
    date_from: date
    date_to: date
    page: int = 1
    page_size: int = 50


class ExportRequest(BaseModel):
    query: dict
    date_from: date
    date_to: date


def create_app(
    engine: QueryEngine,
    *,
    broker: Broker | None = None,
    runner: PipelineRunner | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="newsdesk", docs_url=None, redoc_url=None)

    @app.exception_handler(QueryError)
    async def _query_error(request: Request, exc: QueryError):
        return JSONResponse(status_code=400, content={"code": "bad_query", "message": str(exc)})

    @app.exception_handler(ExportCapExceeded)
    async def _export_cap(request: Request, exc: ExportCapExceeded):
        return JSONResponse(
            status_code=400, content={"code": "export_cap_exceeded", "message": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"code": "bad_request", "message": str(exc)})

    @app.post("/api/v1/search")
    def search(req: SearchRequest):
        query = parse_query(req.query)
        line = engine.evaluate(query, req.date_from, req.date_to, req.bucket, name=req.name)
        return {
            "name": line.name,
            "series": [{"bucket": b, "count": c} for b, c in line.series],
            "total": line.total,
            "undated": line.undated,
        }

    @app.post("/api/v1/hits")
    def hits(req: HitsRequest):
        query = parse_query(req.query)
        page, total = engine.page_hits(query, req.date_from, req.date_to, req.page, req.page_size)
        return {"hits": [h.to_dict() for h in page], "total": total}

    @app.post("/api/v1/export")
    def export(req: ExportRequest, format: Literal["csv", "json"] = Query("csv")):
        query = parse_query(req.query)
        stream = engine.export(query, req.date_from, req.date_to, format)
        media = "text/csv; charset=utf-8" if format == "csv" else "application/json"
        filename = f"newsdesk-export-{req.date_from}-{req.date_to}.{format}"
        return StreamingResponse(
            stream,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.get("/api/v1/entities")
    def entities(prefix: str = Query(..., min_length=2)):
        return [
            {"kb_id": kb_id, "label": label, "article_count": count}
            for kb_id, label, count in engine.entity_lookup(prefix)
        ]

    @app.get("/api/v1/outlets")
    def outlets():
        return engine.store.outlets()

    @app.get("/api/v1/topics")
    def topics():
        return list(TOPIC_LABELS)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/metrics")
    def metrics():
        store = engine.store
        total = store.count()
        hidden = store.hidden_count()
        hour_ago = datetime.now(timezone.utc) - timedelta(hours=1)
        doc = {
            "articles": {
                "total": total,
                "hidden": hidden,
                "hidden_rate": (hidden / total) if total else 0.0,
                "crawled_last_hour": store.articles_since(hour_ago),
            },
            "queues": {},
            "stale": {},
        }
        if broker is not None:
            for name in broker.queues():
                depth = broker.queue_depth(name)
                doc["queues"][name] = {
                    "ready": depth.ready,
                    "claimed": depth.claimed,
                    "errored": depth.errored,
                }
        if runner is not None:
            doc["stale"] = runner.stale_counts()
        return doc

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
