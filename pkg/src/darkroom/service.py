"""HTTP facade over the databases directory and the filter engine."""

from __future__ import annotations

import hashlib
import json
import os

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import cinema, session
from .errors import (
    CycleError,
    DarkroomError,
    DatabaseError,
    ParamError,
    PipelineError,
    PortTypeError,
    SchemaError,
    UnconnectedInputError,
    UnknownFilterError,
)
from .registry import registry_json


def _error_body(code, message, details=None):
    return {"code": code, "message": message, "details": details or {}}


def _pipeline_error_response(exc):
    if isinstance(exc, UnconnectedInputError):
        return JSONResponse(status_code=422, content=_error_body(
            "unconnected_input", str(exc),
            {"node": exc.node, "port": exc.port}))
    if isinstance(exc, CycleError):
        return JSONResponse(status_code=400, content=_error_body(
            "cycle", str(exc),
            {"from": list(exc.from_endpoint or ()),
             "to": list(exc.to_endpoint or ())}))
    if isinstance(exc, SchemaError):
        return JSONResponse(status_code=400, content=_error_body(
            "schema", str(exc), {"pointer": exc.pointer}))
    if isinstance(exc, UnknownFilterError):
        return JSONResponse(status_code=400, content=_error_body(
            "unknown_filter", str(exc)))
    if isinstance(exc, (PortTypeError, ParamError, PipelineError)):
        return JSONResponse(status_code=400, content=_error_body(
            "pipeline", str(exc)))
    return JSONResponse(status_code=500, content=_error_body(
        "internal", str(exc)))


def list_databases(root):
    if not os.path.isdir(root):
        return []
    return sorted(
        name for name in os.listdir(root)
        if os.path.isfile(os.path.join(root, name, "data.csv")))


def create_app(databases_root) -> FastAPI:
    app = FastAPI(title="darkroom")
    registry = registry_json()
    registry_bytes = json.dumps(registry, sort_keys=True).encode()
    registry_etag = '"' + hashlib.sha256(registry_bytes).hexdigest()[:32] + '"'

    def open_db(db_id):
        if db_id not in list_databases(databases_root):
            return None
        return cinema.read_database(os.path.join(databases_root, db_id))

    @app.get("/api/filters")
    def filters(request: Request):
        if request.headers.get("if-none-match") == registry_etag:
            return Response(status_code=304)
        return JSONResponse(content=registry, headers={"ETag": registry_etag})

    @app.get("/api/databases")
    def databases():
        return list_databases(databases_root)

    @app.get("/api/databases/{db_id}/index")
    def database_index(db_id: str):
        db = open_db(db_id)
        if db is None:
            return JSONResponse(status_code=404, content=_error_body(
                "unknown_database", f"no database {db_id!r}"))
        return {
            "axes": db.axes,
            "values": {axis: db.distinct_values(axis) for axis in db.axes},
            "rows": len(db),
        }

    @app.post("/api/execute")
    async def execute(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return JSONResponse(status_code=400,
                                content=_error_body("schema", str(exc)))
        for key in ("database", "pipeline", "sink"):
            if key not in body:
                return JSONResponse(status_code=400, content=_error_body(
                    "schema", f"missing request field {key!r}"))
        db = open_db(body["database"])
        if db is None:
            return JSONResponse(status_code=404, content=_error_body(
                "unknown_database", f"no database {body['database']!r}"))
        fmt = body.get("format", "png8")
        if fmt not in session.OUTPUT_FORMATS:
            return JSONResponse(status_code=400, content=_error_body(
                "schema", f"unknown output format {fmt!r}"))
        selector = body.get("select", {})
        try:
            payload = session.run_pipeline(
                db, selector, body["pipeline"], body["sink"], fmt)
        except session.SampleNotFoundError as exc:
            return JSONResponse(status_code=404, content=_error_body(
                "unknown_sample", str(exc)))
        except KeyError as exc:
            return JSONResponse(status_code=404, content=_error_body(
                "unknown_axis", str(exc)))
        except (PipelineError, DatabaseError, DarkroomError, ValueError) as exc:
            return _pipeline_error_response(exc)
        media = "image/png" if fmt == "png8" else "application/octet-stream"
        return Response(content=payload, media_type=media)

    ui_dir = os.environ.get("DARKROOM_UI_DIR")
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
