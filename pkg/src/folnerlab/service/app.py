"""FastAPI wrapper around the command runners.

One POST endpoint per command; the CLI is a thin client of this app (by
default through an in-process ASGI transport, no sockets involved).

Error mapping: malformed configs are 400 (or FastAPI's own 422 for shape
errors); violated hypotheses and failed certificates are 409 so clients can
distinguish "your input is broken" from "the run could not certify".
A successful run whose certificates fail returns 200 with ``pass: false``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import ConfigError, FolnerlabError, PipelineStageError
from ..runners import RUNNERS, SCHEMA_VERSION, run_command
from . import schemas


def _run(command: str, config: dict) -> dict:
    try:
        return run_command(command, config)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except PipelineStageError as exc:
        raise HTTPException(
            status_code=409, detail={"message": str(exc), "stage": exc.stage}
        ) from exc
    except FolnerlabError as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(
        title="folnerlab",
        description="Certified Folner-set computations as a service",
        version="0.1.0",
    )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(
            status="ok", schema_version=SCHEMA_VERSION, commands=sorted(RUNNERS)
        )

    @app.post("/v1/invariance", response_model=schemas.Report)
    def invariance(req: schemas.InvarianceRequest):
        return _run("invariance", req.to_config())

    @app.post("/v1/wns", response_model=schemas.Report)
    def wns(req: schemas.WnsRequest):
        return _run("wns", req.to_config())

    @app.post("/v1/midpoint", response_model=schemas.Report)
    def midpoint(req: schemas.MidpointRequest):
        return _run("midpoint", req.to_config())

    @app.post("/v1/quasitile", response_model=schemas.Report)
    def quasitile(req: schemas.QuasitileRequest):
        return _run("quasitile", req.to_config())

    @app.post("/v1/quotafill", response_model=schemas.Report)
    def quotafill(req: schemas.QuotafillRequest):
        return _run("quotafill", req.to_config())

    @app.post("/v1/pipeline", response_model=schemas.Report)
    def pipeline(req: schemas.PipelineRequest):
        return _run("pipeline", req.to_config())

    @app.post("/v1/affine-folner", response_model=schemas.Report)
    def affine_folner(req: schemas.AffineFolnerRequest):
        return _run("affine-folner", req.to_config())

    @app.post("/v1/affine-obstruction", response_model=schemas.Report)
    def affine_obstruction(req: schemas.AffineObstructionRequest):
        return _run("affine-obstruction", req.to_config())

    return app


app = create_app()
