"""HTTP front end: ``POST /v1/<command>`` for each subcommand and ``GET /health``."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from .handlers import HANDLERS, ServiceError, classify, dispatch
from .schemas import ErrorBody, Report


def _error_response(err: ServiceError) -> JSONResponse:
    body = ErrorBody(error=str(err), path=err.path, kind=err.kind)
    return JSONResponse(status_code=err.status, content=body.model_dump())


def _route(command: str, model):
    def endpoint(req):
        return dispatch(command, req)

    endpoint.__annotations__ = {"req": model, "return": Report}
    endpoint.__name__ = "run_" + command.replace("-", "_")
    return endpoint


def create_app() -> FastAPI:
    app = FastAPI(title="nqdlab", version=__version__)

    @app.exception_handler(ServiceError)
    async def _service_error(_: Request, exc: ServiceError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _invalid(_: Request, exc: RequestValidationError):
        err = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in err.get("loc", ()) if p != "body") or "request"
        return _error_response(ServiceError(f"{loc}: {err.get('msg', 'invalid request')}", loc, "validation"))

    @app.exception_handler(Exception)
    async def _unexpected(_: Request, exc: Exception):
        return _error_response(classify(exc))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__, "commands": sorted(HANDLERS)}

    for command, (model, _) in HANDLERS.items():
        app.post(f"/v1/{command}", response_model=Report,
                 responses={400: {"model": ErrorBody}, 500: {"model": ErrorBody}})(_route(command, model))
    return app


app = create_app()

__all__ = ["app", "create_app"]
