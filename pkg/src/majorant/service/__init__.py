"""FastAPI service wrapping the core package.

Run with: uvicorn majorant.service:app
"""

from __future__ import annotations

from fastapi import FastAPI


def create_app() -> FastAPI:
    from . import routes

    app = FastAPI(title="majorant", description="Concave-majorant reflection toolkit")
    app.include_router(routes.router)
    return app


def __getattr__(name: str):
    if name == "app":
        return create_app()
    raise AttributeError(name)
