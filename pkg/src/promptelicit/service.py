"""HTTP face of the session layer: JSON endpoints plus media serving.

Every response carries the session revision so clients can do optimistic
concurrency: a mutating request may send the revision it believes is
current and gets 409 when the session moved on. Domain errors map onto a
small, predictable status set (400 input, 404 unknown, 409 state or
revision, 502 upstream backend).
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .engine import Budget
from .errors import (EmptyOtherText, EmptyPrompt, InvalidOptionIndex,
                     OracleError, RenderError, RevisionConflict, SchemaError,
                     WrongState)
from .queries import Answer
from .session import RequirementEdit, Session, SessionStore

log = logging.getLogger(__name__)


class CreateSessionBody(BaseModel):
    initial_prompt: str


class AnswerBody(BaseModel):
    option_index: int | None = None
    other_text: str | None = None
    revision: int | None = None


class EditBody(BaseModel):
    op: str
    feature: str
    value: str | None = None


class EditsBody(BaseModel):
    edits: list[EditBody] = Field(default_factory=list)
    revision: int | None = None


class GenerateBody(BaseModel):
    revision: int | None = None


def _client_view(session: Session) -> dict:
    """Trim the persisted snapshot to what clients need."""
    snapshot = session.snapshot()
    for internal in ("engine", "budget", "seed"):
        snapshot.pop(internal, None)
    return snapshot


def create_app(store: SessionStore, media_root: Path | None = None,
               static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="promptelicit session service")

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        if isinstance(exc, (EmptyPrompt, InvalidOptionIndex, EmptyOtherText, ValueError)):
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        if isinstance(exc, KeyError):
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        if isinstance(exc, (WrongState, RevisionConflict)):
            return JSONResponse(status_code=409, content={"detail": str(exc)})
        if isinstance(exc, (OracleError, RenderError, SchemaError)):
            return JSONResponse(status_code=502, content={"detail": str(exc)})
        log.exception("unhandled error on %s", request.url.path)
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = store.create(body.initial_prompt)
        return _client_view(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _client_view(store.get(session_id))

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody):
        session = store.get(session_id)
        session.answer_active_query(
            Answer(option_index=body.option_index, other_text=body.other_text),
            expected_revision=body.revision)
        return _client_view(session)

    @app.post("/sessions/{session_id}/requirements")
    def edit_requirements(session_id: str, body: EditsBody):
        session = store.get(session_id)
        if not body.edits:
            raise ValueError("edits list is empty")
        expected = body.revision
        for edit in body.edits:
            session.apply_edit(RequirementEdit(op=edit.op, feature=edit.feature,
                                               value=edit.value),
                               expected_revision=expected)
            expected = None  # later edits in the batch follow the first
        return _client_view(session)

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody | None = None):
        session = store.get(session_id)
        session.generate(expected_revision=body.revision if body else None)
        return _client_view(session)

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        session = store.get(session_id)
        return {"session_id": session_id, "revision": session.revision,
                "events": [e.to_record() for e in session.events]}

    @app.get("/media/{handle:path}")
    def media(handle: str):
        root = media_root if media_root is not None else store.root
        if root is None:
            raise HTTPException(status_code=404, detail="no media root configured")
        # handles look like "<session_id>/<name>.png"; media lives per session
        parts = handle.split("/", 1)
        if len(parts) == 2:
            path = Path(root) / parts[0] / "media" / parts[1]
        else:
            path = Path(root) / handle
        path = path.resolve()
        if not str(path).startswith(str(Path(root).resolve())):
            raise HTTPException(status_code=404, detail="handle escapes the media root")
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"unknown media handle {handle!r}")
        return FileResponse(path)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def build_default_app(sessions_dir: str | Path = "./sessions", seed: int = 0,
                      budget: Budget | None = None,
                      static_dir: str | Path | None = None) -> FastAPI:
    """Scripted-backend app used by the CLI's serve command and tests."""
    store = SessionStore(root=sessions_dir, budget=budget or Budget(), seed=seed)
    return create_app(store, static_dir=Path(static_dir) if static_dir else None)


def build_app_from_settings(settings, sessions_dir: str | Path, seed: int,
                            static_dir: str | Path | None = None) -> FastAPI:
    """Wire a store from loaded Settings; live backends when configured."""
    backend_factory = None
    if settings.backend == "live":
        from .oracles import LiveOracleBackend, LiveRenderer

        live = settings.live_settings()

        def backend_factory(session_id, journal, media_dir):
            oracle = LiveOracleBackend(live, journal=journal)
            renderer = LiveRenderer(live, media_dir=media_dir or Path(sessions_dir) / "media",
                                    handle_prefix=f"{session_id}/", journal=journal)
            return oracle, renderer

    store = SessionStore(root=sessions_dir, budget=settings.budget(), seed=seed,
                        backend_factory=backend_factory)
    static = static_dir or settings.static_dir
    return create_app(store, static_dir=Path(static) if static else None)
