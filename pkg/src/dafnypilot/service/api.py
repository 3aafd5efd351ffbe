"""HTTP front door over the session manager.

Endpoints: POST /sessions, GET /sessions/{id}, POST /sessions/{id}/messages,
POST /sessions/{id}/accept, GET /sessions/{id}/deliverable (zip archive).
Unknown sessions map to 404, illegal state transitions to 409. When a built
web client bundle exists it is served under /ui.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .sessions import SessionManager, UnknownSession, WrongState


class MessageBody(BaseModel):
    text: str


def create_app(manager: SessionManager, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="dafnypilot", version="0.1.0")

    def _guard(fn, *args):
        try:
            return fn(*args)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=f"unknown session {exc}") from exc
        except WrongState as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    @app.post("/sessions", status_code=201)
    def create_session():
        session = manager.create_session()
        return {"id": session.id, "state": session.state.value}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _guard(manager.view, session_id)

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        if not body.text.strip():
            raise HTTPException(status_code=422, detail="text must be non-empty")
        _guard(manager.post_message, session_id, body.text)
        return _guard(manager.view, session_id)

    @app.post("/sessions/{session_id}/accept")
    def accept(session_id: str):
        session = _guard(manager.accept_spec, session_id)
        return {"id": session.id, "state": session.state.value}

    @app.get("/sessions/{session_id}/deliverable")
    def deliverable(session_id: str):
        payload = _guard(manager.deliverable_zip, session_id)
        return Response(
            content=payload,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="solution-{session_id}.zip"'},
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
