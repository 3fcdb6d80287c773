"""JSON-over-HTTP session service wrapping the live pipeline.

Sessions are held in memory with TTL eviction; restarts lose sessions but
never touch checkpoints. Concurrent posts to one session are rejected (409),
so replies always reflect a linear message order.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .labels import Domain
from .pipeline import DialoguePipeline, SessionState

DEFAULT_SESSION_TTL = 30 * 60.0


class ChatMessage(BaseModel):
    session_id: str = Field(min_length=1)
    text: str


@dataclass
class _Session:
    state: SessionState
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)


class SessionStore:
    def __init__(self, ttl: float = DEFAULT_SESSION_TTL):
        self.ttl = ttl
        self._sessions: dict[str, _Session] = {}
        self._guard = threading.Lock()

    def _evict_expired(self, now: float) -> None:
        expired = [sid for sid, s in self._sessions.items() if now - s.last_access > self.ttl]
        for sid in expired:
            del self._sessions[sid]

    def get_or_create(self, session_id: str, factory) -> _Session:
        with self._guard:
            now = time.monotonic()
            self._evict_expired(now)
            session = self._sessions.get(session_id)
            if session is None:
                session = _Session(state=factory())
                self._sessions[session_id] = session
            session.last_access = now
            return session

    def get(self, session_id: str) -> _Session | None:
        with self._guard:
            self._evict_expired(time.monotonic())
            session = self._sessions.get(session_id)
            if session is not None:
                session.last_access = time.monotonic()
            return session

    def delete(self, session_id: str) -> bool:
        with self._guard:
            return self._sessions.pop(session_id, None) is not None


def create_app(
    pipeline: DialoguePipeline | None = None,
    cors_origins: list[str] | None = None,
    session_ttl: float = DEFAULT_SESSION_TTL,
) -> FastAPI:
    app = FastAPI(title="proactive-switch chat service")
    app.state.pipeline = pipeline
    app.state.sessions = SessionStore(ttl=session_ttl)

    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"detail": message})

    @app.post("/api/chat")
    def chat(message: ChatMessage):
        pipe: DialoguePipeline | None = app.state.pipeline
        if pipe is None:
            return _error(503, "models not loaded")
        session = app.state.sessions.get_or_create(message.session_id, pipe.new_session)
        if not session.lock.acquire(blocking=False):
            return _error(409, f"session {message.session_id} is already processing a message")
        try:
            result = pipe.step(session.state, message.text)
        finally:
            session.lock.release()
        tie = result.state.last_tie
        return {
            "response": result.response,
            "transition_sentence": result.transition_sentence,
            "info": result.info.as_dict(),
            "mode": result.state.mode,
            "turn_index": result.state.turn_count - 1,
            "transitioned": result.state.transitioned,
            "prompt": result.prompt,
            "diagnostics": {
                "domain_labels": [d.value for d in Domain],
                "domain_probs": tie.domain_probs if tie else None,
                "slot_probs": tie.slot_probs if tie else None,
            },
        }

    @app.get("/api/session/{session_id}")
    def get_session(session_id: str):
        session = app.state.sessions.get(session_id)
        if session is None:
            return _error(404, f"unknown session {session_id}")
        state = session.state
        return {
            "session_id": session_id,
            "mode": state.mode,
            "transitioned": state.transitioned,
            "turns": [
                {"speaker": t.speaker, "text": t.text, "mode": t.mode} for t in state.turns
            ],
        }

    @app.delete("/api/session/{session_id}")
    def delete_session(session_id: str):
        if not app.state.sessions.delete(session_id):
            return _error(404, f"unknown session {session_id}")
        return {"deleted": session_id}

    @app.get("/api/health")
    def health():
        pipe: DialoguePipeline | None = app.state.pipeline
        if pipe is None:
            return _error(503, "models not loaded")
        return {
            "status": "ok",
            "checkpoints": {"tie": pipe.tie_hash, "generator": pipe.generator_hash},
        }

    return app
