"""HTTP session service: one conversation per session, one turn in flight.

Sessions are persisted as snapshot documents (file per session) on every
mutation, so a restart rebuilds them from the data directory. Chain-of-thought
text is exposed only on the trace endpoint; the transcript and message
responses never carry it.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse, Response

from . import __version__
from .backends import (
    BackendConfigError,
    HttpBackend,
    RuleOracleBackend,
    ScriptedStubBackend,
    ScriptEntry,
    demo_script,
    parse_script,
)
from .catalog import adapter_for
from .orchestrator import BackendFailure, Orchestrator, TurnResult
from .prompts import DEFAULT_REGISTRY
from .session import (
    Domain,
    EventKind,
    Mode,
    Session,
    new_session,
    restore,
    snapshot,
)

DEFAULT_PORT = 8099
DATA_DIR_ENV = "FORMFLOW_DATA_DIR"

_BACKEND_KINDS = ("stub", "oracle", "http")


def _iso(ms: int) -> str:
    return datetime.fromtimestamp(ms / 1000.0, tz=timezone.utc).isoformat(
        timespec="milliseconds"
    )


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


@dataclass
class ManagedSession:
    session: Session
    orchestrator: Orchestrator
    backend_kind: str
    script: list[ScriptEntry] | None
    lock: threading.Lock


class SessionStore:
    """In-memory registry plus file-per-session snapshot persistence."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, ManagedSession] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.json"

    def _load_existing(self) -> None:
        for path in sorted(self.data_dir.glob("*.json")):
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            session = restore(doc["snapshot"])
            script = parse_script(doc["service"]["script"]) if doc["service"]["script"] else None
            managed = self._build_managed(
                session, doc["service"]["backend"], script
            )
            if isinstance(managed.orchestrator.backend, ScriptedStubBackend):
                managed.orchestrator.backend.seek(doc["service"]["script_position"])
            self._sessions[session.session_id] = managed

    def _build_managed(
        self, session: Session, backend_kind: str, script: list[ScriptEntry] | None
    ) -> ManagedSession:
        adapter = adapter_for(session.domain)
        if backend_kind == "stub":
            backend = ScriptedStubBackend(script if script is not None else demo_script())
        elif backend_kind == "oracle":
            task = DEFAULT_REGISTRY.get(adapter.confirmation_task_name)
            backend = RuleOracleBackend(task, adapter.display_names())
        else:
            backend = HttpBackend()
        return ManagedSession(
            session=session,
            orchestrator=Orchestrator(adapter, backend),
            backend_kind=backend_kind,
            script=script,
            lock=threading.Lock(),
        )

    def create(
        self,
        domain: Domain,
        mode: Mode,
        backend_kind: str,
        script: list[ScriptEntry] | None,
    ) -> ManagedSession:
        session = new_session(domain, mode=mode)
        managed = self._build_managed(session, backend_kind, script)
        with self._registry_lock:
            self._sessions[session.session_id] = managed
        self.persist(managed)
        return managed

    def get(self, session_id: str) -> ManagedSession | None:
        return self._sessions.get(session_id)

    def delete(self, session_id: str) -> bool:
        with self._registry_lock:
            managed = self._sessions.pop(session_id, None)
        if managed is None:
            return False
        self._path(session_id).unlink(missing_ok=True)
        return True

    def persist(self, managed: ManagedSession) -> None:
        backend = managed.orchestrator.backend
        position = backend.position if isinstance(backend, ScriptedStubBackend) else 0
        script_doc = None
        if managed.backend_kind == "stub":
            entries = managed.script if managed.script is not None else demo_script()
            script_doc = [
                {"expect_substring": e.expect_substring, "response_text": e.response_text}
                for e in entries
            ]
        doc = {
            "snapshot": snapshot(managed.session),
            "service": {
                "backend": managed.backend_kind,
                "script": script_doc,
                "script_position": position,
            },
        }
        path = self._path(managed.session.session_id)
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        tmp.replace(path)


def _event_doc(event) -> dict:
    return {
        "seq": event.seq,
        "kind": event.kind.value,
        "payload": event.payload,
        "timestamp": _iso(event.timestamp),
    }


def _context_doc(session: Session) -> dict | None:
    entity = session.context.entity
    if entity is None:
        return None
    return {"entity_id": entity.entity_id, "display_name": entity.display_name}


def _message_response(
    managed: ManagedSession, result: TurnResult, turn_start_seq: int
) -> dict:
    session = managed.session
    seq = None
    for event in session.transcript[turn_start_seq:]:
        if event.kind is EventKind.DECISION_APPLIED:
            seq = event.seq
    if seq is None:
        seq = session.transcript[-1].seq

    decision_doc = None
    if result.decision is not None:
        decision_doc = {
            "task_name": result.decision.task_name,
            "decision": result.decision.decision.value,
            "cot_present": result.decision.chain_of_thought is not None,
        }

    doc = {
        "reply": result.reply_text,
        "clarifying": result.clarifying,
        "context": _context_doc(session),
        "decision": decision_doc,
        "seq": seq,
    }
    if result.clarifying:
        options = []
        pending = session.pending_clarification
        if pending is not None:
            for candidate in pending.candidates:
                options.append(
                    {
                        "kind": "switch",
                        "entity_id": candidate.entity_id,
                        "display_name": candidate.display_name,
                        "label": candidate.display_name,
                    }
                )
        current = session.context.entity
        if current is not None:
            options.append(
                {
                    "kind": "keep",
                    "entity_id": current.entity_id,
                    "display_name": current.display_name,
                    "label": f"keep {current.display_name}",
                }
            )
        doc["options"] = options
    return doc


def create_app(
    data_dir: str | Path | None = None,
    cors_origin: str | None = None,
) -> FastAPI:
    data_dir = data_dir or os.environ.get(DATA_DIR_ENV) or "./formflow-data"
    store = SessionStore(data_dir)
    app = FastAPI(title="formflow session service", version=__version__)
    app.state.store = store

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.post("/v1/sessions")
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "MalformedBody", "request body must be a JSON object")
        if not isinstance(body, dict):
            return _error(400, "MalformedBody", "request body must be a JSON object")

        try:
            domain = Domain(body.get("domain"))
        except ValueError:
            return _error(
                400, "BadDomain",
                f"domain must be one of {[d.value for d in Domain]}",
            )
        try:
            mode = Mode(body.get("mode", "tagged"))
        except ValueError:
            return _error(400, "BadMode", f"mode must be one of {[m.value for m in Mode]}")
        backend_kind = body.get("backend", "oracle")
        if backend_kind not in _BACKEND_KINDS:
            return _error(400, "BadBackend", f"backend must be one of {_BACKEND_KINDS}")
        script = None
        if body.get("script") is not None:
            try:
                script = parse_script(body["script"])
            except (KeyError, TypeError) as exc:
                return _error(400, "BadScript", f"bad script entries: {exc}")

        try:
            managed = store.create(domain, mode, backend_kind, script)
        except BackendConfigError as exc:
            return _error(400, "BackendNotConfigured", str(exc))
        return JSONResponse(
            status_code=201, content={"session_id": managed.session.session_id}
        )

    @app.post("/v1/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        managed = store.get(session_id)
        if managed is None:
            return _error(404, "UnknownSession", f"no session {session_id!r}")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "MalformedBody", "request body must be a JSON object")
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str) or not text.strip():
            return _error(400, "MalformedBody", "body must carry a nonempty 'text' string")

        if not managed.lock.acquire(blocking=False):
            return _error(409, "TurnInFlight", "a turn is already in flight for this session")
        try:
            turn_start = len(managed.session.transcript)
            try:
                result = await run_in_threadpool(
                    managed.orchestrator.handle_turn, managed.session, text
                )
            except BackendFailure as exc:
                store.persist(managed)
                return _error(502, "BackendFailure", str(exc))
            store.persist(managed)
            return JSONResponse(
                status_code=200,
                content=_message_response(managed, result, turn_start),
            )
        finally:
            managed.lock.release()

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        managed = store.get(session_id)
        if managed is None:
            return _error(404, "UnknownSession", f"no session {session_id!r}")
        session = managed.session
        return {
            "session_id": session.session_id,
            "domain": session.domain.value,
            "mode": session.mode.value,
            "lifecycle": session.lifecycle.value,
            "backend": managed.backend_kind,
            "created_at": _iso(session.created_at),
            "updated_at": _iso(session.updated_at),
            "context": _context_doc(session),
            "events": [_event_doc(e) for e in session.transcript],
        }

    @app.get("/v1/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        managed = store.get(session_id)
        if managed is None:
            return _error(404, "UnknownSession", f"no session {session_id!r}")
        session = managed.session
        return {
            "session_id": session.session_id,
            "decisions": [
                {
                    "task_name": d.task_name,
                    "decision": d.decision.value,
                    "chain_of_thought": d.chain_of_thought,
                    "raw_output": d.raw_output,
                    "candidate_entity": (
                        d.candidate_entity.to_dict() if d.candidate_entity else None
                    ),
                }
                for d in session.decisions
            ],
        }

    @app.delete("/v1/sessions/{session_id}")
    def delete_session(session_id: str):
        if not store.delete(session_id):
            return _error(404, "UnknownSession", f"no session {session_id!r}")
        return Response(status_code=204)

    return app
