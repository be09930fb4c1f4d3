"""Session state machine: transcript, active context, and commit/reset transitions.

A session mirrors the two buttons of a form UI: a confirmed decision keeps the
committed context untouched, a rejected decision with a resolved candidate
discards it (pending refinements included) and commits the new one, and
anything unresolvable parks the session awaiting clarification. The transcript
is an append-only audit trail; ordering authority is the event sequence
number, timestamps are informational.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .tags import Decision

#: Oldest committed entities are dropped beyond this bound to cap snapshot size.
HISTORY_BOUND = 50

SNAPSHOT_SCHEMA_VERSION = "1"

Clock = Callable[[], int]


def utc_now_ms() -> int:
    return int(time.time() * 1000)


class Domain(Enum):
    CUSTOMER_MGMT = "CustomerMgmt"
    HOTEL_BOOKING = "HotelBooking"


class Mode(Enum):
    TAGGED = "tagged"
    BASELINE = "baseline"


class Lifecycle(Enum):
    IDLE = "Idle"
    ACTIVE = "Active"
    AWAITING_CLARIFICATION = "AwaitingClarification"


class EventKind(Enum):
    USER_UTTERANCE = "UserUtterance"
    SYSTEM_REPLY = "SystemReply"
    CLARIFYING_QUESTION = "ClarifyingQuestion"
    DECISION_APPLIED = "DecisionApplied"
    CONTEXT_COMMITTED = "ContextCommitted"
    CONTEXT_RESET = "ContextReset"


class TransitionKind(Enum):
    KEPT_CONTEXT = "KeptContext"
    COMMITTED_NEW = "CommittedNew"
    NEEDS_CLARIFICATION = "NeedsClarification"


class StaleDecision(RuntimeError):
    """The decision record does not correspond to the latest utterance."""


class NotAwaitingClarification(RuntimeError):
    pass


class MalformedSnapshot(ValueError):
    pass


@dataclass(frozen=True)
class EntityRef:
    entity_id: str
    display_name: str
    domain: Domain

    def to_dict(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "display_name": self.display_name,
            "domain": self.domain.value,
        }


#: Sentinel passed to resolve_clarification to keep the current context.
KEEP_CURRENT = object()


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    kind: EventKind
    payload: dict
    timestamp: int


@dataclass(frozen=True)
class DecisionRecord:
    task_name: str
    decision: Decision
    chain_of_thought: str | None
    raw_output: str
    candidate_entity: EntityRef | None = None


@dataclass(frozen=True)
class CommittedEntry:
    entity: EntityRef
    replaced_at_seq: int


@dataclass
class ContextFrame:
    entity: EntityRef | None = None
    pending_fields: dict[str, str] = field(default_factory=dict)
    committed_history: list[CommittedEntry] = field(default_factory=list)


@dataclass
class PendingClarification:
    candidates: list[EntityRef]
    asked_count: int = 1


@dataclass(frozen=True)
class TransitionOutcome:
    kind: TransitionKind
    committed: EntityRef | None = None

    def __post_init__(self) -> None:
        if (self.kind is TransitionKind.COMMITTED_NEW) != (self.committed is not None):
            raise ValueError("committed entity set iff kind is CommittedNew")


@dataclass(eq=True)
class Session:
    session_id: str
    domain: Domain
    mode: Mode = Mode.TAGGED
    transcript: list[TranscriptEvent] = field(default_factory=list)
    context: ContextFrame = field(default_factory=ContextFrame)
    lifecycle: Lifecycle = Lifecycle.IDLE
    decisions: list[DecisionRecord] = field(default_factory=list)
    pending_clarification: PendingClarification | None = None
    created_at: int = 0
    updated_at: int = 0
    clock: Clock = field(default=utc_now_ms, compare=False, repr=False)

    # -- transcript -------------------------------------------------------

    def append_event(self, kind: EventKind, payload: dict) -> TranscriptEvent:
        event = TranscriptEvent(
            seq=len(self.transcript),
            kind=kind,
            payload=payload,
            timestamp=self.clock(),
        )
        self.transcript.append(event)
        self.updated_at = event.timestamp
        return event

    def record_user_utterance(self, text: str, meta: bool = False) -> TranscriptEvent:
        event = self.append_event(
            EventKind.USER_UTTERANCE, {"text": text, "meta": meta}
        )
        if self.lifecycle is Lifecycle.IDLE:
            self.lifecycle = Lifecycle.ACTIVE
        return event

    def record_reply(self, text: str, clarifying: bool = False) -> TranscriptEvent:
        kind = EventKind.CLARIFYING_QUESTION if clarifying else EventKind.SYSTEM_REPLY
        return self.append_event(kind, {"text": text})

    def commit_entity(self, candidate: EntityRef) -> None:
        """Replace the committed entity; a reset discards every pending field."""
        old = self.context.entity
        if old is not None:
            reset_event = self.append_event(
                EventKind.CONTEXT_RESET,
                {"discarded_entity_id": old.entity_id, "discarded_fields": sorted(self.context.pending_fields)},
            )
            self.context.committed_history.append(
                CommittedEntry(entity=old, replaced_at_seq=reset_event.seq)
            )
            del self.context.committed_history[:-HISTORY_BOUND]
        self.context.entity = candidate
        self.context.pending_fields = {}
        self.append_event(
            EventKind.CONTEXT_COMMITTED,
            {"entity_id": candidate.entity_id, "display_name": candidate.display_name},
        )

    def set_pending_field(self, name: str, value: str) -> None:
        self.context.pending_fields[name] = value


def new_session(
    domain: Domain,
    mode: Mode = Mode.TAGGED,
    session_id: str | None = None,
    clock: Clock = utc_now_ms,
) -> Session:
    now = clock()
    return Session(
        session_id=session_id or uuid.uuid4().hex,
        domain=domain,
        mode=mode,
        created_at=now,
        updated_at=now,
        clock=clock,
    )


def _has_fresh_utterance(session: Session) -> bool:
    for event in reversed(session.transcript):
        if event.kind is EventKind.DECISION_APPLIED:
            return False
        if event.kind is EventKind.USER_UTTERANCE:
            return True
    return False


def apply_decision(
    session: Session,
    record: DecisionRecord,
    *,
    bootstrap: bool = False,
    clarify_candidates: list[EntityRef] | None = None,
) -> TransitionOutcome:
    """Apply one classified decision to the session and return the transition.

    Confirmed keeps the context. Rejected with a resolved candidate resets and
    commits it (``bootstrap`` marks first-turn commits that were driven by
    direct search rather than by the decision value). Rejected without a
    resolvable candidate, or an indeterminate decision, parks the session
    awaiting clarification; ``clarify_candidates`` carries the options offered.
    """
    if not _has_fresh_utterance(session):
        raise StaleDecision("no user utterance since the last applied decision")

    session.decisions.append(record)

    if record.candidate_entity is not None and (
        bootstrap or record.decision is Decision.REJECTED
    ):
        outcome = TransitionOutcome(
            TransitionKind.COMMITTED_NEW, committed=record.candidate_entity
        )
    elif record.decision is Decision.CONFIRMED and not bootstrap:
        outcome = TransitionOutcome(TransitionKind.KEPT_CONTEXT)
    else:
        outcome = TransitionOutcome(TransitionKind.NEEDS_CLARIFICATION)

    payload = {
        "task_name": record.task_name,
        "decision": record.decision.value,
        "outcome": outcome.kind.value,
        "bootstrap": bootstrap,
    }
    if outcome.committed is not None:
        payload["committed_entity_id"] = outcome.committed.entity_id
    session.append_event(EventKind.DECISION_APPLIED, payload)

    if outcome.kind is TransitionKind.COMMITTED_NEW:
        session.commit_entity(record.candidate_entity)
        session.lifecycle = Lifecycle.ACTIVE
        session.pending_clarification = None
    elif outcome.kind is TransitionKind.KEPT_CONTEXT:
        session.lifecycle = Lifecycle.ACTIVE
        session.pending_clarification = None
    else:
        session.lifecycle = Lifecycle.AWAITING_CLARIFICATION
        session.pending_clarification = PendingClarification(
            candidates=list(clarify_candidates or [])
        )
    return outcome


def resolve_clarification(session: Session, chosen: EntityRef | object) -> TransitionOutcome:
    """Commit the chosen entity or keep the current one; lifecycle returns to Active."""
    if session.lifecycle is not Lifecycle.AWAITING_CLARIFICATION:
        raise NotAwaitingClarification("session is not awaiting clarification")
    if chosen is KEEP_CURRENT:
        outcome = TransitionOutcome(TransitionKind.KEPT_CONTEXT)
        session.append_event(
            EventKind.DECISION_APPLIED,
            {
                "task_name": "clarification",
                "decision": Decision.CONFIRMED.value,
                "outcome": outcome.kind.value,
                "bootstrap": False,
            },
        )
    else:
        if not isinstance(chosen, EntityRef):
            raise TypeError("chosen must be an EntityRef or KEEP_CURRENT")
        outcome = TransitionOutcome(TransitionKind.COMMITTED_NEW, committed=chosen)
        session.append_event(
            EventKind.DECISION_APPLIED,
            {
                "task_name": "clarification",
                "decision": Decision.REJECTED.value,
                "outcome": outcome.kind.value,
                "bootstrap": False,
                "committed_entity_id": chosen.entity_id,
            },
        )
        session.commit_entity(chosen)
    session.lifecycle = Lifecycle.ACTIVE
    session.pending_clarification = None
    return outcome


def query_history(session: Session) -> list[str]:
    """User utterances in order, excluding clarification answers flagged meta."""
    return [
        event.payload["text"]
        for event in session.transcript
        if event.kind is EventKind.USER_UTTERANCE and not event.payload.get("meta")
    ]


# -- snapshot / restore -----------------------------------------------------


def _entity_to_dict(entity: EntityRef | None) -> dict | None:
    return entity.to_dict() if entity is not None else None


def _entity_from_dict(doc: Any) -> EntityRef:
    if not isinstance(doc, dict) or set(doc) != {"entity_id", "display_name", "domain"}:
        raise MalformedSnapshot(f"bad entity ref: {doc!r}")
    return EntityRef(
        entity_id=str(doc["entity_id"]),
        display_name=str(doc["display_name"]),
        domain=Domain(doc["domain"]),
    )


def snapshot(session: Session) -> dict:
    """JSON-serializable document capturing the full session state."""
    return {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "session_id": session.session_id,
        "domain": session.domain.value,
        "mode": session.mode.value,
        "lifecycle": session.lifecycle.value,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "transcript": [
            {
                "seq": e.seq,
                "kind": e.kind.value,
                "payload": e.payload,
                "timestamp": e.timestamp,
            }
            for e in session.transcript
        ],
        "context": {
            "entity": _entity_to_dict(session.context.entity),
            "pending_fields": dict(session.context.pending_fields),
            "committed_history": [
                {"entity": entry.entity.to_dict(), "replaced_at_seq": entry.replaced_at_seq}
                for entry in session.context.committed_history
            ],
        },
        "decisions": [
            {
                "task_name": d.task_name,
                "decision": d.decision.value,
                "chain_of_thought": d.chain_of_thought,
                "raw_output": d.raw_output,
                "candidate_entity": _entity_to_dict(d.candidate_entity),
            }
            for d in session.decisions
        ],
        "pending_clarification": (
            {
                "candidates": [c.to_dict() for c in session.pending_clarification.candidates],
                "asked_count": session.pending_clarification.asked_count,
            }
            if session.pending_clarification is not None
            else None
        ),
    }


_TOP_KEYS = {
    "schema_version",
    "session_id",
    "domain",
    "mode",
    "lifecycle",
    "created_at",
    "updated_at",
    "transcript",
    "context",
    "decisions",
    "pending_clarification",
}
_EVENT_KEYS = {"seq", "kind", "payload", "timestamp"}
_CONTEXT_KEYS = {"entity", "pending_fields", "committed_history"}
_DECISION_KEYS = {"task_name", "decision", "chain_of_thought", "raw_output", "candidate_entity"}


def restore(document: dict | str | bytes, clock: Clock = utc_now_ms) -> Session:
    """Rebuild a Session from a snapshot document; strict about shape.

    Unknown fields anywhere in the document are rejected: a snapshot either
    round-trips exactly or fails loudly as MalformedSnapshot.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedSnapshot(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedSnapshot("snapshot document must be a JSON object")
    if set(document) != _TOP_KEYS:
        unexpected = set(document) - _TOP_KEYS
        missing = _TOP_KEYS - set(document)
        raise MalformedSnapshot(
            f"unexpected fields {sorted(unexpected)}, missing fields {sorted(missing)}"
        )
    if document["schema_version"] != SNAPSHOT_SCHEMA_VERSION:
        raise MalformedSnapshot(f"unsupported schema_version {document['schema_version']!r}")

    try:
        transcript = []
        for event_doc in document["transcript"]:
            if set(event_doc) != _EVENT_KEYS:
                raise MalformedSnapshot(f"bad event fields: {sorted(event_doc)}")
            transcript.append(
                TranscriptEvent(
                    seq=int(event_doc["seq"]),
                    kind=EventKind(event_doc["kind"]),
                    payload=dict(event_doc["payload"]),
                    timestamp=int(event_doc["timestamp"]),
                )
            )

        context_doc = document["context"]
        if set(context_doc) != _CONTEXT_KEYS:
            raise MalformedSnapshot(f"bad context fields: {sorted(context_doc)}")
        history = []
        for entry in context_doc["committed_history"]:
            if set(entry) != {"entity", "replaced_at_seq"}:
                raise MalformedSnapshot(f"bad history entry: {sorted(entry)}")
            history.append(
                CommittedEntry(
                    entity=_entity_from_dict(entry["entity"]),
                    replaced_at_seq=int(entry["replaced_at_seq"]),
                )
            )
        context = ContextFrame(
            entity=(
                _entity_from_dict(context_doc["entity"])
                if context_doc["entity"] is not None
                else None
            ),
            pending_fields={str(k): str(v) for k, v in context_doc["pending_fields"].items()},
            committed_history=history,
        )

        decisions = []
        for decision_doc in document["decisions"]:
            if set(decision_doc) != _DECISION_KEYS:
                raise MalformedSnapshot(f"bad decision fields: {sorted(decision_doc)}")
            decisions.append(
                DecisionRecord(
                    task_name=str(decision_doc["task_name"]),
                    decision=Decision(decision_doc["decision"]),
                    chain_of_thought=decision_doc["chain_of_thought"],
                    raw_output=str(decision_doc["raw_output"]),
                    candidate_entity=(
                        _entity_from_dict(decision_doc["candidate_entity"])
                        if decision_doc["candidate_entity"] is not None
                        else None
                    ),
                )
            )

        pending_doc = document["pending_clarification"]
        pending = None
        if pending_doc is not None:
            if set(pending_doc) != {"candidates", "asked_count"}:
                raise MalformedSnapshot(f"bad clarification fields: {sorted(pending_doc)}")
            pending = PendingClarification(
                candidates=[_entity_from_dict(c) for c in pending_doc["candidates"]],
                asked_count=int(pending_doc["asked_count"]),
            )

        return Session(
            session_id=str(document["session_id"]),
            domain=Domain(document["domain"]),
            mode=Mode(document["mode"]),
            transcript=transcript,
            context=context,
            lifecycle=Lifecycle(document["lifecycle"]),
            decisions=decisions,
            pending_clarification=pending,
            created_at=int(document["created_at"]),
            updated_at=int(document["updated_at"]),
            clock=clock,
        )
    except MalformedSnapshot:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSnapshot(f"cannot restore snapshot: {exc}") from exc
