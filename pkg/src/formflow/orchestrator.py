"""Interaction flow: render task prompt, complete, extract, resolve, transition.

One turn runs the domain's confirmation task against the backend, normalizes
the tagged decision, resolves the candidate entity when the user is switching,
and applies the commit/keep/clarify transition. The first turn of a session is
special: with nothing committed yet there is nothing to confirm, so the top
search hit is committed directly and the classified decision is kept purely as
audit data. Baseline mode skips the task entirely and reproduces the untagged
failure mode for A/B comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .backends import BackendError, CompletionRequest
from .catalog import SearchHit, tokenize
from .prompts import TaskRegistry, DEFAULT_REGISTRY, render_prompt
from .session import (
    Decision,
    DecisionRecord,
    Domain,
    EntityRef,
    KEEP_CURRENT,
    Lifecycle,
    Mode,
    Session,
    TransitionKind,
    TransitionOutcome,
    apply_decision,
    query_history,
    resolve_clarification,
)
from .tags import extract_decision, normalize_decision

#: Minimum search score for a candidate to count as a hit, and the score gap
#: under which multiple hits are treated as a tie needing clarification.
SCORE_THRESHOLD = 0.6
TIE_WINDOW = 0.1

#: Value rendered into the current-entity placeholder before the first commit.
EMPTY_CONTEXT_NAME = "none"


class BackendFailure(RuntimeError):
    """Backend call failed; the session is consistent at its last event."""


class ClarificationPending(RuntimeError):
    """The session is awaiting clarification; route the turn accordingly."""


class DomainAdapter(Protocol):
    domain: Domain
    confirmation_task_name: str
    reset_task_name: str | None

    def search_entities(self, text: str) -> list[SearchHit]: ...

    def fetch_detail(self, entity: EntityRef, detail_kind: str) -> str: ...

    def detail_kinds(self, entity: EntityRef) -> list[str]: ...

    def best_detail_kind(self, entity: EntityRef, text: str) -> str: ...

    def detail_kind_matches(self, entity: EntityRef, text: str) -> bool: ...

    def exact_name_match(self, text: str) -> EntityRef | None: ...

    def display_names(self) -> list[str]: ...


class ResolutionKind(Enum):
    RESOLVED = "resolved"
    AMBIGUOUS = "ambiguous"
    NONE = "none"


@dataclass(frozen=True)
class CandidateResolution:
    kind: ResolutionKind
    entity: EntityRef | None = None
    options: list[EntityRef] = field(default_factory=list)
    current_detail_kind: str | None = None


@dataclass(frozen=True)
class TurnResult:
    reply_text: str
    decision: DecisionRecord | None
    transition: TransitionOutcome
    clarifying: bool


def _domain_noun(domain: Domain) -> str:
    return "customer" if domain is Domain.CUSTOMER_MGMT else "hotel"


class Orchestrator:
    def __init__(
        self,
        adapter: DomainAdapter,
        backend,
        registry: TaskRegistry = DEFAULT_REGISTRY,
        score_threshold: float = SCORE_THRESHOLD,
        tie_window: float = TIE_WINDOW,
    ):
        self.adapter = adapter
        self.backend = backend
        self.registry = registry
        self.score_threshold = score_threshold
        self.tie_window = tie_window

    # -- tagged pipeline ----------------------------------------------------

    def handle_user_turn(self, session: Session, utterance: str) -> TurnResult:
        if session.lifecycle is Lifecycle.AWAITING_CLARIFICATION:
            raise ClarificationPending(
                "clarification answers go to handle_clarification_answer"
            )
        task = self.registry.get(self.adapter.confirmation_task_name)
        history = query_history(session)
        session.record_user_utterance(utterance)

        entity = session.context.entity
        entity_name = entity.display_name if entity is not None else EMPTY_CONTEXT_NAME
        prompt = render_prompt(task, utterance, entity_name, history)
        try:
            response = self.backend.complete(CompletionRequest(prompt=prompt))
        except BackendError as exc:
            raise BackendFailure(str(exc)) from exc

        extraction = extract_decision(response.text, task)
        decision = normalize_decision(extraction.decision_value)

        if entity is None:
            return self._bootstrap_turn(
                session, utterance, task.task_name, decision, extraction, response.text
            )

        if decision is Decision.CONFIRMED:
            record = DecisionRecord(
                task_name=task.task_name,
                decision=decision,
                chain_of_thought=extraction.chain_of_thought,
                raw_output=response.text,
            )
            outcome = apply_decision(session, record)
            reply = self._detail_reply(entity, utterance)
            session.record_reply(reply)
            return TurnResult(reply, record, outcome, clarifying=False)

        if decision is Decision.REJECTED:
            resolution = self.resolve_candidate(utterance, entity)
        else:
            # Garbled or missing tags never commit anything; ask instead.
            resolution = CandidateResolution(ResolutionKind.NONE)

        if resolution.kind is ResolutionKind.RESOLVED:
            record = DecisionRecord(
                task_name=task.task_name,
                decision=decision,
                chain_of_thought=extraction.chain_of_thought,
                raw_output=response.text,
                candidate_entity=resolution.entity,
            )
            outcome = apply_decision(session, record)
            reply = f"Understood. Let's talk about {resolution.entity.display_name}."
            session.record_reply(reply)
            return TurnResult(reply, record, outcome, clarifying=False)

        record = DecisionRecord(
            task_name=task.task_name,
            decision=decision,
            chain_of_thought=extraction.chain_of_thought,
            raw_output=response.text,
        )
        outcome = apply_decision(
            session, record, clarify_candidates=resolution.options
        )
        question = self._clarifying_question(resolution, entity)
        session.record_reply(question, clarifying=True)
        return TurnResult(question, record, outcome, clarifying=True)

    def _bootstrap_turn(
        self,
        session: Session,
        utterance: str,
        task_name: str,
        decision: Decision,
        extraction,
        raw_output: str,
    ) -> TurnResult:
        # No committed entity means nothing to confirm: commit the top search
        # hit directly and keep the classified decision as audit data only.
        hits = self.adapter.search_entities(utterance)
        noun = _domain_noun(self.adapter.domain)
        if hits:
            candidate = hits[0].entity
            record = DecisionRecord(
                task_name=task_name,
                decision=decision,
                chain_of_thought=extraction.chain_of_thought,
                raw_output=raw_output,
                candidate_entity=candidate,
            )
            outcome = apply_decision(session, record, bootstrap=True)
            reply = self._bootstrap_reply(candidate)
            session.record_reply(reply)
            return TurnResult(reply, record, outcome, clarifying=False)

        record = DecisionRecord(
            task_name=task_name,
            decision=decision,
            chain_of_thought=extraction.chain_of_thought,
            raw_output=raw_output,
        )
        outcome = apply_decision(session, record, bootstrap=True)
        question = f"I couldn't find a matching {noun}. Which {noun} do you mean?"
        session.record_reply(question, clarifying=True)
        return TurnResult(question, record, outcome, clarifying=True)

    def resolve_candidate(
        self, utterance: str, current: EntityRef | None
    ) -> CandidateResolution:
        """Map a rejected utterance to the entity the user is switching to.

        Exactly one hit above the score threshold resolves; ties within the
        tie window are ambiguous; zero hits resolve to none. A hit that also
        token-matches one of the current entity's detail kinds is ambiguous
        too: the user may mean the detail, not a switch.
        """
        hits = [
            h for h in self.adapter.search_entities(utterance)
            if h.score >= self.score_threshold
        ]
        if not hits:
            return CandidateResolution(ResolutionKind.NONE)
        best = hits[0].score
        tied = [h.entity for h in hits if best - h.score < self.tie_window]
        if len(tied) > 1:
            return CandidateResolution(ResolutionKind.AMBIGUOUS, options=tied)
        winner = tied[0]
        if current is not None and self.adapter.detail_kind_matches(current, utterance):
            kind = self.adapter.best_detail_kind(current, utterance)
            return CandidateResolution(
                ResolutionKind.AMBIGUOUS, options=[winner], current_detail_kind=kind
            )
        return CandidateResolution(ResolutionKind.RESOLVED, entity=winner)

    def handle_clarification_answer(self, session: Session, utterance: str) -> TurnResult:
        """Match the answer against the offered options; re-ask once, then bail out."""
        if session.lifecycle is not Lifecycle.AWAITING_CLARIFICATION:
            raise ClarificationPending("session is not awaiting clarification")
        pending = session.pending_clarification
        current = session.context.entity
        choice = _match_option(utterance, pending.candidates, current)

        if choice is None:
            if pending.asked_count >= 2:
                # Second miss: stop asking and process it as a fresh utterance.
                session.lifecycle = Lifecycle.ACTIVE
                session.pending_clarification = None
                return self.handle_user_turn(session, utterance)
            session.record_user_utterance(utterance, meta=True)
            pending.asked_count += 1
            question = self._reask_question(pending.candidates, current)
            session.record_reply(question, clarifying=True)
            return TurnResult(
                question,
                None,
                TransitionOutcome(TransitionKind.NEEDS_CLARIFICATION),
                clarifying=True,
            )

        session.record_user_utterance(utterance, meta=True)
        if choice is KEEP_CURRENT:
            outcome = resolve_clarification(session, KEEP_CURRENT)
            reply = f"Understood. Continuing with {current.display_name}."
        else:
            outcome = resolve_clarification(session, choice)
            reply = f"Understood. Let's talk about {choice.display_name}."
        session.record_reply(reply)
        return TurnResult(reply, None, outcome, clarifying=False)

    # -- baseline pipeline ----------------------------------------------------

    def baseline_turn(self, session: Session, utterance: str) -> TurnResult:
        """Untagged comparison arm: everything is read against the current context.

        Switches happen only on an exact catalog name, so partial references
        get lumped under the current entity instead of prompting a question.
        """
        session.record_user_utterance(utterance)
        entity = session.context.entity
        if entity is None:
            hits = self.adapter.search_entities(utterance)
            if hits:
                candidate = hits[0].entity
                session.commit_entity(candidate)
                session.lifecycle = Lifecycle.ACTIVE
                reply = self._bootstrap_reply(candidate)
                session.record_reply(reply)
                return TurnResult(
                    reply,
                    None,
                    TransitionOutcome(TransitionKind.COMMITTED_NEW, committed=candidate),
                    clarifying=False,
                )
            noun = _domain_noun(self.adapter.domain)
            reply = f"I couldn't find a matching {noun}."
            session.record_reply(reply)
            return TurnResult(
                reply, None, TransitionOutcome(TransitionKind.KEPT_CONTEXT), clarifying=False
            )

        exact = self.adapter.exact_name_match(utterance)
        if exact is not None and exact != entity:
            session.commit_entity(exact)
            reply = f"Switching to {exact.display_name}."
            session.record_reply(reply)
            return TurnResult(
                reply,
                None,
                TransitionOutcome(TransitionKind.COMMITTED_NEW, committed=exact),
                clarifying=False,
            )

        reply = self._detail_reply(entity, utterance)
        session.record_reply(reply)
        return TurnResult(
            reply, None, TransitionOutcome(TransitionKind.KEPT_CONTEXT), clarifying=False
        )

    def handle_turn(self, session: Session, utterance: str) -> TurnResult:
        """Route one inbound utterance according to session mode and lifecycle."""
        if session.mode is Mode.BASELINE:
            return self.baseline_turn(session, utterance)
        if session.lifecycle is Lifecycle.AWAITING_CLARIFICATION:
            return self.handle_clarification_answer(session, utterance)
        return self.handle_user_turn(session, utterance)

    # -- reply templating -----------------------------------------------------

    def _bootstrap_reply(self, entity: EntityRef) -> str:
        if self.adapter.domain is Domain.CUSTOMER_MGMT:
            return f"Yes, {entity.display_name} is a customer. What would you like to know?"
        return f"Found {entity.display_name}. What would you like to know?"

    def _detail_reply(self, entity: EntityRef, utterance: str) -> str:
        kind = self.adapter.best_detail_kind(entity, utterance)
        return self.adapter.fetch_detail(entity, kind)

    def _clarifying_question(
        self, resolution: CandidateResolution, current: EntityRef
    ) -> str:
        noun = _domain_noun(self.adapter.domain)
        if resolution.current_detail_kind is not None and len(resolution.options) == 1:
            candidate = resolution.options[0]
            joiner = "from" if self.adapter.domain is Domain.CUSTOMER_MGMT else "at"
            return (
                f"Are you referring to {candidate.display_name} as a new {noun}, "
                f"or do you mean the {resolution.current_detail_kind} {joiner} "
                f"{current.display_name}?"
            )
        if resolution.options:
            names = ", ".join(o.display_name for o in resolution.options)
            return f"Which one do you mean: {names}, or keep {current.display_name}?"
        return (
            f"I couldn't match that to a {noun}. Did you mean to switch, "
            f"or keep {current.display_name}?"
        )

    def _reask_question(self, options: list[EntityRef], current: EntityRef | None) -> str:
        names = [o.display_name for o in options]
        if current is not None:
            names.append(f"keep {current.display_name}")
        if names:
            return f"Sorry, I didn't catch that. Which one do you mean: {', '.join(names)}?"
        noun = _domain_noun(self.adapter.domain)
        return f"Sorry, I didn't catch that. Which {noun} do you mean?"


_KEEP_WORDS = frozenset({"keep", "stay", "same", "current"})


def _norm_token(token: str) -> str:
    if len(token) > 3 and token.endswith("s"):
        return token[:-1]
    return token


def _match_option(
    utterance: str, options: list[EntityRef], current: EntityRef | None
) -> EntityRef | object | None:
    """Pick the offered option the answer points at, or KEEP_CURRENT, or None.

    Full display-name mentions dominate; otherwise normalized token overlap
    decides, and ties stay unresolved so the caller can re-ask.
    """
    lowered = utterance.lower()
    answer_tokens = {_norm_token(t) for t in tokenize(utterance)}

    raw_words = set(lowered.replace(".", " ").replace(",", " ").split())
    keep_signal = bool(raw_words & _KEEP_WORDS)

    scored: list[tuple[int, object]] = []
    for option in options:
        score = 0
        if option.display_name.lower() in lowered:
            score += 10
        score += len(answer_tokens & {_norm_token(t) for t in tokenize(option.display_name)})
        if score:
            scored.append((score, option))
    if current is not None:
        score = 10 if keep_signal else 0
        if current.display_name.lower() in lowered:
            score += 10
        score += len(answer_tokens & {_norm_token(t) for t in tokenize(current.display_name)})
        if score:
            scored.append((score, KEEP_CURRENT))

    if not scored:
        return None
    scored.sort(key=lambda item: -item[0])
    if len(scored) > 1 and scored[0][0] == scored[1][0]:
        return None
    return scored[0][1]
