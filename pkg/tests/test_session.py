from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from formflow.session import (
    Domain,
    DecisionRecord,
    EntityRef,
    EventKind,
    HISTORY_BOUND,
    KEEP_CURRENT,
    Lifecycle,
    MalformedSnapshot,
    Mode,
    NotAwaitingClarification,
    Session,
    StaleDecision,
    TransitionKind,
    apply_decision,
    new_session,
    query_history,
    resolve_clarification,
    restore,
    snapshot,
)
from formflow.tags import Decision


def entity(name: str, domain: Domain = Domain.CUSTOMER_MGMT) -> EntityRef:
    return EntityRef(entity_id=name.lower().replace(" ", "-"), display_name=name, domain=domain)


def rejected(candidate: EntityRef | None, task: str = "IsCustomerConfirmed") -> DecisionRecord:
    return DecisionRecord(
        task_name=task,
        decision=Decision.REJECTED,
        chain_of_thought="switching",
        raw_output="<isCustomerConfirmed>no</isCustomerConfirmed>",
        candidate_entity=candidate,
    )


def confirmed(task: str = "IsCustomerConfirmed") -> DecisionRecord:
    return DecisionRecord(
        task_name=task,
        decision=Decision.CONFIRMED,
        chain_of_thought="staying",
        raw_output="<isCustomerConfirmed>yes</isCustomerConfirmed>",
    )


class TestNewSession:
    def test_initial_state(self):
        session = new_session(Domain.CUSTOMER_MGMT)
        assert session.lifecycle is Lifecycle.IDLE
        assert session.context.entity is None
        assert session.transcript == []

    def test_hotel_domain(self):
        session = new_session(Domain.HOTEL_BOOKING)
        assert session.domain is Domain.HOTEL_BOOKING
        assert session.lifecycle is Lifecycle.IDLE

    def test_ids_unique(self):
        assert new_session(Domain.CUSTOMER_MGMT).session_id != new_session(
            Domain.CUSTOMER_MGMT
        ).session_id


class TestApplyDecision:
    def test_bootstrap_commit_with_empty_context(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        outcome = apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        assert outcome.kind is TransitionKind.COMMITTED_NEW
        assert session.context.entity.display_name == "ABCCompany"

    def test_confirmed_keeps_context(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        before = session.context.entity
        session.record_user_utterance("What's their recent news?")
        outcome = apply_decision(session, confirmed())
        assert outcome.kind is TransitionKind.KEPT_CONTEXT
        assert session.context.entity is before

    def test_rejected_with_candidate_resets_and_commits(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        session.set_pending_field("region", "EMEA")
        session.record_user_utterance("Actually show be XYZCompany info?")
        outcome = apply_decision(session, rejected(entity("XYZCompany")))
        assert outcome.kind is TransitionKind.COMMITTED_NEW
        assert session.context.entity.display_name == "XYZCompany"
        assert session.context.pending_fields == {}
        assert [e.entity.display_name for e in session.context.committed_history] == ["ABCCompany"]
        kinds = [e.kind for e in session.transcript]
        assert EventKind.CONTEXT_RESET in kinds
        assert EventKind.CONTEXT_COMMITTED in kinds

    def test_rejected_without_candidate_needs_clarification(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        session.record_user_utterance("Dental.")
        outcome = apply_decision(
            session, rejected(None), clarify_candidates=[entity("Delta Dental")]
        )
        assert outcome.kind is TransitionKind.NEEDS_CLARIFICATION
        assert session.lifecycle is Lifecycle.AWAITING_CLARIFICATION
        assert session.context.entity.display_name == "ABCCompany"

    def test_indeterminate_needs_clarification(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        session.record_user_utterance("blurble")
        record = DecisionRecord(
            task_name="IsCustomerConfirmed",
            decision=Decision.INDETERMINATE,
            chain_of_thought=None,
            raw_output="garbage",
        )
        outcome = apply_decision(session, record)
        assert outcome.kind is TransitionKind.NEEDS_CLARIFICATION

    def test_stale_decision_rejected(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        with pytest.raises(StaleDecision):
            apply_decision(session, confirmed())

    def test_first_commit_emits_no_reset_event(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer?")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        kinds = [e.kind for e in session.transcript]
        assert EventKind.CONTEXT_RESET not in kinds
        assert EventKind.CONTEXT_COMMITTED in kinds


class TestResolveClarification:
    def _awaiting(self, fixed_clock) -> Session:
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is Delta a customer?")
        apply_decision(session, rejected(entity("Delta Airlines")), bootstrap=True)
        session.record_user_utterance("Dental.")
        apply_decision(session, rejected(None), clarify_candidates=[entity("Delta Dental")])
        return session

    def test_choose_candidate_commits(self, fixed_clock):
        session = self._awaiting(fixed_clock)
        outcome = resolve_clarification(session, entity("Delta Dental"))
        assert outcome.kind is TransitionKind.COMMITTED_NEW
        assert session.context.entity.display_name == "Delta Dental"
        assert session.lifecycle is Lifecycle.ACTIVE

    def test_keep_current(self, fixed_clock):
        session = self._awaiting(fixed_clock)
        outcome = resolve_clarification(session, KEEP_CURRENT)
        assert outcome.kind is TransitionKind.KEPT_CONTEXT
        assert session.context.entity.display_name == "Delta Airlines"
        assert session.lifecycle is Lifecycle.ACTIVE

    def test_error_when_not_awaiting(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        with pytest.raises(NotAwaitingClarification):
            resolve_clarification(session, KEEP_CURRENT)


class TestQueryHistory:
    def test_empty_session(self):
        assert query_history(new_session(Domain.CUSTOMER_MGMT)) == []

    def test_single_turn(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer")
        assert query_history(session) == ["Is ABCCompany a customer"]

    def test_replayed_transcript_in_order(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is ABCCompany a customer")
        apply_decision(session, rejected(entity("ABCCompany")), bootstrap=True)
        session.record_user_utterance("What's their recent news?")
        apply_decision(session, confirmed())
        assert query_history(session) == [
            "Is ABCCompany a customer",
            "What's their recent news?",
        ]

    def test_meta_answers_excluded(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        session.record_user_utterance("Is Delta a customer?")
        session.record_user_utterance("I mean Delta Dental specifically.", meta=True)
        assert query_history(session) == ["Is Delta a customer?"]


class TestSnapshotRestore:
    def test_fresh_round_trip(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        assert restore(snapshot(session)) == session

    def test_round_trip_through_json_text(self, fixed_clock):
        session = new_session(Domain.HOTEL_BOOKING, mode=Mode.BASELINE, clock=fixed_clock)
        session.record_user_utterance("Find me the Alpine Lodge.")
        session.commit_entity(entity("Alpine Lodge", Domain.HOTEL_BOOKING))
        doc = json.dumps(snapshot(session))
        assert restore(doc) == session

    def test_garbage_rejected(self):
        with pytest.raises(MalformedSnapshot):
            restore("garbage")

    def test_unknown_top_level_field_rejected(self, fixed_clock):
        doc = snapshot(new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock))
        doc["surprise"] = 1
        with pytest.raises(MalformedSnapshot):
            restore(doc)

    def test_unknown_nested_field_rejected(self, fixed_clock):
        doc = snapshot(new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock))
        doc["context"]["surprise"] = 1
        with pytest.raises(MalformedSnapshot):
            restore(doc)

    def test_wrong_schema_version_rejected(self, fixed_clock):
        doc = snapshot(new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock))
        doc["schema_version"] = "2"
        with pytest.raises(MalformedSnapshot):
            restore(doc)


class TestHistoryBound:
    def test_committed_history_capped(self, fixed_clock):
        session = new_session(Domain.CUSTOMER_MGMT, clock=fixed_clock)
        for index in range(HISTORY_BOUND + 10):
            session.commit_entity(entity(f"Entity {index}"))
        assert len(session.context.committed_history) == HISTORY_BOUND
        oldest = session.context.committed_history[0]
        assert oldest.entity.display_name == "Entity 9"


# -- randomized operation sequences ------------------------------------------

_NAMES = ["ABCCompany", "XYZCompany", "Delta Airlines", "Delta Dental", "Globex Corporation"]

op_strategy = st.lists(
    st.one_of(
        st.tuples(st.just("utter"), st.text(min_size=1, max_size=20)),
        st.tuples(st.just("confirm"), st.none()),
        st.tuples(st.just("reject_commit"), st.sampled_from(_NAMES)),
        st.tuples(st.just("reject_clarify"), st.sampled_from(_NAMES)),
        st.tuples(st.just("resolve_switch"), st.sampled_from(_NAMES)),
        st.tuples(st.just("resolve_keep"), st.none()),
        st.tuples(st.just("pending_field"), st.text(min_size=1, max_size=8)),
    ),
    max_size=30,
)


def drive(session: Session, ops) -> None:
    """Apply an op sequence, skipping ops whose preconditions do not hold."""
    fresh_utterance = False
    for op, arg in ops:
        if op == "utter" and session.lifecycle is not Lifecycle.AWAITING_CLARIFICATION:
            if not fresh_utterance:
                session.record_user_utterance(arg)
                fresh_utterance = True
        elif op == "confirm" and fresh_utterance:
            if session.context.entity is not None:
                apply_decision(session, confirmed())
            else:
                apply_decision(session, rejected(entity(_NAMES[0])), bootstrap=True)
            fresh_utterance = False
        elif op == "reject_commit" and fresh_utterance:
            apply_decision(
                session, rejected(entity(arg)), bootstrap=session.context.entity is None
            )
            fresh_utterance = False
        elif op == "reject_clarify" and fresh_utterance:
            apply_decision(session, rejected(None), clarify_candidates=[entity(arg)])
            fresh_utterance = False
        elif op == "resolve_switch" and session.lifecycle is Lifecycle.AWAITING_CLARIFICATION:
            resolve_clarification(session, entity(arg))
        elif op == "resolve_keep" and session.lifecycle is Lifecycle.AWAITING_CLARIFICATION:
            if session.context.entity is not None:
                resolve_clarification(session, KEEP_CURRENT)
            else:
                resolve_clarification(session, entity(_NAMES[1]))
        elif op == "pending_field":
            session.set_pending_field(arg, "value")


class TestStateMachineProperties:
    @given(op_strategy)
    @settings(max_examples=200)
    def test_transcript_append_only_with_dense_seqs(self, ops):
        session = new_session(Domain.CUSTOMER_MGMT, session_id="prop", clock=lambda: 0)
        drive(session, ops)
        assert [e.seq for e in session.transcript] == list(range(len(session.transcript)))

    @given(op_strategy)
    @settings(max_examples=200)
    def test_confirmed_never_mutates_context(self, ops):
        session = new_session(Domain.CUSTOMER_MGMT, session_id="prop", clock=lambda: 0)
        fresh = False
        for op, arg in ops:
            before = session.context.entity
            if op == "utter" and session.lifecycle is not Lifecycle.AWAITING_CLARIFICATION:
                if not fresh:
                    session.record_user_utterance(arg)
                    fresh = True
            elif op == "confirm" and fresh and session.context.entity is not None:
                apply_decision(session, confirmed())
                assert session.context.entity is before
                fresh = False
            elif op == "reject_commit" and fresh:
                apply_decision(
                    session, rejected(entity(arg)), bootstrap=session.context.entity is None
                )
                fresh = False

    @given(op_strategy)
    @settings(max_examples=200)
    def test_commits_leave_pending_fields_empty(self, ops):
        session = new_session(Domain.CUSTOMER_MGMT, session_id="prop", clock=lambda: 0)
        fresh = False
        for op, arg in ops:
            if op == "pending_field":
                session.set_pending_field(arg, "x")
            elif op == "utter" and session.lifecycle is not Lifecycle.AWAITING_CLARIFICATION:
                if not fresh:
                    session.record_user_utterance(arg)
                    fresh = True
            elif op == "reject_commit" and fresh:
                apply_decision(
                    session, rejected(entity(arg)), bootstrap=session.context.entity is None
                )
                assert session.context.pending_fields == {}
                fresh = False

    @given(op_strategy)
    @settings(max_examples=200)
    def test_snapshot_round_trip_equality(self, ops):
        session = new_session(Domain.CUSTOMER_MGMT, session_id="prop", clock=lambda: 0)
        drive(session, ops)
        assert restore(json.dumps(snapshot(session))) == session

    @given(op_strategy)
    @settings(max_examples=100)
    def test_replay_determinism(self, ops):
        one = new_session(Domain.CUSTOMER_MGMT, session_id="prop", clock=lambda: 0)
        two = new_session(Domain.CUSTOMER_MGMT, session_id="prop", clock=lambda: 0)
        drive(one, ops)
        drive(two, ops)
        assert one == two
