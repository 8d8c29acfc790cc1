from __future__ import annotations

import itertools
import random

import pytest

from procbot.process import (
    AuthorizationError,
    EventKind,
    IllegalTransition,
    LogicalClock,
    ProcessDefinition,
    ProcessStore,
    SubmissionError,
    UnknownInstance,
    read_journal,
    replay_journal,
    verify_history,
)
from procbot.resources import load_json

ROLES = ("Employee", "Manager", "Director", "LoanOfficer")
ACTIONS = ("approve", "reject")


def defs():
    return [ProcessDefinition.from_doc(load_json("processes/travel.json")),
            ProcessDefinition.from_doc(load_json("processes/loan.json"))]


def fresh_store(**kwargs) -> ProcessStore:
    return ProcessStore(defs(), clock=LogicalClock(), **kwargs)


def submit_travel(store, subject="John Smith", destination="headquarters"):
    return store.submit("travel", subject,
                        {"destination": destination, "event": "training",
                         "estimated_cost": 1500})


def test_submit_creates_pending_manager_with_event():
    store = fresh_store()
    instance = submit_travel(store)
    assert instance.state == "PendingManager"
    events = store.events_since(0)
    assert len(events) == 1
    assert events[0].event_kind is EventKind.SUBMITTED
    assert events[0].payload["subject"] == "John Smith"


def test_submit_missing_required_field():
    store = fresh_store()
    with pytest.raises(SubmissionError) as err:
        store.submit("travel", "John Smith", {"destination": ""})
    assert "destination" in err.value.missing_fields


def test_two_submissions_distinct_ids_and_increasing_events():
    store = fresh_store()
    a = submit_travel(store)
    b = submit_travel(store, subject="Emma Wilson")
    assert a.instance_id != b.instance_id
    ids = [e.event_id for e in store.events_since(0)]
    assert ids == sorted(ids) and len(set(ids)) == len(ids)


def test_travel_approval_chain():
    store = fresh_store()
    instance = submit_travel(store)
    after_manager = store.transition(instance.instance_id, "approve", "Manager")
    assert after_manager.state == "PendingDirector"
    after_director = store.transition(instance.instance_id, "approve", "Director")
    assert after_director.state == "Approved"
    kinds = [e.event_kind for e in store.events_since(0)]
    assert kinds == [EventKind.SUBMITTED, EventKind.MANAGER_APPROVED,
                     EventKind.DIRECTOR_APPROVED]


def test_reject_is_terminal_at_either_step():
    store = fresh_store()
    a = submit_travel(store)
    rejected = store.transition(a.instance_id, "reject", "Manager")
    assert rejected.state == "Rejected"
    b = submit_travel(store, subject="Emma Wilson")
    store.transition(b.instance_id, "approve", "Manager")
    rejected_b = store.transition(b.instance_id, "reject", "Director")
    assert rejected_b.state == "Rejected"


def test_employee_cannot_approve():
    store = fresh_store()
    instance = submit_travel(store)
    with pytest.raises(AuthorizationError):
        store.transition(instance.instance_id, "approve", "Employee")
    assert store.get(instance.instance_id).state == "PendingManager"


def test_terminal_state_refuses_actions():
    store = fresh_store()
    instance = submit_travel(store)
    store.transition(instance.instance_id, "approve", "Manager")
    store.transition(instance.instance_id, "approve", "Director")
    with pytest.raises(IllegalTransition):
        store.transition(instance.instance_id, "reject", "Director")


def test_unknown_action_is_illegal():
    store = fresh_store()
    instance = submit_travel(store)
    with pytest.raises(IllegalTransition):
        store.transition(instance.instance_id, "escalate", "Manager")


def test_unknown_instance():
    store = fresh_store()
    with pytest.raises(UnknownInstance):
        store.transition("travel-999", "approve", "Manager")


def test_exhaustive_role_guard():
    """Every (state, action, role) not in the definition errors, state unchanged."""
    travel = defs()[0]
    legal = {(t.from_state, t.action, t.required_role) for t in travel.transitions}
    for state in travel.states:
        for action, role in itertools.product(ACTIONS, ROLES):
            store = fresh_store()
            instance = submit_travel(store)
            # Drive the instance to the target state when reachable.
            if state == "PendingDirector":
                store.transition(instance.instance_id, "approve", "Manager")
            elif state == "Approved":
                store.transition(instance.instance_id, "approve", "Manager")
                store.transition(instance.instance_id, "approve", "Director")
            elif state == "Rejected":
                store.transition(instance.instance_id, "reject", "Manager")
            before = store.get(instance.instance_id).state
            assert before == state
            if (state, action, role) in legal:
                after = store.transition(instance.instance_id, action, role)
                assert after.state != state
            else:
                with pytest.raises((AuthorizationError, IllegalTransition)):
                    store.transition(instance.instance_id, action, role)
                assert store.get(instance.instance_id).state == state


def test_loan_process_chain():
    store = fresh_store()
    instance = store.submit("loan", "V. Doe", {"amount": 1000, "borrower": "V. Doe"})
    assert instance.state == "PendingOfficer"
    done = store.transition(instance.instance_id, "approve", "LoanOfficer")
    assert done.state == "Approved"
    kinds = [e.event_kind for e in store.events_since(0)]
    assert kinds == [EventKind.SUBMITTED, EventKind.STATE_CHANGED]


def test_query_instances_filters():
    store = fresh_store()
    submit_travel(store)
    submit_travel(store, subject="Emma Wilson")
    assert len(store.query_instances(subject="John Smith")) == 1
    assert store.query_instances(subject="Nobody") == []
    a = store.query_instances()[0]
    store.transition(a.instance_id, "approve", "Manager")
    pending_director = store.query_instances(state="PendingDirector")
    assert [i.instance_id for i in pending_director] == [a.instance_id]


def test_subscriptions_see_identical_ordered_events():
    store = fresh_store()
    sub1 = store.subscribe(0)
    sub2 = store.subscribe(0)
    submit_travel(store)
    a = store.query_instances()[0]
    store.transition(a.instance_id, "approve", "Manager")
    first = sub1.poll()
    submit_travel(store, subject="Emma Wilson")
    first += sub1.poll()
    second = sub2.poll()
    assert [e.event_id for e in first] == [e.event_id for e in second]
    assert sub1.poll() == []


def test_subscribe_from_latest_is_empty_until_next_commit():
    store = fresh_store()
    submit_travel(store)
    sub = store.subscribe(store.last_event_id)
    assert sub.poll() == []
    submit_travel(store, subject="Emma Wilson")
    assert len(sub.poll()) == 1


def test_event_transition_bijection_randomized():
    rng = random.Random(5)
    for _ in range(60):
        store = fresh_store()
        commits = 0
        instances = []
        for _ in range(rng.randint(1, 25)):
            op = rng.random()
            if op < 0.4 or not instances:
                submit_travel(store, subject=rng.choice(["A", "B", "C"]))
                instances = store.query_instances()
                commits += 1
            else:
                target = rng.choice(instances)
                action = rng.choice(ACTIONS)
                role = rng.choice(ROLES)
                try:
                    store.transition(target.instance_id, action, role)
                    commits += 1
                except (AuthorizationError, IllegalTransition):
                    pass
                instances = store.query_instances()
        assert len(store.events_since(0)) == commits


def test_history_replay_reconstructs_state():
    store = fresh_store()
    instance = submit_travel(store)
    store.transition(instance.instance_id, "approve", "Manager")
    store.transition(instance.instance_id, "approve", "Director")
    final = store.get(instance.instance_id)
    assert verify_history(store, final)


def test_journal_round_trip(tmp_path):
    path = tmp_path / "journal.log"
    store = fresh_store(journal_path=str(path))
    instance = submit_travel(store)
    store.transition(instance.instance_id, "approve", "Manager")
    submit_travel(store, subject="Emma Wilson")

    records = read_journal(str(path))
    assert len(records) == 3
    assert all(r["eventId"] == i + 1 for i, r in enumerate(records))

    rebuilt = replay_journal(str(path), defs(), clock=LogicalClock())
    assert rebuilt.last_event_id == store.last_event_id
    originals = store.query_instances()
    replayed = rebuilt.query_instances()
    assert [(i.subject, i.state) for i in originals] == \
           [(i.subject, i.state) for i in replayed]


def test_journal_restores_across_restart(tmp_path):
    path = str(tmp_path / "journal.log")
    store = ProcessStore.with_journal(defs(), path, clock=LogicalClock())
    instance = submit_travel(store)
    store.transition(instance.instance_id, "approve", "Manager")

    reopened = ProcessStore.with_journal(defs(), path, clock=LogicalClock())
    assert reopened.last_event_id == 2
    assert reopened.query_instances(subject="John Smith")[0].state \
        == "PendingDirector"
    # New commits append after the restored history.
    submit_travel(reopened, subject="Emma Wilson")
    assert [r["eventId"] for r in read_journal(path)] == [1, 2, 3]


def test_journal_skips_torn_tail(tmp_path):
    path = tmp_path / "journal.log"
    store = fresh_store(journal_path=str(path))
    submit_travel(store)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('99 {"eventId": 2, "truncated...')
    assert len(read_journal(str(path))) == 1
