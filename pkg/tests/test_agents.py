from __future__ import annotations

import random

import pytest

from procbot.agents import match_events
from procbot.agents.alerts import AlertRegistry, NotificationHub
from procbot.agents.content_analyzer import parse_key_values
from procbot.contract import (
    Context,
    SpeakerRole,
    TaxonomyClass,
    Utterance,
    agent_preview,
)
from procbot.process import EventKind, LogicalClock, ProcessEvent
from procbot.runtime import build_stack

U = lambda text, role=SpeakerRole.LOAN_OFFICER: Utterance(  # noqa: E731
    text=text, speaker_role=role)


@pytest.fixture()
def agents(stack):
    return {a.agent_id: a for a in stack.registry.all_agents()}


# -- taxonomy conformance -------------------------------------------------------------

EXPECTED_TAXONOMY = {
    "chit-chat": (TaxonomyClass.DIALOG, False),
    "data-query": (TaxonomyClass.INFORMATION_RETRIEVAL, False),
    "visualization": (TaxonomyClass.DATA_ANALYTICS, False),
    "data-export": (TaxonomyClass.DATA_ANALYTICS, False),
    "rules": (TaxonomyClass.TASK_EXECUTION, False),
    "content-analyzer": (TaxonomyClass.INFORMATION_RETRIEVAL, False),
    "bp-execute": (TaxonomyClass.TASK_EXECUTION, True),
    "travel-query": (TaxonomyClass.INFORMATION_RETRIEVAL, False),
    "alerts": (TaxonomyClass.ALERTING, True),
}


def test_taxonomy_conformance(agents):
    assert set(agents) == set(EXPECTED_TAXONOMY)
    for agent_id, (klass, world_changing) in EXPECTED_TAXONOMY.items():
        descriptor = agents[agent_id].descriptor
        assert descriptor.taxonomy_class is klass, agent_id
        assert descriptor.world_changing is world_changing, agent_id


# -- confidence bounds fuzz ------------------------------------------------------------

FUZZ_UTTERANCES = [
    "Hello", "thanks", "help", "approve John Smith's request, please",
    "submit a travel request to Boston", "plot the pie chart per status",
    "export this data", "can the loan be approved?", "delete alert 2",
    "list pending travel requests", "how many loans", "55000", "never mind",
    "what is in this document", "asdf zxcv", "more than 10000", "???? !!",
]


def test_confidence_and_stickiness_bounds_across_suite(stack, agents):
    ctx = Context.empty()
    for text in FUZZ_UTTERANCES:
        for agent in agents.values():
            preview = agent_preview(agent, U(text), ctx)
            assert 0.0 <= preview.confidence <= 1.0, (agent.agent_id, text)
            assert preview.stickiness in (0, 1), (agent.agent_id, text)


# -- preview purity and parity ---------------------------------------------------------

def test_preview_purity_world_snapshot(stack, agents):
    before = stack.world_snapshot()
    ctx = Context.empty()
    for text in FUZZ_UTTERANCES:
        for agent in agents.values():
            agent_preview(agent, U(text), ctx)
    assert stack.world_snapshot() == before


def test_preview_determinism(stack, agents):
    ctx = Context.empty()
    for text in FUZZ_UTTERANCES:
        for agent in agents.values():
            first = agent_preview(agent, U(text), ctx)
            for _ in range(2):
                assert agent_preview(agent, U(text), ctx) == first


def test_preview_parity_non_world_changing(stack, agents):
    ctx = Context.empty()
    for agent in agents.values():
        if agent.descriptor.world_changing:
            continue
        for text in FUZZ_UTTERANCES:
            preview = agent.preview(U(text), ctx)
            result = agent.execute(U(text), ctx)
            assert preview.response == result.response, (agent.agent_id, text)


def test_world_changing_preview_equals_execute_text(stack, agents):
    """With unchanged world state, the would-do text matches the done text."""
    stack.process_store.submit("travel", "John Smith",
                               {"destination": "Boston", "event": "training",
                                "estimated_cost": 100})
    agent = agents["bp-execute"]
    utterance = U("Approve John Smith's request", SpeakerRole.MANAGER)
    preview = agent.preview(utterance, Context.empty())
    result = agent.execute(utterance, Context.empty())
    assert preview.response == result.response
    assert "has been approved" in result.response.flat_text()


# -- chit-chat -------------------------------------------------------------------------

def test_chitchat_greeting(agents):
    preview = agents["chit-chat"].preview(U("Hello"), Context.empty())
    assert preview.response.flat_text() == "Hi there"
    assert preview.confidence == 1.0
    assert preview.stickiness == 0


def test_chitchat_out_of_domain_low(agents):
    preview = agents["chit-chat"].preview(U("approve the loan"), Context.empty())
    assert preview.confidence < 0.3


def test_chitchat_help_lists_roster(agents):
    text = agents["chit-chat"].preview(U("help"), Context.empty()).response.flat_text()
    for name in ("Data Query", "Business Rules", "Alerts"):
        assert name in text


# -- data query ------------------------------------------------------------------------

def test_dataquery_agent_full_query(agents):
    preview = agents["data-query"].preview(
        U("List all loans with yearly income more than 50000 but credit score "
          "less than 600"), Context.empty())
    assert preview.confidence == 1.0
    assert "Total records found are 227" in preview.response.flat_text()
    assert "last_result" in preview.context_updates.shared


def test_dataquery_agent_greeting_scores_low(agents):
    preview = agents["data-query"].preview(U("Hello"), Context.empty())
    assert preview.confidence < 0.3


def test_dataquery_agent_clarifies_and_goes_sticky(agents):
    agent = agents["data-query"]
    preview = agent.preview(U("list the weather in paris"), Context.empty())
    assert 0.3 < preview.confidence < 1.0
    assert "rephrase" in preview.response.flat_text().lower()
    pending = preview.context_updates.agent_scoped["data-query"]
    assert pending["pendingClarification"] is True
    ctx = Context(agent_scoped={"data-query": {"pendingClarification": True}})
    retry = agent.preview(U("list all borrowers"), ctx)
    assert retry.stickiness == 1
    assert retry.confidence == 1.0


# -- analytics -------------------------------------------------------------------------

def visualization_ctx(stack):
    from procbot.dataquery import QueryAst, evaluate
    result = evaluate(QueryAst(source="loans"), stack.bundle.loans)
    return Context(shared={"last_result": result.to_payload()})


def test_visualization_builds_bar_chart(stack, agents):
    ctx = visualization_ctx(stack)
    preview = agents["visualization"].preview(
        U("Plot the bar chart per yearly income"), ctx)
    assert preview.confidence == 1.0
    chart = preview.response.parts[1].chart
    assert chart.kind == "bar"
    assert sum(chart.values) == 500
    assert len(chart.categories) == len(chart.values)


def test_visualization_pie_chart_per_status(stack, agents):
    ctx = visualization_ctx(stack)
    preview = agents["visualization"].preview(U("plot pie chart per status"), ctx)
    chart = preview.response.parts[1].chart
    assert chart.kind == "pie"
    assert set(chart.categories) == {"approved", "rejected", "review", "submitted"}


def test_visualization_without_result_apologizes_at_half_confidence(agents):
    preview = agents["visualization"].preview(
        U("Plot the bar chart per yearly income"), Context.empty())
    assert preview.confidence == 0.5
    assert "no query result" in preview.response.flat_text().lower()


def test_export_round_trips_bytes(stack, agents):
    ctx = visualization_ctx(stack)
    first = agents["data-export"].preview(U("Export this data to a CSV file"), ctx)
    second = agents["data-export"].preview(U("Export this data to a CSV file"), ctx)
    attachment = first.response.parts[1].attachment
    assert attachment.filename == "result.csv"
    assert attachment.media_type == "text/csv"
    assert attachment.data == second.response.parts[1].attachment.data
    assert attachment.data.startswith(b"borrower,amount")


def test_export_empty_result_has_header_only(stack, agents):
    from procbot.contract import TablePayload
    ctx = Context(shared={"last_result": TablePayload.build(
        [("a", "string"), ("b", "number")], [])})
    preview = agents["data-export"].preview(U("export this data"), ctx)
    assert preview.response.parts[1].attachment.data == b"a,b\r\n"


# -- content analyzer -----------------------------------------------------------------

def test_parse_key_values_synonyms():
    fields = dict(parse_key_values(
        "FICO: 550\nLoan Amount: 12,000\nAnnual Salary: $40,000\nIgnored: x\n"))
    assert fields == {"credit_score": 550, "amount": 12000,
                      "yearly_income": 40000}


def test_content_analyzer_reads_named_document(stack, agents):
    preview = agents["content-analyzer"].preview(
        U("analyze document loan_smith.txt"), Context.empty())
    assert preview.confidence == 1.0
    assert preview.context_updates.shared["loan.credit_score"] == 550
    assert preview.context_updates.shared["loan.amount"] == 600000


def test_content_analyzer_unknown_document_lowers_confidence(stack, agents):
    preview = agents["content-analyzer"].preview(
        U("analyze document nope.txt"), Context.empty())
    assert preview.confidence == 0.5
    assert "couldn't find" in preview.response.flat_text()


def test_content_analyzer_empty_document(stack, agents):
    stack.docstore.add("empty.txt", "just words\n")
    preview = agents["content-analyzer"].preview(
        U("analyze document empty.txt"), Context.empty())
    assert "No fields found" in preview.response.flat_text()


def test_docstore_loads_from_directory(tmp_path):
    from procbot.agents import DocumentStore
    (tmp_path / "a.txt").write_text("Amount: 5\n", encoding="utf-8")
    (tmp_path / "b.txt").write_text("FICO: 700\n", encoding="utf-8")
    store = DocumentStore.from_dir(str(tmp_path))
    assert store.names() == ["a.txt", "b.txt"]
    assert store.get("b.txt") == "FICO: 700\n"


def test_stack_with_documents_and_model_dirs(tmp_path):
    import json as jsonlib

    docs = tmp_path / "docs"
    docs.mkdir()
    (docs / "case.txt").write_text("Credit Score: 640\n", encoding="utf-8")
    models = tmp_path / "models"
    models.mkdir()
    (models / "chit-chat.json").write_text(jsonlib.dumps({
        "intents": [{"id": "greeting", "patterns": ["ahoy"], "keywords": []}],
        "entities": [],
    }), encoding="utf-8")
    stack = build_stack(seed=42, size=50, clock=LogicalClock(),
                        documents_dir=str(docs), model_dir=str(models))
    assert stack.docstore.names() == ["case.txt"]
    chitchat = stack.registry.get("chit-chat")
    assert chitchat.preview(U("ahoy"), Context.empty()).confidence == 1.0
    assert chitchat.preview(U("hello"), Context.empty()).confidence < 1.0


# -- rules agent -----------------------------------------------------------------------

def test_rules_agent_prefilled_context_decides_immediately(stack, agents):
    ctx = Context(shared={"loan.amount": 600000, "loan.credit_score": 550,
                          "loan.yearly_income": 40000})
    preview = agents["rules"].preview(U("Can the loan be approved?"), ctx)
    assert "Recommendation: Reject" in preview.response.flat_text()
    assert preview.context_updates.shared["loan.decision"] == "Reject"
    assert preview.stickiness == 0


def test_rules_agent_asks_first_missing_fact(agents):
    preview = agents["rules"].preview(U("Can the loan be approved?"),
                                      Context.empty())
    assert preview.response.flat_text() == "What is the loan amount?"
    frame = preview.context_updates.agent_scoped["rules"]["frame"]
    assert frame["pending"] == "amount"


def test_rules_agent_mid_frame_is_sticky(agents):
    start = agents["rules"].preview(U("Can the loan be approved?"),
                                    Context.empty())
    frame_value = start.context_updates.agent_scoped["rules"]["frame"]
    ctx = Context(agent_scoped={"rules": {"frame": frame_value}})
    answer = agents["rules"].preview(U("700"), ctx)
    assert answer.stickiness == 1
    assert answer.response.flat_text() == "What is the applicant's credit score?"


# -- bp execute ------------------------------------------------------------------------

def test_bp_execute_preview_does_not_touch_store(stack, agents):
    before = stack.process_store.snapshot()
    preview = agents["bp-execute"].preview(
        U("submit a travel request to the headquarters", SpeakerRole.EMPLOYEE),
        Context.empty())
    assert "has been submitted" in preview.response.flat_text()
    assert stack.process_store.snapshot() == before


def test_bp_execute_submit_then_role_guard(stack, agents):
    agent = agents["bp-execute"]
    agent.execute(U("submit a travel request to the headquarters",
                    SpeakerRole.EMPLOYEE), Context.empty())
    instances = stack.process_store.query_instances(subject="John Smith")
    assert len(instances) == 1 and instances[0].state == "PendingManager"
    refusal = agent.execute(U("Approve John Smith's request",
                              SpeakerRole.EMPLOYEE), Context.empty())
    assert "can't approve" in refusal.response.flat_text()
    assert stack.process_store.query_instances(
        subject="John Smith")[0].state == "PendingManager"


def test_bp_execute_unknown_subject(stack, agents):
    preview = agents["bp-execute"].preview(
        U("Approve V. Doe's request", SpeakerRole.MANAGER), Context.empty())
    assert "no pending application found for V. Doe" in preview.response.flat_text()


# -- travel query ----------------------------------------------------------------------

def test_travel_query_counts(stack, agents):
    agent = agents["travel-query"]
    zero = agent.preview(U("How many travel requests does John Smith have?",
                           SpeakerRole.MANAGER), Context.empty())
    assert zero.response.flat_text() == "John Smith has 0 applications"
    stack.process_store.submit("travel", "John Smith",
                               {"destination": "Boston", "event": "training",
                                "estimated_cost": 100})
    one = agent.preview(U("How many travel requests does John Smith have?",
                          SpeakerRole.MANAGER), Context.empty())
    assert one.response.flat_text() == "John Smith has 1 application"
    assert one.confidence == 1.0


def test_travel_query_lists_pending(stack, agents):
    stack.process_store.submit("travel", "Emma Wilson",
                               {"destination": "Austin", "event": "seminar",
                                "estimated_cost": 300})
    preview = agents["travel-query"].preview(
        U("list pending travel requests", SpeakerRole.MANAGER), Context.empty())
    table = preview.response.parts[1].table
    assert ("Emma Wilson", "Austin", "seminar", "PendingManager") in table.rows
    assert "last_result" in preview.context_updates.shared


# -- alerts ----------------------------------------------------------------------------

def _event(event_id, kind=EventKind.SUBMITTED, subject="John Smith"):
    return ProcessEvent(event_id=event_id, instance_id=f"travel-{event_id}",
                        event_kind=kind,
                        payload={"subject": subject,
                                 "form": {"destination": "Boston"}})


def test_match_events_respects_watermarks():
    registry = AlertRegistry()
    rule = registry.create("s1", EventKind.SUBMITTED, None, watermark=2)
    events = [_event(1), _event(2), _event(3), _event(4)]
    hits = match_events(registry.rules(), events)
    assert [n.event.event_id for n in hits] == [3, 4]
    registry.deactivate("s1", rule.alert_id, watermark=3)
    hits = match_events(registry.rules(), events)
    assert [n.event.event_id for n in hits] == [3]


def test_alert_with_subject_filter_from_utterance(stack, agents):
    ctx = Context(shared={"session_id": "mgr"})
    preview = agents["alerts"].preview(
        U("notify me when V. Doe submits a travel request", SpeakerRole.MANAGER),
        ctx)
    assert "when V. Doe submits" in preview.response.flat_text()
    agents["alerts"].execute(
        U("notify me when V. Doe submits a travel request", SpeakerRole.MANAGER),
        ctx)
    rule = stack.alert_registry.active_rules("mgr")[0]
    assert rule.subject_filter == "V. Doe"
    assert rule.event_kind is EventKind.SUBMITTED


def test_match_events_subject_filter():
    registry = AlertRegistry()
    registry.create("s1", EventKind.SUBMITTED, "John Smith", watermark=0)
    events = [_event(1, subject="John Smith"), _event(2, subject="Emma Wilson")]
    hits = match_events(registry.rules(), events)
    assert [n.event.event_id for n in hits] == [1]


def test_alert_exactness_randomized_interleavings():
    """Delivered = {(alert, event): alert active at commit, kinds match}, once."""
    from procbot.agents.alerts import AlertMatcher
    from procbot.process import ProcessDefinition, ProcessStore
    from procbot.resources import load_json

    rng = random.Random(23)
    kinds = {"approve": EventKind.MANAGER_APPROVED, None: EventKind.SUBMITTED}
    for _ in range(40):
        store = ProcessStore(
            [ProcessDefinition.from_doc(load_json("processes/travel.json"))],
            clock=LogicalClock())
        registry = AlertRegistry()
        hub = NotificationHub()
        matcher = AlertMatcher(store, registry, hub)
        expected = set()  # (owner, alert_id, event_id)
        alive = []
        for _ in range(rng.randint(1, 30)):
            op = rng.random()
            if op < 0.25:
                kind = rng.choice(list(kinds.values()))
                owner = f"s{rng.randint(1, 3)}"
                rule = registry.create(owner, kind, None,
                                       watermark=store.last_event_id)
                alive.append(rule)
            elif op < 0.4 and alive:
                victim = rng.choice(alive)
                registry.deactivate(victim.owner_session, victim.alert_id,
                                    watermark=store.last_event_id)
                alive = [r for r in alive
                         if (r.owner_session, r.alert_id)
                         != (victim.owner_session, victim.alert_id)]
            else:
                if rng.random() < 0.7 or not store.query_instances(
                        state="PendingManager"):
                    store.submit("travel", rng.choice(["A", "B"]),
                                 {"destination": "x", "event": "y",
                                  "estimated_cost": 1})
                    committed_kind = EventKind.SUBMITTED
                else:
                    target = store.query_instances(state="PendingManager")[0]
                    store.transition(target.instance_id, "approve", "Manager")
                    committed_kind = EventKind.MANAGER_APPROVED
                event_id = store.last_event_id
                for rule in alive:
                    if rule.event_kind is committed_kind:
                        expected.add((rule.owner_session, rule.alert_id, event_id))
                if rng.random() < 0.3:
                    matcher.poll()  # drain timing must not affect exactness
        matcher.poll()
        got = set()
        for owner in ("s1", "s2", "s3"):
            for _, n in hub.poll(owner):
                key = (owner, n.alert_id, n.event.event_id)
                assert key not in got, "duplicate delivery"
                got.add(key)
        assert got == expected


# -- cooperation end to end ------------------------------------------------------------

def test_cooperation_document_turn(seed42_stack_factory):
    from procbot.orchestrator import OrchestratorConfig, run_turn

    stack = build_stack(seed=42, size=500,
                        config=OrchestratorConfig(k=2), clock=LogicalClock())
    ctx = Context(shared={"attachments": ["loan_smith.txt"]})
    result = run_turn(U("Approve the loan application in this document"),
                      ctx, stack.registry, stack.config)
    assert result.selected in (("content-analyzer", "rules"),
                               ("rules", "content-analyzer"))
    assert [aid for aid, _ in result.responses] == ["content-analyzer", "rules"]
    decision_text = result.responses[1][1].flat_text()
    assert "Recommendation: Reject" in decision_text
    assert "550" in decision_text
    assert result.context_after.shared["loan.credit_score"] == 550
    assert result.context_after.shared["loan.decision"] == "Reject"
