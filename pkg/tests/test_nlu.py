from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procbot.nlu import (
    Ask,
    Cancelled,
    CompiledModel,
    Complete,
    EntityDef,
    EntityKind,
    IntentDef,
    Reask,
    SlotDef,
    classify,
    extract_entities,
    extract_filter_triples,
    normalize,
    open_frame,
    parse_number,
    score_intent,
    slot_step,
    tokenize,
)

GAZETTEER = {"John Smith": "John Smith", "V. Doe": "V. Doe", "Y. Doe": "Y. Doe"}
COLUMNS = {
    "yearly income": "yearly_income",
    "income": "yearly_income",
    "credit score": "credit_score",
    "amount": "amount",
}


@pytest.fixture()
def model():
    intents = [
        IntentDef("greeting", patterns=("hello", "hi", "hi there"),
                  keywords=(("hello", 1.0),)),
        IntentDef("plot",
                  patterns=("plot {chart_type} chart per {column}",),
                  keywords=(("plot", 3.0), ("chart", 2.0))),
        IntentDef("approve",
                  patterns=("approve {person} request",),
                  keywords=(("approve", 2.0),)),
    ]
    entities = [
        EntityDef("chart_type", EntityKind.ENUM,
                  synonyms={"bar": "bar", "line": "line", "pie": "pie"}),
        EntityDef("column", EntityKind.COLUMN),
        EntityDef("person", EntityKind.PERSON),
        EntityDef("number", EntityKind.NUMBER),
    ]
    return CompiledModel(intents, entities, gazetteer=GAZETTEER,
                         column_synonyms=COLUMNS)


def test_normalize_drops_articles_possessives_and_punctuation():
    assert normalize("Approve John Smith's request!") == "approve john smith request"
    assert normalize("The   quick, brown fox.") == "quick brown fox"
    assert normalize("more than 10,000") == "more than 10,000"
    assert normalize("since 2024-06-01?") == "since 2024-06-01"


def test_normalize_idempotent_examples():
    for text in ["Hello!", "John Smith's request", "top 3 borrowers", "???"]:
        once = normalize(text)
        assert normalize(once) == once


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_normalize_idempotent_property(text):
    once = normalize(text)
    assert normalize(once) == once


def test_parse_number_variants():
    assert parse_number("10000") == 10000
    assert parse_number("10,000") == 10000
    assert parse_number("$5,000") == 5000
    assert parse_number("12.5") == 12.5
    assert parse_number("abc") is None


def test_classify_full_pattern_match_is_certain(model):
    result = classify(model, "Hello")
    assert result.intent_id == "greeting"
    assert result.confidence == 1.0
    assert result.matched_span_fraction == 1.0


def test_classify_pattern_with_entities(model):
    result = classify(model, "Plot the bar chart per yearly income")
    assert result.intent_id == "plot"
    assert result.confidence == 1.0
    assert result.entities == {"chart_type": "bar", "column": "yearly_income"}


def test_classify_person_placeholder(model):
    result = classify(model, "Approve John Smith's request")
    assert result.intent_id == "approve"
    assert result.entities == {"person": "John Smith"}


def test_classify_gibberish_scores_zero(model):
    assert classify(model, "???").confidence == 0.0
    assert classify(model, "???").intent_id is None
    assert classify(model, "zxcv qwerty").confidence == 0.0


def test_keyword_confidence_below_pattern(model):
    result = classify(model, "please plot something nice")
    assert result.intent_id == "plot"
    assert 0 < result.confidence < 1.0


def test_extract_entities_comparator_and_number(model):
    out = extract_entities(model, "more than 10000")
    assert out["comparator"] == ">"
    assert out["number"] == 10000


def test_extract_entities_person(model):
    out = extract_entities(model, "John Smith has 1 application")
    assert out["person"] == "John Smith"


def test_extract_filter_triples_two_clauses(model):
    triples = extract_filter_triples(
        model, "more than 50000 but credit score less than 150")
    assert ("credit_score", "<", 150) in triples
    out = extract_entities(
        model, "yearly income more than 50000 but credit score less than 150")
    assert out["filters"] == [["yearly_income", ">", 50000],
                              ["credit_score", "<", 150]]


def test_confidence_monotonicity_adding_keywords(model):
    intent = model.intents[1]  # plot
    base = "please make something nice"
    with_one = base + " plot"
    with_two = base + " plot chart"
    c0, _ = score_intent(model, intent, base)
    c1, _ = score_intent(model, intent, with_one)
    c2, _ = score_intent(model, intent, with_two)
    assert c0 <= c1 <= c2


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["plot", "chart", "nice", "data", "thing"]),
                min_size=1, max_size=8))
def test_confidence_monotonicity_property(words):
    intents = [IntentDef("plot", keywords=(("plot", 3.0), ("chart", 2.0)))]
    model = CompiledModel(intents, [])
    text = " ".join(words)
    c_before, _ = score_intent(model, intents[0], text)
    c_after, _ = score_intent(model, intents[0], text + " plot")
    assert c_after >= c_before


def test_classify_is_deterministic(model):
    results = [classify(model, "Plot the bar chart per yearly income")
               for _ in range(5)]
    assert all(r == results[0] for r in results)


# -- slot filling -----------------------------------------------------------------

def make_frame():
    return open_frame("loan", [
        SlotDef("amount", EntityKind.NUMBER, "What is the loan amount?"),
        SlotDef("credit_score", EntityKind.NUMBER, "What is the credit score?"),
    ])


def test_slot_step_asks_first_question(model):
    frame, action = slot_step(model, make_frame(), classify(model, "decide"), "decide")
    assert isinstance(action, Ask)
    assert action.slot_id == "amount"
    assert frame.pending_slot == "amount"


def test_slot_step_fills_pending_then_asks_next(model):
    frame, action = slot_step(model, make_frame(), classify(model, "x"), "x")
    frame, action = slot_step(model, frame, classify(model, "500000"), "500000")
    assert frame.filled["amount"] == 500000
    assert isinstance(action, Ask) and action.slot_id == "credit_score"


def test_slot_step_completes_when_all_filled_in_one_utterance(model):
    text = "the amount is 500000 and the score is 700"
    frame, action = slot_step(model, make_frame(), classify(model, text), text)
    assert isinstance(action, Complete)
    assert action.filled == {"amount": 500000, "credit_score": 700}


def test_slot_step_reask_on_type_mismatch(model):
    frame, _ = slot_step(model, make_frame(), classify(model, "x"), "x")
    frame2, action = slot_step(model, frame, classify(model, "a lot of money"),
                               "a lot of money")
    assert isinstance(action, Reask)
    assert frame2 == frame  # unchanged


def test_slot_step_cancel(model):
    frame, _ = slot_step(model, make_frame(), classify(model, "x"), "x")
    frame, action = slot_step(model, frame, classify(model, "never mind"),
                              "never mind")
    assert isinstance(action, Cancelled)
    assert frame.cancelled
    with pytest.raises(ValueError):
        slot_step(model, frame, classify(model, "500"), "500")


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(
    st.integers(min_value=0, max_value=10 ** 6).map(str),
    st.sampled_from(["hello", "maybe", "never mind", "42 and 99"]),
), min_size=1, max_size=6))
def test_slot_progress_property(inputs):
    """Every step fills, asks, re-asks, cancels, or completes; no silent no-op."""
    model = CompiledModel([IntentDef("i", keywords=(("x", 1.0),))],
                          [EntityDef("number", EntityKind.NUMBER)])
    frame = make_frame()
    for text in inputs:
        if frame.cancelled:
            break
        before = dict(frame.filled)
        frame, action = slot_step(model, frame, classify(model, text), text)
        assert isinstance(action, (Ask, Reask, Complete, Cancelled))
        if isinstance(action, Reask):
            assert frame.filled == before
        if isinstance(action, Complete):
            assert not frame.unfilled_required()
            break


def test_frame_value_round_trip(model):
    frame, _ = slot_step(model, make_frame(), classify(model, "500000"), "500000")
    from procbot.nlu import SlotFrame
    assert SlotFrame.from_value(frame.to_value()) == frame
