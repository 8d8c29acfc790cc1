from __future__ import annotations

import random

import pytest

from procbot.resources import load_json
from procbot.rules import (
    Decision,
    FactValidationError,
    MissingFacts,
    Outcome,
    RuleSet,
    RulesError,
    evaluate_rules,
    required_facts,
    ruleset_from_doc,
)


@pytest.fixture(scope="module")
def ruleset() -> RuleSet:
    return ruleset_from_doc(load_json("rulesets/loan_default.json"))


def test_shipped_ruleset_shape(ruleset):
    assert len(ruleset.rules) == 4
    assert ruleset.default_outcome is Outcome.REFER


def test_required_facts_in_schema_order(ruleset):
    assert required_facts(ruleset) == ["amount", "credit_score", "yearly_income"]


def test_reject_low_score_high_amount(ruleset):
    decision = evaluate_rules(ruleset, {
        "credit_score": 550, "amount": 600000, "yearly_income": 40000})
    assert isinstance(decision, Decision)
    assert decision.outcome is Outcome.REJECT
    assert decision.fired_rule == "low-score-high-amount"
    assert "550" in decision.rationale


def test_approve_strong_applicant(ruleset):
    decision = evaluate_rules(ruleset, {
        "credit_score": 750, "amount": 100000, "yearly_income": 90000})
    assert decision.outcome is Outcome.APPROVE
    assert decision.fired_rule == "strong-applicant"


def test_approve_small_loan(ruleset):
    decision = evaluate_rules(ruleset, {
        "credit_score": 620, "amount": 30000, "yearly_income": 50000})
    assert decision.outcome is Outcome.APPROVE
    assert decision.fired_rule == "small-loan"


def test_default_refer(ruleset):
    decision = evaluate_rules(ruleset, {
        "credit_score": 650, "amount": 200000, "yearly_income": 60000})
    assert decision.outcome is Outcome.REFER
    assert decision.fired_rule is None


def test_missing_credit_score_reported(ruleset):
    out = evaluate_rules(ruleset, {"amount": 600000, "yearly_income": 40000})
    assert isinstance(out, MissingFacts)
    assert out.keys == ("credit_score",)


def test_missing_everything_reported_in_schema_order(ruleset):
    out = evaluate_rules(ruleset, {})
    assert isinstance(out, MissingFacts)
    assert list(out.keys) == ["amount", "credit_score", "yearly_income"]


def test_fact_type_mismatch_names_key(ruleset):
    with pytest.raises(FactValidationError) as err:
        evaluate_rules(ruleset, {"credit_score": "high"})
    assert err.value.key == "credit_score"


def test_unknown_fact_rejected(ruleset):
    with pytest.raises(FactValidationError):
        evaluate_rules(ruleset, {"shoe_size": 42})


def test_load_ruleset_from_file(tmp_path):
    import json
    from procbot.rules import load_ruleset

    path = tmp_path / "rules.json"
    path.write_text(json.dumps(load_json("rulesets/loan_default.json")))
    loaded = load_ruleset(str(path))
    assert loaded.ruleset_id == "loan_default"
    assert len(loaded.rules) == 4


def test_duplicate_rule_id_load_error():
    doc = load_json("rulesets/loan_default.json")
    doc["rules"].append(dict(doc["rules"][0]))
    with pytest.raises(RulesError):
        ruleset_from_doc(doc)


def test_empty_rules_load_error():
    doc = load_json("rulesets/loan_default.json")
    doc["rules"] = []
    with pytest.raises(RulesError):
        ruleset_from_doc(doc)


def test_undeclared_fact_load_error():
    doc = load_json("rulesets/loan_default.json")
    doc["rules"][0]["when"].append(["mystery", ">", 1])
    with pytest.raises(RulesError):
        ruleset_from_doc(doc)


def test_bad_comparator_load_error():
    doc = load_json("rulesets/loan_default.json")
    doc["rules"][0]["when"][0][1] = "~="
    with pytest.raises(RulesError):
        ruleset_from_doc(doc)


def _random_facts(rng: random.Random) -> dict:
    return {
        "amount": rng.randint(1_000, 1_000_000),
        "credit_score": rng.randint(300, 850),
        "yearly_income": rng.randint(10_000, 250_000),
    }


def test_completeness_full_facts_never_missing(ruleset):
    rng = random.Random(3)
    for _ in range(500):
        out = evaluate_rules(ruleset, _random_facts(rng))
        assert isinstance(out, Decision)


def test_first_match_permutation_after_fired_rule(ruleset):
    """Reordering rules after the fired one never changes the outcome."""
    rng = random.Random(11)
    doc = load_json("rulesets/loan_default.json")
    for _ in range(200):
        facts = _random_facts(rng)
        baseline = evaluate_rules(ruleset, facts)
        assert isinstance(baseline, Decision)
        fired = baseline.fired_rule
        ids = [r["id"] for r in doc["rules"]]
        if fired is None:
            continue
        pos = ids.index(fired)
        tail = doc["rules"][pos + 1:]
        if len(tail) < 2:
            continue
        shuffled = list(tail)
        rng.shuffle(shuffled)
        permuted = dict(doc)
        permuted["rules"] = doc["rules"][:pos + 1] + shuffled
        outcome = evaluate_rules(ruleset_from_doc(permuted), facts)
        assert outcome.fired_rule == fired
        assert outcome.outcome == baseline.outcome


def test_monotone_information(ruleset):
    """Adding facts not referenced before the fired rule keeps the decision."""
    decision = evaluate_rules(ruleset, {
        "amount": 30000, "yearly_income": 50000, "credit_score": 650})
    assert isinstance(decision, Decision)
    # Same facts again plus nothing new: trivially stable; and full supersets
    # of a full fact set cannot change anything.
    again = evaluate_rules(ruleset, {
        "credit_score": 650, "amount": 30000, "yearly_income": 50000})
    assert again == decision
