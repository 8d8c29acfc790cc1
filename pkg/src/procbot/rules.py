"""Ordered-rules decision engine for loan recommendations.

First matching rule wins. A rule can only fire once every rule ordered before
it is fully determined, so adding facts never flips an already-reached
decision. Missing facts are reported so the conversational layer can ask for
them one at a time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union


class RulesError(Exception):
    pass


class FactValidationError(RulesError):
    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


class Outcome(Enum):
    APPROVE = "Approve"
    REJECT = "Reject"
    REFER = "Refer"


@dataclass(frozen=True)
class FactDef:
    key: str
    fact_type: str  # "number" | "string" | "boolean"
    prompt: str


@dataclass(frozen=True)
class FactRef:
    """Operand referencing another fact, optionally scaled: factor * fact."""

    fact: str
    factor: float = 1.0


Operand = Union[int, float, str, bool, FactRef]


@dataclass(frozen=True)
class Condition:
    fact_key: str
    comparator: str  # < <= > >= = !=
    operand: Operand

    def referenced_facts(self) -> List[str]:
        refs = [self.fact_key]
        if isinstance(self.operand, FactRef):
            refs.append(self.operand.fact)
        return refs


@dataclass(frozen=True)
class Rule:
    rule_id: str
    conditions: Tuple[Condition, ...]
    outcome: Outcome
    rationale_template: str

    def __post_init__(self) -> None:
        if not self.conditions:
            raise RulesError(f"rule {self.rule_id!r} has no conditions")


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    rationale: str
    fired_rule: Optional[str]


@dataclass(frozen=True)
class MissingFacts:
    keys: Tuple[str, ...]


@dataclass(frozen=True)
class RuleSet:
    ruleset_id: str
    facts: Tuple[FactDef, ...]
    rules: Tuple[Rule, ...]
    default_outcome: Outcome
    default_rationale: str

    def __post_init__(self) -> None:
        if not self.rules:
            raise RulesError(f"ruleset {self.ruleset_id!r} has no rules")
        declared = {f.key for f in self.facts}
        seen_ids = set()
        for rule in self.rules:
            if rule.rule_id in seen_ids:
                raise RulesError(f"duplicate rule id {rule.rule_id!r}")
            seen_ids.add(rule.rule_id)
            for cond in rule.conditions:
                for key in cond.referenced_facts():
                    if key not in declared:
                        raise RulesError(
                            f"rule {rule.rule_id!r} references undeclared fact {key!r}")
                if cond.comparator not in ("<", "<=", ">", ">=", "=", "!="):
                    raise RulesError(
                        f"rule {rule.rule_id!r} uses unknown comparator {cond.comparator!r}")

    def fact_def(self, key: str) -> FactDef:
        for f in self.facts:
            if f.key == key:
                return f
        raise KeyError(key)


FactSet = Dict[str, Any]


def check_facts(ruleset: RuleSet, facts: FactSet) -> None:
    declared = {f.key: f for f in ruleset.facts}
    for key, value in facts.items():
        fdef = declared.get(key)
        if fdef is None:
            raise FactValidationError(key, f"unknown fact {key!r}")
        if fdef.fact_type == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise FactValidationError(key, f"fact {key!r} expects a number, got {value!r}")
        elif fdef.fact_type == "boolean":
            if not isinstance(value, bool):
                raise FactValidationError(key, f"fact {key!r} expects a boolean, got {value!r}")
        else:
            if not isinstance(value, str):
                raise FactValidationError(key, f"fact {key!r} expects a string, got {value!r}")


def required_facts(ruleset: RuleSet) -> List[str]:
    """Every fact any rule references, in fact-schema order."""
    referenced = set()
    for rule in ruleset.rules:
        for cond in rule.conditions:
            referenced.update(cond.referenced_facts())
    return [f.key for f in ruleset.facts if f.key in referenced]


def _operand_value(operand: Operand, facts: FactSet) -> Any:
    if isinstance(operand, FactRef):
        base = facts.get(operand.fact)
        if base is None:
            return None
        return operand.factor * base
    return operand


def _condition_state(cond: Condition, facts: FactSet) -> Optional[bool]:
    """True/False when determinable, None when facts are missing."""
    left = facts.get(cond.fact_key)
    right = _operand_value(cond.operand, facts)
    if left is None or right is None:
        return None
    ops = {
        "<": left < right, "<=": left <= right, ">": left > right,
        ">=": left >= right, "=": left == right, "!=": left != right,
    }
    return ops[cond.comparator]


def evaluate_rules(ruleset: RuleSet, facts: FactSet) -> Union[Decision, MissingFacts]:
    """First-match evaluation with missing-fact reporting.

    A rule whose determinable conditions all hold but that still references
    missing facts blocks every later rule from firing; the missing keys are
    returned instead (in schema order) so they can be asked for.
    """
    check_facts(ruleset, facts)
    missing: List[str] = []
    for rule in ruleset.rules:
        states = [_condition_state(cond, facts) for cond in rule.conditions]
        if any(state is False for state in states):
            continue
        if any(state is None for state in states):
            for cond, state in zip(rule.conditions, states):
                if state is None:
                    for key in cond.referenced_facts():
                        if key not in facts and key not in missing:
                            missing.append(key)
            continue
        if not missing:
            return Decision(
                outcome=rule.outcome,
                rationale=rule.rationale_template.format(**facts),
                fired_rule=rule.rule_id,
            )
        break
    if missing:
        order = {f.key: i for i, f in enumerate(ruleset.facts)}
        return MissingFacts(tuple(sorted(missing, key=lambda k: order[k])))
    return Decision(outcome=ruleset.default_outcome,
                    rationale=ruleset.default_rationale, fired_rule=None)


# -- ruleset documents ------------------------------------------------------------

def _parse_operand(raw: Any) -> Operand:
    if isinstance(raw, dict):
        if "fact" not in raw:
            raise RulesError(f"operand object needs a 'fact' key: {raw!r}")
        return FactRef(fact=raw["fact"], factor=float(raw.get("factor", 1.0)))
    return raw


def ruleset_from_doc(doc: dict) -> RuleSet:
    try:
        facts = tuple(FactDef(f["key"], f["type"], f["prompt"]) for f in doc["facts"])
        rules = tuple(
            Rule(
                rule_id=r["id"],
                conditions=tuple(
                    Condition(c[0], c[1], _parse_operand(c[2])) for c in r["when"]),
                outcome=Outcome(r["decision"]),
                rationale_template=r["rationale"],
            )
            for r in doc["rules"]
        )
        default = doc["default"]
        return RuleSet(
            ruleset_id=doc["id"],
            facts=facts,
            rules=rules,
            default_outcome=Outcome(default["decision"]),
            default_rationale=default.get("rationale", ""),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise RulesError(f"malformed ruleset document: {exc}") from exc


def load_ruleset(path: str) -> RuleSet:
    with open(path, "r", encoding="utf-8") as fh:
        return ruleset_from_doc(json.load(fh))
