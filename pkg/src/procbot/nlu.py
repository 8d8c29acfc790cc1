"""Deterministic natural-language understanding for the agent suite.

Intent models are declarative: template patterns (literal tokens, `{entity}`
placeholders, `*` wildcards) plus weighted keywords. A full pattern match
after normalization scores 1.0; otherwise confidence is weighted keyword
coverage scaled by the fraction of the utterance the keywords actually cover.
Everything here is pure and reproducible: same model, same text, same result.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple


_ARTICLES = {"a", "an", "the"}
_PUNCT_RE = re.compile(r"[^\w$.,-]+", re.UNICODE)  # "-" survives for ISO dates
_POSSESSIVE_RE = re.compile(r"'s\b")

DEFAULT_CANCEL_PATTERNS = ("cancel", "never mind", "nevermind", "stop", "forget it")

COMPARATOR_PHRASES: Tuple[Tuple[str, str], ...] = (
    ("more than", ">"),
    ("greater than", ">"),
    ("less than", "<"),
    ("fewer than", "<"),
    ("at least", ">="),
    ("at most", "<="),
    ("exactly", "="),
    ("equal to", "="),
    ("not equal to", "!="),
    ("over", ">"),
    ("above", ">"),
    ("under", "<"),
    ("below", "<"),
)


def normalize(text: str) -> str:
    """Lowercase, drop possessive 's, punctuation and articles, squeeze spaces."""
    t = text.lower()
    t = _POSSESSIVE_RE.sub("", t)
    t = _PUNCT_RE.sub(" ", t)
    tokens = []
    for tok in t.split():
        tok = tok.strip(".,-")  # initials like "v." keep their letter; "10,000" survives
        if not tok or tok in _ARTICLES:
            continue
        tokens.append(tok)
    return " ".join(tokens)


def tokenize(text: str) -> List[str]:
    n = normalize(text)
    return n.split() if n else []


_PLACEHOLDER_RE = re.compile(r"^\{[A-Za-z_][A-Za-z0-9_]*\}$")


def _normalize_pattern(pattern: str) -> List[str]:
    """Normalize literal tokens but keep `{entity}` placeholders and `*` intact."""
    out: List[str] = []
    for raw in pattern.split():
        if raw == "*" or _PLACEHOLDER_RE.match(raw):
            out.append(raw)
            continue
        for tok in tokenize(raw):
            out.append(tok)
    return out


def parse_number(token: str) -> Optional[float]:
    """Parse one numeric token; thousands separators and $ signs allowed."""
    cleaned = token.replace(",", "").replace("$", "")
    if not cleaned:
        return None
    try:
        value = float(cleaned)
    except ValueError:
        return None
    return value


def as_number(value: float):
    return int(value) if float(value).is_integer() else value


class EntityKind(Enum):
    NUMBER = "number"
    MONEY = "money"
    PERSON = "person"
    COLUMN = "column"
    DATE = "date"
    ENUM = "enum"


@dataclass(frozen=True)
class EntityDef:
    entity_id: str
    kind: EntityKind
    synonyms: Dict[str, str] = field(default_factory=dict)  # normalized -> canonical

    def __post_init__(self) -> None:
        if self.kind is EntityKind.ENUM and not self.synonyms:
            raise ValueError(f"enum entity {self.entity_id!r} needs at least one literal")


@dataclass(frozen=True)
class IntentDef:
    intent_id: str
    patterns: Tuple[str, ...] = ()
    keywords: Tuple[Tuple[str, float], ...] = ()
    examples: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.patterns and not self.keywords:
            raise ValueError(f"intent {self.intent_id!r} has no patterns or keywords")
        for word, weight in self.keywords:
            if weight <= 0:
                raise ValueError(f"intent {self.intent_id!r}: weight for {word!r} not positive")


@dataclass(frozen=True)
class NluResult:
    intent_id: Optional[str]
    confidence: float
    entities: Dict[str, Any]
    matched_span_fraction: float

    @classmethod
    def nothing(cls) -> "NluResult":
        return cls(intent_id=None, confidence=0.0, entities={}, matched_span_fraction=0.0)


class CompiledModel:
    """Immutable matcher built from intent and entity definitions.

    The gazetteer (known person names) and column synonym table come from the
    runtime datasets, so the same model file adapts to whatever data is loaded.
    """

    def __init__(self, intents: Iterable[IntentDef], entities: Iterable[EntityDef],
                 gazetteer: Optional[Dict[str, str]] = None,
                 column_synonyms: Optional[Dict[str, str]] = None,
                 cancel_patterns: Iterable[str] = DEFAULT_CANCEL_PATTERNS):
        self.intents = tuple(intents)
        self.entities = {e.entity_id: e for e in entities}
        self.gazetteer = {normalize(k): v for k, v in (gazetteer or {}).items()}
        self.column_synonyms = {normalize(k): v for k, v in (column_synonyms or {}).items()}
        self.cancel_patterns = tuple(normalize(p) for p in cancel_patterns)
        self._pattern_cache = {
            intent.intent_id: [t for t in (_normalize_pattern(p) for p in intent.patterns) if t]
            for intent in self.intents
        }

    # -- entity span validation -------------------------------------------------

    def entity_value(self, entity_id: str, span_tokens: List[str]) -> Optional[Any]:
        """Interpret a token span as the given entity; None if it does not fit."""
        edef = self.entities.get(entity_id)
        if edef is None:
            return None
        span = " ".join(span_tokens)
        kind = edef.kind
        if kind in (EntityKind.NUMBER, EntityKind.MONEY):
            if len(span_tokens) != 1:
                return None
            value = parse_number(span_tokens[0])
            return None if value is None else as_number(value)
        if kind is EntityKind.PERSON:
            return self.gazetteer.get(span)
        if kind is EntityKind.COLUMN:
            return self.column_synonyms.get(span)
        if kind is EntityKind.DATE:
            if len(span_tokens) == 1 and re.fullmatch(r"\d{4}-\d{2}-\d{2}", span_tokens[0]):
                return span_tokens[0]
            return None
        if kind is EntityKind.ENUM:
            if span in edef.synonyms:
                return edef.synonyms[span]
            return None
        return None

    def is_cancel(self, text: str) -> bool:
        padded = f" {normalize(text)} "
        return any(p and f" {p} " in padded for p in self.cancel_patterns)


def _match_pattern(model: CompiledModel, pattern: List[str], tokens: List[str]) -> Optional[Dict[str, Any]]:
    """Token-level template match; returns entity bindings or None.

    Placeholders capture the shortest span that validates as their entity;
    `*` matches any (possibly empty) token run.
    """

    def step(pi: int, ti: int, bound: Dict[str, Any]) -> Optional[Dict[str, Any]]:
        if pi == len(pattern):
            return bound if ti == len(tokens) else None
        part = pattern[pi]
        if part == "*":
            for take in range(0, len(tokens) - ti + 1):
                out = step(pi + 1, ti + take, bound)
                if out is not None:
                    return out
            return None
        if part.startswith("{") and part.endswith("}"):
            entity_id = part[1:-1]
            for take in range(1, len(tokens) - ti + 1):
                value = model.entity_value(entity_id, tokens[ti:ti + take])
                if value is None:
                    continue
                out = step(pi + 1, ti + take, {**bound, entity_id: value})
                if out is not None:
                    return out
            return None
        if ti < len(tokens) and tokens[ti] == part:
            return step(pi + 1, ti + 1, bound)
        return None

    return step(0, 0, {})


def score_intent(model: CompiledModel, intent: IntentDef, text: str) -> Tuple[float, float]:
    """Keyword score for one intent: (confidence, matched_span_fraction)."""
    tokens = tokenize(text)
    if not tokens or not intent.keywords:
        return 0.0, 0.0
    joined = " " + " ".join(tokens) + " "
    total_weight = sum(w for _, w in intent.keywords)
    matched_weight = 0.0
    covered = set()
    for phrase, weight in intent.keywords:
        norm = normalize(phrase)
        if not norm:
            continue
        needle = f" {norm} "
        if needle in joined:
            matched_weight += weight
            phrase_tokens = norm.split()
            for i in range(len(tokens) - len(phrase_tokens) + 1):
                if tokens[i:i + len(phrase_tokens)] == phrase_tokens:
                    covered.update(range(i, i + len(phrase_tokens)))
    if matched_weight == 0:
        return 0.0, 0.0
    coverage = matched_weight / total_weight
    span_fraction = len(covered) / len(tokens)
    return coverage * span_fraction, span_fraction


def classify(model: CompiledModel, text: str) -> NluResult:
    """Best-intent classification with calibrated confidence in [0, 1]."""
    tokens = tokenize(text)
    if not tokens:
        return NluResult.nothing()
    # Full pattern matches win outright.
    for intent in model.intents:
        for pattern in model._pattern_cache[intent.intent_id]:
            bound = _match_pattern(model, pattern, tokens)
            if bound is not None:
                return NluResult(intent_id=intent.intent_id, confidence=1.0,
                                 entities=bound, matched_span_fraction=1.0)
    best: Optional[Tuple[float, float, IntentDef]] = None
    for intent in model.intents:
        conf, span = score_intent(model, intent, text)
        if conf > 0 and (best is None or conf > best[0]):
            best = (conf, span, intent)
    if best is None:
        return NluResult.nothing()
    conf, span, intent = best
    entities = extract_entities(model, text)
    return NluResult(intent_id=intent.intent_id, confidence=min(conf, 1.0),
                     entities=entities, matched_span_fraction=span)


# -- free-scan entity extraction ------------------------------------------------

def _scan_numbers(tokens: List[str]) -> List[Any]:
    out = []
    for tok in tokens:
        if not any(ch.isdigit() for ch in tok):
            continue
        value = parse_number(tok)
        if value is not None:
            out.append(as_number(value))
    return out


def _scan_comparators(tokens: List[str]) -> List[Tuple[int, int, str]]:
    """(start, end, symbol) for every comparator phrase occurrence."""
    found = []
    i = 0
    while i < len(tokens):
        hit = None
        for phrase, symbol in COMPARATOR_PHRASES:
            ptoks = phrase.split()
            if tokens[i:i + len(ptoks)] == ptoks:
                hit = (i, i + len(ptoks), symbol)
                break
        if hit:
            found.append(hit)
            i = hit[1]
        else:
            i += 1
    return found


def _scan_table(table: Dict[str, str], tokens: List[str]) -> List[Tuple[int, int, str]]:
    """Longest-match occurrences of any synonym in a normalized-synonym table."""
    entries = sorted(((syn.split(), canon) for syn, canon in table.items()),
                     key=lambda e: -len(e[0]))
    found = []
    i = 0
    while i < len(tokens):
        hit = None
        for syn_tokens, canon in entries:
            if syn_tokens and tokens[i:i + len(syn_tokens)] == syn_tokens:
                hit = (i, i + len(syn_tokens), canon)
                break
        if hit:
            found.append(hit)
            i = hit[1]
        else:
            i += 1
    return found


def extract_filter_triples(model: CompiledModel, text: str) -> List[Tuple[str, str, Any]]:
    """(column, comparator, number) triples, e.g. "credit score less than 150"."""
    tokens = tokenize(text)
    columns = _scan_table(model.column_synonyms, tokens)
    comparators = _scan_comparators(tokens)
    triples = []
    for c_start, c_end, symbol in comparators:
        col = None
        for start, end, canon in columns:
            if end <= c_start:
                col = canon
            else:
                break
        value = None
        for tok in tokens[c_end:]:
            maybe = parse_number(tok) if any(ch.isdigit() for ch in tok) else None
            if maybe is not None:
                value = as_number(maybe)
                break
        if col is not None and value is not None:
            triples.append((col, symbol, value))
    return triples


def extract_entities(model: CompiledModel, text: str) -> Dict[str, Any]:
    """Pull every recognizable entity out of free text (absent ones omitted)."""
    tokens = tokenize(text)
    out: Dict[str, Any] = {}
    if not tokens:
        return out
    for entity_id, edef in model.entities.items():
        if edef.kind in (EntityKind.NUMBER, EntityKind.MONEY):
            numbers = _scan_numbers(tokens)
            if numbers:
                out[entity_id] = numbers[0] if len(numbers) == 1 else numbers
        elif edef.kind is EntityKind.PERSON:
            hits = _scan_table(model.gazetteer, tokens)
            if hits:
                out[entity_id] = hits[0][2]
        elif edef.kind is EntityKind.COLUMN:
            hits = _scan_table(model.column_synonyms, tokens)
            if hits:
                out[entity_id] = hits[0][2] if len(hits) == 1 else [h[2] for h in hits]
        elif edef.kind is EntityKind.DATE:
            for tok in tokens:
                if re.fullmatch(r"\d{4}-\d{2}-\d{2}", tok):
                    out[entity_id] = tok
                    break
        elif edef.kind is EntityKind.ENUM:
            hits = _scan_table({normalize(k): v for k, v in edef.synonyms.items()}, tokens)
            if hits:
                out[entity_id] = hits[0][2]
    comparators = _scan_comparators(tokens)
    if comparators:
        symbols = [c[2] for c in comparators]
        out["comparator"] = symbols[0] if len(symbols) == 1 else symbols
    if model.column_synonyms:
        triples = extract_filter_triples(model, text)
        if triples:
            out["filters"] = [list(t) for t in triples]
    return out


# -- multi-turn slot filling ------------------------------------------------------

@dataclass(frozen=True)
class SlotDef:
    slot_id: str
    kind: EntityKind
    prompt: str
    required: bool = True


@dataclass(frozen=True)
class SlotFrame:
    """State of one multi-turn information-gathering exchange."""

    frame_id: str
    slots: Tuple[SlotDef, ...]
    filled: Dict[str, Any] = field(default_factory=dict)
    pending_slot: Optional[str] = None
    cancelled: bool = False

    def unfilled_required(self) -> List[SlotDef]:
        return [s for s in self.slots if s.required and s.slot_id not in self.filled]

    def slot(self, slot_id: str) -> SlotDef:
        for s in self.slots:
            if s.slot_id == slot_id:
                return s
        raise KeyError(slot_id)

    def to_value(self) -> dict:
        doc = {
            "frameId": self.frame_id,
            "slots": [[s.slot_id, s.kind.value, s.prompt, s.required] for s in self.slots],
            "filled": dict(self.filled),
            "cancelled": self.cancelled,
        }
        if self.pending_slot is not None:
            doc["pending"] = self.pending_slot
        return doc

    @classmethod
    def from_value(cls, doc: dict) -> "SlotFrame":
        return cls(
            frame_id=doc["frameId"],
            slots=tuple(SlotDef(s[0], EntityKind(s[1]), s[2], bool(s[3]))
                        for s in doc["slots"]),
            filled=dict(doc.get("filled", {})),
            pending_slot=doc.get("pending"),
            cancelled=bool(doc.get("cancelled", False)),
        )


@dataclass(frozen=True)
class Ask:
    slot_id: str
    prompt: str


@dataclass(frozen=True)
class Reask:
    slot_id: str
    prompt: str


@dataclass(frozen=True)
class Complete:
    filled: Dict[str, Any]


@dataclass(frozen=True)
class Cancelled:
    pass


SlotAction = Any  # Ask | Reask | Complete | Cancelled


def open_frame(frame_id: str, slots: Iterable[SlotDef],
               prefilled: Optional[Dict[str, Any]] = None) -> SlotFrame:
    frame = SlotFrame(frame_id=frame_id, slots=tuple(slots), filled=dict(prefilled or {}))
    return frame


def _typed_values(model: CompiledModel, kind: EntityKind, text: str) -> List[Any]:
    tokens = tokenize(text)
    if kind in (EntityKind.NUMBER, EntityKind.MONEY):
        return _scan_numbers(tokens)
    if kind is EntityKind.PERSON:
        return [h[2] for h in _scan_table(model.gazetteer, tokens)]
    if kind is EntityKind.DATE:
        return [t for t in tokens if re.fullmatch(r"\d{4}-\d{2}-\d{2}", t)]
    if kind is EntityKind.COLUMN:
        return [h[2] for h in _scan_table(model.column_synonyms, tokens)]
    return []


def slot_step(model: CompiledModel, frame: SlotFrame, nlu: NluResult,
              raw_text: str) -> Tuple[SlotFrame, SlotAction]:
    """Advance a slot-filling frame by one user turn.

    Either fills at least one slot, asks exactly one question, re-asks on a
    type mismatch, cancels, or completes. Cancelled frames must not be passed
    back in.
    """
    if frame.cancelled:
        raise ValueError("slot_step on a cancelled frame")
    if model.is_cancel(raw_text):
        return replace(frame, cancelled=True, pending_slot=None), Cancelled()

    filled = dict(frame.filled)
    # Direct entity-id hits first (an utterance can fill several slots at once).
    for s in frame.slots:
        if s.slot_id not in filled and s.slot_id in nlu.entities:
            filled[s.slot_id] = nlu.entities[s.slot_id]
    # Then positional fills by kind: pending slot first, remaining in order.
    order = [s for s in frame.slots if s.slot_id not in filled]
    if frame.pending_slot is not None and any(s.slot_id == frame.pending_slot for s in order):
        order.sort(key=lambda s: 0 if s.slot_id == frame.pending_slot else 1)
    pools: Dict[EntityKind, List[Any]] = {}
    for s in order:
        pool = pools.setdefault(s.kind, list(_typed_values(model, s.kind, raw_text)))
        if pool:
            filled[s.slot_id] = pool.pop(0)

    progressed = len(filled) > len(frame.filled)
    remaining = [s for s in frame.slots if s.required and s.slot_id not in filled]
    if not remaining:
        done = replace(frame, filled=filled, pending_slot=None)
        return done, Complete(dict(filled))
    if not progressed and frame.pending_slot is not None:
        pending = frame.slot(frame.pending_slot)
        clarification = (f"Sorry, I need a {pending.kind.value} for that. {pending.prompt}")
        return frame, Reask(pending.slot_id, clarification)
    nxt = remaining[0]
    updated = replace(frame, filled=filled, pending_slot=nxt.slot_id)
    return updated, Ask(nxt.slot_id, nxt.prompt)


# -- model files ----------------------------------------------------------------

def model_from_doc(doc: dict, gazetteer: Optional[Dict[str, str]] = None,
                   column_synonyms: Optional[Dict[str, str]] = None) -> CompiledModel:
    """Compile a declarative model document (see resources/models/)."""
    intents = []
    for item in doc.get("intents", []):
        intents.append(IntentDef(
            intent_id=item["id"],
            patterns=tuple(item.get("patterns", [])),
            keywords=tuple((k, float(w)) for k, w in item.get("keywords", [])),
            examples=tuple(item.get("examples", [])),
        ))
    entities = []
    for item in doc.get("entities", []):
        entities.append(EntityDef(
            entity_id=item["id"],
            kind=EntityKind(item["kind"]),
            synonyms={k: v for k, v in item.get("synonyms", {}).items()},
        ))
    cancel = doc.get("cancelPatterns", list(DEFAULT_CANCEL_PATTERNS))
    return CompiledModel(intents, entities, gazetteer=gazetteer,
                         column_synonyms=column_synonyms, cancel_patterns=cancel)


def load_model_file(path: str, gazetteer: Optional[Dict[str, str]] = None,
                    column_synonyms: Optional[Dict[str, str]] = None) -> CompiledModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_doc(json.load(fh), gazetteer, column_synonyms)
