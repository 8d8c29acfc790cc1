"""Scripted-conversation harness: runs transcript scenarios on a fresh stack.

A scenario is a JSON document of user turns with expectations over observable
turn output: responding agents, response text (literal or regex), modality
kinds, fallback flag, context keys, notification counts, and the turn trace's
per-agent stickiness. Each scenario gets its own stack, so runs never
interfere and reports are deterministic.
"""

from __future__ import annotations

import glob
import json
import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .gateway.sessions import SessionManager, TurnView
from .orchestrator import OrchestratorConfig
from .process import LogicalClock
from .runtime import DEFAULT_SEED, DEFAULT_SIZE, build_stack


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Step:
    session: str
    user: Optional[str]
    attachments: Tuple[Tuple[str, str], ...]
    expect: Dict[str, Any]


@dataclass(frozen=True)
class Scenario:
    name: str
    sessions: Dict[str, str]  # alias -> role
    seed: int
    size: int
    config: OrchestratorConfig
    documents: Dict[str, str]
    steps: Tuple[Step, ...]

    @classmethod
    def from_doc(cls, doc: dict, origin: str = "<doc>") -> "Scenario":
        try:
            name = doc["name"]
            if "sessions" in doc:
                sessions = dict(doc["sessions"])
            else:
                sessions = {"main": doc.get("role", "Unspecified")}
            steps = []
            for i, raw in enumerate(doc["steps"]):
                session = raw.get("session", next(iter(sessions)))
                if session not in sessions:
                    raise ScenarioError(
                        f"{origin}: step {i} uses undeclared session {session!r}")
                steps.append(Step(
                    session=session,
                    user=raw.get("user"),
                    attachments=tuple((a["name"], a["text"])
                                      for a in raw.get("attachments", [])),
                    expect=dict(raw.get("expect", {})),
                ))
            return cls(
                name=name,
                sessions=sessions,
                seed=int(doc.get("seed", DEFAULT_SEED)),
                size=int(doc.get("datasetSize", DEFAULT_SIZE)),
                config=OrchestratorConfig.from_doc(doc.get("config", {})),
                documents=dict(doc.get("documents", {})),
                steps=tuple(steps),
            )
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"{origin}: malformed scenario: {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        return cls.from_doc(doc, origin=path)


@dataclass
class StepOutcome:
    index: int
    utterance: Optional[str]
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class ScenarioReport:
    name: str
    outcomes: List[StepOutcome]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def lines(self) -> List[str]:
        out = [f"scenario {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for o in self.outcomes:
            mark = "ok" if o.passed else "FAIL"
            label = o.utterance or "(no message)"
            out.append(f"  [{mark}] step {o.index}: {label}")
            for failure in o.failures:
                out.append(f"         - {failure}")
        return out


def run_scenario(scenario: Scenario) -> ScenarioReport:
    stack = build_stack(seed=scenario.seed, size=scenario.size,
                        config=scenario.config, clock=LogicalClock(),
                        extra_documents=scenario.documents or None)
    manager = SessionManager(stack)
    session_ids = {alias: manager.create_session(role)
                   for alias, role in scenario.sessions.items()}
    outcomes: List[StepOutcome] = []
    for i, step in enumerate(scenario.steps):
        outcome = StepOutcome(index=i, utterance=step.user)
        session_id = session_ids[step.session]
        view: Optional[TurnView] = None
        if step.user is not None:
            view = manager.post_message(session_id, step.user,
                                        list(step.attachments) or None)
        _check_step(manager, session_id, session_ids, view, step.expect, outcome)
        outcomes.append(outcome)
    return ScenarioReport(name=scenario.name, outcomes=outcomes)


def _check_step(manager: SessionManager, session_id: str,
                session_ids: Dict[str, str], view: Optional[TurnView],
                expect: Dict[str, Any], outcome: StepOutcome) -> None:
    def fail(msg: str) -> None:
        outcome.failures.append(msg)

    flat_text = ""
    modalities: List[str] = []
    if view is not None:
        flat_text = "\n".join(p.flat_text() for _, p in view.responses)
        for _, payload in view.responses:
            modalities.extend(payload.modality_kinds())

    if "agents" in expect:
        actual = [agent_id for agent_id, _ in view.responses] if view else []
        if actual != list(expect["agents"]):
            fail(f"agents: expected {expect['agents']}, got {actual}")
    if "selected" in expect and view is not None:
        if list(view.selected) != list(expect["selected"]):
            fail(f"selected: expected {expect['selected']}, got {list(view.selected)}")
    if "fallback" in expect and view is not None:
        if view.fallback_used != bool(expect["fallback"]):
            fail(f"fallback: expected {expect['fallback']}, got {view.fallback_used}")
    if "text" in expect:
        if flat_text != expect["text"]:
            fail(f"text: expected {expect['text']!r}, got {flat_text!r}")
    if "textMatches" in expect:
        if not re.search(expect["textMatches"], flat_text, re.IGNORECASE | re.DOTALL):
            fail(f"textMatches: {expect['textMatches']!r} not found in {flat_text!r}")
    if "modalities" in expect:
        if modalities != list(expect["modalities"]):
            fail(f"modalities: expected {expect['modalities']}, got {modalities}")
    if "attachmentName" in expect and view is not None:
        names = _attachment_names(view)
        if expect["attachmentName"] not in names:
            fail(f"attachment {expect['attachmentName']!r} not in {names}")
    if "contextHas" in expect:
        shared = manager.context_of(session_id).shared
        for key, wanted in expect["contextHas"].items():
            if key not in shared:
                fail(f"context key {key!r} missing")
            elif wanted is not True and shared[key] != wanted:
                fail(f"context {key!r}: expected {wanted!r}, got {shared[key]!r}")
    if "contextLacks" in expect:
        shared = manager.context_of(session_id).shared
        for key in expect["contextLacks"]:
            if key in shared:
                fail(f"context key {key!r} unexpectedly present")
    if "sticky" in expect:
        traces = manager.traces_of(session_id)
        if not traces:
            fail("sticky: no trace recorded")
        else:
            last = traces[-1]
            by_agent = {aid: s for aid, _, s, _, _ in last.previews}
            for agent_id, wanted in expect["sticky"].items():
                if by_agent.get(agent_id) != wanted:
                    fail(f"sticky[{agent_id}]: expected {wanted}, "
                         f"got {by_agent.get(agent_id)}")
    if "notificationCount" in expect:
        spec = expect["notificationCount"]
        if isinstance(spec, dict):
            target = spec["session"]
            wanted = int(spec["count"])
        else:
            target, wanted = None, int(spec)
        if target is None:
            target_id = session_id
        elif target in session_ids:
            target_id = session_ids[target]
        else:
            fail(f"unknown session alias {target!r} in expectation")
            return
        delivered = manager.poll_notifications(target_id)
        if len(delivered) != wanted:
            fail(f"notifications: expected {wanted}, got {len(delivered)} "
                 f"({[n.rendered_text for _, n in delivered]})")
        outcome_texts = expect.get("notificationTextMatches")
        if outcome_texts:
            joined = "\n".join(n.rendered_text for _, n in delivered)
            if not re.search(outcome_texts, joined, re.IGNORECASE):
                fail(f"notification text {outcome_texts!r} not in {joined!r}")


def _attachment_names(view: TurnView) -> List[str]:
    names = []

    def walk(payload) -> None:
        if payload.attachment is not None:
            names.append(payload.attachment.filename)
        for part in payload.parts or ():
            walk(part)

    for _, payload in view.responses:
        walk(payload)
    return names


def run_scenarios(path_glob: str) -> Tuple[bool, List[str]]:
    """Run every scenario matching the glob; returns (all_passed, report lines)."""
    paths = sorted(glob.glob(path_glob))
    if os.path.isdir(path_glob):
        paths = sorted(glob.glob(os.path.join(path_glob, "*.json")))
    if not paths:
        raise ScenarioError(f"no scenarios match {path_glob!r}")
    lines: List[str] = []
    all_passed = True
    for path in paths:
        scenario = Scenario.load(path)
        report = run_scenario(scenario)
        lines.extend(report.lines())
        all_passed = all_passed and report.passed
    lines.append("all scenarios passed" if all_passed else "there were failures")
    return all_passed, lines
