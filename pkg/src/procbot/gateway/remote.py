"""Remote agents over the wire contract, plus a server harness to host one.

A remote agent is any HTTP endpoint answering
    POST <endpoint> {"mode": "preview"|"execute", "utterance": ..., "context": ...}
with {"response", "confidence", "stickiness", "contextUpdates"}. Registration
performs a probe preview and rejects endpoints that break the contract, so a
misbehaving remote can never enter the roster.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

import httpx

from ..contract import (
    Agent,
    AgentDescriptor,
    AgentPreview,
    AgentResult,
    Context,
    ContractViolation,
    SpeakerRole,
    TaxonomyClass,
    Utterance,
    context_from_wire,
    context_to_wire,
    preview_from_wire,
    preview_to_wire,
    utterance_from_wire,
    utterance_to_wire,
)


class RegistrationError(Exception):
    pass


def descriptor_to_wire(d: AgentDescriptor) -> dict:
    return {
        "agentId": d.agent_id,
        "displayName": d.display_name,
        "taxonomyClass": d.taxonomy_class.value,
        "worldChanging": d.world_changing,
        "consumesKeys": sorted(d.consumes_keys),
        "producesKeys": sorted(d.produces_keys),
    }


def descriptor_from_wire(raw: dict) -> AgentDescriptor:
    return AgentDescriptor(
        agent_id=raw["agentId"],
        display_name=raw.get("displayName", raw["agentId"]),
        taxonomy_class=TaxonomyClass(raw["taxonomyClass"]),
        world_changing=bool(raw["worldChanging"]),
        consumes_keys=frozenset(raw.get("consumesKeys", [])),
        produces_keys=frozenset(raw.get("producesKeys", [])),
    )


class RemoteAgent(Agent):
    """Registry adapter speaking the wire contract to an HTTP endpoint."""

    def __init__(self, descriptor: AgentDescriptor, endpoint: str,
                 timeout_s: float = 5.0):
        self.descriptor = descriptor
        self.endpoint = endpoint
        self._timeout = timeout_s
        self.healthy = True

    def _call(self, mode: str, utterance: Utterance, ctx: Context) -> AgentPreview:
        body = {
            "mode": mode,
            "utterance": utterance_to_wire(utterance),
            "context": context_to_wire(ctx),
        }
        try:
            response = httpx.post(self.endpoint, json=body, timeout=self._timeout)
            response.raise_for_status()
            preview = preview_from_wire(response.json(), agent_id=self.agent_id)
        except Exception:
            self.healthy = False
            raise
        self.healthy = True
        return preview

    def preview(self, utterance: Utterance, ctx: Context) -> AgentPreview:
        return self._call("preview", utterance, ctx)

    def execute(self, utterance: Utterance, ctx: Context) -> AgentResult:
        return self._call("execute", utterance, ctx)


PROBE_TEXT = "contract handshake probe"


def register_remote_agent(registry, descriptor: AgentDescriptor,
                          endpoint: str, timeout_s: float = 5.0) -> RemoteAgent:
    """Handshake (probe preview) then add the remote to the given registry."""
    agent = RemoteAgent(descriptor, endpoint, timeout_s=timeout_s)
    probe = Utterance(text=PROBE_TEXT, speaker_role=SpeakerRole.UNSPECIFIED,
                      turn_index=0)
    try:
        preview = agent.preview(probe, Context.empty())
        preview.context_updates.validate()
    except ContractViolation as exc:
        raise RegistrationError(f"endpoint violates the agent contract: {exc}") from exc
    except Exception as exc:
        raise RegistrationError(f"endpoint handshake failed: {exc}") from exc
    registry.register(agent)
    return agent


class AgentServer:
    """Hosts any contract-conforming agent behind the wire protocol.

    Used to run an agent out of process and by the conformance tests to prove
    remote and in-process twins behave identically.
    """

    def __init__(self, agent: Agent, host: str = "127.0.0.1", port: int = 0):
        self.agent = agent
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 (stdlib naming)
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length))
                    utterance = utterance_from_wire(body["utterance"])
                    ctx = context_from_wire(body.get("context", {}))
                    if body.get("mode") == "execute":
                        result = outer.agent.execute(utterance, ctx)
                    else:
                        result = outer.agent.preview(utterance, ctx)
                    payload = json.dumps(preview_to_wire(result)).encode("utf-8")
                    self.send_response(200)
                except Exception as exc:  # surface as a 500 with the reason
                    payload = json.dumps({"error": str(exc)}).encode("utf-8")
                    self.send_response(500)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args) -> None:
                pass

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/"

    def start(self) -> "AgentServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True, name="agent-server")
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2)
            self._thread = None

    def __enter__(self) -> "AgentServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
