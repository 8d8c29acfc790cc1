"""HTTP face of the gateway: sessions, turns, agents, notifications, static UI."""

from __future__ import annotations

import base64
import binascii
import os
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..contract import ContractViolation
from ..gateway.remote import (
    RegistrationError,
    RemoteAgent,
    descriptor_from_wire,
    descriptor_to_wire,
    register_remote_agent,
)
from ..runtime import Stack
from .sessions import SessionManager, UnknownSession


def create_app(stack: Stack, sessions: Optional[SessionManager] = None,
               static_dir: Optional[str] = None) -> FastAPI:
    sessions = sessions or SessionManager(stack)
    app = FastAPI(title="procbot gateway", version="1")
    app.state.sessions = sessions
    app.state.stack = stack

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"error": "unknown session"})

    @app.exception_handler(ContractViolation)
    async def _bad_input(request: Request, exc: ContractViolation):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/v1/sessions")
    async def create_session(body: dict):
        role = body.get("role", "Unspecified")
        session_id = sessions.create_session(role)
        return {"sessionId": session_id}

    @app.post("/v1/sessions/{session_id}/messages")
    async def post_message(session_id: str, body: dict):
        text = body.get("text", "")
        attachments = []
        for item in body.get("attachments", []) or []:
            name = item.get("name")
            if not name:
                raise HTTPException(status_code=400, detail="attachment needs a name")
            if "text" in item:
                content = item["text"]
            elif "dataBase64" in item:
                try:
                    content = base64.b64decode(item["dataBase64"]).decode("utf-8")
                except (binascii.Error, UnicodeDecodeError) as exc:
                    raise HTTPException(status_code=400,
                                        detail=f"bad attachment encoding: {exc}")
            else:
                raise HTTPException(status_code=400,
                                    detail="attachment needs text or dataBase64")
            attachments.append((name, content))
        view = sessions.post_message(session_id, text, attachments or None)
        return view.to_wire()

    @app.get("/v1/sessions/{session_id}/notifications")
    async def poll_notifications(session_id: str, since: int = Query(default=0)):
        delivered = sessions.poll_notifications(session_id, since)
        return {
            "notifications": [
                {
                    "seq": seq,
                    "alertId": n.alert_id,
                    "text": n.rendered_text,
                    "eventId": n.event.event_id,
                    "eventKind": n.event.event_kind.value,
                }
                for seq, n in delivered
            ]
        }

    @app.get("/v1/agents")
    async def list_agents():
        out = []
        for agent in stack.registry.all_agents():
            doc = descriptor_to_wire(agent.descriptor)
            if isinstance(agent, RemoteAgent):
                doc["health"] = "Up" if agent.healthy else "Down"
                doc["remote"] = True
            else:
                doc["health"] = "Up"
                doc["remote"] = False
            out.append(doc)
        return {"agents": out}

    @app.post("/v1/agents")
    async def register_agent(body: dict):
        try:
            descriptor = descriptor_from_wire(body["descriptor"])
            endpoint = body["endpoint"]
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"bad registration: {exc}")
        try:
            register_remote_agent(stack.registry, descriptor, endpoint)
        except RegistrationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ok": True, "agentId": descriptor.agent_id}

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
