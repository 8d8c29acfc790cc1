"""Session gateway: the stateful seam between the stateless core and any UI."""

from .sessions import SessionManager, TurnView, UnknownSession
from .remote import AgentServer, RemoteAgent, RegistrationError, register_remote_agent
from .http import create_app

__all__ = [
    "AgentServer",
    "RemoteAgent",
    "RegistrationError",
    "SessionManager",
    "TurnView",
    "UnknownSession",
    "create_app",
    "register_remote_agent",
]
