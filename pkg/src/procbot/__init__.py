"""procbot: a conversational multi-agent assistant for business processes.

Agents wrap process automations behind a common preview/execute contract; a
stateless orchestrator broadcasts each user utterance, scores the previews,
selects the best agents, and sequences their execution while passing shared
context between them.
"""

__version__ = "0.1.0"
