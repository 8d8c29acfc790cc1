"""The shipped agent suite: one conversational wrapper per automation task."""

from .base import DocumentStore, Profile, profile_for_role
from .alerts import (
    AlertRegistry,
    AlertRule,
    AlertsAgent,
    AlertMatcher,
    Notification,
    NotificationHub,
    match_events,
)
from .chitchat import ChitChatAgent
from .dataquery_agent import DataQueryAgent
from .analytics import DataExportAgent, VisualizationAgent
from .rules_agent import RulesAgent
from .content_analyzer import ContentAnalyzerAgent
from .bp_execute import BpExecuteAgent
from .travel_query import TravelQueryAgent

__all__ = [
    "AlertMatcher",
    "AlertRegistry",
    "AlertRule",
    "AlertsAgent",
    "BpExecuteAgent",
    "ChitChatAgent",
    "ContentAnalyzerAgent",
    "DataExportAgent",
    "DataQueryAgent",
    "DocumentStore",
    "Notification",
    "NotificationHub",
    "Profile",
    "RulesAgent",
    "TravelQueryAgent",
    "VisualizationAgent",
    "match_events",
    "profile_for_role",
]
