from __future__ import annotations

import pytest

from procbot.gateway import SessionManager
from procbot.orchestrator import OrchestratorConfig
from procbot.process import LogicalClock
from procbot.runtime import build_stack


@pytest.fixture(scope="session")
def seed42_stack_factory():
    """Factory for fresh full stacks on the pinned seed-42 dataset."""

    def make(config: OrchestratorConfig | None = None, **kwargs):
        return build_stack(seed=42, size=500, config=config,
                           clock=LogicalClock(), **kwargs)

    return make


@pytest.fixture()
def stack(seed42_stack_factory):
    return seed42_stack_factory()


@pytest.fixture()
def sessions(stack):
    return SessionManager(stack)
