"""Assembles a full assistant stack: data, models, stores, and the agent roster."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .agents import (
    AlertMatcher,
    AlertRegistry,
    AlertsAgent,
    BpExecuteAgent,
    ChitChatAgent,
    ContentAnalyzerAgent,
    DataExportAgent,
    DataQueryAgent,
    DocumentStore,
    NotificationHub,
    Profile,
    RulesAgent,
    TravelQueryAgent,
    VisualizationAgent,
)
from .dataquery import DataBundle, Table, TableSchema, generate_dataset
from .nlu import CompiledModel, model_from_doc
from .orchestrator import AgentRegistry, OrchestratorConfig
from .process import ProcessDefinition, ProcessStore
from .resources import load_json
from .rules import RuleSet, ruleset_from_doc

DEFAULT_SEED = 42
DEFAULT_SIZE = 500

AGENT_MODEL_FILES = {
    "chit-chat": "models/chit-chat.json",
    "data-query": "models/data-query.json",
    "visualization": "models/visualization.json",
    "data-export": "models/data-export.json",
    "rules": "models/rules.json",
    "content-analyzer": "models/content-analyzer.json",
    "bp-execute": "models/bp-execute.json",
    "travel-query": "models/travel-query.json",
    "alerts": "models/alerts.json",
}


@dataclass
class Stack:
    """Everything one assistant deployment needs, fully assembled."""

    config: OrchestratorConfig
    registry: AgentRegistry
    process_store: ProcessStore
    alert_registry: AlertRegistry
    hub: NotificationHub
    matcher: AlertMatcher
    docstore: DocumentStore
    bundle: DataBundle
    schemas: Dict[str, TableSchema]
    ruleset: RuleSet
    profiles: List[Profile]
    gazetteer: Dict[str, str]
    models: Dict[str, CompiledModel] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    size: int = DEFAULT_SIZE

    def world_snapshot(self) -> Tuple:
        """Observable world state; equal snapshots mean nothing changed."""
        return (
            self.process_store.snapshot(),
            self.alert_registry.snapshot(),
            self.hub.snapshot(),
            self.docstore.snapshot(),
        )


def build_stack(seed: int = DEFAULT_SEED, size: int = DEFAULT_SIZE,
                config: Optional[OrchestratorConfig] = None,
                clock=None,
                journal_path: Optional[str] = None,
                extra_documents: Optional[Dict[str, str]] = None,
                documents_dir: Optional[str] = None,
                model_dir: Optional[str] = None) -> Stack:
    config = config or OrchestratorConfig()
    bundle = generate_dataset(seed, size)

    loans_schema = TableSchema.from_doc(load_json("schemas/loans.json"))
    travel_schema = TableSchema.from_doc(load_json("schemas/travel.json"))
    schemas = {"loans": loans_schema, "travel": travel_schema}

    profiles = [Profile.from_doc(doc) for doc in load_json("fixtures/profiles.json")]
    gazetteer = {name: name for name in bundle.persons}
    gazetteer.update({p.name: p.name for p in profiles})

    column_synonyms: Dict[str, str] = {}
    for schema in schemas.values():
        column_synonyms.update(schema.synonym_table())

    def model_doc(agent_id: str) -> dict:
        if model_dir:
            path = os.path.join(model_dir, f"{agent_id}.json")
            if os.path.exists(path):
                with open(path, "r", encoding="utf-8") as fh:
                    return json.load(fh)
        return load_json(AGENT_MODEL_FILES[agent_id])

    models = {
        agent_id: model_from_doc(model_doc(agent_id), gazetteer=gazetteer,
                                 column_synonyms=column_synonyms)
        for agent_id in AGENT_MODEL_FILES
    }

    definitions = [
        ProcessDefinition.from_doc(load_json("processes/travel.json")),
        ProcessDefinition.from_doc(load_json("processes/loan.json")),
    ]
    if journal_path:
        process_store = ProcessStore.with_journal(definitions, journal_path,
                                                  clock=clock)
    else:
        process_store = ProcessStore(definitions, clock=clock)

    if documents_dir:
        docstore = DocumentStore.from_dir(documents_dir)
    else:
        documents = dict(bundle.documents)
        if extra_documents:
            documents.update(extra_documents)
        docstore = DocumentStore(documents)

    ruleset = ruleset_from_doc(load_json("rulesets/loan_default.json"))
    alert_registry = AlertRegistry()
    hub = NotificationHub()
    matcher = AlertMatcher(process_store, alert_registry, hub)

    registry = AgentRegistry()
    tables: Dict[str, Tuple[Table, TableSchema]] = {
        "loans": (bundle.loans, loans_schema),
        "travel": (bundle.travel, travel_schema),
    }
    roster = lambda: [a.descriptor for a in registry.all_agents()]  # noqa: E731
    registry.register(ChitChatAgent(models["chit-chat"], roster_provider=roster))
    registry.register(DataQueryAgent(models["data-query"], tables))
    registry.register(VisualizationAgent(models["visualization"]))
    registry.register(DataExportAgent(models["data-export"]))
    registry.register(RulesAgent(models["rules"], ruleset))
    registry.register(ContentAnalyzerAgent(models["content-analyzer"], docstore))
    registry.register(BpExecuteAgent(models["bp-execute"], process_store, profiles))
    registry.register(TravelQueryAgent(models["travel-query"], process_store))
    registry.register(AlertsAgent(models["alerts"], alert_registry, process_store))

    return Stack(
        config=config,
        registry=registry,
        process_store=process_store,
        alert_registry=alert_registry,
        hub=hub,
        matcher=matcher,
        docstore=docstore,
        bundle=bundle,
        schemas=schemas,
        ruleset=ruleset,
        profiles=profiles,
        gazetteer=gazetteer,
        models=models,
        seed=seed,
        size=size,
    )
