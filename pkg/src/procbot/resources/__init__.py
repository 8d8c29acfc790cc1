"""Packaged fixtures: NLU models, rulesets, process definitions, schemas, corpus."""

from __future__ import annotations

import json
from importlib.resources import files
from typing import Any


def resource_path(relative: str):
    return files("procbot").joinpath("resources").joinpath(relative)


def load_json(relative: str) -> Any:
    return json.loads(resource_path(relative).read_text(encoding="utf-8"))


def load_text(relative: str) -> str:
    return resource_path(relative).read_text(encoding="utf-8")


def list_dir(relative: str):
    return sorted(p.name for p in resource_path(relative).iterdir())
