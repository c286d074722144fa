"""Bundled desk-scale assets: knowledge base, lexicon, catalog, scripts."""

from __future__ import annotations

import json
from pathlib import Path

from ..belief import KnowledgeBase, load_knowledge_base
from ..extraction import Lexicon, load_lexicon
from ..scales import ScaleDefinition, load_catalog

FIXTURES_DIR = Path(__file__).parent


def kb_path() -> str:
    return str(FIXTURES_DIR / "knowledge_base.json")


def lexicon_path() -> str:
    return str(FIXTURES_DIR / "lexicon.json")


def catalog_dir() -> str:
    return str(FIXTURES_DIR / "catalog")


def script_path(name: str) -> str:
    return str(FIXTURES_DIR / "scripts" / f"{name}.json")


def default_kb() -> KnowledgeBase:
    return load_knowledge_base(kb_path())


def default_lexicon() -> Lexicon:
    return load_lexicon(lexicon_path())


def default_catalog() -> dict[str, ScaleDefinition]:
    return load_catalog(catalog_dir())


def load_script(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if not path.exists():
        path = Path(script_path(name_or_path))
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
