from __future__ import annotations

import pytest

from scaleflow import fixtures
from scaleflow.config import EngineConfig
from scaleflow.engine import Engine

EPOCH_MS = 1_700_000_000_000


@pytest.fixture(scope="session")
def kb():
    return fixtures.default_kb()


@pytest.fixture(scope="session")
def lexicon():
    return fixtures.default_lexicon()


@pytest.fixture(scope="session")
def catalog():
    return fixtures.default_catalog()


@pytest.fixture(scope="session")
def profiles(catalog):
    return [catalog[scale_id].profile for scale_id in sorted(catalog)]


@pytest.fixture
def config():
    return EngineConfig()


@pytest.fixture
def engine(kb, lexicon, catalog, config):
    return Engine(kb=kb, lexicon=lexicon, catalog=catalog, config=config)


@pytest.fixture
def engine_factory(kb, lexicon, catalog):
    def build(config=None, audit_dir=None, reranker=None):
        return Engine(
            kb=kb,
            lexicon=lexicon,
            catalog=catalog,
            config=config or EngineConfig(),
            audit_dir=audit_dir,
            reranker=reranker,
        )

    return build
