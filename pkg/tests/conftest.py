from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from framescope.corpus import Article, Region, tokenize
from framescope.taxonomy import Taxonomy, load_taxonomies

from mock_endpoint import ScriptedChatServer


@pytest.fixture(scope="session")
def taxonomy() -> Taxonomy:
    return load_taxonomies()


def make_article(
    article_id: str,
    body: str,
    *,
    region: str = "US",
    domain: str = "nytimes.com",
    title: str = "Gaza update",
    published: str = "2023-11-15",
    token_count: int | None = None,
) -> Article:
    return Article(
        id=article_id,
        url=f"https://www.{domain}/x",
        domain=domain,
        region=Region(region),
        title=title,
        body=body,
        published_at=date.fromisoformat(published),
        token_count=token_count if token_count is not None else len(tokenize(body)),
    )


@pytest.fixture
def article_factory():
    return make_article


def write_jsonl(path: Path, records) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def jsonl_writer():
    return write_jsonl


@pytest.fixture
def chat_server():
    """Factory fixture: start scripted servers, stop them all on teardown."""
    servers: list[ScriptedChatServer] = []

    def _start(responder) -> ScriptedChatServer:
        server = ScriptedChatServer(responder).start()
        servers.append(server)
        return server

    yield _start
    for server in servers:
        server.stop()
