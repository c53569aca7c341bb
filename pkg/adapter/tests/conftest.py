from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from frameparser_adapter.backends import FrameAnnotation, RoleAnnotation


class FakeParser:
    """Deterministic stand-in for the transformer backend.

    Serves canned annotations keyed by sentence text, so export logic and
    the file contract can be tested without model assets.
    """

    version = "fake-parser/1"

    def __init__(self, canned: dict[str, list[FrameAnnotation]], fail_on: str | None = None):
        self.canned = canned
        self.fail_on = fail_on
        self.calls: list[str] = []

    def parse(self, sentence: str) -> list[FrameAnnotation]:
        self.calls.append(sentence)
        if self.fail_on is not None and self.fail_on in sentence:
            raise ValueError("inference failed")
        return self.canned.get(sentence, [])


FIXTURE_SENTENCES = [
    "Hamas attacked the kibbutz.",
    "Families mourned their children.",
    "Negotiators met in Cairo.",
    "Dozens were killed in the strike.",
    "The committee adjourned early.",
]


def fixture_annotations() -> dict[str, list[FrameAnnotation]]:
    s1, s2, s3, s4, _s5 = FIXTURE_SENTENCES
    return {
        s1: [
            FrameAnnotation(
                frame_name="Attack",
                trigger_text="attacked",
                trigger_start=s1.index("attacked"),
                roles=(
                    RoleAnnotation(name="Assailant", text="Hamas"),
                    RoleAnnotation(name="Victim", text="the kibbutz"),
                ),
            )
        ],
        s2: [
            FrameAnnotation(
                frame_name="Kinship",
                trigger_text="Families",
                trigger_start=0,
                roles=(),
            )
        ],
        s3: [
            FrameAnnotation(
                frame_name="Discussion",
                trigger_text="met",
                trigger_start=s3.index("met"),
                roles=(),
            )
        ],
        s4: [
            FrameAnnotation(
                frame_name="Killing",
                trigger_text="killed",
                trigger_start=s4.index("killed"),
                roles=(RoleAnnotation(name="Victim", text="Dozens"),),
            ),
            FrameAnnotation(
                frame_name="Attack",
                trigger_text="strike",
                trigger_start=s4.index("strike"),
                roles=(),
            ),
        ],
    }


@pytest.fixture
def fake_parser():
    return FakeParser(fixture_annotations())


@pytest.fixture
def fixture_article_path(tmp_path) -> Path:
    path = tmp_path / "articles.jsonl"
    record = {
        "id": "art-1",
        "url": "https://www.example.com/a",
        "region": "US",
        "title": "fixture",
        "body": " ".join(FIXTURE_SENTENCES),
        "published_at": "2023-11-01",
    }
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def frames_list_path(tmp_path) -> Path:
    path = tmp_path / "frames.json"
    path.write_text(json.dumps(["Attack", "Killing", "Kinship"]), encoding="utf-8")
    return path
