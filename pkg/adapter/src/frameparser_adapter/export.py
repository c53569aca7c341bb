"""Article JSONL in, occurrence JSONL out.

The output schema is the external-backend contract of the analysis
pipeline: one JSON object per line with article_id, sentence_index,
frame_name, trigger {text, span}, roles {name: {text, span}}, and
source="external", preceded by one ``_header`` line recording the model
version. Spans are character offsets into the sentence text; role spans
may be null when the parser reports only filler text that cannot be
located.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .backends import AdapterError, FrameAnnotation, FrameParser, TransformerParser

_SENTENCE_RE = re.compile(r"[^.!?]+[.!?]*\s*")


@dataclass
class AdapterConfig:
    input_path: Path
    output_path: Path
    frames_path: Path
    batch_size: int = 16
    all_frames: bool = False

    def __post_init__(self) -> None:
        self.input_path = Path(self.input_path)
        self.output_path = Path(self.output_path)
        self.frames_path = Path(self.frames_path)
        if self.batch_size < 1:
            raise AdapterError("batch size must be >= 1")


@dataclass
class ExportReport:
    articles: int = 0
    sentences: int = 0
    records: int = 0
    sentence_failures: int = 0
    frames_seen: dict[str, int] = field(default_factory=dict)


def split_sentences(body: str) -> list[str]:
    return [chunk.strip() for chunk in _SENTENCE_RE.findall(body) if chunk.strip()]


def load_frames_of_interest(path: Path) -> tuple[set[str], dict[str, set[str]]]:
    """Accept either a bare name list or the pipeline's frames config.

    Returns (frame names, roles-of-interest per frame; empty set means
    "keep every role").
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        return {str(name) for name in doc}, {}
    names: set[str] = set()
    roles: dict[str, set[str]] = {}
    for record in doc.get("frames", []):
        name = str(record["frame_name"])
        names.add(name)
        roles[name] = {str(r) for r in record.get("roles_of_interest", [])}
    return names, roles


def _iter_articles(path: Path) -> Iterable[tuple[str, str]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                continue
            if not isinstance(record, dict) or "_header" in record:
                continue
            article_id = str(record.get("id") or "")
            body = str(record.get("body") or "")
            if article_id and body:
                yield article_id, body


def _role_record(sentence: str, text: str) -> dict:
    position = sentence.find(text)
    span = [position, position + len(text)] if position >= 0 and text else None
    return {"text": text, "span": span}


def annotation_to_record(
    article_id: str,
    sentence_index: int,
    sentence: str,
    annotation: FrameAnnotation,
    roles_of_interest: set[str],
) -> dict:
    start = annotation.trigger_start
    trigger_text = annotation.trigger_text
    if not (0 <= start <= len(sentence)) or sentence[start : start + len(trigger_text)] != trigger_text:
        located = sentence.find(trigger_text)
        start = located if located >= 0 else 0
    roles = {}
    for role in annotation.roles:
        if roles_of_interest and role.name not in roles_of_interest:
            continue
        roles[role.name] = _role_record(sentence, role.text)
    return {
        "article_id": article_id,
        "sentence_index": sentence_index,
        "frame_name": annotation.frame_name,
        "trigger": {"text": trigger_text, "span": [start, start + len(trigger_text)]},
        "roles": roles,
        "source": "external",
    }


def parse_and_export(config: AdapterConfig, parser: FrameParser | None = None) -> ExportReport:
    """Run the parser over every sentence and write the occurrence file.

    Frames outside the frames-of-interest list are filtered at export time
    (pass ``all_frames`` to keep everything); per-sentence inference
    failures are skipped and counted.
    """
    if not config.input_path.is_file():
        raise AdapterError(f"input file not found: {config.input_path}")
    keep_frames, roles_by_frame = load_frames_of_interest(config.frames_path)
    if parser is None:
        parser = TransformerParser()
    report = ExportReport()
    header = {
        "_header": {
            "adapter": f"frameparser-adapter/{__version__}",
            "model_version": parser.version,
            "source": "external",
            "all_frames": config.all_frames,
        }
    }
    config.output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config.output_path, "w", encoding="utf-8") as out:
        out.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        for article_id, body in _iter_articles(config.input_path):
            report.articles += 1
            sentences = split_sentences(body)
            for index_base in range(0, len(sentences), config.batch_size):
                batch = sentences[index_base : index_base + config.batch_size]
                for offset, sentence in enumerate(batch):
                    sentence_index = index_base + offset
                    report.sentences += 1
                    try:
                        annotations = parser.parse(sentence)
                    except AdapterError:
                        raise
                    except Exception:
                        report.sentence_failures += 1
                        continue
                    for annotation in annotations:
                        if not config.all_frames and annotation.frame_name not in keep_frames:
                            continue
                        record = annotation_to_record(
                            article_id,
                            sentence_index,
                            sentence,
                            annotation,
                            roles_by_frame.get(annotation.frame_name, set()),
                        )
                        out.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
                        report.records += 1
                        report.frames_seen[annotation.frame_name] = (
                            report.frames_seen.get(annotation.frame_name, 0) + 1
                        )
    return report
