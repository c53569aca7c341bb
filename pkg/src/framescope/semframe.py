"""Deterministic lexical-unit frame tagging and heuristic role extraction.

The default backend tags frames of interest by matching curated lexical
units against lemmatized sentence tokens. Occurrences produced by an
external neural parser can be ingested from JSONL instead; both sources
share one record schema, with spans relative to the sentence text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from importlib import resources

from .corpus import token_spans
from .taxonomy import FrameOfInterest, Taxonomy

SOURCE_LEXICON = "lexicon"
SOURCE_EXTERNAL = "external"

ASSAILANT = "Assailant"
VICTIM = "Victim"


class SemframeError(ValueError):
    """Fatal lexicon or configuration problem."""


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class TextSpan:
    text: str
    span: tuple[int, int] | None

    def to_record(self) -> dict:
        return {"text": self.text, "span": list(self.span) if self.span else None}


@dataclass(frozen=True)
class RoleFiller:
    name: str
    text: str
    span: tuple[int, int] | None

    def to_record(self) -> dict:
        return {"text": self.text, "span": list(self.span) if self.span else None}


@dataclass(frozen=True)
class SemanticFrameOccurrence:
    article_id: str
    sentence_index: int
    frame_name: str
    trigger: TextSpan
    roles: Mapping[str, RoleFiller] = field(default_factory=dict)
    source: str = SOURCE_LEXICON

    def to_record(self) -> dict:
        return {
            "article_id": self.article_id,
            "sentence_index": self.sentence_index,
            "frame_name": self.frame_name,
            "trigger": self.trigger.to_record(),
            "roles": {name: filler.to_record() for name, filler in sorted(self.roles.items())},
            "source": self.source,
        }


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------

# Words that end with a period without ending a sentence. Compared casefolded
# and without the trailing period.
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "gen", "col", "sgt", "lt", "capt",
    "rep", "sen", "gov", "st", "mt", "jr", "sr", "vs", "etc", "approx",
    "inc", "ltd", "co", "no", "fig", "al", "a.m", "p.m",
    "u.s", "u.k", "u.n", "e.u",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "oct", "nov", "dec",
}

_CLOSERS = "\"'”’)]"


def _word_before(body: str, index: int) -> str:
    j = index
    while j > 0 and not body[j - 1].isspace():
        j -= 1
    return body[j:index]


def split_sentences(body: str) -> list[Sentence]:
    """Rule-based splitting on terminal punctuation with an abbreviation guard.

    A sentence ends at a run of ``.?!`` (plus trailing closing quotes) that is
    followed by whitespace or end of text, unless the word carrying a period
    is a known abbreviation. Blank lines always split.
    """
    sentences: list[Sentence] = []
    n = len(body)
    start = 0

    def _emit(end: int) -> None:
        nonlocal start
        segment = body[start:end]
        stripped = segment.strip()
        if stripped:
            lead = len(segment) - len(segment.lstrip())
            s = start + lead
            sentences.append(Sentence(text=stripped, start=s, end=s + len(stripped)))
        start = end

    i = 0
    while i < n:
        ch = body[i]
        if ch == "\n" and body[i + 1 : i + 2] == "\n":
            _emit(i)
            i += 2
            continue
        if ch in ".?!":
            j = i
            while j + 1 < n and body[j + 1] in ".?!":
                j += 1
            k = j + 1
            while k < n and body[k] in _CLOSERS:
                k += 1
            if k >= n or body[k].isspace():
                if ch == "." and i == j:
                    word = _word_before(body, i).lstrip("\"'“‘([")
                    if word.casefold() in _ABBREVIATIONS:
                        i += 1
                        continue
                _emit(k)
                i = k
                continue
            i = j + 1
            continue
        i += 1
    _emit(n)
    return sentences


# ---------------------------------------------------------------------------
# Lexicon and lemmatization
# ---------------------------------------------------------------------------

_LEMMA_EXCEPTIONS = {
    "dying": "die",
    "died": "die",
    "dies": "die",
    "dead": "dead",
    "children": "child",
    "women": "woman",
    "men": "man",
    "wives": "wife",
    "people": "people",
    "fled": "flee",
    "shot": "shoot",
    "struck": "strike",
    "hostilities": "hostilities",
}


def lemma_candidates(token: str) -> list[str]:
    """Possible lemmas for a token under suffix stripping.

    Candidates are checked against the lexicon, so over-generation is
    harmless; full morphological analysis is out of scope.
    """
    t = token.casefold()
    out = [t]
    exc = _LEMMA_EXCEPTIONS.get(t)
    if exc and exc not in out:
        out.append(exc)
    if len(t) > 3 and t.endswith("ies"):
        out.append(t[:-3] + "y")
    if len(t) > 3 and t.endswith("es"):
        out.append(t[:-2])
    if len(t) > 2 and t.endswith("s") and not t.endswith("ss"):
        out.append(t[:-1])
    if len(t) > 4 and t.endswith("ing"):
        stem = t[:-3]
        out.extend([stem, stem + "e"])
        if len(stem) > 2 and stem[-1] == stem[-2]:
            out.append(stem[:-1])
    if len(t) > 3 and t.endswith("ed"):
        stem = t[:-2]
        out.extend([stem, stem + "e"])
        if len(stem) > 2 and stem[-1] == stem[-2]:
            out.append(stem[:-1])
    seen: list[str] = []
    for candidate in out:
        if candidate not in seen:
            seen.append(candidate)
    return seen


@dataclass(frozen=True)
class LexicalUnit:
    lemma_tokens: tuple[str, ...]
    pos: str
    frame_name: str

    @property
    def name(self) -> str:
        return " ".join(self.lemma_tokens) + "." + self.pos


class Lexicon:
    """Frame-name -> lexical-unit mapping with a first-lemma match index."""

    def __init__(self, units_by_frame: Mapping[str, Sequence[str]], taxonomy: Taxonomy):
        self.units: list[LexicalUnit] = []
        names_seen: dict[str, set[str]] = {}
        for frame_name, unit_names in units_by_frame.items():
            if frame_name not in taxonomy.frame_names:
                raise SemframeError(
                    f"lexicon frame {frame_name!r} is not in the frames-of-interest inventory"
                )
            for unit_name in unit_names:
                lemma, _, pos = unit_name.rpartition(".")
                if not lemma or not pos:
                    raise SemframeError(f"bad lexical unit {unit_name!r} (want 'lemma.pos')")
                if unit_name in names_seen.setdefault(frame_name, set()):
                    raise SemframeError(f"duplicate lexical unit {unit_name!r} in {frame_name}")
                names_seen[frame_name].add(unit_name)
                self.units.append(
                    LexicalUnit(
                        lemma_tokens=tuple(lemma.casefold().split()),
                        pos=pos,
                        frame_name=frame_name,
                    )
                )
        self.max_unit_len = max((len(u.lemma_tokens) for u in self.units), default=0)
        self._by_first: dict[str, list[LexicalUnit]] = {}
        for unit in self.units:
            self._by_first.setdefault(unit.lemma_tokens[0], []).append(unit)
        # Longest units first; frame name breaks ties deterministically.
        for bucket in self._by_first.values():
            bucket.sort(key=lambda u: (-len(u.lemma_tokens), u.frame_name, u.lemma_tokens))

    def candidates_for(self, first_lemma: str) -> list[LexicalUnit]:
        return self._by_first.get(first_lemma, [])


def load_lexicon(path: str | Path | None, taxonomy: Taxonomy) -> Lexicon:
    """Load a lexicon file, defaulting to the packaged stock lexicon."""
    if path is None:
        path = Path(resources.files("framescope").joinpath("data/lexicon.json"))  # type: ignore[arg-type]
    path = Path(path)
    if not path.is_file():
        raise SemframeError(f"lexicon file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return Lexicon(doc.get("frames", {}), taxonomy)


def tag_sentence(
    sentence: Sentence,
    lexicon: Lexicon,
    article_id: str = "",
    sentence_index: int = 0,
) -> list[SemanticFrameOccurrence]:
    """Longest-match-first trigger scan over lemmatized tokens.

    Multiword units win over single words; overlaps resolve to the longest
    span, then the leftmost. Matched tokens are consumed, so trigger spans
    never overlap.
    """
    spans = token_spans(sentence.text)
    tokens = [sentence.text[s:e] for s, e in spans]
    candidates = [lemma_candidates(tok) for tok in tokens]
    occurrences: list[SemanticFrameOccurrence] = []
    i = 0
    while i < len(tokens):
        matches: list[LexicalUnit] = []
        seen: set[tuple] = set()
        for first in candidates[i]:
            for unit in lexicon.candidates_for(first):
                key = (unit.frame_name, unit.lemma_tokens, unit.pos)
                if key in seen:
                    continue
                width = len(unit.lemma_tokens)
                if i + width > len(tokens):
                    continue
                if all(
                    unit.lemma_tokens[k] in candidates[i + k] for k in range(width)
                ):
                    seen.add(key)
                    matches.append(unit)
        if not matches:
            i += 1
            continue
        matched_unit = min(
            matches, key=lambda u: (-len(u.lemma_tokens), u.frame_name, u.lemma_tokens)
        )
        width = len(matched_unit.lemma_tokens)
        trig_start = spans[i][0]
        trig_end = spans[i + width - 1][1]
        occurrences.append(
            SemanticFrameOccurrence(
                article_id=article_id,
                sentence_index=sentence_index,
                frame_name=matched_unit.frame_name,
                trigger=TextSpan(
                    text=sentence.text[trig_start:trig_end], span=(trig_start, trig_end)
                ),
                source=SOURCE_LEXICON,
            )
        )
        i += width
    return occurrences


# ---------------------------------------------------------------------------
# Actor gazetteer and role extraction
# ---------------------------------------------------------------------------

class ActorGazetteer:
    """Surface-name -> actor-group lookup with longest-match semantics."""

    def __init__(self, surfaces_by_group: Mapping[str, Sequence[str]]):
        self.surface_to_group: dict[str, str] = {}
        for group, surfaces in surfaces_by_group.items():
            for surface in surfaces:
                folded = " ".join(surface.casefold().split())
                if folded:
                    self.surface_to_group[folded] = group
        self._patterns = [
            (
                re.compile(r"(?<!\w)" + re.escape(surface) + r"(?!\w)", re.IGNORECASE),
                surface,
                group,
            )
            for surface, group in sorted(
                self.surface_to_group.items(), key=lambda kv: (-len(kv[0]), kv[0])
            )
        ]

    def match_in(self, text: str) -> list[tuple[int, int, str, str]]:
        """Non-overlapping gazetteer mentions as (start, end, text, group)."""
        claimed: list[tuple[int, int]] = []
        hits: list[tuple[int, int, str, str]] = []
        for pattern, _surface, group in self._patterns:
            for m in pattern.finditer(text):
                s, e = m.span()
                if any(s < ce and cs < e for cs, ce in claimed):
                    continue
                claimed.append((s, e))
                hits.append((s, e, text[s:e], group))
        hits.sort()
        return hits

    def lookup(self, filler_text: str) -> str:
        """Actor group for a role filler; unmatched text maps to "other"."""
        folded = " ".join(filler_text.casefold().split())
        if folded in self.surface_to_group:
            return self.surface_to_group[folded]
        for pattern, _surface, group in self._patterns:
            if pattern.search(filler_text):
                return group
        return "other"


def load_gazetteer(path: str | Path | None = None) -> ActorGazetteer:
    if path is None:
        path = Path(resources.files("framescope").joinpath("data/gazetteer.json"))  # type: ignore[arg-type]
    path = Path(path)
    if not path.is_file():
        raise SemframeError(f"gazetteer file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return ActorGazetteer(doc.get("groups", {}))


_PASSIVE_CUES = {"was", "were", "been", "being"}
_IRREGULAR_PARTICIPLES = {"shot", "struck", "hit", "slain", "beaten", "torn", "blown"}


def _entity_candidates(
    sentence: Sentence, gazetteer: ActorGazetteer
) -> list[tuple[int, int, str]]:
    """Entity mentions: gazetteer hits plus capitalized runs.

    Capitalized runs that start at the first token are dropped (sentence
    case, not a name) and runs overlapping a gazetteer hit defer to it.
    """
    hits = gazetteer.match_in(sentence.text)
    entities = [(s, e, text) for s, e, text, _group in hits]
    spans = token_spans(sentence.text)
    tokens = [sentence.text[s:e] for s, e in spans]
    i = 0
    while i < len(tokens):
        if tokens[i][:1].isupper():
            j = i
            while j + 1 < len(tokens) and tokens[j + 1][:1].isupper():
                j += 1
            run_start, run_end = spans[i][0], spans[j][1]
            overlaps = any(s < run_end and run_start < e for s, e, _t in entities)
            if i > 0 and not overlaps:
                entities.append((run_start, run_end, sentence.text[run_start:run_end]))
            i = j + 1
        else:
            i += 1
    entities.sort()
    return entities


def _is_passive(sentence: Sentence, trigger: TextSpan) -> bool:
    if trigger.span is None:
        return False
    trigger_word = trigger.text.split()[-1].casefold() if trigger.text.split() else ""
    participle = trigger_word.endswith("ed") or trigger_word in _IRREGULAR_PARTICIPLES
    if not participle:
        return False
    prefix = sentence.text[: trigger.span[0]]
    preceding = [t.casefold() for t in prefix.split()][-3:]
    return any(tok in _PASSIVE_CUES for tok in preceding)


def extract_roles(
    occurrence: SemanticFrameOccurrence,
    sentence: Sentence,
    gazetteer: ActorGazetteer,
    taxonomy: Taxonomy,
) -> SemanticFrameOccurrence:
    """Nearest-entity Assailant/Victim heuristic for attack-like frames.

    Base rule: the nearest entity before the trigger is the assailant-side
    role and the nearest after it is the victim. A passive-voice cue
    (was/were/been/being + participle trigger) swaps the two sides. This is
    a documented approximation: it has no syntax and will misread clauses
    like reported speech; fillers never overlap the trigger span.
    """
    frame = taxonomy.frame(occurrence.frame_name)
    assailant_raw = next(
        (r for r in frame.roles_of_interest if frame.reporting_role(r) == ASSAILANT), None
    )
    victim_raw = VICTIM if VICTIM in frame.roles_of_interest else None
    if assailant_raw is None and victim_raw is None:
        return occurrence
    if occurrence.trigger.span is None:
        return occurrence

    trig_start, trig_end = occurrence.trigger.span
    entities = _entity_candidates(sentence, gazetteer)
    before = [e for e in entities if e[1] <= trig_start]
    after = [e for e in entities if e[0] >= trig_end]
    pre = max(before, key=lambda e: e[1]) if before else None
    post = min(after, key=lambda e: e[0]) if after else None

    if _is_passive(sentence, occurrence.trigger):
        assailant_ent, victim_ent = post, pre
    else:
        assailant_ent, victim_ent = pre, post

    roles = dict(occurrence.roles)
    if assailant_raw is not None and assailant_ent is not None:
        s, e, text = assailant_ent
        roles[assailant_raw] = RoleFiller(name=assailant_raw, text=text, span=(s, e))
    if victim_raw is not None and victim_ent is not None:
        s, e, text = victim_ent
        roles[victim_raw] = RoleFiller(name=victim_raw, text=text, span=(s, e))
    return replace(occurrence, roles=roles)


def tag_article(
    article_id: str,
    body: str,
    lexicon: Lexicon,
    gazetteer: ActorGazetteer | None,
    taxonomy: Taxonomy,
) -> list[SemanticFrameOccurrence]:
    """Split, tag, and (when a gazetteer is given) extract roles."""
    occurrences: list[SemanticFrameOccurrence] = []
    for index, sentence in enumerate(split_sentences(body)):
        for occurrence in tag_sentence(sentence, lexicon, article_id, index):
            if gazetteer is not None:
                occurrence = extract_roles(occurrence, sentence, gazetteer, taxonomy)
            occurrences.append(occurrence)
    return occurrences


# ---------------------------------------------------------------------------
# External backend ingestion
# ---------------------------------------------------------------------------

@dataclass
class ExternalIngestResult:
    occurrences: list[SemanticFrameOccurrence]
    skipped: int = 0
    skip_reasons: list[tuple[int, str]] = field(default_factory=list)
    dropped_frames: dict[str, int] = field(default_factory=dict)
    dropped_roles: int = 0
    header: dict | None = None

    @property
    def total_skipped(self) -> int:
        return self.skipped + sum(self.dropped_frames.values())


def _parse_span(value: object, *, required: bool) -> tuple[int, int] | None:
    if value is None:
        if required:
            raise ValueError("span is required")
        return None
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ValueError(f"bad span: {value!r}")
    start, end = value
    if start < 0 or end <= start:
        raise ValueError(f"bad span bounds: {value!r}")
    return (start, end)


def occurrence_from_record(
    record: Mapping[str, object],
    taxonomy: Taxonomy,
    source: str | None = SOURCE_EXTERNAL,
) -> tuple[SemanticFrameOccurrence, int]:
    """Validate one occurrence record; returns (occurrence, dropped_role_count).

    ``source`` overrides the record's source field; pass None to keep it.
    Raises ValueError on schema violations and LookupError when the frame
    is outside the inventory (aliases are resolved first).
    """
    article_id = str(record.get("article_id") or "")
    if not article_id:
        raise ValueError("missing article_id")
    sentence_index = record.get("sentence_index")
    if not isinstance(sentence_index, int) or isinstance(sentence_index, bool) or sentence_index < 0:
        raise ValueError(f"bad sentence_index: {sentence_index!r}")
    raw_frame = str(record.get("frame_name") or "")
    frame_name = taxonomy.resolve_frame_name(raw_frame)
    if frame_name is None:
        raise LookupError(raw_frame)
    trigger_rec = record.get("trigger")
    if not isinstance(trigger_rec, Mapping) or not str(trigger_rec.get("text") or "").strip():
        raise ValueError("missing trigger text")
    trigger = TextSpan(
        text=str(trigger_rec["text"]),
        span=_parse_span(trigger_rec.get("span"), required=True),
    )
    roles_rec = record.get("roles", {})
    if roles_rec is None:
        roles_rec = {}
    if not isinstance(roles_rec, Mapping):
        raise ValueError("roles must be an object")
    frame = taxonomy.frame(frame_name)
    roles: dict[str, RoleFiller] = {}
    dropped_roles = 0
    for name, filler in roles_rec.items():
        if name not in frame.roles_of_interest:
            dropped_roles += 1
            continue
        if not isinstance(filler, Mapping) or not str(filler.get("text") or "").strip():
            raise ValueError(f"bad filler for role {name!r}")
        roles[str(name)] = RoleFiller(
            name=str(name),
            text=str(filler["text"]),
            span=_parse_span(filler.get("span"), required=False),
        )
    resolved_source = source if source is not None else str(record.get("source") or SOURCE_EXTERNAL)
    occurrence = SemanticFrameOccurrence(
        article_id=article_id,
        sentence_index=sentence_index,
        frame_name=frame_name,
        trigger=trigger,
        roles=roles,
        source=resolved_source,
    )
    return occurrence, dropped_roles


def ingest_external(path: str | Path, taxonomy: Taxonomy) -> ExternalIngestResult:
    """Load occurrences produced by an external parser backend.

    Out-of-inventory frames and schema-violating lines are skipped and
    counted; role names outside the frame's roles of interest are dropped
    while the occurrence is kept. A leading ``_header`` line is preserved
    on the result, not counted as a record.
    """
    path = Path(path)
    if not path.is_file():
        raise SemframeError(f"occurrence file not found: {path}")
    result = ExternalIngestResult(occurrences=[])
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                result.skipped += 1
                result.skip_reasons.append((line_no, f"bad json: {exc}"))
                continue
            if not isinstance(record, dict):
                result.skipped += 1
                result.skip_reasons.append((line_no, "record is not an object"))
                continue
            if "_header" in record:
                if result.header is None:
                    result.header = record["_header"]
                continue
            try:
                occurrence, dropped = occurrence_from_record(record, taxonomy)
            except LookupError as exc:
                name = str(exc).strip("'")
                result.dropped_frames[name] = result.dropped_frames.get(name, 0) + 1
                continue
            except ValueError as exc:
                result.skipped += 1
                result.skip_reasons.append((line_no, str(exc)))
                continue
            result.dropped_roles += dropped
            result.occurrences.append(occurrence)
    return result


def write_occurrences(
    path: str | Path,
    occurrences: Iterable[SemanticFrameOccurrence],
    header: dict | None = None,
) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_header": header}, sort_keys=True, ensure_ascii=False) + "\n")
        for occurrence in occurrences:
            fh.write(
                json.dumps(occurrence.to_record(), sort_keys=True, ensure_ascii=False) + "\n"
            )
            count += 1
    return count
