"""Article data model, file ingestion, and the corpus filtering stages.

Filtering runs in a fixed stage order (domain, keyword, topic exclusion,
date window, length trim). Every stage is a pure function over immutable
article lists, so the whole pipeline is idempotent and order-independent
up to the documented tie-breaks.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlsplit


class Region(str, Enum):
    US = "US"
    UK = "UK"
    ME = "ME"


class CorpusError(ValueError):
    """Fatal ingestion or configuration problem (unreadable file, bad config)."""


# A token is a maximal run of word characters, optionally joined by internal
# apostrophes or hyphens. Standalone punctuation is not a token, so
# token_count stays a clean normalization denominator.
_TOKEN_RE = re.compile(r"\w+(?:['’\-]\w+)*")


def tokenize(text: str) -> list[str]:
    """Deterministic Unicode-aware word segmentation; drops punctuation."""
    return _TOKEN_RE.findall(text)


def token_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of :func:`tokenize` tokens, in order."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def truncate_tokens(text: str, max_tokens: int) -> tuple[str, bool]:
    """Cut ``text`` after ``max_tokens`` tokens; returns (text, was_truncated)."""
    if max_tokens <= 0:
        return "", bool(text.strip())
    spans = token_spans(text)
    if len(spans) <= max_tokens:
        return text, False
    return text[: spans[max_tokens - 1][1]], True


@dataclass(frozen=True)
class Article:
    id: str
    url: str
    domain: str
    region: Region
    title: str
    body: str
    published_at: date
    token_count: int

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "url": self.url,
            "domain": self.domain,
            "region": self.region.value,
            "title": self.title,
            "body": self.body,
            "published_at": self.published_at.isoformat(),
            "token_count": self.token_count,
        }


def extract_domain(url: str) -> str:
    """Lowercased host with any scheme, port, path, and www. prefix removed."""
    host = urlsplit(url).hostname or ""
    host = host.lower().rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    return host


def _content_hash(record: Mapping[str, str]) -> str:
    basis = "\x1f".join(
        str(record.get(key, "")) for key in ("url", "published_at", "title", "body")
    )
    return "sha1:" + hashlib.sha1(basis.encode("utf-8")).hexdigest()[:16]


def _parse_date(raw: str) -> date:
    raw = raw.strip()
    try:
        return date.fromisoformat(raw[:10]) if len(raw) > 10 else date.fromisoformat(raw)
    except ValueError:
        # Tolerate full ISO datetimes with offsets.
        return datetime.fromisoformat(raw).date()


_MANDATORY_FIELDS = ("url", "region", "title", "body", "published_at")


def make_article(record: Mapping[str, object]) -> Article:
    """Build one Article from a raw mapping; raises ValueError when unusable."""
    missing = [k for k in _MANDATORY_FIELDS if not str(record.get(k) or "").strip()]
    if missing:
        raise ValueError(f"missing mandatory fields: {missing}")
    url = str(record["url"]).strip()
    region_raw = str(record["region"]).strip().upper()
    try:
        region = Region(region_raw)
    except ValueError:
        raise ValueError(f"unknown region: {record['region']!r}") from None
    try:
        published = _parse_date(str(record["published_at"]))
    except ValueError:
        raise ValueError(f"bad published_at: {record['published_at']!r}") from None
    body = str(record["body"])
    article_id = str(record.get("id") or "").strip() or _content_hash(
        {k: str(record.get(k, "")) for k in ("url", "published_at", "title", "body")}
    )
    return Article(
        id=article_id,
        url=url,
        domain=extract_domain(url),
        region=region,
        title=str(record["title"]),
        body=body,
        published_at=published,
        token_count=len(tokenize(body)),
    )


@dataclass
class IngestResult:
    articles: list[Article]
    skipped: int = 0
    skip_reasons: list[tuple[int, str]] = field(default_factory=list)


def ingest(path: str | Path, format: str = "jsonl") -> IngestResult:
    """Read articles from a JSONL or CSV file.

    Malformed records (bad JSON, missing mandatory fields, unknown region,
    bad dates, duplicate ids) are skipped and counted per line; an unreadable
    file is fatal.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    if format not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format: {format!r}")

    result = IngestResult(articles=[])
    seen_ids: set[str] = set()

    def _add(line_no: int, record: Mapping[str, object]) -> None:
        try:
            article = make_article(record)
        except ValueError as exc:
            result.skipped += 1
            result.skip_reasons.append((line_no, str(exc)))
            return
        if article.id in seen_ids:
            result.skipped += 1
            result.skip_reasons.append((line_no, f"duplicate id: {article.id}"))
            return
        seen_ids.add(article.id)
        result.articles.append(article)

    if format == "jsonl":
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
                    continue
                _add(line_no, record)
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            for line_no, record in enumerate(csv.DictReader(fh), start=2):
                _add(line_no, {k: (v if v is not None else "") for k, v in record.items()})
    return result


def write_articles(path: str | Path, articles: Iterable[Article], header: dict | None = None) -> int:
    """Write articles as JSONL; returns the record count (header excluded)."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_header": header}, sort_keys=True, ensure_ascii=False) + "\n")
        for article in articles:
            fh.write(json.dumps(article.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count


@dataclass
class FilterConfig:
    """Configuration for the filtering stages.

    ``exclusion_keyword_sets`` maps a set name to keywords that must all
    occur in a title (case-insensitive whole words) for the article to be
    excluded; sets combine disjunctively.
    """

    allowed_domains: dict[Region, set[str]]
    query_terms: list[str]
    exclusion_keyword_sets: dict[str, list[str]] = field(default_factory=dict)
    date_min: date = date(2023, 10, 1)
    date_max: date = date(2024, 2, 29)
    low_trim_fraction: float = 0.01
    high_trim_fraction: float = 0.05
    trim_per_region: bool = False

    def __post_init__(self) -> None:
        if self.low_trim_fraction < 0 or self.high_trim_fraction < 0:
            raise CorpusError("trim fractions must be non-negative")
        if self.low_trim_fraction + self.high_trim_fraction >= 1:
            raise CorpusError("trim fractions must sum to less than 1")
        if self.date_min > self.date_max:
            raise CorpusError("date_min must not exceed date_max")

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "FilterConfig":
        allowed = {
            Region(region): set(domains)
            for region, domains in dict(raw.get("allowed_domains", {})).items()
        }
        kwargs: dict = {
            "allowed_domains": allowed,
            "query_terms": list(raw.get("query_terms", [])),
            "exclusion_keyword_sets": {
                name: list(terms)
                for name, terms in dict(raw.get("exclusion_keyword_sets", {})).items()
            },
        }
        for key in ("low_trim_fraction", "high_trim_fraction"):
            if key in raw:
                kwargs[key] = float(raw[key])  # type: ignore[arg-type]
        for key in ("date_min", "date_max"):
            if key in raw:
                kwargs[key] = date.fromisoformat(str(raw[key]))
        if "trim_per_region" in raw:
            kwargs["trim_per_region"] = bool(raw["trim_per_region"])
        return cls(**kwargs)


STAGES = ("domain", "keyword", "topic", "date", "length")

# The topic stage substitutes named keyword-exclusion sets for the original
# title topic-model screen; the substitution is recorded on every report.
TOPIC_FILTER_NOTE = (
    "topic filter: named conjunctive keyword-exclusion sets over titles "
    "(deterministic substitute for topic modelling)"
)


@dataclass
class FilterReport:
    input_count: int = 0
    retained_count: int = 0
    dropped: dict[str, int] = field(default_factory=lambda: {s: 0 for s in STAGES})
    dropped_by_region: dict[str, dict[str, int]] = field(
        default_factory=lambda: {s: {} for s in STAGES}
    )
    retained_by_region: dict[str, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=lambda: [TOPIC_FILTER_NOTE])

    def reconciles(self) -> bool:
        return self.input_count == self.retained_count + sum(self.dropped.values())

    def to_json(self) -> dict:
        return {
            "input_count": self.input_count,
            "retained_count": self.retained_count,
            "dropped": dict(self.dropped),
            "dropped_by_region": {s: dict(v) for s, v in self.dropped_by_region.items()},
            "retained_by_region": dict(self.retained_by_region),
            "notes": list(self.notes),
        }


def _word_pattern(term: str) -> re.Pattern[str]:
    return re.compile(r"(?<!\w)" + re.escape(term.strip()) + r"(?!\w)", re.IGNORECASE)


def filter_domain(
    articles: Sequence[Article], config: FilterConfig
) -> tuple[list[Article], int]:
    """Keep articles whose domain is allowlisted for their region."""
    retained = [
        a
        for a in articles
        if a.domain in config.allowed_domains.get(a.region, set())
    ]
    return retained, len(articles) - len(retained)


def filter_keywords(
    articles: Sequence[Article], query_terms: Sequence[str]
) -> tuple[list[Article], int]:
    """Keep articles whose title or body matches any query term.

    Matching is case-insensitive on whole words, so a term never matches
    inside a longer word.
    """
    if not query_terms:
        raise CorpusError("query_terms must be non-empty")
    patterns = [_word_pattern(t) for t in query_terms]
    retained = [
        a
        for a in articles
        if any(p.search(a.title) or p.search(a.body) for p in patterns)
    ]
    return retained, len(articles) - len(retained)


def filter_topic_exclusion(
    articles: Sequence[Article],
    exclusion_keyword_sets: Mapping[str, Sequence[str]],
) -> tuple[list[Article], int]:
    """Drop articles whose title matches every keyword of any exclusion set."""
    compiled = [
        [_word_pattern(t) for t in terms]
        for terms in exclusion_keyword_sets.values()
        if terms
    ]
    if not compiled:
        return list(articles), 0
    retained = [
        a
        for a in articles
        if not any(all(p.search(a.title) for p in patterns) for patterns in compiled)
    ]
    return retained, len(articles) - len(retained)


def filter_dates(
    articles: Sequence[Article], date_min: date, date_max: date
) -> tuple[list[Article], int]:
    """Keep articles published within [date_min, date_max], inclusive."""
    retained = [a for a in articles if date_min <= a.published_at <= date_max]
    return retained, len(articles) - len(retained)


def _trim_fraction_count(n: int, frac: float) -> int:
    # Exact floor(n * frac); Fraction(str(...)) avoids binary-float drift for
    # config values like 0.01.
    return int(Fraction(str(frac)) * n)


def trim_length_percentiles(
    articles: Sequence[Article], low_frac: float, high_frac: float
) -> tuple[list[Article], int]:
    """Drop the floor(n*low_frac) shortest and floor(n*high_frac) longest.

    Length order is (token_count, id) ascending; the id tie-break makes the
    trim deterministic for equal lengths. Retained articles come back in
    their original input order.
    """
    if low_frac + high_frac >= 1:
        raise CorpusError("trim fractions must sum to less than 1")
    if not articles:
        raise CorpusError("trim_length_percentiles requires a non-empty corpus")
    n = len(articles)
    k_low = _trim_fraction_count(n, low_frac)
    k_high = _trim_fraction_count(n, high_frac)
    ordered = sorted(articles, key=lambda a: (a.token_count, a.id))
    dropped_ids = {a.id for a in ordered[:k_low]}
    if k_high:
        dropped_ids.update(a.id for a in ordered[n - k_high :])
    retained = [a for a in articles if a.id not in dropped_ids]
    return retained, k_low + k_high


def _region_counts(articles: Iterable[Article]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for a in articles:
        counts[a.region.value] = counts.get(a.region.value, 0) + 1
    return counts


def apply_filters(
    articles: Sequence[Article], config: FilterConfig
) -> tuple[list[Article], FilterReport]:
    """Run all filter stages in order and produce a reconciled report."""
    report = FilterReport(input_count=len(articles))
    current = list(articles)

    def _record(stage: str, before: Sequence[Article], after: Sequence[Article]) -> None:
        report.dropped[stage] = len(before) - len(after)
        before_counts = _region_counts(before)
        after_counts = _region_counts(after)
        report.dropped_by_region[stage] = {
            region: before_counts[region] - after_counts.get(region, 0)
            for region in sorted(before_counts)
            if before_counts[region] - after_counts.get(region, 0)
        }

    stage_in = current
    current, _ = filter_domain(stage_in, config)
    _record("domain", stage_in, current)

    stage_in = current
    current, _ = filter_keywords(stage_in, config.query_terms)
    _record("keyword", stage_in, current)

    stage_in = current
    current, _ = filter_topic_exclusion(stage_in, config.exclusion_keyword_sets)
    _record("topic", stage_in, current)

    stage_in = current
    current, _ = filter_dates(stage_in, config.date_min, config.date_max)
    _record("date", stage_in, current)

    stage_in = current
    if current:
        if config.trim_per_region:
            kept: list[Article] = []
            for region in Region:
                subset = [a for a in current if a.region == region]
                if subset:
                    sub_kept, _ = trim_length_percentiles(
                        subset, config.low_trim_fraction, config.high_trim_fraction
                    )
                    kept.extend(sub_kept)
            kept_ids = {a.id for a in kept}
            current = [a for a in current if a.id in kept_ids]
        else:
            current, _ = trim_length_percentiles(
                current, config.low_trim_fraction, config.high_trim_fraction
            )
    _record("length", stage_in, current)

    report.retained_count = len(current)
    report.retained_by_region = _region_counts(current)
    if config.trim_per_region:
        report.notes.append("length trim applied per region")
    return current, report
