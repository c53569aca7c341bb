"""Aggregations over assignments, indicator instances, and frame occurrences.

Everything here is a pure fold over its inputs: order-independent,
side-effect free, and deterministic (ties always break lexicographically).
Callers slice records by region before aggregating; only grounded indicator
instances should enter any statistic.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from importlib import resources

from .corpus import Article, tokenize
from .llm_gateway import GenericFrameAssignment, IndicatorInstance
from .semframe import ActorGazetteer, SemanticFrameOccurrence
from .taxonomy import Taxonomy


@dataclass
class RegionAggregate:
    region: str
    article_count: int
    token_total: int
    generic_frame_share: dict[str, float] = field(default_factory=dict)
    indicator_rate: dict[str, float] = field(default_factory=dict)
    frame_share: dict[str, float] = field(default_factory=dict)
    role_distribution: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "region": self.region,
            "article_count": self.article_count,
            "token_total": self.token_total,
            "generic_frame_share": dict(sorted(self.generic_frame_share.items())),
            "indicator_rate": dict(sorted(self.indicator_rate.items())),
            "frame_share": dict(sorted(self.frame_share.items())),
            "role_distribution": {
                key: dict(sorted(groups.items()))
                for key, groups in sorted(self.role_distribution.items())
            },
        }


@dataclass
class TargetCluster:
    canonical_label: str
    members: list[str]
    count: int
    region: str | None = None

    def to_json(self) -> dict:
        return {
            "canonical_label": self.canonical_label,
            "members": list(self.members),
            "count": self.count,
            "region": self.region,
        }


def generic_frame_share(assignments: Iterable[GenericFrameAssignment]) -> dict[str, float]:
    """Label share over all label assignments (multi-label denominator)."""
    counts: Counter[str] = Counter()
    for assignment in assignments:
        counts.update(assignment.frames)
    total = sum(counts.values())
    if not total:
        return {}
    return {label: counts[label] / total for label in sorted(counts)}


def indicator_rate(
    instances: Iterable[IndicatorInstance],
    articles: Sequence[Article],
    kinds: Sequence[str],
    *,
    grounded_only: bool = True,
    pooled: bool = False,
) -> tuple[dict[str, float], int]:
    """Per-kind indicator frequency normalized by article length.

    Default is the mean of per-article rates (count / token_count), which
    keeps long articles from dominating; ``pooled`` switches to pooled
    counts over pooled tokens. Zero-token articles are excluded and
    counted. Returns (rates, excluded_article_count).
    """
    # Sorted so float accumulation order never depends on input order.
    usable = sorted((a for a in articles if a.token_count > 0), key=lambda a: a.id)
    excluded = len(articles) - len(usable)
    if not usable:
        return {}, excluded
    usable_ids = {a.id for a in usable}
    counts: dict[tuple[str, str], int] = {}
    for instance in instances:
        if grounded_only and not instance.grounded:
            continue
        if instance.article_id not in usable_ids:
            continue
        key = (instance.article_id, instance.kind_path)
        counts[key] = counts.get(key, 0) + 1
    rates: dict[str, float] = {}
    token_total = sum(a.token_count for a in usable)
    for kind in kinds:
        if pooled:
            pooled_count = sum(counts.get((a.id, kind), 0) for a in usable)
            rates[kind] = pooled_count / token_total
        else:
            rates[kind] = sum(
                counts.get((a.id, kind), 0) / a.token_count for a in usable
            ) / len(usable)
    return rates, excluded


# ---------------------------------------------------------------------------
# Target clustering
# ---------------------------------------------------------------------------

_ARTICLES = {"the", "a", "an"}
_PUNCT_RE = re.compile(r"[^\w\s-]")


def singularize(token: str) -> str:
    """Suffix-rule singularization; conservative about -as/-is/-us/-ss endings."""
    if len(token) > 3 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 3 and token.endswith(("ches", "shes", "xes", "sses", "zes")):
        return token[:-2]
    if (
        len(token) > 3
        and token.endswith("s")
        and not token.endswith(("ss", "sis", "us", "as"))
    ):
        return token[:-1]
    return token


def normalize_target(target: str) -> str:
    """Normal form for clustering: casefold, strip punctuation and articles,
    singularize each token."""
    folded = _PUNCT_RE.sub(" ", target.casefold())
    tokens = [singularize(t) for t in folded.split() if t not in _ARTICLES]
    return " ".join(tokens)


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def cluster_targets(
    instances: Iterable[IndicatorInstance],
    region: str | None = None,
    threshold: float = 0.5,
) -> list[TargetCluster]:
    """Merge near-duplicate targets by token Jaccard single-linkage.

    The 0.5 threshold merges single-token containment ("Hamas" into
    "Hamas militants"). The canonical label is the most frequent member
    normal form; clusters sort by count, then label.
    """
    raw_by_form: dict[str, Counter[str]] = {}
    occurrences: Counter[str] = Counter()
    for instance in instances:
        if not instance.target:
            continue
        form = normalize_target(instance.target)
        if not form:
            continue
        occurrences[form] += 1
        raw_by_form.setdefault(form, Counter())[instance.target] += 1

    forms = sorted(occurrences)
    parent = {form: form for form in forms}

    def _find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def _union(a: str, b: str) -> None:
        ra, rb = _find(a), _find(b)
        if ra != rb:
            # Smaller root wins so the forest shape never depends on order.
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    token_sets = {form: frozenset(form.split()) for form in forms}
    for i, left in enumerate(forms):
        for right in forms[i + 1 :]:
            if _jaccard(token_sets[left], token_sets[right]) >= threshold:
                _union(left, right)

    grouped: dict[str, list[str]] = {}
    for form in forms:
        grouped.setdefault(_find(form), []).append(form)

    clusters = []
    for members in grouped.values():
        count = sum(occurrences[form] for form in members)
        canonical = min(members, key=lambda f: (-occurrences[f], f))
        raw_members = sorted({raw for form in members for raw in raw_by_form[form]})
        clusters.append(
            TargetCluster(
                canonical_label=canonical, members=raw_members, count=count, region=region
            )
        )
    clusters.sort(key=lambda c: (-c.count, c.canonical_label))
    return clusters


# ---------------------------------------------------------------------------
# Top words
# ---------------------------------------------------------------------------

def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        path = Path(resources.files("framescope").joinpath("data/stopwords.txt"))  # type: ignore[arg-type]
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.casefold())
    return frozenset(words)


def top_words(
    texts: Iterable[str], k: int, stopwords: frozenset[str]
) -> list[tuple[str, int]]:
    """Top-k unigram counts over the given texts, stopwords removed.

    Ties break alphabetically so the (word, count) list is reproducible.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    counts: Counter[str] = Counter()
    for text in texts:
        for token in tokenize(text):
            word = token.casefold()
            if word not in stopwords:
                counts[word] += 1
    ranked = sorted(counts.items(), key=lambda wc: (-wc[1], wc[0]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Semantic frame statistics
# ---------------------------------------------------------------------------

def _frames_in_scope(taxonomy: Taxonomy, effect_scope: str) -> frozenset[str] | None:
    if effect_scope == "all":
        return None
    return frozenset(taxonomy.frames_in_class(effect_scope))


def frame_share(
    occurrences: Iterable[SemanticFrameOccurrence],
    taxonomy: Taxonomy,
    effect_scope: str = "all",
) -> dict[str, float]:
    """Relative frame frequency within an effect-class scope."""
    allowed = _frames_in_scope(taxonomy, effect_scope)
    counts: Counter[str] = Counter()
    for occurrence in occurrences:
        if allowed is None or occurrence.frame_name in allowed:
            counts[occurrence.frame_name] += 1
    total = sum(counts.values())
    if not total:
        return {}
    return {frame: counts[frame] / total for frame in sorted(counts)}


def role_distribution(
    occurrences: Iterable[SemanticFrameOccurrence],
    gazetteer: ActorGazetteer,
    frame: str,
    role: str,
    taxonomy: Taxonomy,
) -> dict[str, float]:
    """Actor-group distribution of fillers for one reporting role of a frame.

    ``role`` is the unified reporting name, so Killing's raw Killer role
    aggregates under Assailant. Unmatched fillers land in "other".
    """
    frame_def = taxonomy.frame(frame)
    counts: Counter[str] = Counter()
    for occurrence in occurrences:
        if occurrence.frame_name != frame:
            continue
        for raw_name, filler in occurrence.roles.items():
            if frame_def.reporting_role(raw_name) != role:
                continue
            counts[gazetteer.lookup(filler.text)] += 1
    total = sum(counts.values())
    if not total:
        return {}
    return {group: counts[group] / total for group in sorted(counts)}


@dataclass
class CooccurrenceMatrix:
    frames: tuple[str, ...]
    counts: list[list[int]]

    def cell(self, a: str, b: str) -> int:
        ia, ib = self.frames.index(a), self.frames.index(b)
        return self.counts[ia][ib]

    def to_json(self) -> dict:
        return {"frames": list(self.frames), "counts": [list(row) for row in self.counts]}


def cooccurrence(
    occurrences: Iterable[SemanticFrameOccurrence],
    scope: str = "article",
    taxonomy: Taxonomy | None = None,
    effect_class: str | None = None,
    frames: Sequence[str] | None = None,
) -> CooccurrenceMatrix:
    """Symmetric frame co-occurrence counts over article or sentence units.

    cell(a, b) counts units containing both frames; the diagonal counts
    units containing the frame at least once.
    """
    if scope not in ("article", "sentence"):
        raise ValueError(f"unknown co-occurrence scope: {scope!r}")
    allowed: frozenset[str] | None = None
    if effect_class is not None:
        if taxonomy is None:
            raise ValueError("effect_class filtering requires a taxonomy")
        allowed = frozenset(taxonomy.frames_in_class(effect_class))
    units: dict[object, set[str]] = {}
    for occurrence in occurrences:
        if allowed is not None and occurrence.frame_name not in allowed:
            continue
        key: object = (
            occurrence.article_id
            if scope == "article"
            else (occurrence.article_id, occurrence.sentence_index)
        )
        units.setdefault(key, set()).add(occurrence.frame_name)
    if frames is None:
        axis = tuple(sorted({f for present in units.values() for f in present}))
    else:
        axis = tuple(frames)
    index = {frame: i for i, frame in enumerate(axis)}
    counts = [[0] * len(axis) for _ in axis]
    for present in units.values():
        members = sorted(f for f in present if f in index)
        for i, a in enumerate(members):
            counts[index[a]][index[a]] += 1
            for b in members[i + 1 :]:
                counts[index[a]][index[b]] += 1
                counts[index[b]][index[a]] += 1
    return CooccurrenceMatrix(frames=axis, counts=counts)


# ---------------------------------------------------------------------------
# Temporal series
# ---------------------------------------------------------------------------

def _bin_start(day: date, bin: str) -> date:
    if bin == "day":
        return day
    if bin == "week":
        return day - timedelta(days=day.isoweekday() - 1)
    if bin == "month":
        return day.replace(day=1)
    raise ValueError(f"unknown bin: {bin!r}")


def _next_bin(start: date, bin: str) -> date:
    if bin == "day":
        return start + timedelta(days=1)
    if bin == "week":
        return start + timedelta(days=7)
    if start.month == 12:
        return date(start.year + 1, 1, 1)
    return date(start.year, start.month + 1, 1)


def temporal_series(
    items: Iterable[tuple[date, str]], bin: str = "week"
) -> list[tuple[date, dict[str, int]]]:
    """Counts per calendar bin (ISO weeks for "week"), gap-filled with zeros.

    ``items`` are (date, key) pairs; every bin between the first and last
    observed bin is emitted with a count for every observed key.
    """
    pairs = list(items)
    if not pairs:
        return []
    keys = sorted({key for _d, key in pairs})
    counts: dict[date, Counter[str]] = {}
    for day, key in pairs:
        counts.setdefault(_bin_start(day, bin), Counter())[key] += 1
    first = min(counts)
    last = max(counts)
    series: list[tuple[date, dict[str, int]]] = []
    cursor = first
    while cursor <= last:
        bucket = counts.get(cursor, Counter())
        series.append((cursor, {key: bucket.get(key, 0) for key in keys}))
        cursor = _next_bin(cursor, bin)
    return series
