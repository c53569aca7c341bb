"""Stage orchestration: configuration, artifacts, and the eight stages.

Stages run in the order ingest, filter, classify-generic,
extract-indicators, tag-frames, aggregate, eval, report. Every stage reads
and writes plain JSONL/JSON files under the configured output directory,
so each intermediate is auditable and any stage can be rerun from cached
artifacts. Artifacts are written in canonical (id-sorted) order and embed
the manifest hash, which makes reruns byte-identical for unchanged inputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import analytics, charts, corpus, evalkit, llm_gateway, semframe
from .corpus import Article, FilterConfig, Region
from .llm_gateway import (
    ChatClient,
    CompletionError,
    EndpointConfig,
    GenericFrameAssignment,
    IndicatorInstance,
)
from .manifest import RunManifest, hash_config
from .semframe import SOURCE_EXTERNAL, SOURCE_LEXICON, SemanticFrameOccurrence
from .taxonomy import PEACE, WAR, Taxonomy, load_taxonomies

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING_UPSTREAM = 2
EXIT_ENDPOINT = 3

STAGE_ORDER = (
    "ingest",
    "filter",
    "classify-generic",
    "extract-indicators",
    "tag-frames",
    "aggregate",
    "eval",
    "report",
)

_LEXICON_BACKEND_NOTE = (
    "semantic frames tagged by the deterministic lexical-unit backend "
    "(neural parser output can be supplied via paths.external_occurrences)"
)


class ConfigError(ValueError):
    """Invalid or incomplete pipeline configuration (exit code 1)."""


class StageError(RuntimeError):
    def __init__(self, message: str, exit_code: int = EXIT_USAGE):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class PipelineConfig:
    raw: dict
    base_dir: Path
    output_dir: Path
    cache_dir: Path
    corpus_path: Path | None
    corpus_format: str
    taxonomy_dir: Path | None
    lexicon_path: Path | None
    gazetteer_path: Path | None
    stopwords_path: Path | None
    gold_path: Path | None
    gold_format: str
    external_occurrences: Path | None
    filter_config: FilterConfig
    endpoint: EndpointConfig | None
    max_input_tokens: int
    max_output_tokens: int
    concurrency: int
    cooccurrence_scope: str
    rate_variant: str
    tag_scope: str
    temporal_bin: str
    top_words_k: int
    stage_toggles: dict[str, bool] = field(default_factory=dict)
    region_filter: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | Path = ".") -> "PipelineConfig":
        base_dir = Path(base_dir)
        paths = dict(raw.get("paths", {}))

        def _resolve(key: str) -> Path | None:
            value = paths.get(key)
            if not value:
                return None
            p = Path(value)
            return p if p.is_absolute() else base_dir / p

        def _require_exists(p: Path | None, key: str) -> None:
            if p is not None and not p.exists():
                raise ConfigError(f"paths.{key} does not exist: {p}")

        corpus_path = _resolve("corpus")
        taxonomy_dir = _resolve("taxonomy_dir")
        lexicon_path = _resolve("lexicon")
        gazetteer_path = _resolve("gazetteer")
        stopwords_path = _resolve("stopwords")
        gold_path = _resolve("gold")
        external_occurrences = _resolve("external_occurrences")
        for key, p in (
            ("corpus", corpus_path),
            ("taxonomy_dir", taxonomy_dir),
            ("lexicon", lexicon_path),
            ("gazetteer", gazetteer_path),
            ("stopwords", stopwords_path),
            ("gold", gold_path),
            ("external_occurrences", external_occurrences),
        ):
            _require_exists(p, key)

        output_dir = _resolve("output_dir") or (base_dir / "out")
        cache_dir = _resolve("cache_dir") or (base_dir / "cache")

        try:
            filter_config = FilterConfig.from_dict(raw.get("filter", {}))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad filter config: {exc}") from exc

        endpoint_raw = raw.get("endpoint")
        endpoint = None
        max_input_tokens = 6000
        max_output_tokens = 2048
        if endpoint_raw:
            known = {
                "base_url", "model", "api_key_env", "timeout", "max_attempts",
                "backoff_base", "max_in_flight", "max_input_tokens", "max_output_tokens",
            }
            unknown = sorted(set(endpoint_raw) - known)
            if unknown:
                raise ConfigError(f"unknown endpoint config keys: {unknown}")
            max_input_tokens = int(endpoint_raw.get("max_input_tokens", max_input_tokens))
            max_output_tokens = int(endpoint_raw.get("max_output_tokens", max_output_tokens))
            try:
                endpoint = EndpointConfig(
                    base_url=endpoint_raw["base_url"],
                    model=endpoint_raw["model"],
                    api_key_env=endpoint_raw.get("api_key_env", "FRAMESCOPE_API_KEY"),
                    timeout=float(endpoint_raw.get("timeout", 60.0)),
                    max_attempts=int(endpoint_raw.get("max_attempts", 4)),
                    backoff_base=float(endpoint_raw.get("backoff_base", 0.5)),
                    max_in_flight=int(endpoint_raw.get("max_in_flight", 8)),
                )
            except KeyError as exc:
                raise ConfigError(f"endpoint config missing {exc}") from exc

        concurrency = int(raw.get("concurrency", 4))
        if concurrency < 1:
            raise ConfigError("concurrency must be >= 1")

        scopes = dict(raw.get("scopes", {}))
        cooccurrence_scope = scopes.get("cooccurrence_scope", "article")
        if cooccurrence_scope not in ("article", "sentence"):
            raise ConfigError(f"bad scopes.cooccurrence_scope: {cooccurrence_scope!r}")
        rate_variant = scopes.get("rate_variant", "mean")
        if rate_variant not in ("mean", "pooled"):
            raise ConfigError(f"bad scopes.rate_variant: {rate_variant!r}")
        tag_scope = scopes.get("tag_scope", "body")
        if tag_scope not in ("body", "headline"):
            raise ConfigError(f"bad scopes.tag_scope: {tag_scope!r}")
        temporal_bin = scopes.get("temporal_bin", "week")
        if temporal_bin not in ("day", "week", "month"):
            raise ConfigError(f"bad scopes.temporal_bin: {temporal_bin!r}")
        top_words_k = int(scopes.get("top_words_k", 10))
        if top_words_k < 1:
            raise ConfigError("scopes.top_words_k must be >= 1")

        return cls(
            raw=raw,
            base_dir=base_dir,
            output_dir=output_dir,
            cache_dir=cache_dir,
            corpus_path=corpus_path,
            corpus_format=str(paths.get("corpus_format", "jsonl")),
            taxonomy_dir=taxonomy_dir,
            lexicon_path=lexicon_path,
            gazetteer_path=gazetteer_path,
            stopwords_path=stopwords_path,
            gold_path=gold_path,
            gold_format=str(paths.get("gold_format", "jsonl")),
            external_occurrences=external_occurrences,
            filter_config=filter_config,
            endpoint=endpoint,
            max_input_tokens=max_input_tokens,
            max_output_tokens=max_output_tokens,
            concurrency=concurrency,
            cooccurrence_scope=cooccurrence_scope,
            rate_variant=rate_variant,
            tag_scope=tag_scope,
            temporal_bin=temporal_bin,
            top_words_k=top_words_k,
            stage_toggles={k: bool(v) for k, v in dict(raw.get("stages", {})).items()},
        )

    def taxonomy(self) -> Taxonomy:
        return load_taxonomies(self.taxonomy_dir)

    # ------------------------------------------------------------------
    # Artifact paths
    # ------------------------------------------------------------------

    @property
    def articles_path(self) -> Path:
        return self.output_dir / "articles.jsonl"

    @property
    def filtered_path(self) -> Path:
        return self.output_dir / "filtered.jsonl"

    @property
    def filter_report_path(self) -> Path:
        return self.output_dir / "filter_report.json"

    @property
    def assignments_path(self) -> Path:
        return self.output_dir / "generic_assignments.jsonl"

    @property
    def generic_audit_path(self) -> Path:
        return self.output_dir / "audit_generic.json"

    @property
    def instances_path(self) -> Path:
        return self.output_dir / "indicator_instances.jsonl"

    @property
    def indicator_audit_path(self) -> Path:
        return self.output_dir / "audit_indicators.json"

    @property
    def occurrences_path(self) -> Path:
        return self.output_dir / "occurrences.jsonl"

    @property
    def analysis_dir(self) -> Path:
        return self.output_dir / "analysis"

    @property
    def charts_dir(self) -> Path:
        return self.output_dir / "charts"

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / "manifest.json"


def analysis_relevant_config(config: PipelineConfig) -> dict:
    """The slice of the config that can change artifact content.

    Execution details (concurrency, retry/backoff, endpoint URL, local
    paths) are excluded: artifacts must be byte-identical across those,
    so they must not leak into the embedded manifest hash.
    """
    return {
        "filter": config.raw.get("filter", {}),
        "scopes": config.raw.get("scopes", {}),
        "stages": config.raw.get("stages", {}),
        "model": config.endpoint.model if config.endpoint else None,
        "max_input_tokens": config.max_input_tokens,
        "max_output_tokens": config.max_output_tokens,
        "corpus_format": config.corpus_format,
        "gold_format": config.gold_format,
        "tag_backend": SOURCE_EXTERNAL if config.external_occurrences else SOURCE_LEXICON,
    }


def load_manifest(config: PipelineConfig) -> RunManifest:
    config_hash = hash_config(analysis_relevant_config(config))
    if config.manifest_path.is_file():
        manifest = RunManifest.load(config.manifest_path)
        if manifest.config_hash == config_hash:
            return manifest
    manifest = RunManifest(config_hash=config_hash)
    manifest.deviation_notes.append(corpus.TOPIC_FILTER_NOTE)
    manifest.deviation_notes.append(_LEXICON_BACKEND_NOTE)
    if config.endpoint:
        manifest.backends["model"] = config.endpoint.model
    manifest.backends["occurrence_source"] = (
        SOURCE_EXTERNAL if config.external_occurrences else SOURCE_LEXICON
    )
    return manifest


# ---------------------------------------------------------------------------
# Artifact IO helpers
# ---------------------------------------------------------------------------

def _require_artifact(path: Path, producing_stage: str) -> None:
    if not path.is_file():
        raise StageError(
            f"missing upstream artifact {path.name}; run {producing_stage} first",
            exit_code=EXIT_MISSING_UPSTREAM,
        )


def write_json_doc(path: Path, payload: dict, manifest_hash: str) -> None:
    doc = {"manifest_hash": manifest_hash}
    doc.update(payload)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def write_csv_doc(
    path: Path, columns: Sequence[str], rows: Iterable[Sequence[object]], manifest_hash: str
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# manifest_hash={manifest_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)


def _write_jsonl(
    path: Path, records: Iterable[dict], header: dict | None = None
) -> int:
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_header": header}, sort_keys=True, ensure_ascii=False) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if isinstance(record, dict) and "_header" not in record:
                records.append(record)
    return records


def _load_articles(config: PipelineConfig, path: Path, producing_stage: str) -> list[Article]:
    _require_artifact(path, producing_stage)
    result = corpus.ingest(path, "jsonl")
    articles = result.articles
    if config.region_filter:
        articles = [a for a in articles if a.region.value == config.region_filter]
    return articles


def _load_assignments(path: Path) -> list[GenericFrameAssignment]:
    out = []
    for record in _read_jsonl(path):
        out.append(
            GenericFrameAssignment(
                article_id=str(record["article_id"]),
                frames=frozenset(record.get("frames", [])),
                reason=str(record.get("reason", "")),
                raw_response=str(record.get("raw_response", "")),
                valid=bool(record.get("valid", False)),
            )
        )
    return out


def _load_instances(path: Path) -> list[IndicatorInstance]:
    out = []
    for record in _read_jsonl(path):
        span = record.get("char_span")
        out.append(
            IndicatorInstance(
                article_id=str(record["article_id"]),
                kind_path=str(record["kind_path"]),
                excerpt=str(record.get("excerpt", "")),
                target=record.get("target"),
                reasoning=record.get("reasoning"),
                grounded=bool(record.get("grounded", False)),
                char_span=tuple(span) if span else None,
            )
        )
    return out


def _load_occurrences(path: Path, taxonomy: Taxonomy) -> list[SemanticFrameOccurrence]:
    occurrences = []
    for record in _read_jsonl(path):
        occurrence, _dropped = semframe.occurrence_from_record(record, taxonomy, source=None)
        occurrences.append(occurrence)
    return occurrences


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_ingest(config: PipelineConfig, manifest: RunManifest) -> dict[str, int]:
    if config.corpus_path is None:
        raise StageError("paths.corpus is not configured", exit_code=EXIT_USAGE)
    result = corpus.ingest(config.corpus_path, config.corpus_format)
    ordered = sorted(result.articles, key=lambda a: a.id)
    corpus.write_articles(
        config.articles_path, ordered, header={"manifest_hash": manifest.manifest_hash}
    )
    return {"ingested": len(result.articles), "skipped": result.skipped}


def stage_filter(config: PipelineConfig, manifest: RunManifest, stage_input: Path | None = None) -> dict[str, int]:
    source = stage_input or config.articles_path
    articles = _load_articles(config, source, "ingest")
    if not articles:
        raise StageError("no articles to filter", exit_code=EXIT_USAGE)
    retained, report = corpus.apply_filters(articles, config.filter_config)
    ordered = sorted(retained, key=lambda a: a.id)
    corpus.write_articles(
        config.filtered_path, ordered, header={"manifest_hash": manifest.manifest_hash}
    )
    write_json_doc(config.filter_report_path, report.to_json(), manifest.manifest_hash)
    counts = {"input": report.input_count, "retained": report.retained_count}
    counts.update({f"dropped_{stage}": n for stage, n in report.dropped.items()})
    return counts


def _completion_failures_record(
    failures: Mapping[str, CompletionError]
) -> list[dict[str, object]]:
    return [
        {
            "article_id": article_id,
            "attempts": failures[article_id].attempts,
            "last_status": failures[article_id].last_status,
        }
        for article_id in sorted(failures)
    ]


def _check_endpoint_wipeout(
    attempted: int, failures: Mapping[str, CompletionError]
) -> None:
    if attempted and len(failures) == attempted:
        raise StageError(
            f"endpoint failed for all {attempted} articles (retry budget exhausted)",
            exit_code=EXIT_ENDPOINT,
        )


def stage_classify_generic(
    config: PipelineConfig, manifest: RunManifest, stage_input: Path | None = None
) -> dict[str, int]:
    if config.endpoint is None:
        raise StageError("endpoint is not configured", exit_code=EXIT_USAGE)
    taxonomy = config.taxonomy()
    articles = _load_articles(config, stage_input or config.filtered_path, "filter")
    requests_by_id = {
        a.id: llm_gateway.render_generic_prompt(
            a,
            taxonomy,
            config.endpoint.model,
            max_input_tokens=config.max_input_tokens,
            max_output_tokens=config.max_output_tokens,
        )
        for a in articles
    }
    client = ChatClient(config.endpoint, cache_dir=config.cache_dir)
    responses, failures = llm_gateway.complete_many(
        client, requests_by_id, max_workers=config.concurrency
    )
    _check_endpoint_wipeout(len(requests_by_id), failures)

    records = []
    parse_failures = []
    invalid_ids = []
    unknown_labels: dict[str, int] = {}
    for article_id in sorted(responses):
        assignment, audit = llm_gateway.parse_generic_response(
            responses[article_id], article_id, taxonomy
        )
        records.append(assignment.to_record())
        if not audit.parse_ok:
            parse_failures.append(article_id)
        elif not assignment.valid:
            invalid_ids.append(article_id)
        for label in audit.unknown_labels:
            unknown_labels[label] = unknown_labels.get(label, 0) + 1

    _write_jsonl(
        config.assignments_path,
        records,
        header={"manifest_hash": manifest.manifest_hash, "stage": "classify-generic",
                "model": config.endpoint.model},
    )
    write_json_doc(
        config.generic_audit_path,
        {
            "parse_failures": parse_failures,
            "invalid_assignments": invalid_ids,
            "unknown_labels": dict(sorted(unknown_labels.items())),
            "endpoint_failures": _completion_failures_record(failures),
            "counts": {
                "articles": len(articles),
                "responses": len(responses),
                "parse_failures": len(parse_failures),
                "invalid_assignments": len(invalid_ids),
                "endpoint_failures": len(failures),
            },
        },
        manifest.manifest_hash,
    )
    return {
        "articles": len(articles),
        "assignments": len(records),
        "parse_failures": len(parse_failures),
        "endpoint_failures": len(failures),
    }


def stage_extract_indicators(
    config: PipelineConfig, manifest: RunManifest, stage_input: Path | None = None
) -> dict[str, int]:
    if config.endpoint is None:
        raise StageError("endpoint is not configured", exit_code=EXIT_USAGE)
    taxonomy = config.taxonomy()
    articles = _load_articles(config, stage_input or config.filtered_path, "filter")
    by_id = {a.id: a for a in articles}
    requests_by_id = {
        a.id: llm_gateway.render_indicator_prompt(
            a,
            taxonomy,
            config.endpoint.model,
            max_input_tokens=config.max_input_tokens,
            max_output_tokens=config.max_output_tokens,
        )
        for a in articles
    }
    client = ChatClient(config.endpoint, cache_dir=config.cache_dir)
    responses, failures = llm_gateway.complete_many(
        client, requests_by_id, max_workers=config.concurrency
    )
    _check_endpoint_wipeout(len(requests_by_id), failures)

    records = []
    parse_failures = []
    malformed: dict[str, int] = {}
    grounded = ungrounded = 0
    for article_id in sorted(responses):
        instances, audit = llm_gateway.parse_indicator_response(
            responses[article_id], by_id[article_id], taxonomy
        )
        if not audit.parse_ok:
            parse_failures.append(article_id)
        for path, n in audit.malformed_branches.items():
            malformed[path] = malformed.get(path, 0) + n
        for instance in instances:
            records.append(instance.to_record())
            if instance.grounded:
                grounded += 1
            else:
                ungrounded += 1

    records.sort(key=lambda r: (r["article_id"], r["kind_path"], r["excerpt"]))
    _write_jsonl(
        config.instances_path,
        records,
        header={"manifest_hash": manifest.manifest_hash, "stage": "extract-indicators",
                "model": config.endpoint.model},
    )
    write_json_doc(
        config.indicator_audit_path,
        {
            "parse_failures": parse_failures,
            "malformed_branches": dict(sorted(malformed.items())),
            "endpoint_failures": _completion_failures_record(failures),
            "counts": {
                "articles": len(articles),
                "responses": len(responses),
                "parse_failures": len(parse_failures),
                "instances": len(records),
                "grounded": grounded,
                "ungrounded": ungrounded,
                "endpoint_failures": len(failures),
            },
        },
        manifest.manifest_hash,
    )
    return {
        "articles": len(articles),
        "instances": len(records),
        "grounded": grounded,
        "ungrounded": ungrounded,
        "parse_failures": len(parse_failures),
        "endpoint_failures": len(failures),
    }


def stage_tag_frames(
    config: PipelineConfig, manifest: RunManifest, stage_input: Path | None = None
) -> dict[str, int]:
    taxonomy = config.taxonomy()
    counts: dict[str, int] = {}
    if config.external_occurrences:
        result = semframe.ingest_external(config.external_occurrences, taxonomy)
        occurrences = result.occurrences
        source = SOURCE_EXTERNAL
        counts["external_skipped"] = result.total_skipped
        counts["dropped_roles"] = result.dropped_roles
    else:
        articles = _load_articles(config, stage_input or config.filtered_path, "filter")
        lexicon = semframe.load_lexicon(config.lexicon_path, taxonomy)
        gazetteer = semframe.load_gazetteer(config.gazetteer_path)
        occurrences = []
        for article in articles:
            text = article.title if config.tag_scope == "headline" else article.body
            occurrences.extend(
                semframe.tag_article(article.id, text, lexicon, gazetteer, taxonomy)
            )
        source = SOURCE_LEXICON
        counts["articles"] = len(articles)

    occurrences.sort(
        key=lambda o: (o.article_id, o.sentence_index, o.trigger.span or (0, 0), o.frame_name)
    )
    semframe.write_occurrences(
        config.occurrences_path,
        occurrences,
        header={
            "manifest_hash": manifest.manifest_hash,
            "stage": "tag-frames",
            "source": source,
            "tag_scope": config.tag_scope,
        },
    )
    counts["occurrences"] = len(occurrences)
    manifest.backends["occurrence_source"] = source
    return counts


# Indicator kinds feeding the language-target clustering and the elite /
# people word tables.
_DEMONIZING_KINDS = (
    "war.language.demonizing_language",
    "war.language.dehumanizing_language",
)
_VICTIMIZING_KINDS = ("war.language.victimizing_language",)
_ELITE_KINDS = ("war.focus_on_elites",)
_PEOPLE_KINDS = ("peace.people_orientation",)


def stage_aggregate(config: PipelineConfig, manifest: RunManifest) -> dict[str, int]:
    taxonomy = config.taxonomy()
    gazetteer = semframe.load_gazetteer(config.gazetteer_path)
    stopwords = analytics.load_stopwords(config.stopwords_path)

    articles = _load_articles(config, config.filtered_path, "filter")
    _require_artifact(config.assignments_path, "classify-generic")
    _require_artifact(config.instances_path, "extract-indicators")
    _require_artifact(config.occurrences_path, "tag-frames")
    assignments = _load_assignments(config.assignments_path)
    instances = _load_instances(config.instances_path)
    occurrences = _load_occurrences(config.occurrences_path, taxonomy)

    article_ids = {a.id for a in articles}
    region_of = {a.id: a.region.value for a in articles}
    date_of = {a.id: a.published_at for a in articles}
    assignments = [a for a in assignments if a.article_id in article_ids]
    instances = [i for i in instances if i.article_id in article_ids]
    occurrences = [o for o in occurrences if o.article_id in article_ids]
    grounded_instances = [i for i in instances if i.grounded]

    regions = sorted({a.region.value for a in articles})
    mh = manifest.manifest_hash
    out = config.analysis_dir
    out.mkdir(parents=True, exist_ok=True)

    def _by_region(items, key=lambda item: item.article_id):
        grouped: dict[str, list] = {region: [] for region in regions}
        for item in items:
            region = region_of.get(key(item))
            if region is not None:
                grouped[region].append(item)
        return grouped

    articles_by_region = {
        region: [a for a in articles if a.region.value == region] for region in regions
    }
    valid_assignments = [a for a in assignments if a.valid]
    assignments_by_region = _by_region(valid_assignments)
    instances_by_region = _by_region(grounded_instances)
    occurrences_by_region = _by_region(occurrences)

    # Generic frame shares by region.
    generic_regional = {
        region: analytics.generic_frame_share(assignments_by_region[region])
        for region in regions
    }
    write_json_doc(
        out / "generic_frame_share.json",
        {
            "global": analytics.generic_frame_share(valid_assignments),
            "regions": generic_regional,
        },
        mh,
    )
    write_csv_doc(
        out / "generic_frame_share.csv",
        ("region", "label", "share"),
        [
            (region, label, f"{share:.10g}")
            for region in regions
            for label, share in sorted(generic_regional[region].items())
        ],
        mh,
    )

    # Length-normalized war/peace indicator rates by region.
    pooled = config.rate_variant == "pooled"
    kind_paths = taxonomy.kind_paths
    rates_by_region: dict[str, dict[str, float]] = {}
    excluded_by_region: dict[str, int] = {}
    for region in regions:
        rates, excluded = analytics.indicator_rate(
            instances_by_region[region],
            articles_by_region[region],
            kind_paths,
            pooled=pooled,
        )
        rates_by_region[region] = rates
        excluded_by_region[region] = excluded
    polarity_means = {
        region: {
            polarity: (
                sum(rates_by_region[region].get(k.path, 0.0) for k in taxonomy.indicator_kinds
                    if k.polarity == polarity)
                / max(1, sum(1 for k in taxonomy.indicator_kinds if k.polarity == polarity))
            )
            for polarity in (WAR, PEACE)
        }
        for region in regions
    }
    write_json_doc(
        out / "indicator_rates.json",
        {
            "variant": config.rate_variant,
            "regions": rates_by_region,
            "polarity_means": polarity_means,
            "zero_token_articles_excluded": excluded_by_region,
        },
        mh,
    )
    write_csv_doc(
        out / "indicator_rates.csv",
        ("region", "kind_path", "polarity", "rate"),
        [
            (region, path, taxonomy.kind(path).polarity, f"{rate:.10g}")
            for region in regions
            for path, rate in sorted(rates_by_region[region].items())
        ],
        mh,
    )

    # Demonizing/dehumanizing language target clusters.
    cluster_groups = {
        "demonizing_dehumanizing": _DEMONIZING_KINDS,
        "victimizing": _VICTIMIZING_KINDS,
    }
    clusters_doc: dict[str, dict[str, list[dict]]] = {}
    cluster_rows = []
    for region in regions:
        clusters_doc[region] = {}
        for group_name, kinds in cluster_groups.items():
            subset = [i for i in instances_by_region[region] if i.kind_path in kinds]
            clusters = analytics.cluster_targets(subset, region=region)
            clusters_doc[region][group_name] = [c.to_json() for c in clusters]
            for cluster in clusters:
                cluster_rows.append(
                    (region, group_name, cluster.canonical_label, cluster.count)
                )
    write_json_doc(out / "target_clusters.json", {"regions": clusters_doc}, mh)
    write_csv_doc(
        out / "target_clusters.csv",
        ("region", "group", "canonical_label", "count"),
        cluster_rows,
        mh,
    )

    # Elite vs people top-word rankings.
    word_doc: dict[str, dict[str, list[list[object]]]] = {}
    word_rows = []
    for region in regions:
        word_doc[region] = {}
        for category, kinds in (("elite", _ELITE_KINDS), ("people", _PEOPLE_KINDS)):
            texts = [
                i.excerpt for i in instances_by_region[region] if i.kind_path in kinds
            ]
            ranked = analytics.top_words(texts, config.top_words_k, stopwords)
            word_doc[region][category] = [[word, count] for word, count in ranked]
            for word, count in ranked:
                word_rows.append((region, category, word, count))
    write_json_doc(out / "top_words.json", {"k": config.top_words_k, "regions": word_doc}, mh)
    write_csv_doc(out / "top_words.csv", ("region", "category", "word", "count"), word_rows, mh)

    # Semantic frame shares, overall and per effect class.
    share_doc = {
        "global": {
            scope: analytics.frame_share(occurrences, taxonomy, scope)
            for scope in ("all", "visible", "invisible")
        },
        "regions": {
            region: {
                scope: analytics.frame_share(occurrences_by_region[region], taxonomy, scope)
                for scope in ("all", "visible", "invisible")
            }
            for region in regions
        },
    }
    write_json_doc(out / "frame_share.json", share_doc, mh)
    write_csv_doc(
        out / "frame_share.csv",
        ("region", "scope", "frame", "share"),
        [
            (region, scope, frame, f"{share:.10g}")
            for region in regions
            for scope in ("all", "visible", "invisible")
            for frame, share in sorted(share_doc["regions"][region][scope].items())
        ],
        mh,
    )

    # Assailant/Victim actor-group distributions.
    role_doc: dict[str, dict[str, dict[str, float]]] = {}
    role_rows = []
    for region in regions:
        role_doc[region] = {}
        for frame_name in ("Attack", "Killing"):
            if frame_name not in taxonomy.frame_names:
                continue
            for role in (semframe.ASSAILANT, semframe.VICTIM):
                dist = analytics.role_distribution(
                    occurrences_by_region[region], gazetteer, frame_name, role, taxonomy
                )
                role_doc[region][f"{frame_name}/{role}"] = dist
                for group, share in sorted(dist.items()):
                    role_rows.append((region, frame_name, role, group, f"{share:.10g}"))
    write_json_doc(out / "role_distribution.json", {"regions": role_doc}, mh)
    write_csv_doc(
        out / "role_distribution.csv",
        ("region", "frame", "role", "actor_group", "share"),
        role_rows,
        mh,
    )

    # Frame co-occurrence within visible and invisible effect classes.
    cooc_doc: dict[str, object] = {"scope": config.cooccurrence_scope, "regions": {}}
    cooc_rows = []
    for region in regions:
        per_class = {}
        for effect_class in ("visible", "invisible"):
            matrix = analytics.cooccurrence(
                occurrences_by_region[region],
                scope=config.cooccurrence_scope,
                taxonomy=taxonomy,
                effect_class=effect_class,
            )
            per_class[effect_class] = matrix.to_json()
            for i, frame_a in enumerate(matrix.frames):
                for j, frame_b in enumerate(matrix.frames):
                    if j >= i and matrix.counts[i][j]:
                        cooc_rows.append(
                            (region, effect_class, frame_a, frame_b, matrix.counts[i][j])
                        )
        cooc_doc["regions"][region] = per_class  # type: ignore[index]
    write_json_doc(out / "cooccurrence.json", cooc_doc, mh)
    write_csv_doc(
        out / "cooccurrence.csv",
        ("region", "effect_class", "frame_a", "frame_b", "count"),
        cooc_rows,
        mh,
    )

    # Indicator mentions over time, keyed by polarity.
    temporal_doc: dict[str, list] = {}
    temporal_rows = []
    for region in regions:
        items = [
            (date_of[i.article_id], taxonomy.kind(i.kind_path).polarity)
            for i in instances_by_region[region]
        ]
        series = analytics.temporal_series(items, bin=config.temporal_bin)
        temporal_doc[region] = [
            [bin_start.isoformat(), dict(sorted(counts.items()))] for bin_start, counts in series
        ]
        for bin_start, counts in series:
            for key, value in sorted(counts.items()):
                temporal_rows.append((region, bin_start.isoformat(), key, value))
    write_json_doc(
        out / "temporal_indicators.json",
        {"bin": config.temporal_bin, "regions": temporal_doc},
        mh,
    )
    write_csv_doc(
        out / "temporal_indicators.csv",
        ("region", "bin_start", "polarity", "count"),
        temporal_rows,
        mh,
    )

    # One combined per-region artifact.
    aggregates = []
    for region in regions:
        aggregates.append(
            analytics.RegionAggregate(
                region=region,
                article_count=len(articles_by_region[region]),
                token_total=sum(a.token_count for a in articles_by_region[region]),
                generic_frame_share=generic_regional[region],
                indicator_rate=rates_by_region[region],
                frame_share=share_doc["regions"][region]["all"],
                role_distribution=role_doc[region],
            ).to_json()
        )
    write_json_doc(out / "region_aggregates.json", {"regions": aggregates}, mh)

    return {
        "articles": len(articles),
        "assignments": len(assignments),
        "grounded_instances": len(grounded_instances),
        "occurrences": len(occurrences),
        "regions": len(regions),
    }


def stage_eval(config: PipelineConfig, manifest: RunManifest) -> dict[str, int]:
    if config.gold_path is None:
        raise StageError("paths.gold is not configured", exit_code=EXIT_USAGE)
    _require_artifact(config.assignments_path, "classify-generic")
    gold = evalkit.load_gold(config.gold_path, config.gold_format)
    predictions = {
        a.article_id: sorted(a.frames) for a in _load_assignments(config.assignments_path)
    }
    pairs, missing = evalkit.build_pairs(gold, predictions)
    report = evalkit.evaluate(pairs)
    payload = report.to_json()
    payload["pairs_missing_prediction"] = missing
    write_json_doc(config.output_dir / "eval_report.json", payload, manifest.manifest_hash)
    with open(config.output_dir / "eval_report.txt", "w", encoding="utf-8") as fh:
        fh.write(report.format_table())
        fh.write("\n")
    return {"pairs": len(pairs), "missing_prediction": missing}


def _read_analysis(config: PipelineConfig, name: str) -> dict:
    path = config.analysis_dir / name
    _require_artifact(path, "aggregate")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def stage_report(config: PipelineConfig, manifest: RunManifest) -> dict[str, int]:
    mh = manifest.manifest_hash
    config.charts_dir.mkdir(parents=True, exist_ok=True)
    emitted = 0

    generic = _read_analysis(config, "generic_frame_share.json")
    labels = sorted({label for shares in generic["regions"].values() for label in shares})
    svg = charts.grouped_bar_chart(
        "Generic frame share by region",
        labels,
        {region: shares for region, shares in generic["regions"].items()},
        manifest_hash=mh,
    )
    (config.charts_dir / "generic_frame_share.svg").write_text(svg, encoding="utf-8")
    emitted += 1

    rates = _read_analysis(config, "indicator_rates.json")
    kinds = sorted({kind for series in rates["regions"].values() for kind in series})
    display = {kind: kind.split(".", 1)[1] for kind in kinds}
    svg = charts.grouped_bar_chart(
        "War vs peace indicator rate by region (per token)",
        [display[k] for k in kinds],
        {
            region: {display[k]: value for k, value in series.items()}
            for region, series in rates["regions"].items()
        },
        manifest_hash=mh,
    )
    (config.charts_dir / "indicator_rates.svg").write_text(svg, encoding="utf-8")
    emitted += 1

    clusters = _read_analysis(config, "target_clusters.json")
    for region, groups in sorted(clusters["regions"].items()):
        items = [
            (c["canonical_label"], float(c["count"]))
            for c in groups.get("demonizing_dehumanizing", [])[:10]
        ]
        svg = charts.horizontal_bar_chart(
            f"Demonizing/dehumanizing language targets ({region})", items, manifest_hash=mh
        )
        (config.charts_dir / f"target_clusters_{region}.svg").write_text(svg, encoding="utf-8")
        emitted += 1

    shares = _read_analysis(config, "frame_share.json")
    visible_frames = sorted(
        {frame for region in shares["regions"].values() for frame in region["visible"]}
    )
    svg = charts.grouped_bar_chart(
        "Visible-effect frame share by region",
        visible_frames,
        {region: series["visible"] for region, series in shares["regions"].items()},
        manifest_hash=mh,
    )
    (config.charts_dir / "frame_share_visible.svg").write_text(svg, encoding="utf-8")
    emitted += 1

    roles = _read_analysis(config, "role_distribution.json")
    groups = sorted(
        {
            group
            for region in roles["regions"].values()
            for dist in region.values()
            for group in dist
        }
    )
    svg = charts.grouped_bar_chart(
        "Attack assailant actor groups by region",
        groups,
        {
            region: dists.get("Attack/Assailant", {})
            for region, dists in roles["regions"].items()
        },
        manifest_hash=mh,
    )
    (config.charts_dir / "role_distribution_attack_assailant.svg").write_text(
        svg, encoding="utf-8"
    )
    emitted += 1
    return {"charts": emitted}


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def run_stage(
    stage: str, config: PipelineConfig, stage_input: str | Path | None = None
) -> RunManifest:
    """Run one stage, update the manifest, and return it."""
    if stage not in STAGE_ORDER:
        raise StageError(f"unknown stage: {stage!r}", exit_code=EXIT_USAGE)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(config)
    override = Path(stage_input) if stage_input else None
    if stage == "ingest":
        counts = stage_ingest(config, manifest)
    elif stage == "filter":
        counts = stage_filter(config, manifest, override)
    elif stage == "classify-generic":
        counts = stage_classify_generic(config, manifest, override)
    elif stage == "extract-indicators":
        counts = stage_extract_indicators(config, manifest, override)
    elif stage == "tag-frames":
        counts = stage_tag_frames(config, manifest, override)
    elif stage == "aggregate":
        counts = stage_aggregate(config, manifest)
    elif stage == "eval":
        counts = stage_eval(config, manifest)
    else:
        counts = stage_report(config, manifest)
    manifest.record_stage(stage, counts)
    manifest.save(config.manifest_path)
    return manifest


def run_all(config: PipelineConfig) -> RunManifest:
    """Run every enabled stage in order; eval only when gold is configured."""
    manifest = load_manifest(config)
    for stage in STAGE_ORDER:
        if not config.stage_toggles.get(stage, True):
            continue
        if stage == "eval" and config.gold_path is None:
            continue
        manifest = run_stage(stage, config)
    return manifest
