"""Prompt rendering, chat-completion transport, and structured-output recovery.

Two LLM tasks run through this module: multi-label generic frame
classification and war/peace indicator extraction. Model output is treated
as untrusted text: parsing is total (anything unparseable becomes an audit
record, never an exception) and every extracted excerpt is grounded against
the article body before it can enter any statistic.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import requests

from .corpus import Article, truncate_tokens
from .taxonomy import PEACE, WAR, IndicatorKind, Taxonomy

NONE_LABEL = "None"

GENERIC_SYSTEM_TEXT = (
    "You are an intelligent and logical journalism scholar conducting analysis "
    "of news articles. Your task is to read the article and answer the following "
    "question about the article. Only output the json and no other text.\n"
)

INDICATOR_SYSTEM_TEXT = "You are a helpful AI assistant.\n"

_GENERIC_INSTRUCTIONS = """
Given the list of news frames, and the news article.
Your task is to carefully analyse the article and choose the appropriate frames used in the article from the above list.
Output your answer in a json format with the format:
{"frames-list": "[<All frame names that apply from list provided above>], "reason": "<reasoning for the frames chosen>"}.
Only choose the frames from the provided list of frames. If none of the frames apply, output "None" as the answer.
"""

_INDICATOR_INSTRUCTIONS = """
Given an article as input your task is to analyse it along the framework for Galtung's War and Peace journalism framework.

You have to assess the framing of the article, and come up with salient indicators supporting war or peace journalism frames, according to the framework.
Indicators include attribution of blame, partisan framing, the reporting being elite oriented vs people-oriented, or the language of the article being victimizing, demonizing or dehumanizing a certain group.
List the indicators found and provide exact phrasing of each indicator from the article. Identify the targets of the indicator, and give an associated reasoning.

Structure your output in a json format, with each indicator as key and the corresponding wording of that indicator, targets, and associated reasoning in the article text as the values in a list format.
"""

_GROUP_KEYS = {WAR: "war_journalism_indicators", PEACE: "peace_journalism_indicator"}


class GatewayError(RuntimeError):
    """Base error for transport and rendering failures."""


class CompletionError(GatewayError):
    """A chat completion that could not be obtained within the retry budget."""

    def __init__(self, message: str, attempts: int, last_status: int | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.last_status = last_status


@dataclass
class ChatRequest:
    model: str
    system_text: str
    user_text: str
    temperature: float = 0.0
    max_output_tokens: int = 2048
    truncated: bool = False

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def cache_key(self) -> str:
        basis = json.dumps(
            {
                "model": self.model,
                "system": self.system_text,
                "user": self.user_text,
                "temperature": self.temperature,
                "max_tokens": self.max_output_tokens,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(basis.encode("utf-8")).hexdigest()


@dataclass
class GenericFrameAssignment:
    article_id: str
    frames: frozenset[str]
    reason: str
    raw_response: str
    valid: bool

    def to_record(self) -> dict:
        return {
            "article_id": self.article_id,
            "frames": sorted(self.frames),
            "reason": self.reason,
            "raw_response": self.raw_response,
            "valid": self.valid,
        }


@dataclass
class IndicatorInstance:
    article_id: str
    kind_path: str
    excerpt: str
    target: str | None
    reasoning: str | None
    grounded: bool
    char_span: tuple[int, int] | None

    def to_record(self) -> dict:
        return {
            "article_id": self.article_id,
            "kind_path": self.kind_path,
            "excerpt": self.excerpt,
            "target": self.target,
            "reasoning": self.reasoning,
            "grounded": self.grounded,
            "char_span": list(self.char_span) if self.char_span else None,
        }


@dataclass
class GenericParseAudit:
    parse_ok: bool = True
    unknown_labels: list[str] = field(default_factory=list)


@dataclass
class IndicatorParseAudit:
    parse_ok: bool = True
    malformed_branches: dict[str, int] = field(default_factory=dict)
    unknown_keys: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------

def _article_text(article: Article, max_input_tokens: int) -> tuple[str, bool]:
    text = article.title + "\n\n" + article.body if article.title else article.body
    return truncate_tokens(text, max_input_tokens)


def frames_block(taxonomy: Taxonomy) -> str:
    lines = [f"{f.label} - {f.description}" for f in taxonomy.generic_frames]
    return "A list of frame names and their descriptions used in news is:\n" + ",\n".join(lines) + "."


def render_generic_prompt(
    article: Article,
    taxonomy: Taxonomy,
    model: str,
    max_input_tokens: int = 6000,
    max_output_tokens: int = 1024,
) -> ChatRequest:
    """Prompt for the multi-label generic frame task.

    The frame list is generated from the taxonomy, so a reconfigured
    inventory flows straight into the prompt.
    """
    if not article.body.strip():
        raise ValueError(f"article {article.id} has an empty body")
    text, truncated = _article_text(article, max_input_tokens)
    # Assembled by concatenation: article text may contain braces and must
    # never pass through str.format.
    user = frames_block(taxonomy) + "\n" + _GENERIC_INSTRUCTIONS + "\nArticle: " + text
    return ChatRequest(
        model=model,
        system_text=GENERIC_SYSTEM_TEXT,
        user_text=user,
        max_output_tokens=max_output_tokens,
        truncated=truncated,
    )


def _leaf_placeholder(kind: IndicatorKind) -> str:
    if kind.has_target and kind.has_reasoning:
        return "[(<List of instances from the article>, <target>, <reasoning>)]"
    if kind.has_target:
        return "[(<List of instances from the article>, <target>)]"
    return "[<List of instances from the article>]"


def _scaffold_tree(kinds: Iterable[IndicatorKind], polarity: str) -> dict:
    tree: dict = {}
    for kind in kinds:
        if kind.polarity != polarity:
            continue
        node = tree
        segments = kind.path.split(".")[1:]
        for seg in segments[:-1]:
            node = node.setdefault(seg, {})
            if not isinstance(node, dict):
                raise GatewayError(f"indicator path conflict at {kind.path}")
        node[segments[-1]] = _leaf_placeholder(kind)
    return tree


def _render_tree(node: dict, indent: int) -> str:
    pad = "  " * indent
    inner_pad = "  " * (indent + 1)
    parts = []
    for key, value in node.items():
        if isinstance(value, dict):
            parts.append(f'{inner_pad}"{key}": ' + _render_tree(value, indent + 1))
        else:
            parts.append(f'{inner_pad}"{key}": {value}')
    return "{\n" + ",\n".join(parts) + "\n" + pad + "}"


def indicator_scaffold(taxonomy: Taxonomy) -> str:
    """JSON-shaped output scaffold generated from the indicator inventory."""
    top = {
        _GROUP_KEYS[WAR]: _scaffold_tree(taxonomy.indicator_kinds, WAR),
        _GROUP_KEYS[PEACE]: _scaffold_tree(taxonomy.indicator_kinds, PEACE),
    }
    return _render_tree(top, 0)


def render_indicator_prompt(
    article: Article,
    taxonomy: Taxonomy,
    model: str,
    max_input_tokens: int = 6000,
    max_output_tokens: int = 2048,
) -> ChatRequest:
    """Prompt for the war/peace indicator extraction task."""
    if not article.body.strip():
        raise ValueError(f"article {article.id} has an empty body")
    text, truncated = _article_text(article, max_input_tokens)
    user = (
        _INDICATOR_INSTRUCTIONS
        + "```json\n\n"
        + indicator_scaffold(taxonomy)
        + "\n```\nArticle: "
        + text
    )
    return ChatRequest(
        model=model,
        system_text=INDICATOR_SYSTEM_TEXT,
        user_text=user,
        max_output_tokens=max_output_tokens,
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------

@dataclass
class EndpointConfig:
    """Where and how to reach the chat-completion endpoint.

    ``base_url`` is the full completions URL. The credential comes from the
    FRAMESCOPE_API_KEY environment variable unless set explicitly.
    """

    base_url: str
    model: str
    api_key: str | None = None
    api_key_env: str = "FRAMESCOPE_API_KEY"
    timeout: float = 60.0
    max_attempts: int = 4
    backoff_base: float = 0.5
    max_in_flight: int = 8

    def resolve_key(self) -> str:
        return self.api_key or os.environ.get(self.api_key_env, "")


class ChatClient:
    """HTTP chat-completion client with retries, caching, and a flight cap.

    Retries transport errors, 429, and 5xx with exponential backoff up to
    ``max_attempts`` total attempts; other 4xx fail immediately. A semaphore
    bounds concurrent in-flight requests across all calling threads.
    """

    def __init__(
        self,
        endpoint: EndpointConfig,
        cache_dir: str | Path | None = None,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._session = session or requests.Session()
        self._flight = threading.Semaphore(max(1, endpoint.max_in_flight))

    def _cache_path(self, request: ChatRequest) -> Path | None:
        if not self.cache_dir:
            return None
        return self.cache_dir / (request.cache_key() + ".json")

    def complete(self, request: ChatRequest) -> str:
        cache_path = self._cache_path(request)
        if cache_path and cache_path.is_file():
            with open(cache_path, encoding="utf-8") as fh:
                return json.load(fh)["response"]

        body = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {}
        key = self.endpoint.resolve_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"

        last_status: int | None = None
        last_error = "no attempt made"
        for attempt in range(1, self.endpoint.max_attempts + 1):
            if attempt > 1:
                time.sleep(self.endpoint.backoff_base * 2 ** (attempt - 2))
            try:
                with self._flight:
                    resp = self._session.post(
                        self.endpoint.base_url,
                        json=body,
                        headers=headers,
                        timeout=self.endpoint.timeout,
                    )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
                continue
            last_status = resp.status_code
            if resp.status_code == 200:
                content = self._extract_content(resp, attempt)
                if cache_path:
                    tmp = cache_path.with_suffix(".tmp")
                    with open(tmp, "w", encoding="utf-8") as fh:
                        json.dump({"request": body, "response": content}, fh, ensure_ascii=False)
                    tmp.replace(cache_path)
                return content
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            raise CompletionError(
                f"HTTP {resp.status_code} from endpoint (not retryable)",
                attempts=attempt,
                last_status=resp.status_code,
            )
        raise CompletionError(
            f"retry budget exhausted after {self.endpoint.max_attempts} attempts ({last_error})",
            attempts=self.endpoint.max_attempts,
            last_status=last_status,
        )

    @staticmethod
    def _extract_content(resp: requests.Response, attempt: int) -> str:
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise CompletionError(
                f"malformed completion payload: {exc}", attempts=attempt, last_status=200
            ) from exc
        if not isinstance(content, str):
            raise CompletionError(
                "completion content is not a string", attempts=attempt, last_status=200
            )
        return content


def complete(request: ChatRequest, endpoint_config: EndpointConfig) -> str:
    """One-shot completion; see :class:`ChatClient` for retry semantics."""
    return ChatClient(endpoint_config).complete(request)


def complete_many(
    client: ChatClient,
    requests_by_id: Mapping[str, ChatRequest],
    max_workers: int = 4,
) -> tuple[dict[str, str], dict[str, CompletionError]]:
    """Run completions concurrently, keyed by article id.

    Results are keyed, never ordered, so completion order cannot leak into
    downstream artifacts.
    """
    responses: dict[str, str] = {}
    failures: dict[str, CompletionError] = {}
    lock = threading.Lock()

    def _one(article_id: str, request: ChatRequest) -> None:
        try:
            content = client.complete(request)
        except CompletionError as exc:
            with lock:
                failures[article_id] = exc
            return
        with lock:
            responses[article_id] = content

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = [
            pool.submit(_one, article_id, request)
            for article_id, request in sorted(requests_by_id.items())
        ]
        for future in futures:
            future.result()
    return responses, failures


# ---------------------------------------------------------------------------
# Structured-output recovery
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL | re.IGNORECASE)


def _balanced_object(text: str) -> str | None:
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def recover_json_object(raw: str) -> dict | None:
    """Best-effort recovery of the outermost JSON object in model output.

    Tries fenced blocks first, then the raw text, then a balanced-brace
    extraction. Returns None when nothing parses to an object.
    """
    candidates = []
    fenced = _FENCE_RE.search(raw)
    if fenced:
        candidates.append(fenced.group(1))
    candidates.append(raw)
    for candidate in candidates:
        for attempt in (candidate.strip(), _balanced_object(candidate)):
            if not attempt:
                continue
            try:
                obj = json.loads(attempt)
            except json.JSONDecodeError:
                continue
            if isinstance(obj, dict):
                return obj
    return None


def _fold_label(label: str) -> str:
    return " ".join(str(label).split()).casefold().strip("\"'` .")


def _coerce_label_list(value: object) -> list[str]:
    if isinstance(value, list):
        return [str(item) for item in value]
    if isinstance(value, str):
        stripped = value.strip()
        try:
            parsed = json.loads(stripped)
            if isinstance(parsed, list):
                return [str(item) for item in parsed]
        except json.JSONDecodeError:
            pass
        return [c for c in (chunk.strip() for chunk in stripped.strip("[]").split(",")) if c]
    return []


def _match_labels(
    raw_labels: list[str], label_index: Mapping[str, str]
) -> tuple[list[str], list[str]]:
    """Greedily match raw label chunks, re-joining comma-split label names."""
    matched: list[str] = []
    unknown: list[str] = []
    i = 0
    while i < len(raw_labels):
        hit = None
        width = 0
        for take in range(min(3, len(raw_labels) - i), 0, -1):
            joined = _fold_label(", ".join(raw_labels[i : i + take]))
            if joined in label_index:
                hit = label_index[joined]
                width = take
                break
        if hit is not None:
            if hit not in matched:
                matched.append(hit)
            i += width
        else:
            unknown.append(raw_labels[i])
            i += 1
    return matched, unknown


def parse_generic_response(
    raw: str, article_id: str, taxonomy: Taxonomy
) -> tuple[GenericFrameAssignment, GenericParseAudit]:
    """Validate a generic-frame response against the closed inventory.

    Unknown labels are dropped and reported, never fuzz-mapped beyond case
    and whitespace folding. Anything unparseable yields frames={None} with
    valid=False and the raw text kept for audit.
    """
    audit = GenericParseAudit()
    label_index = {_fold_label(f.label): f.label for f in taxonomy.generic_frames}
    obj = recover_json_object(raw)
    if obj is None or "frames-list" not in obj:
        audit.parse_ok = False
        assignment = GenericFrameAssignment(
            article_id=article_id,
            frames=frozenset({NONE_LABEL}),
            reason="",
            raw_response=raw,
            valid=False,
        )
        return assignment, audit

    raw_labels = _coerce_label_list(obj.get("frames-list"))
    matched, unknown = _match_labels(raw_labels, label_index)
    audit.unknown_labels = unknown
    if NONE_LABEL in matched and len(matched) > 1:
        matched = [label for label in matched if label != NONE_LABEL]
    reason = str(obj.get("reason", "") or "")
    if not matched:
        frames = frozenset({NONE_LABEL})
        valid = False
    else:
        frames = frozenset(matched)
        valid = True
    assignment = GenericFrameAssignment(
        article_id=article_id,
        frames=frames,
        reason=reason,
        raw_response=raw,
        valid=valid,
    )
    return assignment, audit


def _string_items(value: object) -> list[str]:
    if isinstance(value, str):
        return [value] if value.strip() else []
    if isinstance(value, list):
        out = []
        for item in value:
            out.extend(_string_items(item))
        return out
    return []


def _element_instances(
    element: object, kind: IndicatorKind
) -> list[tuple[str, str | None, str | None]] | None:
    """Excerpt/target/reasoning triples from one scaffold-leaf element.

    Tuples arrive as 1/2/3-element lists; missing positions become absent
    fields. Returns None for a malformed element.
    """
    if isinstance(element, str):
        return [(element, None, None)] if element.strip() else []
    if not isinstance(element, list):
        return None
    if not kind.has_target:
        return [(text, None, None) for text in _string_items(element)]
    if len(element) > 3 or not element:
        return None
    excerpts = _string_items(element[0])
    if not excerpts:
        return None
    target = element[1] if len(element) > 1 and isinstance(element[1], str) else None
    reasoning = element[2] if len(element) > 2 and isinstance(element[2], str) else None
    return [(text, target, reasoning) for text in excerpts]


def _group_value(obj: dict, group_key: str) -> object:
    if group_key in obj:
        return obj[group_key]
    folded = {str(k).casefold(): v for k, v in obj.items()}
    for variant in (group_key, group_key + "s", group_key.rstrip("s")):
        if variant.casefold() in folded:
            return folded[variant.casefold()]
    return None


def parse_indicator_response(
    raw: str, article: Article, taxonomy: Taxonomy
) -> tuple[list[IndicatorInstance], IndicatorParseAudit]:
    """Walk a recovered indicator response against the taxonomy.

    The walk is driven by the inventory, so absent branches mean zero
    instances while malformed ones are skipped and counted per kind. Every
    excerpt is grounded against the article body.
    """
    audit = IndicatorParseAudit()
    obj = recover_json_object(raw)
    if obj is None:
        audit.parse_ok = False
        return [], audit

    groups = {
        WAR: _group_value(obj, _GROUP_KEYS[WAR]),
        PEACE: _group_value(obj, _GROUP_KEYS[PEACE]),
    }
    instances: list[IndicatorInstance] = []
    for kind in taxonomy.indicator_kinds:
        node: object = groups.get(kind.polarity)
        if node is None:
            continue
        segments = kind.path.split(".")[1:]
        for seg in segments:
            if not isinstance(node, dict):
                node = None
                break
            node = node.get(seg)
            if node is None:
                break
        if node is None:
            continue
        if not isinstance(node, list):
            audit.malformed_branches[kind.path] = (
                audit.malformed_branches.get(kind.path, 0) + 1
            )
            continue
        for element in node:
            triples = _element_instances(element, kind)
            if triples is None:
                audit.malformed_branches[kind.path] = (
                    audit.malformed_branches.get(kind.path, 0) + 1
                )
                continue
            for excerpt, target, reasoning in triples:
                grounded, span = ground_excerpt(excerpt, article.body)
                instances.append(
                    IndicatorInstance(
                        article_id=article.id,
                        kind_path=kind.path,
                        excerpt=excerpt,
                        target=target if kind.has_target else None,
                        reasoning=reasoning if kind.has_reasoning else None,
                        grounded=grounded,
                        char_span=span,
                    )
                )
    return instances, audit


# ---------------------------------------------------------------------------
# Excerpt grounding
# ---------------------------------------------------------------------------

_QUOTE_CHARS = "\"'“”‘’«»`"


def _strip_surrounding(text: str) -> str:
    prev = None
    while prev != text:
        prev = text
        text = text.strip().strip(_QUOTE_CHARS)
        for mark in ("…", "..."):
            if text.startswith(mark):
                text = text[len(mark) :]
            if text.endswith(mark):
                text = text[: -len(mark)]
    return text


def normalize_excerpt(excerpt: str) -> str:
    """Grounding normal form: strip quotes/ellipses, collapse space, casefold."""
    return " ".join(_strip_surrounding(excerpt).split()).casefold()


def _fold_body(body: str) -> tuple[str, list[int], list[int]]:
    """Casefolded, whitespace-collapsed body plus per-char original offsets."""
    chars: list[str] = []
    starts: list[int] = []
    ends: list[int] = []
    run_start: int | None = None
    for i, ch in enumerate(body):
        if ch.isspace():
            if run_start is None:
                run_start = i
            continue
        if run_start is not None and chars:
            chars.append(" ")
            starts.append(run_start)
            ends.append(i)
        run_start = None
        for folded in ch.casefold():
            chars.append(folded)
            starts.append(i)
            ends.append(i + 1)
    return "".join(chars), starts, ends


def ground_excerpt(excerpt: str, body: str) -> tuple[bool, tuple[int, int] | None]:
    """Check that an excerpt occurs verbatim in the body, modulo normalization.

    Normalization is exact-substring only (casefold, whitespace collapse,
    surrounding quote/ellipsis strip); approximate matching would readmit
    fabricated excerpts. The span maps back to original-body offsets.
    """
    needle = normalize_excerpt(excerpt)
    if not needle:
        return False, None
    haystack, starts, ends = _fold_body(body)
    pos = haystack.find(needle)
    if pos < 0:
        return False, None
    return True, (starts[pos], ends[pos + len(needle) - 1])
