"""Multi-label evaluation harness for the generic frame classifier.

Implements the usual multi-label metric suite (per-label P/R/F1 plus
micro, macro, weighted, and samples averages) over article-level label
sets, with explicit 0/0 -> 0 conventions that are flagged on the report
rather than silently applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .llm_gateway import NONE_LABEL
from .taxonomy import CANONICAL_GENERIC_LABELS


class EvalError(ValueError):
    """Fatal evaluation-input problem (unknown label, empty pair list)."""


#: Canonical label -> short row name used in the formatted report table.
SHORT_NAMES: dict[str, str] = {
    "Capacity and resources": "cap&res",
    "Crime and punishment": "crime",
    "Cultural identity": "culture",
    "Economic": "economic",
    "Fairness and equality": "fairness",
    "Health and safety": "health",
    "Legality, constitutionality and jurisprudence": "legality",
    "Morality": "morality",
    "Policy prescription and evaluation": "policy",
    "Political": "political",
    "Public Opinion": "public_op",
    "Quality of life": "quality_life",
    "External regulation and reputation": "regulation",
    "Security and defense": "security",
    "None": "none",
}

_EXTRA_ALIASES = {
    "capacity": "Capacity and resources",
    "capacity & resources": "Capacity and resources",
    "crime and punishment": "Crime and punishment",
    "cultural identity": "Cultural identity",
    "fairness and equality": "Fairness and equality",
    "health and safety": "Health and safety",
    "legality, constitutionality and jurispudence": "Legality, constitutionality and jurisprudence",
    "legality, constitutionality, and jurisprudence": "Legality, constitutionality and jurisprudence",
    "policy prescription and evaluation": "Policy prescription and evaluation",
    "public opinion": "Public Opinion",
    "quality of life": "Quality of life",
    "external regulation": "External regulation and reputation",
    "external regulation and reputation": "External regulation and reputation",
    "security and defense": "Security and defense",
    "security and defence": "Security and defense",
    "other": "None",
}


def _fold(name: str) -> str:
    return " ".join(str(name).split()).casefold()


_LABEL_INDEX: dict[str, str] = {}
for _label in CANONICAL_GENERIC_LABELS:
    _LABEL_INDEX[_fold(_label)] = _label
for _short, _canon in ((v, k) for k, v in SHORT_NAMES.items()):
    _LABEL_INDEX.setdefault(_fold(_short), _canon)
for _alias, _canon in _EXTRA_ALIASES.items():
    _LABEL_INDEX.setdefault(_fold(_alias), _canon)


def normalize_label(name: str) -> str:
    """Canonical form of a label name; raises EvalError when unmappable."""
    canonical = _LABEL_INDEX.get(_fold(name))
    if canonical is None:
        raise EvalError(f"unmappable label: {name!r}")
    return canonical


@dataclass(frozen=True)
class LabeledPair:
    article_id: str
    gold: frozenset[str]
    predicted: frozenset[str]


@dataclass
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int


@dataclass
class Averages:
    precision: float
    recall: float
    f1: float


@dataclass
class MetricReport:
    labels: tuple[str, ...]
    per_label: dict[str, LabelMetrics]
    micro: Averages
    macro: Averages
    weighted: Averages
    samples: Averages
    non_zero_overlap_rate: float
    pair_count: int
    zero_division_flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "per_label": {
                label: vars(metrics) for label, metrics in sorted(self.per_label.items())
            },
            "micro": vars(self.micro),
            "macro": vars(self.macro),
            "weighted": vars(self.weighted),
            "samples": vars(self.samples),
            "non_zero_overlap_rate": self.non_zero_overlap_rate,
            "pair_count": self.pair_count,
            "zero_division_flags": sorted(self.zero_division_flags),
        }

    def format_table(self) -> str:
        """Plain-text table: one row per label plus the four average rows."""
        rows = []
        for label in sorted(self.labels, key=lambda l: SHORT_NAMES.get(l, l)):
            m = self.per_label[label]
            rows.append((SHORT_NAMES.get(label, label), m.precision, m.recall, m.f1))
        averages = [
            ("micro avg", self.micro),
            ("macro avg", self.macro),
            ("weighted avg", self.weighted),
            ("samples avg", self.samples),
        ]
        name_width = max(
            [len("Label")] + [len(r[0]) for r in rows] + [len(a[0]) for a in averages]
        )
        header = f"{'Label':<{name_width}}  Precision  Recall  F1-score"
        sep = "-" * len(header)
        lines = [header, sep]
        for name, p, r, f1 in rows:
            lines.append(f"{name:<{name_width}}  {p:>9.2f}  {r:>6.2f}  {f1:>8.2f}")
        lines.append(sep)
        for name, avg in averages:
            lines.append(
                f"{name:<{name_width}}  {avg.precision:>9.2f}  {avg.recall:>6.2f}  {avg.f1:>8.2f}"
            )
        lines.append("")
        lines.append(f"non-zero overlap rate: {self.non_zero_overlap_rate:.3f}")
        if self.zero_division_flags:
            lines.append(f"0/0 cells reported as 0: {len(self.zero_division_flags)}")
        return "\n".join(lines)


def _ratio(num: float, den: float, flag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def evaluate(
    pairs: Sequence[LabeledPair],
    labels: Sequence[str] | None = None,
    *,
    include_none: bool = False,
) -> MetricReport:
    """Score predicted label sets against gold sets.

    The residual "None" label is excluded from scoring by default (it is
    still a legal member of the sets). Every 0/0 metric cell is defined as
    0 and recorded in ``zero_division_flags``; macro averages run over all
    scored labels under that convention.
    """
    if not pairs:
        raise EvalError("evaluate requires at least one pair")
    if labels is None:
        scored = [
            label
            for label in CANONICAL_GENERIC_LABELS
            if include_none or label != NONE_LABEL
        ]
    else:
        scored = list(labels)
    legal = set(scored) | {NONE_LABEL}
    for pair in pairs:
        stray = (set(pair.gold) | set(pair.predicted)) - legal
        if stray:
            raise EvalError(
                f"labels outside inventory for article {pair.article_id}: {sorted(stray)}"
            )

    flags: list[str] = []
    per_label: dict[str, LabelMetrics] = {}
    total_tp = total_fp = total_fn = 0
    for label in scored:
        tp = sum(1 for p in pairs if label in p.gold and label in p.predicted)
        fp = sum(1 for p in pairs if label not in p.gold and label in p.predicted)
        fn = sum(1 for p in pairs if label in p.gold and label not in p.predicted)
        precision = _ratio(tp, tp + fp, f"precision[{label}]", flags)
        recall = _ratio(tp, tp + fn, f"recall[{label}]", flags)
        f1 = _ratio(2 * precision * recall, precision + recall, f"f1[{label}]", flags)
        per_label[label] = LabelMetrics(
            precision=precision, recall=recall, f1=f1, support=tp + fn, tp=tp, fp=fp, fn=fn
        )
        total_tp += tp
        total_fp += fp
        total_fn += fn

    micro_p = _ratio(total_tp, total_tp + total_fp, "precision[micro]", flags)
    micro_r = _ratio(total_tp, total_tp + total_fn, "recall[micro]", flags)
    micro = Averages(
        precision=micro_p,
        recall=micro_r,
        f1=_ratio(2 * micro_p * micro_r, micro_p + micro_r, "f1[micro]", flags),
    )
    macro = Averages(
        precision=sum(m.precision for m in per_label.values()) / len(scored),
        recall=sum(m.recall for m in per_label.values()) / len(scored),
        f1=sum(m.f1 for m in per_label.values()) / len(scored),
    )
    support_total = sum(m.support for m in per_label.values())
    weighted = Averages(
        precision=_ratio(
            sum(m.precision * m.support for m in per_label.values()),
            support_total,
            "precision[weighted]",
            flags,
        ),
        recall=_ratio(
            sum(m.recall * m.support for m in per_label.values()),
            support_total,
            "recall[weighted]",
            flags,
        ),
        f1=_ratio(
            sum(m.f1 * m.support for m in per_label.values()),
            support_total,
            "f1[weighted]",
            flags,
        ),
    )

    sample_p = sample_r = sample_f = 0.0
    for pair in pairs:
        inter = len(pair.gold & pair.predicted)
        sample_p += _ratio(inter, len(pair.predicted), f"precision[samples:{pair.article_id}]", flags)
        sample_r += _ratio(inter, len(pair.gold), f"recall[samples:{pair.article_id}]", flags)
        sample_f += _ratio(
            2 * inter,
            len(pair.gold) + len(pair.predicted),
            f"f1[samples:{pair.article_id}]",
            flags,
        )
    samples = Averages(
        precision=sample_p / len(pairs),
        recall=sample_r / len(pairs),
        f1=sample_f / len(pairs),
    )

    with_gold = [p for p in pairs if p.gold]
    if with_gold:
        overlap = sum(1 for p in with_gold if p.gold & p.predicted) / len(with_gold)
    else:
        flags.append("non_zero_overlap_rate")
        overlap = 0.0

    return MetricReport(
        labels=tuple(scored),
        per_label=per_label,
        micro=micro,
        macro=macro,
        weighted=weighted,
        samples=samples,
        non_zero_overlap_rate=overlap,
        pair_count=len(pairs),
        zero_division_flags=flags,
    )


# ---------------------------------------------------------------------------
# Gold / prediction loading
# ---------------------------------------------------------------------------

def _normalize_set(names: Iterable[str]) -> frozenset[str]:
    return frozenset(normalize_label(name) for name in names)


def load_gold(path: str | Path, format: str = "jsonl") -> list[tuple[str, frozenset[str]]]:
    """Load per-article gold label sets.

    ``jsonl``: one object per line with ``article_id`` and ``labels``.
    ``mfc``: annotation records (JSON array or JSONL) whose per-article
    gold set is the union of all annotated frame names; short names are
    normalized to the canonical inventory. Unmappable labels are fatal.
    """
    path = Path(path)
    if not path.is_file():
        raise EvalError(f"gold file not found: {path}")
    if format not in ("jsonl", "mfc"):
        raise EvalError(f"unknown gold format: {format!r}")

    records: list[Mapping] = []
    text = path.read_text(encoding="utf-8").strip()
    if format == "mfc" and text.startswith("["):
        records = json.loads(text)
    else:
        for line in text.splitlines():
            line = line.strip()
            if line:
                records.append(json.loads(line))

    out: dict[str, set[str]] = {}
    for record in records:
        if not isinstance(record, Mapping):
            raise EvalError(f"bad gold record: {record!r}")
        article_id = str(record.get("article_id") or record.get("id") or "")
        if not article_id:
            raise EvalError(f"gold record without article id: {record!r}")
        names = record.get("labels")
        if names is None:
            names = record.get("annotations", [])
        labels = _normalize_set(str(n) for n in names)
        out.setdefault(article_id, set()).update(labels)
    return [(article_id, frozenset(labels)) for article_id, labels in sorted(out.items())]


def build_pairs(
    gold: Iterable[tuple[str, frozenset[str]]],
    predictions: Mapping[str, Iterable[str]],
) -> tuple[list[LabeledPair], int]:
    """Pair gold sets with predictions by article id.

    Articles without a prediction are paired with an empty set and counted
    in the second return value.
    """
    missing = 0
    pairs = []
    for article_id, gold_set in gold:
        predicted = predictions.get(article_id)
        if predicted is None:
            missing += 1
            predicted = ()
        pairs.append(
            LabeledPair(
                article_id=article_id,
                gold=gold_set,
                predicted=frozenset(_normalize_set(predicted)),
            )
        )
    return pairs, missing
