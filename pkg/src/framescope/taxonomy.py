"""Canonical inventories for the three frame families used by the pipeline.

Three inventories are loaded from editable JSON config files:

* generic news frames (the 15-label multi-label classification inventory),
* war/peace journalism indicator kinds, addressed by hierarchical path,
* semantic frames of interest with their effect class and roles.

All inventories are immutable after load and shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from importlib import resources

WAR = "war"
PEACE = "peace"

#: The closed generic-frame inventory, in prompt order.
CANONICAL_GENERIC_LABELS: tuple[str, ...] = (
    "Economic",
    "Capacity and resources",
    "Morality",
    "Fairness and equality",
    "Legality, constitutionality and jurisprudence",
    "Policy prescription and evaluation",
    "Crime and punishment",
    "Security and defense",
    "Health and safety",
    "Quality of life",
    "Cultural identity",
    "Public Opinion",
    "Political",
    "External regulation and reputation",
    "None",
)

#: Indicator kind path -> (has_target, has_reasoning). Every stock kind must
#: be present in a loaded config with exactly this tuple shape.
CANONICAL_INDICATOR_SHAPES: dict[str, tuple[bool, bool]] = {
    "war.adversarial_frame.use_of_adversarial_language": (True, True),
    "war.adversarial_frame.attribution_of_blame": (True, True),
    "war.focus_on_elites": (False, False),
    "war.attribution_of_blame": (True, True),
    "war.labelling_of_people": (True, True),
    "war.language.demonizing_language": (True, True),
    "war.language.dehumanizing_language": (True, True),
    "war.language.victimizing_language": (True, True),
    "war.language.passive_language": (True, True),
    "war.partisan_framing": (True, True),
    "war.focus_on_visible_effects_of_war": (False, False),
    "war.nationalistic_frame.emphasis_on_national_interests": (True, True),
    "war.nationalistic_frame.portrayal_of_national_strength": (True, True),
    "war.military_solution": (False, False),
    "peace.peace_frame.focus_on_consequences_of_conflict": (True, True),
    "peace.peace_frame.inclusion_of_peace_proposals": (True, True),
    "peace.peace_frame.representation_of_multiple_perspectives": (True, True),
    "peace.focus_on_invisible_effects_of_war": (True, False),
    "peace.peace_orientation": (True, True),
    "peace.people_orientation": (True, True),
    "peace.victim_orientation": (True, True),
}

EFFECT_CLASSES = ("visible", "invisible", "other")


class TaxonomyError(ValueError):
    """Raised when a taxonomy config is missing, malformed, or incomplete."""


@dataclass(frozen=True)
class GenericFrame:
    label: str
    description: str


@dataclass(frozen=True)
class IndicatorKind:
    """One war/peace journalism indicator, addressed by hierarchical path.

    The path nests group segments (``adversarial_frame``, ``language``,
    ``nationalistic_frame``, ``peace_frame``) under a polarity prefix, which
    keeps the two distinct ``attribution_of_blame`` kinds apart.
    """

    path: str
    polarity: str
    has_target: bool
    has_reasoning: bool


@dataclass(frozen=True)
class FrameOfInterest:
    frame_name: str
    effect_class: str
    roles_of_interest: tuple[str, ...] = ()
    role_aliases: Mapping[str, str] = field(default_factory=dict)
    note: str = ""

    def reporting_role(self, raw_role: str) -> str:
        """Unified reporting name for a raw role (e.g. Killer -> Assailant)."""
        return self.role_aliases.get(raw_role, raw_role)


@dataclass(frozen=True)
class Taxonomy:
    generic_frames: tuple[GenericFrame, ...]
    indicator_kinds: tuple[IndicatorKind, ...]
    frames_of_interest: tuple[FrameOfInterest, ...]
    frame_aliases: Mapping[str, str] = field(default_factory=dict)

    @property
    def generic_labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.generic_frames)

    @property
    def kind_paths(self) -> tuple[str, ...]:
        return tuple(k.path for k in self.indicator_kinds)

    @property
    def frame_names(self) -> tuple[str, ...]:
        return tuple(f.frame_name for f in self.frames_of_interest)

    def kind(self, path: str) -> IndicatorKind:
        try:
            return self._kind_index()[path]
        except KeyError:
            raise TaxonomyError(f"unknown indicator path: {path!r}") from None

    def frame(self, name: str) -> FrameOfInterest:
        try:
            return self._frame_index()[name]
        except KeyError:
            raise TaxonomyError(f"unknown frame of interest: {name!r}") from None

    def resolve_frame_name(self, name: str) -> str | None:
        """Canonical frame name for ``name``, following aliases; None if unknown."""
        if name in self._frame_index():
            return name
        return self.frame_aliases.get(name)

    def frames_in_class(self, effect_class: str) -> tuple[str, ...]:
        return tuple(
            f.frame_name for f in self.frames_of_interest if f.effect_class == effect_class
        )

    # Frozen dataclass: lazily built lookup tables are cached on the instance
    # via object.__setattr__ since the contents never change after load.
    def _kind_index(self) -> dict[str, IndicatorKind]:
        cached = self.__dict__.get("_kinds_by_path")
        if cached is None:
            cached = {k.path: k for k in self.indicator_kinds}
            object.__setattr__(self, "_kinds_by_path", cached)
        return cached

    def _frame_index(self) -> dict[str, FrameOfInterest]:
        cached = self.__dict__.get("_frames_by_name")
        if cached is None:
            cached = {f.frame_name: f for f in self.frames_of_interest}
            object.__setattr__(self, "_frames_by_name", cached)
        return cached


def polarity_of(taxonomy: Taxonomy, path: str) -> str:
    """Polarity (war or peace) of an indicator path known to the taxonomy."""
    return taxonomy.kind(path).polarity


def stock_config_dir() -> Path:
    """Directory holding the packaged stock taxonomy configs."""
    return Path(resources.files("framescope").joinpath("data"))  # type: ignore[arg-type]


def _load_json(path: Path) -> dict:
    if not path.is_file():
        raise TaxonomyError(f"taxonomy config not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"malformed taxonomy config {path}: {exc}") from exc


_GENERIC_KEYS = {"label", "description"}
_INDICATOR_KEYS = {"path", "polarity", "has_target", "has_reasoning", "description"}
_FRAME_KEYS = {"frame_name", "effect_class", "roles_of_interest", "role_aliases", "note"}


def _check_keys(record: dict, allowed: set[str], what: str) -> None:
    unknown = sorted(set(record) - allowed)
    if unknown:
        raise TaxonomyError(f"unknown keys {unknown} in {what} record: {record!r}")


def _load_generic(path: Path) -> tuple[GenericFrame, ...]:
    doc = _load_json(path)
    frames = []
    for rec in doc.get("frames", []):
        _check_keys(rec, _GENERIC_KEYS, "generic frame")
        frames.append(GenericFrame(label=rec["label"], description=rec.get("description", "")))
    labels = [f.label for f in frames]
    missing = [l for l in CANONICAL_GENERIC_LABELS if l not in labels]
    if missing:
        raise TaxonomyError(f"generic frame inventory missing canonical labels: {missing}")
    extra = [l for l in labels if l not in CANONICAL_GENERIC_LABELS]
    if extra:
        raise TaxonomyError(f"generic frame inventory is closed; unexpected labels: {extra}")
    if len(set(labels)) != len(labels):
        raise TaxonomyError("duplicate generic frame labels")
    return tuple(frames)


def _load_indicators(path: Path) -> tuple[IndicatorKind, ...]:
    doc = _load_json(path)
    kinds = []
    for rec in doc.get("kinds", []):
        _check_keys(rec, _INDICATOR_KEYS, "indicator kind")
        kind = IndicatorKind(
            path=rec["path"],
            polarity=rec["polarity"],
            has_target=bool(rec["has_target"]),
            has_reasoning=bool(rec["has_reasoning"]),
        )
        if kind.polarity not in (WAR, PEACE):
            raise TaxonomyError(f"bad polarity {kind.polarity!r} for {kind.path}")
        if kind.path.split(".", 1)[0] != kind.polarity:
            raise TaxonomyError(
                f"indicator path {kind.path!r} does not start with its polarity "
                f"{kind.polarity!r}"
            )
        kinds.append(kind)
    by_path = {k.path: k for k in kinds}
    if len(by_path) != len(kinds):
        raise TaxonomyError("duplicate indicator paths")
    problems = []
    for cpath, (want_target, want_reasoning) in CANONICAL_INDICATOR_SHAPES.items():
        got = by_path.get(cpath)
        if got is None:
            problems.append(f"missing indicator path: {cpath}")
        elif (got.has_target, got.has_reasoning) != (want_target, want_reasoning):
            problems.append(
                f"{cpath}: expected has_target={want_target}, has_reasoning={want_reasoning}, "
                f"got has_target={got.has_target}, has_reasoning={got.has_reasoning}"
            )
    if problems:
        raise TaxonomyError("indicator inventory invalid: " + "; ".join(problems))
    return tuple(kinds)


def _load_frames_of_interest(path: Path) -> tuple[tuple[FrameOfInterest, ...], dict[str, str]]:
    doc = _load_json(path)
    frames = []
    for rec in doc.get("frames", []):
        _check_keys(rec, _FRAME_KEYS, "frame of interest")
        foi = FrameOfInterest(
            frame_name=rec["frame_name"],
            effect_class=rec["effect_class"],
            roles_of_interest=tuple(rec.get("roles_of_interest", ())),
            role_aliases=dict(rec.get("role_aliases", {})),
            note=rec.get("note", ""),
        )
        if foi.effect_class not in EFFECT_CLASSES:
            raise TaxonomyError(
                f"bad effect_class {foi.effect_class!r} for {foi.frame_name} "
                f"(expected one of {EFFECT_CLASSES})"
            )
        frames.append(foi)
    names = [f.frame_name for f in frames]
    if len(set(names)) != len(names):
        raise TaxonomyError("duplicate frame-of-interest names")
    aliases = dict(doc.get("aliases", {}))
    for alias, target in aliases.items():
        if target not in names:
            raise TaxonomyError(f"frame alias {alias!r} points at unknown frame {target!r}")
    return tuple(frames), aliases


def load_taxonomies(config_dir: str | Path | None = None) -> Taxonomy:
    """Load and validate the three inventories from ``config_dir``.

    Falls back to the packaged stock configs when no directory is given.
    Raises :class:`TaxonomyError` listing every discrepancy it finds.
    """
    base = Path(config_dir) if config_dir is not None else stock_config_dir()
    generic = _load_generic(base / "generic_frames.json")
    kinds = _load_indicators(base / "indicators.json")
    frames, aliases = _load_frames_of_interest(base / "frames_of_interest.json")
    return Taxonomy(
        generic_frames=generic,
        indicator_kinds=kinds,
        frames_of_interest=frames,
        frame_aliases=aliases,
    )


def serialize_taxonomy(taxonomy: Taxonomy) -> dict[str, dict]:
    """Round-trippable plain-dict form of a loaded taxonomy."""
    return {
        "generic_frames.json": {
            "frames": [
                {"label": f.label, "description": f.description}
                for f in taxonomy.generic_frames
            ]
        },
        "indicators.json": {
            "kinds": [
                {
                    "path": k.path,
                    "polarity": k.polarity,
                    "has_target": k.has_target,
                    "has_reasoning": k.has_reasoning,
                }
                for k in taxonomy.indicator_kinds
            ]
        },
        "frames_of_interest.json": {
            "frames": [
                _frame_record(f) for f in taxonomy.frames_of_interest
            ],
            "aliases": dict(taxonomy.frame_aliases),
        },
    }


def _frame_record(f: FrameOfInterest) -> dict:
    rec: dict = {
        "frame_name": f.frame_name,
        "effect_class": f.effect_class,
        "roles_of_interest": list(f.roles_of_interest),
    }
    if f.role_aliases:
        rec["role_aliases"] = dict(f.role_aliases)
    if f.note:
        rec["note"] = f.note
    return rec
