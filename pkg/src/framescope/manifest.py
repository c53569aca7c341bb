"""Run manifest: what produced each artifact, with which config and backends.

The manifest hash covers only the reproducibility-relevant parts (config,
stage versions, backends, deviation notes), never timestamps, so artifacts
that embed the hash stay byte-identical across reruns of the same setup.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

STAGE_VERSIONS = {
    "ingest": "1",
    "filter": "1",
    "classify-generic": "1",
    "extract-indicators": "1",
    "tag-frames": "1",
    "aggregate": "1",
    "eval": "1",
    "report": "1",
}


def hash_config(raw_config: dict) -> str:
    canonical = json.dumps(raw_config, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    stage_versions: dict[str, str] = field(default_factory=lambda: dict(STAGE_VERSIONS))
    backends: dict[str, str] = field(default_factory=dict)
    deviation_notes: list[str] = field(default_factory=list)
    timestamps: dict[str, str] = field(default_factory=dict)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def manifest_hash(self) -> str:
        stable = json.dumps(
            {
                "config_hash": self.config_hash,
                "stage_versions": self.stage_versions,
                "backends": self.backends,
                "deviation_notes": sorted(self.deviation_notes),
            },
            sort_keys=True,
        )
        return hashlib.sha256(stable.encode("utf-8")).hexdigest()[:16]

    def record_stage(self, stage: str, counts: dict[str, int]) -> None:
        self.counts[stage] = dict(counts)
        self.timestamps[stage] = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def to_json(self) -> dict:
        return {
            "manifest_hash": self.manifest_hash,
            "config_hash": self.config_hash,
            "stage_versions": dict(self.stage_versions),
            "backends": dict(self.backends),
            "deviation_notes": list(self.deviation_notes),
            "timestamps": dict(self.timestamps),
            "counts": {stage: dict(c) for stage, c in self.counts.items()},
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        manifest = cls(config_hash=doc["config_hash"])
        manifest.stage_versions = dict(doc.get("stage_versions", STAGE_VERSIONS))
        manifest.backends = dict(doc.get("backends", {}))
        manifest.deviation_notes = list(doc.get("deviation_notes", []))
        manifest.timestamps = dict(doc.get("timestamps", {}))
        manifest.counts = {k: dict(v) for k, v in doc.get("counts", {}).items()}
        return manifest
