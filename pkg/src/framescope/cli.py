"""Command-line entry point for the framescope pipeline.

Exit codes: 0 success, 1 usage/config error, 2 missing upstream artifact,
3 endpoint failure beyond the retry budget.
"""

from __future__ import annotations

import argparse
import sys

from .corpus import CorpusError
from .evalkit import EvalError
from .pipeline import (
    EXIT_ENDPOINT,
    EXIT_MISSING_UPSTREAM,
    EXIT_OK,
    EXIT_USAGE,
    STAGE_ORDER,
    ConfigError,
    PipelineConfig,
    StageError,
    run_all,
    run_stage,
)
from .semframe import SemframeError
from .taxonomy import TaxonomyError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framescope",
        description=(
            "Corpus analysis pipeline for war/peace journalism framing: filters a "
            "news corpus, extracts generic frames, journalism indicators, and "
            "semantic frames, and aggregates regional comparisons."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGE_ORDER + ("run-all",):
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", required=True, help="pipeline config JSON")
        sp.add_argument("--region", choices=("US", "UK", "ME"), help="restrict to one region")
        sp.add_argument(
            "--stage-input",
            help="override the upstream article artifact for this stage",
        )
        sp.add_argument(
            "--mock-endpoint",
            metavar="URL",
            help="override the chat endpoint base URL (testing)",
        )
        sp.add_argument(
            "--seed-less",
            action="store_true",
            help="no-op; the pipeline has no randomness anywhere",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = PipelineConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.region:
        config.region_filter = args.region
    if args.mock_endpoint and config.endpoint:
        config.endpoint.base_url = args.mock_endpoint

    try:
        if args.command == "run-all":
            manifest = run_all(config)
        else:
            manifest = run_stage(args.command, config, stage_input=args.stage_input)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ConfigError, CorpusError, TaxonomyError, SemframeError, EvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    stage_name = args.command if args.command != "run-all" else "run-all"
    counts = manifest.counts.get(args.command, {})
    summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"{stage_name}: ok" + (f" ({summary})" if summary else ""))
    print(f"manifest: {config.manifest_path} (hash {manifest.manifest_hash})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
