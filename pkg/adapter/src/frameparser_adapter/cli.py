"""Command-line entry point for the batch adapter."""

from __future__ import annotations

import argparse
import sys

from .backends import AdapterError
from .export import AdapterConfig, parse_and_export


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="frameparser-adapter",
        description=(
            "Run a pretrained frame-semantic parser over article JSONL and export "
            "occurrence JSONL for the analysis pipeline."
        ),
    )
    parser.add_argument("--input", required=True, help="article JSONL path")
    parser.add_argument("--output", required=True, help="occurrence JSONL path to write")
    parser.add_argument("--frames", required=True, help="frames-of-interest list path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument(
        "--all-frames",
        action="store_true",
        help="export every frame the parser finds, not just frames of interest",
    )
    parser.add_argument("--model-size", default="base", help="parser model size")
    args = parser.parse_args(argv)

    try:
        config = AdapterConfig(
            input_path=args.input,
            output_path=args.output,
            frames_path=args.frames,
            batch_size=args.batch_size,
            all_frames=args.all_frames,
        )
        from .backends import TransformerParser

        report = parse_and_export(config, parser=TransformerParser(args.model_size))
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"exported {report.records} occurrences from {report.articles} articles "
        f"({report.sentences} sentences, {report.sentence_failures} failures)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
