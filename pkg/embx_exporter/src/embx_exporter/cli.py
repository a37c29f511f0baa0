"""Command-line entry point for embx-export."""

import argparse
import sys
from pathlib import Path

from .errors import ExportError, ModelLoadError, SegmentFileError, TokenizationEmpty
from .exporter import DEFAULT_MODEL, ExportConfig, export_embeddings

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1; 2 is reserved for data errors.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: usage: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="embx-export",
        description="Export transformer token embeddings for segment JSONL "
                    "files to an EMBX store.")
    parser.add_argument("segments", nargs="+", type=Path,
                        help="segment JSONL files in the analyzer layout "
                             "(<instance_id>/<level>/segments_<side>.jsonl)")
    parser.add_argument("--out", required=True, type=Path,
                        help="output EMBX path")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="Hugging Face model id")
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden layer to export (-1 = recommended)")
    parser.add_argument("--device", default="cpu", help="torch device")
    parser.add_argument("--max-tokens", type=int, default=510,
                        help="encoder token bound per segment")
    parser.add_argument("--batch-size", type=int, default=8,
                        help="segments per inference batch")
    parser.add_argument("--log", type=Path, default=None,
                        help="sidecar warning log (default: export.log "
                             "next to --out)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = ExportConfig(
            segment_files=list(args.segments),
            output_path=args.out,
            model_id=args.model,
            layer=args.layer,
            device=args.device,
            max_tokens=args.max_tokens,
            batch_size=args.batch_size,
            log_path=args.log,
        )
        export_embeddings(config)
    except ValueError as exc:
        print(f"embx-export: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SegmentFileError, ModelLoadError, TokenizationEmpty) as exc:
        print(f"embx-export: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ExportError as exc:
        print(f"embx-export: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"embx-export: i/o: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
