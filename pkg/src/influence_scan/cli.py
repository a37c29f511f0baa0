"""Command-line pipeline: segment, compare, report, and the chained pipeline.

Stages communicate only through files under the output directory, so each
subcommand can be re-run independently and the expensive embedding step can
happen out of process. Layout per instance and level:

    <out>/<instance_id>/<level>/
        segments_candidate.jsonl   segments_reference.jsonl
        matrix_p.csv  matrix_r.csv  matrix_f1.csv  bundle.json
        heatmap_<metric>.svg  pairs.html  pairs.csv

Exit codes: 0 success, 1 usage or config error, 2 data error (ingest or
embeddings), 3 I/O error. Error messages name the instance and stage.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from .corpus import Manifest, extract_passage, load_document, load_manifest
from .embeddings import EmbeddedSegment, SegmentRef, hash_embed, open_store
from .errors import InfluenceScanError, ManifestError, MissingEmbeddings
from .matrix import (
    METRICS,
    build_bundle,
    bundle_to_json,
    compare_all,
    detect_streaks,
    diagonal_alignment,
    matrix_from_bundle,
    matrix_to_csv,
    streaks_from_bundle,
    top_pairs,
)
from .report import ReportSpec, pairs_to_csv, render_heatmap, render_pair_report
from .score import compute_idf
from .segment import (
    LEVELS,
    SegmentationConfig,
    segment_passage,
    segments_from_jsonl,
    segments_to_jsonl,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_IO = 3

SIDES = ("candidate", "reference")
HASH_DIM = 64


@dataclass
class RunConfig:
    """Everything one pipeline run needs; validated on construction."""

    manifest_path: Path
    output_dir: Path
    levels: tuple[str, ...] = ("sentence", "ngram")
    n: int = 5
    overlap: bool = False
    backend: str = "hash"  # "hash" | "embx_file"
    embx_path: Path | None = None
    idf: bool = False
    metric: str = "p"
    top_k: int = 20
    min_tokens: int = 6
    streak_quantile: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("at least one level required")
        for level in self.levels:
            if level not in LEVELS:
                raise ValueError(f"unknown level {level!r}")
        if self.backend not in ("hash", "embx_file"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "embx_file" and self.embx_path is None:
            raise ValueError("backend embx_file requires an EMBX path")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.min_tokens < 1:
            raise ValueError("min_tokens must be >= 1")
        if not 0.0 < self.streak_quantile < 1.0:
            raise ValueError("streak_quantile must be in (0, 1)")


class StageFailure(Exception):
    """A pipeline stage failed; carries the process exit code."""

    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _message(stage: str, instance, exc) -> str:
    return f"instance {instance}, stage {stage}: {exc}"


@contextmanager
def _stage(stage: str, instance="all"):
    """Wrap a stage body, mapping known failures to exit codes with context."""
    try:
        yield
    except StageFailure:
        raise
    except ManifestError as exc:
        raise StageFailure(EXIT_CONFIG, _message(stage, instance, exc)) from exc
    except MissingEmbeddings as exc:
        raise StageFailure(EXIT_DATA, _message(stage, instance, exc)) from exc
    except InfluenceScanError as exc:
        raise StageFailure(EXIT_DATA, _message(stage, instance, exc)) from exc
    except json.JSONDecodeError as exc:
        raise StageFailure(EXIT_DATA, _message(stage, instance, exc)) from exc
    except ValueError as exc:
        raise StageFailure(EXIT_CONFIG, _message(stage, instance, exc)) from exc
    except OSError as exc:
        raise StageFailure(EXIT_IO, _message(stage, instance, exc)) from exc


def instance_dir(output_dir: Path, instance_id: int, level: str) -> Path:
    return Path(output_dir) / str(instance_id) / level


def segments_path(output_dir: Path, instance_id: int, level: str, side: str) -> Path:
    return instance_dir(output_dir, instance_id, level) / f"segments_{side}.jsonl"


def _load_manifest(config: RunConfig) -> Manifest:
    with _stage("manifest"):
        return load_manifest(config.manifest_path)


def run_segment(config: RunConfig, log=print) -> list[Path]:
    """Ingest every instance and write segment JSONL files per side and level."""
    manifest = _load_manifest(config)
    docs = {}
    written = []
    for inst in manifest.instances:
        with _stage("ingest", inst.instance_id):
            passages = {}
            for side, doc_id, selector in (
                ("candidate", inst.candidate_doc, inst.candidate_range),
                ("reference", inst.reference_doc, inst.reference_range),
            ):
                if doc_id not in docs:
                    entry = manifest.documents[doc_id]
                    docs[doc_id] = load_document(entry.path, entry.id, entry.title)
                passages[side] = extract_passage(docs[doc_id], selector)
        with _stage("segment", inst.instance_id):
            for level in config.levels:
                cfg = SegmentationConfig(level=level, n=config.n,
                                         overlap=config.overlap)
                for side in SIDES:
                    segments = segment_passage(passages[side], cfg)
                    path = segments_path(config.output_dir, inst.instance_id,
                                         level, side)
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(segments_to_jsonl(segments), encoding="utf-8")
                    written.append(path)
                    log(f"instance {inst.instance_id} level={level} "
                        f"side={side}: {len(segments)} segments")
    return written


def _embed_instance_level(config: RunConfig, instance_id: int, level: str,
                          store) -> dict[str, list[EmbeddedSegment]]:
    """Build embedded segments for both sides from JSONL plus the backend."""
    embedded: dict[str, list[EmbeddedSegment]] = {}
    missing = []
    for side in SIDES:
        path = segments_path(config.output_dir, instance_id, level, side)
        segments = segments_from_jsonl(path.read_text(encoding="utf-8"))
        if config.backend == "hash":
            embedded[side] = [
                hash_embed(seg, dim=HASH_DIM, instance_id=instance_id, side=side)
                for seg in segments
            ]
        else:
            rows = []
            for seg in segments:
                ref = SegmentRef(instance_id=instance_id, side=side,
                                 level=level, index=seg.index)
                if ref not in store:
                    missing.append((instance_id, side, level, seg.index))
                else:
                    rows.append(store.get(ref))
            embedded[side] = rows
    if missing:
        raise MissingEmbeddings(missing)
    return embedded


def run_compare(config: RunConfig, log=print) -> list[Path]:
    """Score all segment pairs per instance and level; write grids and bundles."""
    manifest = _load_manifest(config)
    store = None
    if config.backend == "embx_file":
        with _stage("embed"):
            store = open_store(config.embx_path)
    written = []
    for inst in manifest.instances:
        for level in config.levels:
            with _stage("embed", inst.instance_id):
                embedded = _embed_instance_level(config, inst.instance_id,
                                                 level, store)
            with _stage("compare", inst.instance_id):
                idf = compute_idf(embedded["reference"]) if config.idf else None
                m = compare_all(embedded["candidate"], embedded["reference"], idf)
                if m.cand_count >= 2 and m.ref_count >= 2:
                    streaks = detect_streaks(m, config.metric,
                                             config.streak_quantile)
                    alignment = diagonal_alignment(m, config.metric)
                else:
                    streaks, alignment = [], 1.0
                out = instance_dir(config.output_dir, inst.instance_id, level)
                out.mkdir(parents=True, exist_ok=True)
                for metric in METRICS:
                    p = out / f"matrix_{metric}.csv"
                    p.write_text(matrix_to_csv(m, metric), encoding="utf-8")
                    written.append(p)
                bundle = build_bundle(m, config.metric, streaks, alignment)
                p = out / "bundle.json"
                p.write_text(bundle_to_json(bundle), encoding="utf-8")
                written.append(p)
                log(f"instance {inst.instance_id} level={level}: "
                    f"grid {m.cand_count}x{m.ref_count}")
    return written


def run_report(config: RunConfig, log=print) -> list[Path]:
    """Render heatmaps, ranked-pair reports, and export tables from bundles."""
    manifest = _load_manifest(config)
    written = []
    for inst in manifest.instances:
        for level in config.levels:
            out = instance_dir(config.output_dir, inst.instance_id, level)
            bundle_path = out / "bundle.json"
            if not bundle_path.exists():
                raise StageFailure(EXIT_IO, _message(
                    "report", inst.instance_id,
                    f"missing bundle: expected {bundle_path}"))
            with _stage("report", inst.instance_id):
                bundle = json.loads(bundle_path.read_text(encoding="utf-8"))
                m = matrix_from_bundle(bundle)
                streaks = streaks_from_bundle(bundle)
                ranked = top_pairs(m, config.top_k, config.metric,
                                   config.min_tokens, streaks)
                sides = {}
                for side in SIDES:
                    path = segments_path(config.output_dir, inst.instance_id,
                                         level, side)
                    sides[side] = segments_from_jsonl(
                        path.read_text(encoding="utf-8"))
                spec = ReportSpec(
                    instance_id=inst.instance_id,
                    level=level,
                    metric=config.metric,
                    expert_spans=list(inst.expert_spans),
                    output_dir=out,
                )
                svg_path = out / f"heatmap_{config.metric}.svg"
                svg_path.write_text(render_heatmap(m, spec), encoding="utf-8")
                html_path = out / "pairs.html"
                html_path.write_text(
                    render_pair_report(ranked, sides["candidate"],
                                       sides["reference"], spec),
                    encoding="utf-8")
                csv_path = out / "pairs.csv"
                csv_path.write_text(pairs_to_csv(m, ranked), encoding="utf-8")
                written.extend([svg_path, html_path, csv_path])
                log(f"instance {inst.instance_id} level={level}: "
                    f"{len(ranked)} ranked pairs")
    return written


def run_pipeline(config: RunConfig, log=print) -> list[Path]:
    """segment -> compare -> report in one invocation; hash backend only."""
    if config.backend != "hash":
        raise StageFailure(
            EXIT_CONFIG,
            _message("pipeline", "all", "pipeline supports the hash backend only"))
    written = run_segment(config, log)
    written += run_compare(config, log)
    written += run_report(config, log)
    return written


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this toolkit reserves 2
    # for data errors, so route usage problems to exit 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: instance all, stage usage: {message}",
              file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {value!r}")


def _parse_levels(value: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in value.split(",") if p.strip())
    seen = []
    for part in parts:
        if part not in seen:
            seen.append(part)
    return tuple(seen)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="influence-scan",
        description="Detect semantic similarity between an author's passages "
                    "and passages of the books the author read.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", required=True, type=Path,
                        help="run manifest JSON")
    common.add_argument("--out", required=True, type=Path,
                        help="output directory")
    common.add_argument("--level", type=_parse_levels,
                        default=("sentence", "ngram"),
                        help="comma-separated levels: sentence,ngram")
    common.add_argument("--n", type=int, default=5, help="n-gram size")
    common.add_argument("--overlap", type=_parse_bool, default=False,
                        help="overlapping n-grams (true/false)")
    common.add_argument("--backend", choices=("hash", "embx"), default="hash",
                        help="embedding backend")
    common.add_argument("--embx", type=Path, default=None,
                        help="EMBX store path (embx backend)")
    common.add_argument("--idf", type=_parse_bool, default=False,
                        help="IDF-weighted means (true/false)")
    common.add_argument("--metric", choices=METRICS, default="p",
                        help="ranking metric")
    common.add_argument("--top-k", type=int, default=20,
                        help="ranked pairs to report")
    common.add_argument("--min-tokens", type=int, default=6,
                        help="short-segment flag threshold")
    common.add_argument("--streak-quantile", type=float, default=0.9,
                        help="streak detection quantile")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomized fixtures")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("segment", "ingest and write segment JSONL files"),
        ("compare", "score all segment pairs and write matrix bundles"),
        ("report", "render heatmaps and ranked-pair reports"),
        ("pipeline", "segment, compare, and report in one run (hash backend)"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    backend = "embx_file" if args.backend == "embx" else args.backend
    return RunConfig(
        manifest_path=args.manifest,
        output_dir=args.out,
        levels=args.level,
        n=args.n,
        overlap=args.overlap,
        backend=backend,
        embx_path=args.embx,
        idf=args.idf,
        metric=args.metric,
        top_k=args.top_k,
        min_tokens=args.min_tokens,
        streak_quantile=args.streak_quantile,
        seed=args.seed,
    )


_COMMANDS = {
    "segment": run_segment,
    "compare": run_compare,
    "report": run_report,
    "pipeline": run_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"influence-scan: instance all, stage config: {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        _COMMANDS[args.command](config)
    except StageFailure as exc:
        print(f"influence-scan: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
