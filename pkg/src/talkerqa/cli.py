"""Command-line entry points.

Subcommands mirror the pipeline stages: `extract` builds composites,
`ingest` turns raw ratings into MOSs, `train`/`eval` fit and score the
regressor, `serve` runs the study HTTP service, and `demo` writes a
synthetic study for trying the whole loop end to end. Every flag can also
be supplied through `--config file.{json,toml}`; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import demo, pipeline
from .evaluation import FoldEvaluationError, UndefinedCorrelationError
from .fscd import CompositeFormatError, RankDeficiencyError
from .media import MediaError
from .store import StorageError
from .subjective import (
    DegenerateStudyError,
    DistortionTaxonomy,
    RatingFormatError,
    load_ratings,
    process_ratings,
    write_mos_csv,
)

BUILTIN_DEFAULTS = {
    "k": 5,
    "seed": 0,
    "ridge_lambda": 1e-2,
    "grid": 4,
    "port": 8000,
    "phase_size": 120,
    "workers": 1,
    "host": "127.0.0.1",
    "scale_c": 16.0,
    "scale_d": 16.0,
    "crop_box": 96,
    "n_clips": 60,
    "n_pids": 14,
}
CONFIG_ALIASES = {"lambda": "ridge_lambda", "clips": "n_clips", "pids": "n_pids"}
_COERCERS = {
    "k": int, "seed": int, "grid": int, "port": int,
    "phase_size": int, "workers": int, "ridge_lambda": float,
    "scale_c": float, "scale_d": float, "crop_box": int,
    "n_clips": int, "n_pids": int,
}

DOMAIN_ERRORS = (
    pipeline.PipelineError, RatingFormatError, DegenerateStudyError, StorageError,
    MediaError, CompositeFormatError, RankDeficiencyError, FoldEvaluationError,
    UndefinedCorrelationError, ValueError, OSError,
)


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return json.loads(text)
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    raise ValueError(f"config must be .json or .toml, got {path.name}")


def resolve_options(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    config = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in config.items():
        dest = CONFIG_ALIASES.get(key, str(key).replace("-", "_"))
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, _COERCERS.get(dest, str)(value))
    for dest, value in BUILTIN_DEFAULTS.items():
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, value)
    return args


def _require(args: argparse.Namespace, parser: argparse.ArgumentParser, *dests: str) -> None:
    for dest in dests:
        if getattr(args, dest) is None:
            parser.error(f"--{dest.replace('_', '-')} is required "
                         f"(flag or config file entry)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="talkerqa",
        description="Quality assessment toolkit for AI-generated talking-head video.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON or TOML file supplying default flag values")

    p_extract = sub.add_parser("extract", help="build composite files from a clip dataset")
    p_extract.add_argument("--dataset", help="directory of clip folders with manifests")
    p_extract.add_argument("--keypoints", help="directory of per-clip keypoint JSON files")
    p_extract.add_argument("--out", help="output directory for .fscd composites")
    p_extract.add_argument("--workers", type=int, help="parallel extraction workers")
    p_extract.add_argument("--scale-c", dest="scale_c", type=float,
                           help="confidence plane normalization divisor")
    p_extract.add_argument("--scale-d", dest="scale_d", type=float,
                           help="distance plane normalization divisor")
    p_extract.add_argument("--crop-box", dest="crop_box", type=int,
                           help="mouth crop side length in pixels")
    add_common(p_extract)

    p_ingest = sub.add_parser("ingest", help="process a ratings JSONL into a MOS CSV")
    p_ingest.add_argument("--ratings", help="ratings JSONL file")
    p_ingest.add_argument("--taxonomy", help="distortion taxonomy JSON (default built-in)")
    p_ingest.add_argument("--out", help="output directory for mos.csv + screening.json")
    add_common(p_ingest)

    for name, help_text in (("train", "cross-validate and fit the final model"),
                            ("eval", "cross-validate only")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--composites", help="directory of .fscd files (from extract)")
        p.add_argument("--mos", help="MOS CSV (from ingest or a ground-truth table)")
        p.add_argument("--out", help="output directory for report.json (+ model.json)")
        p.add_argument("--k", type=int, help="number of folds")
        p.add_argument("--seed", type=int, help="fold-shuffle seed")
        p.add_argument("--lambda", dest="ridge_lambda", type=float, help="ridge strength")
        p.add_argument("--grid", type=int, help="pooling grid size g (g x g cells)")
        add_common(p)

    p_serve = sub.add_parser("serve", help="run the study HTTP service")
    p_serve.add_argument("--dataset", help="directory of clip folders with manifests")
    p_serve.add_argument("--ratings", help="ratings JSONL store path")
    p_serve.add_argument("--taxonomy", help="distortion taxonomy JSON (default built-in)")
    p_serve.add_argument("--port", type=int, help="listen port")
    p_serve.add_argument("--host", help="bind address (default 127.0.0.1)")
    p_serve.add_argument("--phase-size", dest="phase_size", type=int,
                         help="clips per study phase")
    p_serve.add_argument("--seed", type=int, help="study seed for session ordering")
    add_common(p_serve)

    p_demo = sub.add_parser("demo", help="generate a synthetic study dataset")
    p_demo.add_argument("--out", help="output directory")
    p_demo.add_argument("--seed", type=int, help="generator seed")
    p_demo.add_argument("--clips", dest="n_clips", type=int, help="number of clips")
    p_demo.add_argument("--pids", dest="n_pids", type=int, help="number of distinct pids")
    add_common(p_demo)

    return parser


def cmd_extract(args, parser) -> int:
    _require(args, parser, "dataset", "keypoints", "out")
    result = pipeline.extract_dataset(args.dataset, args.keypoints, args.out,
                                      workers=args.workers, scale_c=args.scale_c,
                                      scale_d=args.scale_d, crop_box=args.crop_box)
    print(f"extracted {len(result.succeeded)} clip(s) to {result.out_dir}")
    for clip_id, message in sorted(result.failed.items()):
        print(f"failed {clip_id}: {message}", file=sys.stderr)
    print(f"log: {result.log_path}")
    return 0


def cmd_ingest(args, parser) -> int:
    _require(args, parser, "ratings", "out")
    taxonomy = DistortionTaxonomy.from_json(args.taxonomy) if args.taxonomy \
        else DistortionTaxonomy()
    records = load_ratings(args.ratings, taxonomy)
    result = process_ratings(records, taxonomy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_mos_csv(result.entries, out / "mos.csv", taxonomy)
    screening = {
        "subjects": [
            {"subject_id": s.subject_id, "retained": s.retained,
             "p_count": s.p_count, "q_count": s.q_count, "n_ratings": s.n_ratings}
            for s in result.screening.subjects
        ],
        "degenerate_subjects": list(result.degenerate_subjects),
        "dropped_clips": list(result.dropped_clips),
    }
    (out / "screening.json").write_text(json.dumps(screening, indent=2) + "\n")
    rejected = sorted(result.screening.rejected_ids())
    print(f"wrote {out / 'mos.csv'} ({len(result.entries)} clips)")
    print(f"rejected subjects: {rejected if rejected else 'none'}")
    return 0


def cmd_train(args, parser) -> int:
    _require(args, parser, "composites", "mos", "out")
    model_path, report_path = pipeline.train_and_report(
        args.composites, args.mos, args.out, k=args.k, seed=args.seed,
        ridge_lambda=args.ridge_lambda, grid=args.grid)
    report = json.loads(report_path.read_text())
    print(f"model:  {model_path}")
    print(f"report: {report_path}")
    print(f"mean:   {report['mean']}")
    return 0


def cmd_eval(args, parser) -> int:
    _require(args, parser, "composites", "mos", "out")
    report_path = pipeline.evaluate_and_report(
        args.composites, args.mos, args.out, k=args.k, seed=args.seed,
        ridge_lambda=args.ridge_lambda, grid=args.grid)
    report = json.loads(report_path.read_text())
    print(f"report: {report_path}")
    print(f"mean:   {report['mean']}")
    return 0


def cmd_serve(args, parser) -> int:
    _require(args, parser, "dataset", "ratings")
    import uvicorn

    from .service import create_app

    taxonomy = DistortionTaxonomy.from_json(args.taxonomy) if args.taxonomy \
        else DistortionTaxonomy()
    app = create_app(args.dataset, args.ratings, phase_size=args.phase_size,
                     seed=args.seed, taxonomy=taxonomy)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_demo(args, parser) -> int:
    _require(args, parser, "out")
    paths = demo.generate_study(args.out, n_clips=args.n_clips, n_pids=args.n_pids,
                                seed=args.seed)
    print(f"dataset:   {paths.dataset_dir}")
    print(f"keypoints: {paths.keypoints_dir}")
    print(f"mos csv:   {paths.mos_csv}")
    return 0


COMMANDS = {
    "extract": cmd_extract,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "serve": cmd_serve,
    "demo": cmd_demo,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve_options(args)
        return COMMANDS[args.command](args, parser)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
