"""Command-line front door: analyze, serve, eval, fixture, model-card."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import load_config
from .errors import ProblemError, ValidationProblem
from .fixtures import FixtureSpec, generate_fixture
from .metrics import evaluate_manifest, format_metrics_table, load_manifest, metrics_table_to_csv
from .modelcard import render_model_card
from .pipeline import analyze_source, build_backend, reference_components, to_url
from .service import canonical_cache_key, run_service
from .storage import FilesystemObjectStore
from .types import canonical_json_bytes
from .version import SERVICE_VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_USAGE = 2


def _emit_problem(exc: ProblemError) -> int:
    sys.stderr.write(exc.problem.to_json_bytes().decode() + "\n")
    return EXIT_USAGE if exc.problem.status < 500 else EXIT_PIPELINE


def _pipeline_setup(args):
    config = load_config(args.config) if getattr(args, "config", None) else load_config()
    backends = tuple(build_backend(spec) for spec in (args.backend or config.backends))
    return config, reference_components(backends=backends)


def cmd_analyze(args) -> int:
    config, components = _pipeline_setup(args)
    url = to_url(args.source)
    report_id = canonical_cache_key(url, SERVICE_VERSION)

    gallery_store = None
    if args.gallery_dir:
        gallery_store = FilesystemObjectStore(args.gallery_dir)

    def on_series(series):
        if args.distances:
            Path(args.distances).write_text(series.to_csv())

    report, _media = analyze_source(
        args.source,
        config.pipeline,
        components,
        proxy=config.proxy,
        max_bytes=config.max_download_bytes,
        shot_workers=args.workers,
        report_id=report_id,
        gallery_store=gallery_store,
        on_series=on_series,
    )
    sys.stdout.write(report.to_json_bytes().decode() + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    config = load_config(args.config)
    run_service(config)
    return EXIT_OK


def cmd_eval(args) -> int:
    config, components = _pipeline_setup(args)
    manifest = load_manifest(args.manifest)

    def analyze(source: str):
        report, _ = analyze_source(
            source, config.pipeline, components,
            proxy=config.proxy, shot_workers=args.workers)
        return report

    table = evaluate_manifest(manifest, analyze, threshold=args.threshold)
    sys.stdout.write(format_metrics_table(table) + "\n")
    if args.csv:
        Path(args.csv).write_text(metrics_table_to_csv(table))
    return EXIT_OK


def cmd_fixture(args) -> int:
    raw = Path(args.spec).read_text()
    if args.spec.endswith((".yaml", ".yml")):
        import yaml

        obj = yaml.safe_load(raw)
    else:
        obj = json.loads(raw)
    if not isinstance(obj, dict):
        raise ValidationProblem(f"fixture spec {args.spec} must be a mapping")
    spec = FixtureSpec.from_dict(obj)
    fixture = generate_fixture(spec, args.out, pipeline_version=str(SERVICE_VERSION))
    gt_path = Path(args.out).with_suffix(".json")
    gt_path.write_bytes(canonical_json_bytes(fixture.ground_truth_obj()))
    sys.stderr.write(f"wrote {args.out} and {gt_path}\n")
    return EXIT_OK


def cmd_model_card(args) -> int:
    extra = None
    if args.metrics:
        import csv as csv_mod

        from .metrics import MetricsRow

        with open(args.metrics, newline="") as fh:
            extra = [
                MetricsRow(
                    scope=row["scope"],
                    n_real=int(row["n_real"]),
                    n_fake=int(row["n_fake"]),
                    n_failed=int(row.get("n_failed", 0) or 0),
                    balanced_accuracy=float(row["balanced_accuracy"]) if row["balanced_accuracy"] else None,
                    auc=float(row["auc"]) if row["auc"] else None,
                )
                for row in csv_mod.DictReader(fh)
            ]
    card = render_model_card(version=str(SERVICE_VERSION), extra_metrics=extra)
    if args.out:
        Path(args.out).write_text(card)
    else:
        sys.stdout.write(card)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfdetect",
        description="DeepFake detection pipeline: offline analysis, serving, "
                    "evaluation, fixtures, and model card emission.",
    )
    parser.add_argument("--version", action="version", version=str(SERVICE_VERSION))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the pipeline on a path or URL")
    p.add_argument("source", help="media path or URL")
    p.add_argument("--config", help="service config file (pipeline section applies)")
    p.add_argument("--backend", action="append",
                   help="scorer backend spec (constant:P | lookup:FILE | remote:URL); repeatable")
    p.add_argument("--workers", type=int, default=1, help="shot-parallel workers")
    p.add_argument("--gallery-dir", help="write shot gallery PNGs under this directory")
    p.add_argument("--distances", help="write the segmentation distance series CSV here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True, help="service config file (YAML or JSON)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="evaluate a dataset manifest")
    p.add_argument("manifest", help="CSV manifest: media,label[,manipulation]")
    p.add_argument("--config", help="service config file")
    p.add_argument("--backend", action="append", help="scorer backend spec; repeatable")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="decision threshold for balanced accuracy")
    p.add_argument("--workers", type=int, default=1, help="shot-parallel workers")
    p.add_argument("--csv", help="also write the metrics table as CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fixture", help="generate a ground-truth fixture video")
    p.add_argument("spec", help="fixture spec file (JSON or YAML)")
    p.add_argument("--out", required=True, help="output video path (.avi)")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("model-card", help="emit the service model card (markdown)")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--metrics", help="metrics CSV to merge into the evaluation section")
    p.set_defaults(func=cmd_model_card)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemError as exc:
        return _emit_problem(exc)
    except FileNotFoundError as exc:
        return _emit_problem(ValidationProblem(f"no such file: {exc.filename}"))
    except KeyboardInterrupt:
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
