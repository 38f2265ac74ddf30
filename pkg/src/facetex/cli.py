"""Command-line front-end.

Subcommands mirror the pipeline stages: ``extract`` features from a
manifest, ``train`` one technique model, ``classify`` feature files with
one or three models, ``evaluate`` verdicts against the manifest, and
``ablate``/``grid`` for windowing and configuration sweeps.

Exit codes: 0 success, 1 partial per-video failures, 2 usage or
configuration errors. The worker count comes from --workers or the
FACETEX_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import RunConfig
from .errors import FacetexError
from .ingest import load_manifest
from .metrics import svg_bar_chart
from .svm import load_model, save_model

log = logging.getLogger("facetex")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON or TOML run config")
    parser.add_argument("--area", choices=("F", "T", "B"))
    parser.add_argument("--mode", choices=("direct", "inverse", "bidirectional"))
    parser.add_argument("--descriptor", choices=("ldp-top", "lbp-top"))
    parser.add_argument("--window-d", type=float, dest="window_d", metavar="SECONDS")
    parser.add_argument("--window-s", type=float, dest="window_s", metavar="SECONDS")
    sliding = parser.add_mutually_exclusive_group()
    sliding.add_argument("--sliding", dest="sliding", action="store_true", default=None)
    sliding.add_argument("--no-sliding", dest="sliding", action="store_false")
    parser.add_argument("--smooth-window", type=int)
    parser.add_argument("--smooth-order", type=int)
    parser.add_argument("--svm-c", type=float)
    parser.add_argument("--svm-tol", type=float)
    parser.add_argument("--svm-max-iter", type=int)
    parser.add_argument("--seed", type=int)


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return cfg.with_overrides(
        area=args.area,
        mode=args.mode,
        descriptor=args.descriptor,
        window_d_seconds=args.window_d,
        window_s_seconds=args.window_s,
        window_sliding=args.sliding,
        smooth_window=args.smooth_window,
        smooth_order=args.smooth_order,
        svm_c=args.svm_c,
        svm_tol=args.svm_tol,
        svm_max_iter=args.svm_max_iter,
        seed=args.seed,
    )


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    manifest = load_manifest(args.manifest)
    report = pipeline.extract_features(
        manifest, cfg, args.out, workers=args.workers, dump_motion=args.dump_motion
    )
    log.info("extracted %d videos into %s", len(report.written), args.out)
    if report.failures:
        for vid, err in report.failures.items():
            log.error("failed %s: %s", vid, err)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    features = pipeline.load_feature_dir(args.features)
    model = pipeline.train_technique(features, args.technique, cfg)
    save_model(model, args.out)
    stats = model.train_stats
    log.info(
        "trained %s model: %d iterations, converged=%s, kkt=%.2e",
        args.technique,
        stats.iterations,
        stats.converged,
        stats.kkt_violation,
    )
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    models = [load_model(p) for p in args.model]
    features = pipeline.load_feature_dir(args.features)
    split = None if args.split == "all" else args.split
    verdicts = pipeline.classify_videos(models, features, split=split)
    pipeline.write_verdicts(
        args.out,
        verdicts,
        config=cfg.to_dict(),
        model_refs=[str(p) for p in args.model],
    )
    log.info("wrote %d verdicts to %s", len(verdicts), args.out)
    return EXIT_OK


def _write_report_csv(report: dict, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key in ("n_videos", "accuracy", "fpr", "fnr", "auc", "window_auc"):
            if key in report and not isinstance(report[key], dict):
                writer.writerow([key, report[key]])
        confusion = report.get("attribution_confusion")
        if confusion:
            writer.writerow([])
            writer.writerow(["confusion (row=true, col=attributed)"] + list(confusion["techniques"]))
            for name, row in zip(confusion["techniques"], confusion["row_percent"]):
                writer.writerow([name] + (["-"] * 3 if row is None else [f"{v:.2f}" for v in row]))


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    manifest = load_manifest(args.manifest)
    meta, records = pipeline.read_verdicts(args.verdicts)
    report = pipeline.evaluate_verdicts(
        records,
        manifest,
        window_level_auc=args.window_auc,
        unconditioned_confusion=args.unconditioned_confusion,
    )
    # prefer the config the verdicts were produced with
    report["config"] = meta.get("config") or cfg.to_dict()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    _write_report_csv(report, out_dir / "report.csv")
    if args.svg:
        values = {
            "rate": [
                report["accuracy"],
                report["fpr"] if report["fpr"] is not None else 0.0,
                report["fnr"] if report["fnr"] is not None else 0.0,
            ]
        }
        svg_bar_chart(
            out_dir / "report.svg",
            ["accuracy", "fpr", "fnr"],
            values,
            title="classification summary",
            y_max=1.0,
        )
    log.info("report written to %s", out_dir)
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = pipeline.sliding_ablation(
        manifest,
        cfg,
        out_dir / "work",
        areas=args.areas.split(",") if args.areas else None,
        modes=args.modes.split(",") if args.modes else None,
        techniques=args.techniques.split(",") if args.techniques else None,
    )
    payload = {"rows": rows, "config": cfg.to_dict()}
    (out_dir / "ablation.json").write_text(json.dumps(payload, indent=2) + "\n")
    with open(out_dir / "ablation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        techniques = sorted(rows[0]["loss"]) if rows else []
        writer.writerow(["area", "mode"] + techniques + ["average"])
        for row in rows:
            writer.writerow(
                [row["area"], row["mode"]]
                + [f"{row['loss'][t]:+.4f}" for t in techniques]
                + [f"{row['average_loss']:+.4f}"]
            )
    log.info("ablation written to %s", out_dir)
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = pipeline.experiment_grid(
        manifest,
        cfg,
        out_dir / "work",
        areas=args.areas.split(",") if args.areas else None,
        modes=args.modes.split(",") if args.modes else None,
        techniques=args.techniques.split(",") if args.techniques else None,
    )
    payload = {"rows": rows, "config": cfg.to_dict()}
    (out_dir / "grid.json").write_text(json.dumps(payload, indent=2) + "\n")
    with open(out_dir / "grid.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        techniques = sorted(rows[0]["accuracy"]) if rows else []
        writer.writerow(
            ["area", "mode"]
            + [f"acc_{t}" for t in techniques]
            + ["acc_avg"]
            + [f"auc_{t}" for t in techniques]
            + ["auc_avg"]
        )
        for row in rows:
            writer.writerow(
                [row["area"], row["mode"]]
                + [f"{row['accuracy'][t]:.4f}" for t in techniques]
                + [f"{row['average_accuracy']:.4f}"]
                + [
                    "-" if row["auc"][t] is None else f"{row['auc'][t]:.4f}"
                    for t in techniques
                ]
                + ["-" if row["average_auc"] is None else f"{row['average_auc']:.4f}"]
            )
    log.info("grid written to %s", out_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facetex",
        description="Detect manipulated face videos with spatio-temporal texture descriptors.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract window features for a manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="feature directory")
    p.add_argument("--workers", type=int, help=f"default ${pipeline.WORKERS_ENV} or 1")
    p.add_argument(
        "--dump-motion",
        action="store_true",
        dest="dump_motion",
        help="also write per-video raw/smoothed motion CSVs",
    )
    _add_config_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one technique classifier")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--technique", choices=("DF", "F2F", "FSW"), required=True)
    p.add_argument("--out", type=Path, required=True, help="model JSON path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify feature files into verdicts")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument(
        "--model",
        type=Path,
        action="append",
        required=True,
        help="model file; pass three times for fused attribution",
    )
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out", type=Path, required=True, help="verdicts JSONL path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score verdicts against the manifest")
    p.add_argument("--verdicts", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="report directory")
    p.add_argument("--svg", action="store_true", help="also write an SVG chart")
    p.add_argument("--window-auc", action="store_true", dest="window_auc")
    p.add_argument(
        "--unconditioned-confusion", action="store_true", dest="unconditioned_confusion"
    )
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sliding vs non-sliding accuracy loss")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--areas", help="comma list, default F,T,B")
    p.add_argument("--modes", help="comma list, default all three")
    p.add_argument("--techniques", help="comma list, default DF,F2F,FSW")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("grid", help="accuracy/AUC over the (area, mode) grid")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--areas", help="comma list, default F,T,B")
    p.add_argument("--modes", help="comma list, default all three")
    p.add_argument("--techniques", help="comma list, default DF,F2F,FSW")
    _add_config_flags(p)
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FacetexError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
