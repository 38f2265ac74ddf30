"""Batch adapter command line.

    faceprep --in <video-or-dir> --out <dir> [--detector <name>] [--dlib-model <path>]

Exit codes: 0 all videos converted, 1 some failed, 2 usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .adapter import process_batch
from .detect import available_detectors, get_detector

log = logging.getLogger("faceprep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faceprep", description=__doc__)
    parser.add_argument("--in", dest="in_path", type=Path, required=True,
                        help="video file or directory of videos")
    parser.add_argument("--out", dest="out_dir", type=Path, required=True)
    parser.add_argument(
        "--detector",
        default="auto",
        help=f"backend name, one of auto, {', '.join(available_detectors())}",
    )
    parser.add_argument("--dlib-model", help="shape predictor path for the dlib backend")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.in_path.exists():
        log.error("input %s does not exist", args.in_path)
        return 2
    try:
        detector = get_detector(args.detector, args.dlib_model)
    except (ValueError, RuntimeError, ImportError) as exc:
        log.error("%s", exc)
        return 2
    outputs = process_batch(args.in_path, args.out_dir, detector=detector)
    failed = [o for o in outputs if not o.ok]
    for out in failed:
        log.error("%s failed: %s", out.video_id, out.reason)
    log.info("%d ok, %d failed", len(outputs) - len(failed), len(failed))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
