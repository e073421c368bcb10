"""Command line for batch embedding extraction."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backbone import DEFAULT_SEED, Backbone
from .extract import DEFAULT_FRAMES, ExtractionJob
from .media import DEFAULT_RESOLUTION


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mediaextract", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("extract", help="embed a directory of media into an MRF1 file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--images", help="directory of image files")
    group.add_argument("--videos", help="directory of video files")
    p.add_argument("--frames", type=int, default=DEFAULT_FRAMES, help="frames per video")
    p.add_argument("--out", required=True, help="output MRF1 path")
    p.add_argument(
        "--resolution", type=int, default=DEFAULT_RESOLUTION, help="square input resolution"
    )
    p.add_argument("--weights", help="npz file of folded backbone weights")
    p.add_argument(
        "--seed", type=int, default=DEFAULT_SEED,
        help="weight seed when no --weights file is given",
    )
    return parser


def run(argv: list[str]) -> int:
    args = _build_parser().parse_args(argv)
    kind = "image" if args.images else "video"
    directory = Path(args.images or args.videos)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return 2
    backbone = Backbone(weights_path=args.weights, seed=args.seed)
    job = ExtractionJob.for_directory(
        directory,
        kind,
        args.out,
        n_frames=args.frames,
        resolution=args.resolution,
        backbone=backbone,
    )
    if not job.inputs:
        print(f"error: no {kind} files found in {directory}", file=sys.stderr)
        return 2
    print(f"backbone: {backbone.identifier}  ({len(job.inputs)} files)")

    def progress(path, record):
        print(f"  {path.name}: {record.frames.shape[0]} frame(s), dim {record.dim}")

    report = job.run(progress=progress)
    print(f"wrote {len(report.written)} records -> {args.out}")
    if report.errors:
        print(f"{len(report.errors)} file(s) failed:", file=sys.stderr)
        for name, message in report.errors:
            print(f"  {name}: {message}", file=sys.stderr)
        return 1 if not report.written else 0
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
