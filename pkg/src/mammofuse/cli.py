"""Command-line entry points: phantoms, refcdf, extract, run, report."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .phantoms import PhantomSpec, generate_phantoms
from .pipeline import PipelineError, cmd_extract, cmd_refcdf, cmd_report, cmd_run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mammofuse",
        description="Radiomics extraction and calibrated ensemble fusion for screening views.",
    )
    parser.add_argument("--config", type=Path, help="key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--jobs", type=int, default=1, help="extraction worker threads")
    parser.add_argument("--rad-only", action="store_true", help="score the radiomics branch only")
    parser.add_argument("--dl-only", action="store_true", help="score the DL branch only")
    parser.add_argument(
        "--allow-missing-dl",
        action="store_true",
        help="drop patients with missing DL scores instead of aborting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantoms", help="generate a synthetic corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--count", type=int, default=60)
    p.add_argument("--positive-fraction", type=float, default=0.2)
    p.add_argument("--years", default="2016,2017,2018", help="comma-separated years")
    p.add_argument("--lesion-contrast", type=float, default=PhantomSpec.lesion_contrast)
    p.add_argument("--texture-sigma", type=float, default=PhantomSpec.texture_sigma)
    p.add_argument("--image-size", type=int, default=PhantomSpec.image_size)

    p = sub.add_parser("refcdf", help="estimate and persist the reference CDF")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("extract", help="preprocess, segment and featurize all views")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--reference-cdf", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="feature cache CSV path")
    p.add_argument("--label-maps", type=Path, help="directory for debug ROI label maps")

    p = sub.add_parser("run", help="leave-one-year-out scoring and metrics")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--cache", type=Path, help="feature cache CSV (required unless --dl-only)")
    p.add_argument("--dl-scores", type=Path, help="DL scores CSV (required unless --rad-only)")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("report", help="render a metrics JSON as a text table")
    p.add_argument("--metrics", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.rad_only and args.dl_only:
        print("--rad-only and --dl-only are mutually exclusive", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config, seed=args.seed)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "phantoms":
            spec = PhantomSpec(
                count=args.count,
                positive_fraction=args.positive_fraction,
                years=tuple(int(y) for y in args.years.split(",")),
                lesion_contrast=args.lesion_contrast,
                texture_sigma=args.texture_sigma,
                image_size=args.image_size,
                seed=config.seed,
            )
            manifest_path, dl_path = generate_phantoms(spec, args.out)
            print(f"wrote {manifest_path} and {dl_path}")
        elif args.command == "refcdf":
            out = cmd_refcdf(args.manifest, args.out, config)
            print(f"wrote {out}")
        elif args.command == "extract":
            cache, exceptions, flags = cmd_extract(
                args.manifest,
                args.reference_cdf,
                args.out,
                config,
                jobs=args.jobs,
                label_map_dir=args.label_maps,
            )
            print(f"wrote {cache} ({exceptions.name}, {flags.name})")
        elif args.command == "run":
            rad = not args.dl_only
            dl = not args.rad_only
            if rad and args.cache is None:
                print("run: --cache is required unless --dl-only", file=sys.stderr)
                return 2
            if dl and args.dl_scores is None:
                print("run: --dl-scores is required unless --rad-only", file=sys.stderr)
                return 2
            cmd_run(
                args.manifest,
                args.cache,
                args.dl_scores,
                args.out,
                config,
                rad=rad,
                dl=dl,
                allow_missing_dl=args.allow_missing_dl,
            )
            print(f"wrote {Path(args.out) / 'predictions.csv'} and metrics.json")
        elif args.command == "report":
            text, code = cmd_report(args.metrics)
            print(text)
            return code
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
