"""Command-line interface.

Exit codes: 0 success, 2 I/O or parse failure, 3 invalid arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .core import HDR_PARAMS, LOG_PARAMS, FsitmConfig, combine_with_tmqi, feature_maps
from .errors import (
    BankTooLargeForImage,
    DimensionMismatch,
    FsitmError,
    ImageFormatError,
    InvalidImage,
    InvalidParameter,
    ManifestError,
    AllZeroPlane,
)
from .evaluation import RankManifest, evaluate
from .fixtures import SCENE_KINDS, TMO_NAMES, SyntheticScene, degrade, render_scene, tone_map
from .image_io import Channel, load_hdr, load_ldr, log_compress, save_hdr, save_ldr, write_pfm
from .loggabor import FilterParams, lwmpa

EXIT_OK = 0
EXIT_IO = 2
EXIT_VALIDATION = 3

CHANNEL_CHOICES = ("R", "G", "B", "all")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _unit_interval(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not 0.0 <= v <= 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in [0, 1], got {v}")
        return v
    return parse


def _triplet(base: FilterParams):
    def parse(text):
        parts = text.split(",")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected nscale,wlen,mult, got {text!r}")
        try:
            nscale, wlen, mult = int(parts[0]), float(parts[1]), float(parts[2])
            return FilterParams(nscale, wlen, mult, base.norient, base.sigma_on_f, base.d_theta_sigma)
        except (ValueError, InvalidParameter) as exc:
            raise argparse.ArgumentTypeError(f"bad filter parameters {text!r}: {exc}") from None
    return parse


def _channel(text):
    up = text.strip()
    if up.lower() == "all":
        return "all"
    if up.upper() in ("R", "G", "B"):
        return up.upper()
    raise argparse.ArgumentTypeError(f"channel must be one of R, G, B, all; got {text!r}")


def _add_scoring_flags(p, allow_all=True):
    p.add_argument("--channel", type=_channel, default="G",
                   help="colour channel to score: R, G, B" + (" or all" if allow_all else "") + " (default G)")
    p.add_argument("--alpha", type=_unit_interval("alpha"), default=0.5,
                   help="weight of the HDR reference against the log-HDR reference, in [0, 1] (default 0.5)")
    p.add_argument("--hdr-params", type=_triplet(HDR_PARAMS), default=HDR_PARAMS, metavar="NSCALE,WLEN,MULT",
                   help="filter scales, smallest wavelength and scale factor for the HDR image (default 2,8,8)")
    p.add_argument("--log-params", type=_triplet(LOG_PARAMS), default=LOG_PARAMS, metavar="NSCALE,WLEN,MULT",
                   help="filter scales, smallest wavelength and scale factor for log-HDR and LDR (default 2,2,2)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsitm", description="Feature similarity index for tone-mapped images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score one LDR image against its HDR source")
    p.add_argument("--hdr", required=True, help="HDR image (.hdr or .pfm)")
    p.add_argument("--ldr", required=True, help="tone-mapped image (8-bit .png)")
    _add_scoring_flags(p)
    p.add_argument("--tmqi", type=_unit_interval("tmqi"), default=None,
                   help="externally computed TMQI score; also prints the combined FSITM_TMQI index")
    p.add_argument("--format", choices=("text", "json"), default="text", help="output format (default text)")
    p.add_argument("--dump-phase", metavar="PFM", default=None,
                   help="also write the LDR channel's phase map to this PFM file")

    p = sub.add_parser("batch", help="score every HDR/LDR pair listed in a CSV manifest")
    p.add_argument("--manifest", required=True, help="CSV with hdr_path,ldr_path[,rank] columns")
    _add_scoring_flags(p)
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("eval", help="rank-correlate FSITM with subjective ranks (SRCC, KRCC)")
    p.add_argument("--manifest", required=True, help="CSV with hdr_path,ldr_path,rank columns")
    _add_scoring_flags(p, allow_all=False)
    p.add_argument("--format", choices=("json", "text"), default="json", help="report format (default json)")
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.add_argument("--kendall", choices=("a", "b"), default="a",
                   help="Kendall variant: a (no tie correction, default) or b")

    p = sub.add_parser("fixtures", help="write synthetic HDR scenes, degraded LDRs and a rank manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scenes", type=int, default=3, help="number of scenes (default 3)")
    p.add_argument("--kind", choices=SCENE_KINDS, default="mixed_grid", help="scene kind (default mixed_grid)")
    p.add_argument("--size", type=int, default=128, help="scene width and height in pixels (default 128)")
    p.add_argument("--dynamic-range", type=float, default=1e4, help="max/min radiance ratio (default 1e4)")
    p.add_argument("--noise", type=float, default=0.03, help="log-radiance texture amplitude (default 0.03)")
    p.add_argument("--seed", type=int, default=0, help="seed of the first scene (default 0)")
    p.add_argument("--tmo", default="log_norm",
                   help=f"tone-mapping operator: {', '.join(TMO_NAMES)}; gamma:G sets the exponent (default log_norm)")
    p.add_argument("--levels", type=int, default=6, help="posterization levels per scene, 0..N-1 (default 6)")
    p.add_argument("--hdr-format", choices=("pfm", "hdr"), default="pfm", help="HDR file format (default pfm)")

    p = sub.add_parser("dump-phase", help="write the phase map of one image channel as PFM")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--hdr", help="HDR image; filtered with --hdr-params, or --log-params with --log")
    src.add_argument("--ldr", help="LDR image; filtered with --log-params")
    p.add_argument("--log", action="store_true", help="log-compress the HDR image first")
    _add_scoring_flags(p, allow_all=False)
    p.add_argument("--dump-phase", metavar="PFM", required=True, help="output PFM path")
    return parser


def _validate(args):
    if args.command in ("eval", "dump-phase") and args.channel == "all":
        raise UsageError(f"--channel all is not supported by {args.command}")
    if args.command == "score" and args.dump_phase and args.channel == "all":
        raise UsageError("--dump-phase needs a single channel")
    if args.command == "dump-phase" and args.log and not args.hdr:
        raise UsageError("--log only applies to --hdr")
    if args.command == "fixtures":
        if args.scenes < 1:
            raise UsageError("--scenes must be >= 1")
        if not 3 <= args.levels <= 8:
            raise UsageError("--levels must lie in 3..8")
        if args.tmo.split(":", 1)[0] not in TMO_NAMES:
            raise UsageError(f"unknown --tmo {args.tmo!r}")
        try:
            SyntheticScene(args.kind, args.size, args.size, args.dynamic_range, args.seed, args.noise)
        except InvalidParameter as exc:
            raise UsageError(str(exc)) from None
    if hasattr(args, "alpha"):
        return FsitmConfig(args.alpha, args.hdr_params, args.log_params)
    return None


def _channels(name):
    return list(Channel) if name == "all" else [Channel.parse(name)]


def _fmt(v):
    return f"{v:.4f}"


def cmd_score(args, cfg, out):
    hdr = load_hdr(args.hdr)
    ldr = load_ldr(args.ldr)
    rows = []
    for c in _channels(args.channel):
        maps = feature_maps(hdr, ldr, c, cfg)
        value = maps.score(cfg.alpha)
        row = {"channel": c.name, "fsitm": value}
        if args.tmqi is not None:
            row["tmqi"] = args.tmqi
            row["combined"] = combine_with_tmqi(value, args.tmqi)
        rows.append(row)
    if args.dump_phase:
        write_pfm(args.dump_phase, lwmpa(ldr.channel(args.channel), cfg.log_params))
    mean = sum(r["fsitm"] for r in rows) / len(rows) if len(rows) > 1 else None

    if args.format == "json":
        doc = {
            "hdr": args.hdr,
            "ldr": args.ldr,
            "alpha": cfg.alpha,
            "scores": [{k: (round(v, 4) if isinstance(v, float) else v) for k, v in r.items()} for r in rows],
        }
        if mean is not None:
            doc["mean_of_channels_non_normative"] = round(mean, 4)
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    for r in rows:
        out.write(f"FSITM^{r['channel']} = {_fmt(r['fsitm'])}\n")
        if "combined" in r:
            out.write(f"FSITM^{r['channel']}_TMQI = {_fmt(r['combined'])}\n")
    if mean is not None:
        out.write(f"mean over R,G,B (non-normative) = {_fmt(mean)}\n")


def _read_pairs(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or not {"hdr_path", "ldr_path"} <= {f.strip() for f in reader.fieldnames}:
        raise ManifestError("manifest must have hdr_path and ldr_path columns")
    pairs = [(r["hdr_path"].strip(), r["ldr_path"].strip()) for r in reader
             if (r.get("hdr_path") or "").strip()]
    if not pairs:
        raise ManifestError("manifest lists no image pairs")
    return pairs


def cmd_batch(args, cfg, out):
    pairs = _read_pairs(args.manifest)
    base = Path(args.manifest).parent
    resolve = lambda p: Path(p) if Path(p).is_absolute() else base / p  # noqa: E731
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hdr_path", "ldr_path", "channel", "fsitm"])
    hdr_cache = {}
    for hdr_path, ldr_path in pairs:
        if hdr_path not in hdr_cache:
            hdr_cache = {hdr_path: load_hdr(resolve(hdr_path))}
        hdr = hdr_cache[hdr_path]
        ldr = load_ldr(resolve(ldr_path))
        for c in _channels(args.channel):
            w.writerow([hdr_path, ldr_path, c.name, _fmt(feature_maps(hdr, ldr, c, cfg).score(cfg.alpha))])
    _emit(buf.getvalue(), args.out, out)


def cmd_eval(args, cfg, out):
    from .core import fsitm

    manifest = RankManifest.from_csv(args.manifest)
    report = evaluate(manifest, lambda h, l, c: fsitm(h, l, c, cfg), args.channel,
                      kendall_variant=args.kendall, channel_name=args.channel)
    report.metric = f"fsitm(alpha={cfg.alpha:g})"
    text = report.to_json() if args.format == "json" else report.to_text()
    _emit(text, args.out, out)


def cmd_fixtures(args, out):
    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    manifest_rows = []
    for i in range(args.scenes):
        scene = SyntheticScene(args.kind, args.size, args.size, args.dynamic_range, args.seed + i, args.noise)
        hdr = render_scene(scene)
        hdr_name = f"scene{i:02d}.{args.hdr_format}"
        save_hdr(root / hdr_name, hdr)
        base = tone_map(hdr, args.tmo)
        for level in range(args.levels):
            ldr_name = f"scene{i:02d}_level{level}.png"
            save_ldr(root / ldr_name, degrade(base, level))
            manifest_rows.append((hdr_name, ldr_name, level + 1))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hdr_path", "ldr_path", "rank"])
    w.writerows(manifest_rows)
    (root / "manifest.csv").write_text(buf.getvalue(), encoding="utf-8")
    out.write(f"wrote {args.scenes} scenes x {args.levels} levels and manifest.csv to {root}\n")


def cmd_dump_phase(args, cfg, out):
    if args.hdr:
        img = load_hdr(args.hdr)
        if args.log:
            img = log_compress(img)
        params = cfg.log_params if args.log else cfg.hdr_params
    else:
        img = load_ldr(args.ldr)
        params = cfg.log_params
    ph = lwmpa(img.channel(args.channel), params)
    write_pfm(args.dump_phase, ph)
    out.write(f"wrote {ph.shape[1]}x{ph.shape[0]} phase map to {args.dump_phase}\n")


def _emit(text, path, out):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        cfg = _validate(args)
    except (UsageError, InvalidParameter) as exc:
        print(f"fsitm: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.command == "score":
            cmd_score(args, cfg, out)
        elif args.command == "batch":
            cmd_batch(args, cfg, out)
        elif args.command == "eval":
            cmd_eval(args, cfg, out)
        elif args.command == "fixtures":
            cmd_fixtures(args, out)
        else:
            cmd_dump_phase(args, cfg, out)
    except (ImageFormatError, ManifestError, InvalidImage, AllZeroPlane, OSError) as exc:
        print(f"fsitm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DimensionMismatch, BankTooLargeForImage, FsitmError, ValueError) as exc:
        print(f"fsitm: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
