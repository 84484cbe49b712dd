"""Batch command line front end.

    irenhance enhance     INPUT... -o OUT [-c CFG] [-j N] [--depth 8|16] [--dump] [--json]
    irenhance dump-layers INPUT... -o OUT [-c CFG] [-j N]
    irenhance metrics     REF DIST [REF DIST ...] [-o OUT] [--json]
    irenhance metrics     --single IMAGE... [-o OUT] [--json]

Exit status: 0 on success, 1 if any input failed, 2 on a usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics
from .errors import ConfigError, EnhanceError
from .imgcore import Domain, Image, load_image_with_depth, save_image
from .metrics import MetricsReport
from .pipeline import EnhanceConfig, EnhanceResult, enhance, load_config

log = logging.getLogger("irenhance")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
IMAGE_EXTS = (".pgm", ".png", ".tif", ".tiff")
TABLE_HEADER = ("image", "EN", "SF", "AG", "SD", "VIF")


class UsageError(Exception):
    pass


def expand_inputs(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_EXTS and q.is_file()))
        else:
            out.append(p)
    if not out:
        raise UsageError("no input images found")
    return out


def _check_out_dir(out_dir: Path, inputs: list[Path]) -> None:
    resolved = out_dir.resolve()
    for p in inputs:
        if p.parent.resolve() == resolved:
            raise UsageError(f"output directory {out_dir} is also the directory of input {p}")


def _save_signed(img: Image, path: Path) -> tuple[float, float]:
    """Store a signed layer in 16 bits as ``(value - offset) / scale``."""
    d = img.data
    offset = min(float(d.min()), 0.0)
    scale = max(float(d.max()) - offset, 1.0)
    save_image(Image(np.clip((d - offset) / scale, 0.0, 1.0), Domain.UNIT), path, depth=16)
    return offset, scale


def dump_intermediates(res: EnhanceResult, out_dir: Path, stem: str, ext: str) -> list[Path]:
    layers = {}
    if res.layers is not None:
        layers["base"] = res.layers.base
        layers["detail1"] = res.layers.detail_fine
        layers["detail2"] = res.layers.detail_coarse
    if res.saliency is not None:
        layers["sal_bright"] = res.saliency.bright
        layers["sal_dark"] = res.saliency.dark
        layers["sal_diff"] = res.saliency_diff
    written = []
    sidecar = []
    for name, img in layers.items():
        path = out_dir / f"{stem}_{name}{ext}"
        offset, scale = _save_signed(img, path)
        sidecar.append(f"{stem}_{name}.offset = {offset!r}")
        sidecar.append(f"{stem}_{name}.scale = {scale!r}")
        written.append(path)
    side = out_dir / f"{stem}_offsets.txt"
    tmp = side.with_name(f".{side.name}.part")
    tmp.write_text("# value = offset + scale * sample / 65535\n" + "\n".join(sidecar) + "\n")
    os.replace(tmp, side)
    written.append(side)
    return written


def _process(path: Path, cfg: EnhanceConfig, out_dir: Path, depth: int | None, dump: bool, write_enhanced: bool):
    loaded = load_image_with_depth(path)
    res = enhance(loaded.image, cfg)
    ext = path.suffix.lower()
    if write_enhanced:
        save_image(res.enhanced, out_dir / f"{path.stem}_enhanced{ext}", depth or loaded.depth)
    if dump:
        dump_intermediates(res, out_dir, path.stem, ext)
    return res


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.6f}"


def format_table(rows: list[tuple[str, MetricsReport]]) -> str:
    lines = ["\t".join(TABLE_HEADER)]
    for name, rep in rows:
        lines.append("\t".join([name] + [_fmt(getattr(rep, k)) for k in MetricsReport.FIELDS]))
    return "\n".join(lines) + "\n"


def _json_doc(rows) -> str:
    return json.dumps([{"image": name, **rep.as_dict()} for name, rep in rows], indent=2) + "\n"


def _describe(path: Path, exc: Exception) -> str:
    msg = str(exc)
    return msg if str(path) in msg else f"{path}: {msg}"


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.part")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_enhance(args, write_enhanced: bool = True) -> int:
    cfg = load_config(args.config) if args.config else EnhanceConfig()
    inputs = expand_inputs(args.inputs)
    out_dir = Path(args.out_dir)
    _check_out_dir(out_dir, inputs)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump = (not write_enhanced) or args.dump or cfg.dump_intermediates
    depth = getattr(args, "depth", None)

    def job(path):
        try:
            return path, _process(path, cfg, out_dir, depth, dump, write_enhanced), None
        except (EnhanceError, OSError, ValueError) as exc:
            return path, None, exc

    rows = []
    failed = 0
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for path, res, exc in pool.map(job, inputs):
            if exc is not None:
                failed += 1
                log.error("%s", _describe(path, exc))
                continue
            for w in res.warnings:
                log.warning("%s: %s", path, w)
            rows.append((path.name, res.report))

    if write_enhanced:
        _write_atomic(out_dir / "metrics.tsv", format_table(rows))
        if args.json:
            _write_atomic(out_dir / "metrics.json", _json_doc(rows))
    return EXIT_PARTIAL if failed else EXIT_OK


def _as_byte255(path: Path) -> Image:
    img, depth = load_image_with_depth(path)
    return Image(img.data * (255.0 / ((1 << depth) - 1)), Domain.BYTE255)


def run_metrics(args) -> int:
    paths = [Path(p) for p in args.inputs]
    if args.single:
        jobs = [(p, None) for p in paths]
    else:
        if len(paths) % 2:
            raise UsageError("metrics expects REFERENCE DISTORTED pairs (or --single)")
        jobs = [(paths[i + 1], paths[i]) for i in range(0, len(paths), 2)]

    rows = []
    failed = 0
    for target, ref in jobs:
        try:
            img = _as_byte255(target)
            rep = metrics.evaluate(img, None if ref is None else _as_byte255(ref))
        except (EnhanceError, OSError, ValueError) as exc:
            failed += 1
            log.error("%s", _describe(target, exc))
            continue
        rows.append((target.name, rep))

    table = format_table(rows)
    sys.stdout.write(_json_doc(rows) if args.json and not args.out_dir else table)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_atomic(out_dir / "metrics.tsv", table)
        if args.json:
            _write_atomic(out_dir / "metrics.json", _json_doc(rows))
    return EXIT_PARTIAL if failed else EXIT_OK


def _positive_int(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irenhance", description="Task-oriented infrared image enhancement.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("inputs", nargs="+", help="image files or directories")
        p.add_argument("-o", "--out-dir", required=True)
        p.add_argument("-c", "--config")
        p.add_argument("-j", "--jobs", type=_positive_int, default=1)

    p = sub.add_parser("enhance", help="enhance images and write a metrics table")
    common(p)
    p.add_argument("--depth", type=int, choices=(8, 16), help="output bit depth (default: same as input)")
    p.add_argument("--dump", action="store_true", help="also write intermediate layers")
    p.add_argument("--json", action="store_true", help="also write metrics.json")

    p = sub.add_parser("dump-layers", help="write base/detail/saliency intermediates")
    common(p)

    p = sub.add_parser("metrics", help="score images without enhancing them")
    p.add_argument("inputs", nargs="+", help="REFERENCE DISTORTED pairs, or images with --single")
    p.add_argument("--single", action="store_true", help="no-reference metrics only (no VIF)")
    p.add_argument("-o", "--out-dir")
    p.add_argument("--json", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "enhance":
            return run_enhance(args)
        if args.command == "dump-layers":
            return run_enhance(args, write_enhanced=False)
        return run_metrics(args)
    except (ConfigError, UsageError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
