"""Command-line pipeline: generate, compress, sweep, budget, render.

Every command writes its artifacts under one run directory together with
a ``manifest.json`` echoing the configuration, and is deterministic given
its inputs and seed. Exit codes are a stable contract: 0 success, 1
runtime failure (with a diagnostic naming the failed stage), 2 usage
error.
"""

import argparse
import json
import os
import sys
import tempfile

from . import __version__
from .analysis import (
    budget_curve,
    budget_to_csv,
    stats_to_json,
    sweep_to_csv,
)
from .fusion import save_sequence
from .grids import load_grid, save_grid
from .grouping import TRAINING_THRESHOLDS, Threshold, group_map_to_json
from .pipeline import compress_grid, sweep_grid
from .render import render_mask, render_sweep, pgm_bytes
from .scenes import generate_synthetic, load_scene

DEFAULT_THRESHOLD = 0.6
DEFAULT_FRAME_COUNTS = (32, 64, 96, 128, 160)


class StageError(RuntimeError):
    """Runtime failure wrapped with the pipeline stage that caused it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


def _atomic_write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save(save_fn, obj, path):
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-")
    os.close(fd)
    try:
        save_fn(obj, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (OSError, ValueError, TypeError) as exc:
        raise StageError(stage, exc) from exc


def _write_manifest(out_dir, command, config, artifacts):
    doc = {
        "tool": "dyntok",
        "version": __version__,
        "command": command,
        "config": config,
        "artifacts": sorted(artifacts),
    }
    _atomic_write(
        os.path.join(out_dir, "manifest.json"), json.dumps(doc, indent=2) + "\n"
    )


def _threshold_arg(text):
    try:
        return Threshold(float(text)).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _threshold_list_arg(text):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of thresholds")
    values = [_threshold_arg(s) for s in items]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError(
            f"thresholds must be strictly ascending, got {values}"
        )
    return values


def _int_list_arg(text):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    try:
        values = [int(s) for s in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"values must be positive, got {values}")
    return values


def _ratio_list_arg(text):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of ratios")
    try:
        values = [float(s) for s in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a ratio list: {text!r}") from None
    if any(not (0.0 < v <= 1.0) for v in values):
        raise argparse.ArgumentTypeError(f"ratios must be in (0, 1], got {values}")
    return values


def _positive_int_arg(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _ensure_out_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise StageError("output", exc) from exc
    return path


def _mask_name(stem, frame, threshold):
    return f"{stem}_f{frame}_t{threshold:g}.pgm"


def cmd_generate(args):
    scene = _stage("scene", load_scene, args.scene)
    grid = _stage("generate", generate_synthetic, scene, args.seed)
    out_dir = _ensure_out_dir(args.out)
    name = f"{args.name}.dtg"
    _stage("write", _atomic_save, save_grid, grid, os.path.join(out_dir, name))
    _write_manifest(
        out_dir,
        "generate",
        {"scene": args.scene, "seed": args.seed, "name": args.name},
        [name],
    )
    t, h, w = grid.grid_shape
    print(
        f"generated {name}: t={t} h={h} w={w} "
        f"d_clip={grid.d_clip} d_emb={grid.d_emb}"
    )
    return 0


def cmd_compress(args):
    grid = _stage("load", load_grid, args.input)
    result = _stage(
        "compress", compress_grid, grid, args.threshold, pool_spec=args.pool2
    )
    out_dir = _ensure_out_dir(args.out)
    stem = os.path.splitext(os.path.basename(args.input))[0]
    artifacts = []

    seq_name = f"{stem}_t{args.threshold:g}.dtc"
    _stage(
        "write", _atomic_save, save_sequence, result.sequence, os.path.join(out_dir, seq_name)
    )
    artifacts.append(seq_name)

    stats_name = f"{stem}_t{args.threshold:g}_stats.json"
    _stage(
        "write",
        _atomic_write,
        os.path.join(out_dir, stats_name),
        stats_to_json(result.stats),
    )
    artifacts.append(stats_name)

    groups_name = f"{stem}_t{args.threshold:g}_groups.json"
    _stage(
        "write",
        _atomic_write,
        os.path.join(out_dir, groups_name),
        group_map_to_json(result.group_map),
    )
    artifacts.append(groups_name)

    if args.masks:
        images = _stage("render", render_mask, result.group_map, args.scale)
        for i, img in enumerate(images):
            name = _mask_name(stem, i, args.threshold)
            _stage(
                "write", _atomic_write, os.path.join(out_dir, name), pgm_bytes(img)
            )
            artifacts.append(name)

    _write_manifest(
        out_dir,
        "compress",
        {
            "in": args.input,
            "threshold": args.threshold,
            "pool2": bool(args.pool2),
            "masks": bool(args.masks),
            "scale": args.scale,
        },
        artifacts,
    )
    st = result.stats
    print(
        f"kept {st.ratio_tokens_kept:.3f} of tokens "
        f"(fused {st.fused_tokens} + markers {st.markers} "
        f"of {st.original_tokens + st.markers})"
    )
    return 0


def cmd_sweep(args):
    grid = _stage("load", load_grid, args.input)
    _, _, maps, stats = _stage(
        "sweep", sweep_grid, grid, args.thresholds, pool_spec=args.pool2
    )
    out_dir = _ensure_out_dir(args.out)
    stem = os.path.splitext(os.path.basename(args.input))[0]
    artifacts = []

    csv_name = f"{stem}_sweep.csv"
    _stage("write", _atomic_write, os.path.join(out_dir, csv_name), sweep_to_csv(stats))
    artifacts.append(csv_name)

    images = _stage("render", render_sweep, maps, args.scale)
    for i, img in enumerate(images):
        name = f"{stem}_f{i}_sweep.pgm"
        _stage("write", _atomic_write, os.path.join(out_dir, name), pgm_bytes(img))
        artifacts.append(name)

    _write_manifest(
        out_dir,
        "sweep",
        {
            "in": args.input,
            "thresholds": list(args.thresholds),
            "pool2": bool(args.pool2),
            "scale": args.scale,
        },
        artifacts,
    )
    for st in stats:
        print(f"threshold {st.threshold:g}: kept {st.ratio_tokens_kept:.3f}")
    return 0


def cmd_budget(args):
    points = _stage(
        "budget", budget_curve, args.rows, args.cols, args.frames, args.ratios
    )
    out_dir = _ensure_out_dir(args.out)
    name = "budget.csv"
    _stage("write", _atomic_write, os.path.join(out_dir, name), budget_to_csv(points))
    _write_manifest(
        out_dir,
        "budget",
        {
            "rows": args.rows,
            "cols": args.cols,
            "frames": list(args.frames),
            "ratios": list(args.ratios),
        },
        [name],
    )
    for p in points:
        print(f"frames {p.frames} ratio {p.ratio:g}: {p.total_tokens} tokens")
    return 0


def cmd_render(args):
    grid = _stage("load", load_grid, args.input)
    result = _stage(
        "compress", compress_grid, grid, args.threshold, pool_spec=args.pool2
    )
    out_dir = _ensure_out_dir(args.out)
    stem = os.path.splitext(os.path.basename(args.input))[0]
    images = _stage("render", render_mask, result.group_map, args.scale)
    artifacts = []
    for i, img in enumerate(images):
        name = _mask_name(stem, i, args.threshold)
        _stage("write", _atomic_write, os.path.join(out_dir, name), pgm_bytes(img))
        artifacts.append(name)
    _write_manifest(
        out_dir,
        "render",
        {
            "in": args.input,
            "threshold": args.threshold,
            "pool2": bool(args.pool2),
            "scale": args.scale,
        },
        artifacts,
    )
    print(f"rendered {len(artifacts)} mask image(s) to {out_dir}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dyntok",
        description=(
            "Dynamic visual-token compression: similarity-driven row-wise "
            "grouping and mean fusion of patch-grid tokens."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a DTG grid from a scene spec")
    p.add_argument("--scene", required=True, help="scene spec JSON path")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--name", default="scene", help="output file stem")
    p.add_argument("--out", default="dyntok-run", help="run directory")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("compress", help="compress a DTG grid at one threshold")
    p.add_argument("--in", dest="input", required=True, help="input DTG path")
    p.add_argument(
        "--threshold",
        type=_threshold_arg,
        default=DEFAULT_THRESHOLD,
        help=f"merge threshold in (-1, 1] (default {DEFAULT_THRESHOLD})",
    )
    p.add_argument(
        "--pool2",
        action="store_true",
        help="apply 2x2 stride-2 pooling before compressing",
    )
    p.add_argument("--masks", action="store_true", help="also write mask PGMs")
    p.add_argument(
        "--scale", type=_positive_int_arg, default=16, help="mask pixels per patch"
    )
    p.add_argument("--out", default="dyntok-run", help="run directory")
    p.set_defaults(fn=cmd_compress)

    p = sub.add_parser("sweep", help="sweep thresholds, write CSV and tiled masks")
    p.add_argument("--in", dest="input", required=True, help="input DTG path")
    p.add_argument(
        "--thresholds",
        type=_threshold_list_arg,
        default=list(TRAINING_THRESHOLDS),
        help="ascending comma-separated thresholds "
        f"(default {','.join(str(v) for v in TRAINING_THRESHOLDS)})",
    )
    p.add_argument("--pool2", action="store_true", help="pool before sweeping")
    p.add_argument(
        "--scale", type=_positive_int_arg, default=16, help="mask pixels per patch"
    )
    p.add_argument("--out", default="dyntok-run", help="run directory")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("budget", help="token-budget curve over frame counts x ratios")
    p.add_argument(
        "--frames",
        type=_int_list_arg,
        default=list(DEFAULT_FRAME_COUNTS),
        help="comma-separated frame counts "
        f"(default {','.join(str(v) for v in DEFAULT_FRAME_COUNTS)})",
    )
    p.add_argument(
        "--ratios",
        type=_ratio_list_arg,
        required=True,
        help="comma-separated kept-token ratios in (0, 1]",
    )
    p.add_argument("--rows", type=_positive_int_arg, default=14, help="patch rows")
    p.add_argument("--cols", type=_positive_int_arg, default=14, help="patch cols")
    p.add_argument("--out", default="dyntok-run", help="run directory")
    p.set_defaults(fn=cmd_budget)

    p = sub.add_parser("render", help="write merge-mask PGMs for one threshold")
    p.add_argument("--in", dest="input", required=True, help="input DTG path")
    p.add_argument(
        "--threshold",
        type=_threshold_arg,
        default=DEFAULT_THRESHOLD,
        help=f"merge threshold in (-1, 1] (default {DEFAULT_THRESHOLD})",
    )
    p.add_argument("--pool2", action="store_true", help="pool before grouping")
    p.add_argument(
        "--scale", type=_positive_int_arg, default=16, help="mask pixels per patch"
    )
    p.add_argument("--out", default="dyntok-run", help="run directory")
    p.set_defaults(fn=cmd_render)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"dyntok {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
