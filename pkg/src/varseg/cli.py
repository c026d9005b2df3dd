"""Command-line entry point: ``varseg {segment,gradfield,noise,flowgrid}``.

Exit codes: 0 success, 1 usage error, 2 input or format error, 3 numerical
divergence. Diagnostics are a single line on stderr naming the stage.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._fmt import csv_lines, parse_csv
from .errors import DivergenceError, VarsegError
from .gradfield import compute_gradient, extract_field, field_to_csv, gaussian_smooth
from .imageio import add_gaussian_noise, add_salt_pepper, read_pgm, write_pgm
from .lddmm import DeformationParams, ShootingState, flow_points, grid_lattice
from .segmenter import AdamParams, SegmentationConfig, segment
from .svg import grid_svg, overlay_svg, quiver_svg

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# run metadata written next to the config in manifest.json
MANIFEST_META = ("input", "outdir", "image_width", "image_height", "version", "duration_s")

# flag -> config field
_CONFIG_FLAGS = {
    "sigma_var": "sigma_var",
    "sigma_v": "sigma_V",
    "nsteps": "nsteps",
    "lambda_": "lambda_loss",
    "threshold": "threshold_rel",
    "smooth_sigma": "smooth_sigma",
    "mass_mode": "mass_mode",
    "ellipse_k": "ellipse_k",
    "vertices": "n_vertices",
    "iterations": "iterations",
    "snapshot_every": "snapshot_every",
    "seed": "seed",
}


def _add_config_flags(p, full=True):
    p.add_argument("--config", help="JSON file with configuration fields")
    p.add_argument("--threshold", type=float, help="relative gradient threshold in [0, 1]")
    p.add_argument("--smooth-sigma", type=float, help="Gaussian pre-smoothing sigma (pixels)")
    p.add_argument("--mass-mode", choices=["unit", "magnitude"])
    if not full:
        return
    p.add_argument("--sigma-var", type=float, help="varifold kernel scale (pixels)")
    p.add_argument("--sigma-v", type=float, help="deformation kernel scale (pixels)")
    p.add_argument("--nsteps", type=int, help="RK4 steps on [0, 1]")
    p.add_argument("--lambda", dest="lambda_", type=float, help="weight of the data term")
    p.add_argument("--ellipse-k", type=float)
    p.add_argument("--vertices", type=int, help="template vertex count")
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--iterations", type=int)
    p.add_argument("--snapshot-every", type=int)
    p.add_argument("--seed", type=int)


def build_parser():
    parser = _Parser(prog="varseg", description="Varifold/LDDMM contour segmentation of grayscale images.")
    parser.add_argument("--version", action="version", version=f"varseg {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("segment", help="segment an image by deforming an ellipse template")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    _add_config_flags(p)

    p = sub.add_parser("gradfield", help="dump the thresholded gradient field")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    _add_config_flags(p, full=False)

    p = sub.add_parser("noise", help="add seeded Gaussian or salt-and-pepper noise")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--kind", required=True, choices=["gaussian", "saltpepper"])
    p.add_argument("--stddev", type=float, default=0.1)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("flowgrid", help="render the deformed grid at t = 0, 1/2, 1")
    p.add_argument("--momenta", required=True, help="CSV 'qx,qy,px,py' or a segment output directory")
    p.add_argument("--outdir", required=True)
    p.add_argument("--input", help="image whose extent defines the grid")
    p.add_argument("--spacing", type=float, default=4.0)
    p.add_argument("--config")
    p.add_argument("--sigma-v", type=float)
    p.add_argument("--nsteps", type=int)
    return parser


def resolve_config(args) -> SegmentationConfig:
    """Defaults, then the JSON config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as f:
                values = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(values, dict):
            raise UsageError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(SegmentationConfig)}
        for key in MANIFEST_META:
            values.pop(key, None)
        flat_adam = {k[5:]: values.pop(k) for k in list(values) if k.startswith("adam_")}
        unknown = set(values) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if flat_adam:
            values["adam"] = {**values.get("adam", {}), **flat_adam}
    for flag, name in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    adam = dict(values.pop("adam", {}))
    if getattr(args, "lr", None) is not None:
        adam["lr"] = args.lr
    try:
        return SegmentationConfig(adam=AdamParams(**adam), **values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _write(path, text):
    with open(path, "w", newline="\n") as f:
        f.write(text)


def _load_image(path):
    try:
        return read_pgm(path)
    except OSError as exc:
        raise InputError(f"input: cannot read {path}: {exc.strerror or exc}") from None
    except VarsegError as exc:
        raise InputError(f"input: {exc}") from None


def _outdir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise InputError(f"output: cannot create {path}: {exc.strerror or exc}") from None


def cmd_segment(args) -> int:
    cfg = resolve_config(args)
    img = _load_image(args.input)
    _outdir(args.outdir)
    t0 = time.perf_counter()
    res = segment(img, cfg)
    duration = time.perf_counter() - t0
    rcfg = res.config
    _write(os.path.join(args.outdir, "contour.csv"), csv_lines(None, res.final_curve.vertices))
    _write(os.path.join(args.outdir, "energy.csv"), csv_lines("iter,total,reg,loss,alpha", res.energy_history))
    _write(os.path.join(args.outdir, "momenta.csv"),
           csv_lines("qx,qy,px,py", np.column_stack([res.template.vertices, res.p0])))
    _write(os.path.join(args.outdir, "overlay.svg"), overlay_svg(img, res.final_curve, res.snapshots))
    manifest = {
        **rcfg.to_flat_dict(),
        "input": args.input,
        "outdir": args.outdir,
        "image_width": img.width,
        "image_height": img.height,
        "version": __version__,
        "duration_s": round(duration, 3),
    }
    _write(os.path.join(args.outdir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_gradfield(args) -> int:
    cfg = resolve_config(args)
    img = _load_image(args.input)
    _outdir(args.outdir)
    try:
        grad = compute_gradient(gaussian_smooth(img, cfg.smooth_sigma))
        field = extract_field(grad, cfg.threshold_rel, cfg.mass_mode)
    except VarsegError as exc:
        raise type(exc)(f"gradfield: {exc}") from exc
    _write(os.path.join(args.outdir, "field.csv"), field_to_csv(field))
    _write(os.path.join(args.outdir, "field.svg"), quiver_svg(field, img.width, img.height, img))
    return EXIT_OK


def cmd_noise(args) -> int:
    img = _load_image(args.input)
    _outdir(args.outdir)
    try:
        if args.kind == "gaussian":
            out = add_gaussian_noise(img, args.stddev, args.seed)
        else:
            out = add_salt_pepper(img, args.density, args.seed)
    except ValueError as exc:
        raise UsageError(f"noise: {exc}") from None
    write_pgm(os.path.join(args.outdir, "noisy.pgm"), out)
    return EXIT_OK


def _read_momenta(path):
    """Return ``(q, p, manifest or None)`` from a CSV file or a segment run directory."""
    manifest = None
    if os.path.isdir(path):
        mpath = os.path.join(path, "manifest.json")
        if os.path.exists(mpath):
            with open(mpath) as f:
                manifest = json.load(f)
        path = os.path.join(path, "momenta.csv")
    try:
        with open(path) as f:
            header, arr = parse_csv(f.read())
    except OSError as exc:
        raise InputError(f"momenta: cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(f"momenta: {exc}") from None
    if header not in (None, ["qx", "qy", "px", "py"]) or len(arr) == 0 or arr.shape[1] != 4:
        raise InputError(f"momenta: expected non-empty CSV with columns qx,qy,px,py in {path}")
    return arr[:, :2], arr[:, 2:], manifest


def cmd_flowgrid(args) -> int:
    q, p, manifest = _read_momenta(args.momenta)
    manifest = manifest or {}
    if args.input:
        img = _load_image(args.input)
        width, height = img.width, img.height
    elif "image_width" in manifest:
        width, height = manifest["image_width"], manifest["image_height"]
    else:
        hi = np.ceil(np.max(q, axis=0)) + 1
        width, height = int(max(hi[0], 1)), int(max(hi[1], 1))
    cfg = {}
    if args.config:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    sigma_V = args.sigma_v or cfg.get("sigma_V") or manifest.get("sigma_V") or 0.2 * max(width, height)
    nsteps = args.nsteps or cfg.get("nsteps") or manifest.get("nsteps") or 10
    try:
        d = DeformationParams(float(sigma_V), int(nsteps))
        pts, nx, ny = grid_lattice(width, height, args.spacing)
    except ValueError as exc:
        raise UsageError(f"flowgrid: {exc}") from None
    _outdir(args.outdir)
    s0 = ShootingState(q, p)
    path = flow_points([s0], d, pts, return_path=True)
    half = d.nsteps // 2
    for label, step in (("0", 0), ("0.5", half), ("1", d.nsteps)):
        t = step / d.nsteps
        _write(os.path.join(args.outdir, f"grid_t{label}.svg"),
               grid_svg(path[step], nx, ny, width, height, title=f"deformed grid t={t:g}"))
    return EXIT_OK


COMMANDS = {
    "segment": cmd_segment,
    "gradfield": cmd_gradfield,
    "noise": cmd_noise,
    "flowgrid": cmd_flowgrid,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (segment, gradfield, noise, flowgrid)")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"varseg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"varseg: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InputError as exc:
        print(f"varseg: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VarsegError as exc:
        print(f"varseg: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
