"""Command-line entry point: ``specshape <subcommand> ...``.

Exit codes: 0 success (also with zero detections), 2 input error, 3 config error.
"""
import argparse
import configparser
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import evaluation
from .errors import ConfigError, NoSpecularityError, SpecShapeError
from .geometry import CameraIntrinsics, GeometricEllipse, SurfacePatchEstimate
from .imageio import decode_image, encode_image
from .isophote import DetectorParams
from .mesh import load_obj, principal_curvatures, shapes_to_csv
from .pipeline import PipelineConfig, dumps, run_pipeline
from .render import analytic_bp, render
from .scene import parse_scene

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 2, 3
TRUTH_SCHEMA = "specshape.truth/1"


class InputError(Exception):
    pass


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path, data):
    if path in (None, "-"):
        sys.stdout.write(data.decode() if isinstance(data, bytes) else data)
        return
    try:
        Path(path).write_bytes(data.encode() if isinstance(data, str) else data)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------- config

_CONFIG_KEYS = {"intrinsics", "threshold", "detector_threshold", "min_area", "max_area",
                "border_margin", "control_points", "threads", "out", "overlay", "deterministic"}


def read_config_file(path):
    """Flat ``key = value`` text; a leading [section] header is optional."""
    text = _read_bytes(path).decode("utf-8", errors="replace")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc
    values = {}
    for section in cp.sections():
        for key, value in cp[section].items():
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            values[key] = value
    return values


def build_config(args):
    """Merge config file values with command-line flags (flags win)."""
    values = read_config_file(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = flag
    if "intrinsics" not in values:
        raise ConfigError("camera intrinsics are required (--intrinsics fx,fy,cx,cy[,skew])")
    try:
        k = values["intrinsics"]
        k = k if isinstance(k, CameraIntrinsics) else CameraIntrinsics.from_string(str(k))
        det = DetectorParams(
            intensity_threshold=float(values.get("detector_threshold", 0.92)),
            min_area=int(values.get("min_area", 20)),
            max_area=int(values.get("max_area", 5000)),
            border_margin=int(values.get("border_margin", 2)))
        cp = values.get("control_points")
        config = PipelineConfig(
            intrinsics=k, detector=det, threshold=float(values.get("threshold", 0.05)),
            control_points=None if cp in (None, "auto") else int(cp),
            threads=int(values.get("threads", 1)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    deterministic = str(values.get("deterministic", "false")).lower() in ("1", "true", "yes", "on")
    return config, values.get("out"), values.get("overlay"), deterministic


# ---------------------------------------------------------------- report helpers

def estimates_from_report(report):
    """Rebuild accepted surface estimates from a report dictionary."""
    out = []
    for rec in report["records"]:
        if not rec["accepted"]:
            continue
        e = rec["ellipse"]
        out.append(SurfacePatchEstimate(
            bp=tuple(rec["bp"]), normal=np.array(rec["normal"]), u1=np.array(rec["u1"]),
            u2=np.array(rec["u2"]), axis_ratio=rec["rho"], eccentricity=rec["eccentricity"],
            fit_residual=rec["residual"],
            ellipse=GeometricEllipse(tuple(e["center"]), e["semi_major"], e["semi_minor"],
                                     e["angle"]),
            v3=np.array(rec["v3"])))
    return out


def intrinsics_from_report(report):
    k = report["intrinsics"]
    return CameraIntrinsics(k["fx"], k["fy"], k["cx"], k["cy"], k.get("skew", 0.0))


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def compare(report, truth, match_radius=10.0):
    """Match accepted records to ground-truth patches by nearest brightest point."""
    truths = [(i, t) for i, t in enumerate(truth["patches"]) if t.get("bp_pixel") is not None]
    used = set()
    comparisons = []
    for rec in report["records"]:
        if not rec["accepted"]:
            continue
        best, best_d = None, match_radius
        for i, t in truths:
            if i in used:
                continue
            d = float(np.hypot(rec["bp"][0] - t["bp_pixel"][0], rec["bp"][1] - t["bp_pixel"][1]))
            if d <= best_d:
                best, best_d = (i, t), d
        if best is None:
            continue
        i, t = best
        used.add(i)
        u1, u2 = _unit(rec["u1"]), _unit(rec["u2"])
        comparisons.append(evaluation.PatchComparison(
            record_id=rec["id"], truth_id=t.get("id", i),
            normal_error_deg=evaluation.angular_error_unsigned(_unit(rec["normal"]),
                                                               _unit(t["normal"])),
            theta_e_deg=evaluation.theta_e(u1, u2, _unit(t["dir1"]), _unit(t["dir2"])),
            ratio_diff=evaluation.ratio_diff(rec["rho"], t["kappa1"], t["kappa2"]),
            direction_error_deg=evaluation.angular_error_unsigned(u1, _unit(t["dir1"]))))
    return comparisons


def truth_document(scene):
    patches = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, patch in enumerate(scene.patches):
            try:
                gt = analytic_bp(patch, scene.intrinsics)
            except NoSpecularityError:
                patches.append({"id": i, "bp_pixel": None, "error": "no_specularity"})
                continue
            patches.append({"id": i, **gt.to_dict()})
    rp = scene.render_params
    return {"schema": TRUTH_SCHEMA, "image": {"width": rp.width, "height": rp.height},
            "intrinsics": scene.intrinsics.to_dict(), "patches": patches}


# ---------------------------------------------------------------- subcommands

def cmd_reconstruct(args):
    config, out, overlay_path, deterministic = build_config(args)
    img = decode_image(_read_bytes(args.image))
    report = run_pipeline(img, config)
    _write(out, report.to_json(deterministic))
    if overlay_path:
        patches = [r.estimate for r in report.accepted]
        _write(overlay_path, encode_image(evaluation.overlay(img, patches, config.intrinsics)))
    return EXIT_OK


def cmd_synth(args):
    scene = parse_scene(_read_bytes(args.scene).decode("utf-8", errors="replace"))
    img = render(list(scene.patches), scene.intrinsics, scene.render_params)
    _write(args.image, encode_image(img))
    doc = truth_document(scene)
    _write(args.truth, dumps(doc))
    return EXIT_OK


def _load_json(path):
    try:
        return json.loads(_read_bytes(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def cmd_eval(args):
    report, truth = _load_json(args.report), _load_json(args.truth)
    try:
        comps = compare(report, truth, args.match_radius)
    except (KeyError, TypeError) as exc:
        raise InputError(f"report/truth missing field: {exc}") from exc
    _write(args.out, evaluation.write_csv(comps))
    if args.hist_dir:
        hist_dir = Path(args.hist_dir)
        hist_dir.mkdir(parents=True, exist_ok=True)
        n_ang, r_ang = evaluation.ANGLE_BINS
        n_rat, r_rat = evaluation.RATIO_BINS
        columns = {"normal_error_deg": (n_ang, r_ang), "theta_e_deg": (n_ang, r_ang),
                   "direction_error_deg": (n_ang, r_ang), "ratio_diff": (n_rat, r_rat)}
        for name, (bins, rng) in columns.items():
            values = [getattr(c, name) for c in comps]
            if values:
                h = evaluation.histogram(values, bins, rng)
                _write(hist_dir / f"{name}_hist.csv", evaluation.write_csv(h))
    return EXIT_OK


def cmd_overlay(args):
    img = decode_image(_read_bytes(args.image))
    report = _load_json(args.report)
    try:
        patches = estimates_from_report(report)
        k = intrinsics_from_report(report)
    except (KeyError, TypeError) as exc:
        raise InputError(f"report missing field: {exc}") from exc
    _write(args.out, encode_image(evaluation.overlay(img, patches, k)))
    return EXIT_OK


def cmd_mesh_curvature(args):
    mesh = load_obj(_read_bytes(args.mesh))
    if mesh.dropped_faces:
        print(f"dropped {mesh.dropped_faces} degenerate faces", file=sys.stderr)
    _write(args.out, shapes_to_csv(principal_curvatures(mesh)))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 3), not argparse's usual 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="specshape",
                     description="Surface normals and curvature from specularities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="detect specularities and reconstruct local shape")
    p.add_argument("image", help="PPM/PGM/PNG image")
    p.add_argument("--config", help="key = value config file (flags override it)")
    p.add_argument("--intrinsics", help="fx,fy,cx,cy[,skew] in pixels")
    p.add_argument("--threshold", type=float, help="ellipticity threshold t (default 0.05)")
    p.add_argument("--detector-threshold", dest="detector_threshold", type=float,
                   help="saturation threshold in [0, 1] (default 0.92)")
    p.add_argument("--min-area", dest="min_area", type=int)
    p.add_argument("--max-area", dest="max_area", type=int)
    p.add_argument("--border-margin", dest="border_margin", type=int)
    p.add_argument("--control-points", dest="control_points", type=int,
                   help="B-spline control points (default max(8, n/10))")
    p.add_argument("--threads", type=int, help="worker threads (capped by SPECSHAPE_THREADS)")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.add_argument("--overlay", help="annotated image output path")
    p.add_argument("--deterministic", action="store_true", help="zero the timing field")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("synth", help="render a quadric scene and its ground truth")
    p.add_argument("scene", help="scene description file")
    p.add_argument("--image", required=True, help="output PGM path")
    p.add_argument("--truth", required=True, help="output ground-truth JSON path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="compare a report against ground truth")
    p.add_argument("report")
    p.add_argument("truth")
    p.add_argument("--out", help="comparison CSV (default stdout)")
    p.add_argument("--hist-dir", dest="hist_dir", help="directory for histogram CSVs")
    p.add_argument("--match-radius", dest="match_radius", type=float, default=10.0,
                   help="max brightest-point distance in pixels for a match")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("overlay", help="draw a report onto its image")
    p.add_argument("image")
    p.add_argument("report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("mesh-curvature", help="per-vertex principal curvatures of an OBJ mesh")
    p.add_argument("mesh")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_mesh_curvature)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"specshape: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, SpecShapeError) as exc:
        print(f"specshape: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
