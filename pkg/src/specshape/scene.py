"""Scene description files for the synthetic renderer.

A scene is INI-style key/value text::

    [camera]
    intrinsics = 500, 500, 320, 240      # fx, fy, cx, cy[, skew]

    [render]
    width = 640
    height = 480
    specular_strength = 2.0
    shininess = 2000
    diffuse_strength = 0.3
    # falloff_distance = 0.1             # default: each patch origin's distance

    [patch.0]
    kappa1 = 5
    kappa2 = 5
    rotation = 0, 0, 0                   # axis-angle vector, radians
    translation = 0, 0, 0.1
    extent = 0.015

Patch sections are rendered in the order their names sort.
"""
import configparser
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidParamsError
from .geometry import CameraIntrinsics
from .render import QuadricPatch, RenderParams


@dataclass(frozen=True)
class Scene:
    intrinsics: CameraIntrinsics
    render_params: RenderParams
    patches: tuple


def _vector(text, n, key):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ConfigError(f"{key}: expected {n} values, got {len(vals)}")
    return np.array(vals)


def _patch_key(name):
    suffix = name.split(".", 1)[1]
    return (0, int(suffix), "") if suffix.isdigit() else (1, 0, suffix)


def parse_scene(text):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad scene file: {exc}") from exc
    if not cp.has_section("camera") or not cp.has_option("camera", "intrinsics"):
        raise ConfigError("scene needs [camera] intrinsics")
    k = CameraIntrinsics.from_string(cp.get("camera", "intrinsics"))
    rp_kwargs = {}
    if cp.has_section("render"):
        sec = cp["render"]
        try:
            for key in ("specular_strength", "shininess", "diffuse_strength", "falloff_distance"):
                if key in sec:
                    rp_kwargs[key] = sec.getfloat(key)
            for key in ("width", "height"):
                if key in sec:
                    rp_kwargs[key] = sec.getint(key)
        except ValueError as exc:
            raise ConfigError(f"[render]: {exc}") from exc
        unknown = set(sec) - {"specular_strength", "shininess", "diffuse_strength",
                              "falloff_distance", "width", "height"}
        if unknown:
            raise ConfigError(f"[render]: unknown keys {sorted(unknown)}")
    patches = []
    names = sorted((s for s in cp.sections() if s.startswith("patch.")), key=_patch_key)
    for name in names:
        sec = cp[name]
        try:
            patches.append(QuadricPatch.from_axis_angle(
                sec.getfloat("kappa1"), sec.getfloat("kappa2"),
                _vector(sec.get("rotation", "0, 0, 0"), 3, f"{name}.rotation"),
                _vector(sec.get("translation", "0, 0, 0.1"), 3, f"{name}.translation"),
                sec.getfloat("extent", 0.015)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}]: {exc}") from exc
    if not patches:
        raise ConfigError("scene has no [patch.*] sections")
    try:
        rp = RenderParams(**rp_kwargs)
    except InvalidParamsError as exc:
        raise ConfigError(str(exc)) from exc
    return Scene(k, rp, tuple(patches))


def format_scene(scene):
    k, rp = scene.intrinsics, scene.render_params
    lines = ["[camera]", f"intrinsics = {k.fx!r}, {k.fy!r}, {k.cx!r}, {k.cy!r}, {k.skew!r}", "",
             "[render]", f"width = {rp.width}", f"height = {rp.height}",
             f"specular_strength = {rp.specular_strength!r}", f"shininess = {rp.shininess!r}",
             f"diffuse_strength = {rp.diffuse_strength!r}"]
    if rp.falloff_distance is not None:
        lines.append(f"falloff_distance = {rp.falloff_distance!r}")
    for i, p in enumerate(scene.patches):
        rv = p.rotvec
        lines += ["", f"[patch.{i}]", f"kappa1 = {p.kappa1!r}", f"kappa2 = {p.kappa2!r}",
                  "rotation = " + ", ".join(repr(float(x)) for x in rv),
                  "translation = " + ", ".join(repr(float(x)) for x in p.translation),
                  f"extent = {p.extent!r}"]
    return "\n".join(lines) + "\n"
