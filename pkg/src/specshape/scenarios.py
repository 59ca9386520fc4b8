"""Reproducible synthetic scenes for validation runs and demos."""
import math
from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics
from .render import QuadricPatch, RenderParams
from .scene import Scene

# narrow-ish lens and a softer lobe than the renderer default, so that the
# kappa >> 1/distance regime still yields highlights of 10-80 px
SUITE_INTRINSICS = CameraIntrinsics(1000.0, 1000.0, 319.5, 239.5)
SUITE_RENDER = RenderParams(specular_strength=2.0, shininess=200.0, diffuse_strength=0.3,
                            width=640, height=480)


@dataclass(frozen=True)
class SceneSpec:
    kappa1: float
    kappa2: float
    distance: float
    pixel: tuple
    roll: float
    tilt_axis: float
    tilt: float


def random_spec(rng, max_tilt_deg=25.0, ratio_range=(0.2, 1.0), kd_range=(8.0, 16.0),
                distance=1.0, pixel_box=((160.0, 480.0), (120.0, 360.0))):
    ratio = rng.uniform(*ratio_range)
    k2 = rng.uniform(*kd_range) / distance
    return SceneSpec(kappa1=ratio * k2, kappa2=k2, distance=distance,
                     pixel=(rng.uniform(*pixel_box[0]), rng.uniform(*pixel_box[1])),
                     roll=rng.uniform(0, math.pi), tilt_axis=rng.uniform(0, 2 * math.pi),
                     tilt=math.radians(rng.uniform(0, max_tilt_deg)))


def patch_from_spec(spec, k=SUITE_INTRINSICS, extent=None):
    ray = k.backproject(np.array(spec.pixel))
    pos = ray * spec.distance / ray[2]
    tilt = (spec.tilt * math.cos(spec.tilt_axis), spec.tilt * math.sin(spec.tilt_axis))
    if extent is None:
        # room for the tilted specular point plus the highlight around it
        extent = 0.45 * spec.distance
    return QuadricPatch.facing(spec.kappa1, spec.kappa2, pos, roll=spec.roll, tilt=tilt,
                               extent=extent)


def scene_from_specs(specs, k=SUITE_INTRINSICS, rp=SUITE_RENDER):
    return Scene(k, rp, tuple(patch_from_spec(s, k) for s in specs))


def two_patch_scene():
    """Two well-separated highlights used by the end-to-end check."""
    specs = [SceneSpec(4.0, 10.0, 1.0, (200.0, 170.0), 0.5, 0.3, math.radians(8)),
             SceneSpec(9.0, 12.0, 1.0, (450.0, 320.0), 2.0, 2.0, math.radians(5))]
    return scene_from_specs(specs)
