"""Error metrics, histograms, CSV output and annotated overlays."""
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (EmptyInputError, InvalidRangeError, NonOrthonormalPairError,
                     NonUnitInputError, ZeroMaxCurvatureError)
from .imageio import Image


def _check_unit(v, name):
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-6:
        raise NonUnitInputError(f"{name} is not a unit vector (norm {np.linalg.norm(v):.9g})")
    return v


def _unsigned_angle(a, b):
    # atan2 keeps full precision near 0 and 90 degrees, unlike arccos
    theta = math.degrees(math.atan2(np.linalg.norm(np.cross(a, b)), float(np.dot(a, b))))
    return min(theta, 180.0 - theta)


def angular_error_unsigned(a, b):
    """Angle between two directions in degrees, ignoring orientation: [0, 90]."""
    return _unsigned_angle(_check_unit(a, "a"), _check_unit(b, "b"))


def theta_e(u1, u2, v1, v2):
    """Unsigned angle in degrees between u1 x u2 and v1 x v2."""
    pairs = ((u1, u2), (v1, v2))
    crosses = []
    for a, b in pairs:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if (abs(np.linalg.norm(a) - 1) > 1e-6 or abs(np.linalg.norm(b) - 1) > 1e-6
                or abs(np.dot(a, b)) > 1e-6):
            raise NonOrthonormalPairError("direction pair is not orthonormal")
        crosses.append(np.cross(a, b))
    return _unsigned_angle(*crosses)


def ratio_diff(rho_est, kappa1, kappa2):
    """|rho_est - |k_small / k_large||, ordering the curvatures by magnitude."""
    k_small, k_large = sorted((abs(kappa1), abs(kappa2)))
    if k_large == 0:
        raise ZeroMaxCurvatureError("maximal curvature is zero")
    return abs(rho_est - k_small / k_large)


@dataclass(frozen=True)
class PatchComparison:
    record_id: int
    truth_id: int
    normal_error_deg: float
    theta_e_deg: float
    ratio_diff: float
    direction_error_deg: float = float("nan")


COMPARISON_FIELDS = ("record_id", "truth_id", "normal_error_deg", "theta_e_deg", "ratio_diff",
                     "direction_error_deg")


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray


ANGLE_BINS = (36, (0.0, 90.0))
RATIO_BINS = (20, (0.0, 1.0))


def histogram(values, n_bins, value_range):
    """Uniform bins, half-open [lo, hi) except the last, which is closed.

    Values outside the range are not counted.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInputError("no values to bin")
    lo, hi = map(float, value_range)
    if not (hi > lo) or n_bins < 1 or not (np.isfinite(lo) and np.isfinite(hi)):
        raise InvalidRangeError(f"invalid histogram range {value_range} / bins {n_bins}")
    edges = np.linspace(lo, hi, n_bins + 1)
    inside = values[(values >= lo) & (values <= hi)]
    idx = np.searchsorted(edges, inside, side="right") - 1
    idx = np.minimum(idx, n_bins - 1)
    return Histogram(edges, np.bincount(idx, minlength=n_bins))


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.9g}"


def write_csv(obj):
    """CSV bytes (UTF-8, header row, 9 significant digits) for a Histogram or comparisons."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if isinstance(obj, Histogram):
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(obj.bin_edges[:-1], obj.bin_edges[1:], obj.counts):
            writer.writerow([_fmt(lo), _fmt(hi), int(c)])
    else:
        writer.writerow(COMPARISON_FIELDS)
        for comp in obj:
            writer.writerow([_fmt(getattr(comp, f)) for f in COMPARISON_FIELDS])
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------- overlays

ELLIPSE_COLOR = (0, 255, 255)
AXIS_COLOR = (255, 0, 0)
NORMAL_COLOR = (0, 0, 255)


def _plot(data, xs, ys, color):
    xi = np.floor(np.asarray(xs) + 0.5).astype(int)
    yi = np.floor(np.asarray(ys) + 0.5).astype(int)
    ok = (xi >= 0) & (yi >= 0) & (xi < data.shape[1]) & (yi < data.shape[0])
    data[yi[ok], xi[ok]] = color


def _draw_segment(data, p0, p1, color):
    n = max(2, int(math.ceil(2 * math.hypot(p1[0] - p0[0], p1[1] - p0[1]))) + 1)
    t = np.linspace(0.0, 1.0, n)
    _plot(data, p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]), color)


def _image_direction(k, bp, vec):
    """Image-plane direction of a 3D direction anchored on the sightline through bp."""
    x, y = k.to_normalized(np.array(bp))
    dx = vec[0] - x * vec[2]
    dy = vec[1] - y * vec[2]
    d = k.to_pixels(np.array([x + dx, y + dy])) - np.array(bp)
    n = np.hypot(*d)
    return d / n if n > 0 else d


def overlay(img, patches, k, normal_scale=3.0):
    """Draw fitted ellipses (cyan), principal axes (red) and normals (blue).

    Each axis is drawn through the brightest point with the matching semi-axis
    length. The normal is drawn as its orthographic image-plane projection,
    ``normal_scale`` semi-major axes long, plus a dot at the brightest point.
    """
    if not patches:
        return Image(img.data.copy())
    data = img.to_rgb().data
    for patch in patches:
        e = patch.ellipse
        n_samples = max(64, int(8 * e.semi_major))
        ring = e.sample(n_samples)
        for a, b in zip(ring, np.roll(ring, -1, axis=0)):
            _draw_segment(data, a, b, ELLIPSE_COLOR)
        bp = np.array(patch.bp, dtype=float)
        for vec, length in ((patch.u1, e.semi_major), (patch.u2, e.semi_minor)):
            d = _image_direction(k, bp, vec) * length
            _draw_segment(data, bp - d, bp + d, AXIS_COLOR)
        tip = bp + normal_scale * e.semi_major * np.asarray(patch.normal[:2])
        _draw_segment(data, bp, tip, NORMAL_COLOR)
        _plot(data, [bp[0]], [bp[1]], NORMAL_COLOR)
    return Image(data)
