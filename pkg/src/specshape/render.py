"""Analytic quadric patches under a camera-collocated point light.

Each patch is the graph z = (kappa1 p^2 + kappa2 q^2) / 2 in its own frame,
placed in the camera frame by a rigid pose. Shading is Blinn-Phong with the
light at the camera centre, so the half vector equals the view vector.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (AmbiguousSpecularityWarning, InvalidParamsError, NoSpecularityError,
                     OutOfDomainError)
from .imageio import Image


@dataclass(frozen=True)
class QuadricPatch:
    kappa1: float
    kappa2: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))  # patch -> camera
    translation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.1]))
    extent: float = 0.015

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float)
        if R.shape != (3, 3) or t.shape != (3,):
            raise InvalidParamsError("pose needs a 3x3 rotation and a 3-vector translation")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-12 or np.linalg.det(R) < 0:
            raise InvalidParamsError("pose rotation is not a proper orthonormal matrix")
        if not self.extent > 0:
            raise InvalidParamsError("extent must be positive")
        if self.kappa1 > self.kappa2:
            raise InvalidParamsError("kappa1 <= kappa2 by convention")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "kappa1", float(self.kappa1))
        object.__setattr__(self, "kappa2", float(self.kappa2))
        object.__setattr__(self, "extent", float(self.extent))

    @classmethod
    def from_axis_angle(cls, kappa1, kappa2, rotvec=(0, 0, 0), translation=(0, 0, 0.1),
                        extent=0.015):
        R = Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()
        # re-orthonormalize so the 1e-12 pose check never trips on round-off
        u, _, vt = np.linalg.svd(R)
        return cls(kappa1, kappa2, u @ vt, np.asarray(translation, dtype=float), extent)

    @classmethod
    def facing(cls, kappa1, kappa2, position, roll=0.0, tilt=(0.0, 0.0), extent=0.015):
        """Patch whose origin sits at ``position`` with its +z axis along the sightline.

        ``roll`` spins the patch about that axis (radians); ``tilt`` then rotates it
        about its own x and y axes (radians), moving the specular point off the origin.
        """
        pos = np.asarray(position, dtype=float)
        z = pos / np.linalg.norm(pos)
        helper = np.array([0.0, 1.0, 0.0]) if abs(z[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
        x = np.cross(helper, z)
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        align = np.stack([x, y, z], axis=1)
        extra = Rotation.from_euler("zxy", [roll, tilt[0], tilt[1]]).as_matrix()
        R = align @ extra
        u, _, vt = np.linalg.svd(R)
        return cls(kappa1, kappa2, u @ vt, pos, extent)

    @property
    def rotvec(self):
        return Rotation.from_matrix(self.rotation).as_rotvec()

    @property
    def camera_in_patch(self):
        return -self.rotation.T @ self.translation

    def height(self, p, q):
        return 0.5 * (self.kappa1 * p * p + self.kappa2 * q * q)


@dataclass(frozen=True)
class RenderParams:
    specular_strength: float = 2.0
    shininess: float = 2000.0
    diffuse_strength: float = 0.3
    width: int = 640
    height: int = 480
    # diffuse falloff is (falloff_distance / dist)^2; None uses each patch origin's distance
    falloff_distance: float = None

    def __post_init__(self):
        if not self.shininess > 0:
            raise InvalidParamsError("shininess must be positive")
        if self.specular_strength < 0 or self.diffuse_strength < 0:
            raise InvalidParamsError("shading strengths must be non-negative")
        if self.width <= 0 or self.height <= 0:
            raise InvalidParamsError("image size must be positive")
        if self.falloff_distance is not None and not self.falloff_distance > 0:
            raise InvalidParamsError("falloff_distance must be positive")


@dataclass(frozen=True)
class LocalFrame:
    """Differential geometry of a patch point, in the camera frame.

    ``normal`` is the patch +z side; curvatures are signed with respect to it.
    ``dir1`` belongs to the curvature of smaller magnitude.
    """

    point: np.ndarray
    normal: np.ndarray
    dir1: np.ndarray
    dir2: np.ndarray
    kappa1: float
    kappa2: float


@dataclass(frozen=True)
class GroundTruth:
    """Exact specular point of a patch. ``normal`` faces the camera; curvatures are
    signed with respect to the patch +z side, as in :class:`LocalFrame`."""

    bp_pixel: tuple
    surface_point: np.ndarray
    normal: np.ndarray
    dir1: np.ndarray
    dir2: np.ndarray
    kappa1: float
    kappa2: float
    patch_coords: tuple
    residual: float

    def to_dict(self):
        return {
            "bp_pixel": list(self.bp_pixel),
            "surface_point": self.surface_point.tolist(),
            "normal": self.normal.tolist(),
            "dir1": self.dir1.tolist(),
            "dir2": self.dir2.tolist(),
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
        }


def _intersect(dirs, patch):
    """Ray parameter and patch coordinates of the nearest valid hit; inf on a miss."""
    R = patch.rotation
    o = patch.camera_in_patch
    e = dirs @ R  # rows are R^T d
    ex, ey, ez = e[..., 0], e[..., 1], e[..., 2]
    k1, k2 = patch.kappa1, patch.kappa2
    a = 0.5 * (k1 * ex * ex + k2 * ey * ey)
    b = k1 * o[0] * ex + k2 * o[1] * ey - ez
    c = 0.5 * (k1 * o[0] ** 2 + k2 * o[1] ** 2) - o[2]
    disc = b * b - 4 * a * c
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        qq = -0.5 * (b + np.where(b >= 0, sq, -sq))
        r1 = qq / a
        r2 = c / qq
    lo = np.fmin(r1, r2)
    hi = np.fmax(r1, r2)
    best = np.full(np.shape(ex), np.inf)
    bp = np.zeros_like(best)
    bq = np.zeros_like(best)
    ext = patch.extent
    for root in (hi, lo):  # lo last so it wins when both are valid
        with np.errstate(invalid="ignore"):
            p = o[0] + root * ex
            q = o[1] + root * ey
            ok = (root > 0) & np.isfinite(root) & (np.abs(p) <= ext) & (np.abs(q) <= ext)
        best = np.where(ok, root, best)
        bp = np.where(ok, p, bp)
        bq = np.where(ok, q, bq)
    return best, bp, bq


def ray_quadric_intersect(ray, patch):
    """Camera-frame hit point of a unit ray from the camera centre, or None on a miss."""
    d = np.asarray(ray, dtype=float)
    s, _, _ = _intersect(d[None, :], patch)
    if not np.isfinite(s[0]):
        return None
    return s[0] * d


def _patch_normal(patch, p, q):
    n = np.stack([-patch.kappa1 * p, -patch.kappa2 * q, np.ones_like(p)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def local_frame(patch, p, q):
    """Exact shape-operator eigendecomposition of the graph surface at (p, q)."""
    ext = patch.extent
    if abs(p) > ext or abs(q) > ext:
        raise OutOfDomainError(f"({p}, {q}) lies outside the patch extent {ext}")
    k1, k2 = patch.kappa1, patch.kappa2
    hp, hq = k1 * p, k2 * q
    w = math.sqrt(1.0 + hp * hp + hq * hq)
    first = np.array([[1.0 + hp * hp, hp * hq], [hp * hq, 1.0 + hq * hq]])
    second = np.array([[k1 / w, 0.0], [0.0, k2 / w]])
    # generalized symmetric eigenproblem II v = k I v via Cholesky of I
    L = np.linalg.cholesky(first)
    Linv = np.linalg.inv(L)
    curv, y = np.linalg.eigh(Linv @ second @ Linv.T)
    coeffs = Linv.T @ y
    order = np.argsort(np.abs(curv), kind="stable")
    curv, coeffs = curv[order], coeffs[:, order]
    xp = np.array([1.0, 0.0, hp])
    xq = np.array([0.0, 1.0, hq])
    R = patch.rotation
    normal = R @ np.array([-hp, -hq, 1.0]) / w
    d1 = R @ (coeffs[0, 0] * xp + coeffs[1, 0] * xq)
    d1 /= np.linalg.norm(d1)
    if d1[np.argmax(np.abs(d1))] < 0:
        d1 = -d1
    d2 = np.cross(normal, d1)
    point = R @ np.array([p, q, patch.height(p, q)]) + patch.translation
    return LocalFrame(point, normal, d1, d2 / np.linalg.norm(d2), float(curv[0]), float(curv[1]))


def _newton_bp(patch, p, q):
    """Damped Newton on the normal/sightline alignment residual from one start."""
    k1, k2 = patch.kappa1, patch.kappa2
    c = patch.camera_in_patch

    def resid(p, q):
        sz = patch.height(p, q) - c[2]
        return np.array([p - c[0] + k1 * p * sz, q - c[1] + k2 * q * sz])

    r = resid(p, q)
    for _ in range(100):
        nr = np.linalg.norm(r)
        if nr < 1e-12:
            break
        sz = patch.height(p, q) - c[2]
        hp, hq = k1 * p, k2 * q
        jac = np.array([[1 + k1 * sz + k1 * p * hp, k1 * p * hq],
                        [k2 * q * hp, 1 + k2 * sz + k2 * q * hq]])
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(60):
            r_new = resid(p + lam * step[0], q + lam * step[1])
            if np.linalg.norm(r_new) <= nr:
                break
            lam *= 0.5
        p, q = p + lam * step[0], q + lam * step[1]
        r = r_new
        if lam * np.linalg.norm(step) < 1e-12:
            break
    return p, q


def alignment_residual(patch, p, q):
    """|n x s| for unit normal n and unit sightline s at patch point (p, q)."""
    n = _patch_normal(patch, np.float64(p), np.float64(q))
    s = np.array([p, q, patch.height(p, q)]) - patch.camera_in_patch
    return float(np.linalg.norm(np.cross(n, s / np.linalg.norm(s))))


def analytic_bp(patch, k):
    """Surface point whose normal is collinear with its sightline (multi-start Newton)."""
    ext = patch.extent
    grid = np.linspace(-ext, ext, 5)
    roots = []
    for q0 in grid:
        for p0 in grid:
            sol = _newton_bp(patch, p0, q0)
            if sol is None:
                continue
            p, q = sol
            if not (abs(p) <= ext and abs(q) <= ext):
                continue
            if alignment_residual(patch, p, q) > 1e-10:
                continue
            point = patch.rotation @ np.array([p, q, patch.height(p, q)]) + patch.translation
            if point[2] <= 0:
                continue
            # must be the first surface hit along its own sightline
            ray = point / np.linalg.norm(point)
            s, _, _ = _intersect(ray[None, :], patch)
            if not abs(s[0] - np.linalg.norm(point)) <= 1e-9 * np.linalg.norm(point):
                continue
            if all(math.hypot(p - a, q - b) > 1e-9 * ext for a, b in roots):
                roots.append((p, q))
    if not roots:
        raise NoSpecularityError("no specular point inside the patch extent")
    if len(roots) > 1:
        warnings.warn(f"{len(roots)} specular points found; using the first",
                      AmbiguousSpecularityWarning, stacklevel=2)
    p, q = roots[0]
    fr = local_frame(patch, p, q)
    normal = fr.normal if np.dot(fr.normal, fr.point) < 0 else -fr.normal
    bp_pixel = k.project(fr.point)
    return GroundTruth(bp_pixel=(float(bp_pixel[0]), float(bp_pixel[1])),
                       surface_point=fr.point, normal=normal, dir1=fr.dir1, dir2=fr.dir2,
                       kappa1=fr.kappa1, kappa2=fr.kappa2, patch_coords=(p, q),
                       residual=alignment_residual(patch, p, q))


def render_float(patches, k, rp=RenderParams()):
    """Unclipped-then-clipped float intensities in [0, 1], shape (height, width)."""
    if isinstance(patches, QuadricPatch):
        patches = [patches]
    ys, xs = np.mgrid[0:rp.height, 0:rp.width].astype(float)
    dirs = k.backproject(np.stack([xs, ys], axis=-1))
    best = np.full(xs.shape, np.inf)
    cosine = np.zeros(xs.shape)
    falloff = np.zeros(xs.shape)
    for patch in patches:
        s, p, q = _intersect(dirs, patch)
        hit = s < best
        if not np.any(hit):
            continue
        n = _patch_normal(patch, p, q) @ patch.rotation.T
        # collocated light: l = h = v = -d; two-sided so the visible side is lit
        cos_nv = np.abs(np.einsum("...i,...i->...", n, dirs))
        ref = patch.translation @ patch.translation if rp.falloff_distance is None \
            else rp.falloff_distance ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            fall = ref / (s * s)
        best = np.where(hit, s, best)
        cosine = np.where(hit, cos_nv, cosine)
        falloff = np.where(hit, fall, falloff)
    seen = np.isfinite(best)
    with np.errstate(divide="ignore"):
        spec = np.where(seen, np.exp(rp.shininess * np.log(np.where(seen, cosine, 1.0))), 0.0)
    value = np.where(seen, rp.diffuse_strength * cosine * falloff + rp.specular_strength * spec,
                     0.0)
    return np.clip(value, 0.0, 1.0)


def render(patches, k, rp=RenderParams()):
    """8-bit grey render of one or more patches."""
    return Image.from_float(render_float(patches, k, rp))
