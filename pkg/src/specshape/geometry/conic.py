"""Conic matrices, ellipse parameters, and direct least-squares ellipse fitting."""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import (DegenerateConfigurationError, NotAnEllipseError, NotSymmetricError,
                      TooFewPointsError, ZeroMatrixError)


@dataclass(frozen=True)
class Conic:
    """3x3 symmetric matrix C with (x, y, 1) C (x, y, 1)^T = 0 on the curve."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"conic matrix must be 3x3, got {m.shape}")
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if np.max(np.abs(m - m.T)) > 1e-12 * scale:
            raise NotSymmetricError("conic matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __call__(self, points):
        """Evaluate the quadratic form at 2D point(s)."""
        p = np.asarray(points, dtype=float)
        h = np.concatenate([p, np.ones(p.shape[:-1] + (1,))], axis=-1)
        return np.einsum("...i,ij,...j->...", h, self.m, h)


@dataclass(frozen=True)
class GeometricEllipse:
    center: tuple
    semi_major: float
    semi_minor: float
    angle: float  # major-axis direction from +x, in [0, pi)

    def __post_init__(self):
        a, b = float(self.semi_major), float(self.semi_minor)
        if not (a >= b > 0):
            raise ValueError(f"need semi_major >= semi_minor > 0, got {a}, {b}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "semi_major", a)
        object.__setattr__(self, "semi_minor", b)
        object.__setattr__(self, "angle", float(self.angle) % math.pi)

    @property
    def axis_ratio(self):
        return self.semi_minor / self.semi_major

    @property
    def eccentricity(self):
        return math.sqrt(1.0 - self.axis_ratio ** 2)

    def sample(self, n, phase=0.0):
        t = phase + 2.0 * np.pi * np.arange(n) / n
        c, s = math.cos(self.angle), math.sin(self.angle)
        x = self.semi_major * np.cos(t)
        y = self.semi_minor * np.sin(t)
        return np.stack([self.center[0] + c * x - s * y, self.center[1] + s * x + c * y], axis=1)


def _as_matrix(c):
    return c.m if isinstance(c, Conic) else np.asarray(c, dtype=float)


def negative_eigenvalue_count(m):
    """Number of negative eigenvalues of a symmetric 3x3 matrix.

    All roots of the characteristic polynomial are real, so Descartes' rule of
    signs applied to p(-x) counts the negative ones exactly.
    """
    (a, b, c), (_, d, e), (_, _, f) = m.tolist()
    trace = a + d + f
    minors = a * d - b * b + a * f - c * c + d * f - e * e
    det = a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
    signs = [1.0] + [x for x in (trace, minors, det) if x != 0.0]
    return sum((x > 0) != (y > 0) for x, y in zip(signs, signs[1:]))


def sign_normalize(c):
    """Scale to unit Frobenius norm; flip the sign when two eigenvalues are negative."""
    m = _as_matrix(c)
    norm = float(np.linalg.norm(m))
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroMatrixError("conic matrix is zero")
    m = m / norm
    if negative_eigenvalue_count(m) == 2:
        m = -m
    return Conic(m)


def _ellipse_parts(m):
    """Center, 2x2 block, and value at the center of a sign-normalized conic."""
    a = m[:2, :2]
    det = a[0, 0] * a[1, 1] - a[0, 1] ** 2
    if not det > 0 or a[0, 0] <= 0:
        raise NotAnEllipseError("quadratic part is not positive definite")
    bx, by = m[0, 2], m[1, 2]
    x0 = (-a[1, 1] * bx + a[0, 1] * by) / det
    y0 = (a[0, 1] * bx - a[0, 0] * by) / det
    # full quadratic at the computed centre: stationary there, so centre
    # round-off enters only at second order
    f0 = (m[2, 2] + 2.0 * (bx * x0 + by * y0)
          + a[0, 0] * x0 * x0 + 2.0 * a[0, 1] * x0 * y0 + a[1, 1] * y0 * y0)
    if not f0 < 0:
        raise NotAnEllipseError("conic has no real points")
    return (x0, y0), a, f0


def conic_to_geometric(c):
    """Centre, semi-axes and major-axis angle of a real ellipse conic.

    A definite 2x2 block with the opposite sign at the centre is exactly the
    (2, 1) signature case restricted to ellipses; anything else is rejected.
    """
    m = _as_matrix(c)
    norm = float(np.linalg.norm(m))
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroMatrixError("conic matrix is zero")
    m = m / norm
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    (x0, y0), a, f0 = _ellipse_parts(m)
    p, r, s = a[0, 0], a[0, 1], a[1, 1]
    mean = 0.5 * (p + s)
    half = math.hypot(0.5 * (p - s), r)
    small, large = mean - half, mean + half
    if small <= 0:
        raise NotAnEllipseError("quadratic part is not positive definite")
    angle = 0.5 * math.atan2(-2.0 * r, s - p)
    return GeometricEllipse((x0, y0), math.sqrt(-f0 / small), math.sqrt(-f0 / large), angle)


def geometric_to_conic(e):
    c, s = math.cos(e.angle), math.sin(e.angle)
    rot = np.array([[c, -s], [s, c]])
    a = rot @ np.diag([1.0 / e.semi_major ** 2, 1.0 / e.semi_minor ** 2]) @ rot.T
    x0 = np.array(e.center)
    m = np.empty((3, 3))
    m[:2, :2] = a
    m[:2, 2] = m[2, :2] = -a @ x0
    m[2, 2] = x0 @ a @ x0 - 1.0
    return sign_normalize(m)


def transfer_to_normalized(c, k):
    """Map a pixel-plane conic to the normalized image plane: K^T C K."""
    K = k.K
    return sign_normalize(K.T @ _as_matrix(c) @ K)


def _ellipse_distances(e, points):
    """Unsigned geometric distance from each point to the ellipse boundary."""
    a, b = e.semi_major, e.semi_minor
    c, s = math.cos(e.angle), math.sin(e.angle)
    d = np.asarray(points, dtype=float) - np.array(e.center)
    u = np.abs(c * d[:, 0] + s * d[:, 1])
    v = np.abs(-s * d[:, 0] + c * d[:, 1])
    # closest point (a^2 u/(t+a^2), b^2 v/(t+b^2)) where F(t) = 0. F is convex and
    # decreasing on t > -b^2, so Newton climbs monotonically from any t with
    # F(t) >= 0. One step from t = 0, clamped to a lower bound with F >= 0, gets
    # there in a single move for points near the curve.
    lower = np.maximum(-b * b + b * v, -a * a + a * u)
    ua, vb = (a * u) ** 2, (b * v) ** 2
    t = np.zeros_like(u)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for it in range(100):
            pa, pb = t + a * a, t + b * b
            f = ua / (pa * pa) + vb / (pb * pb) - 1.0
            df = -2.0 * (ua / (pa * pa * pa) + vb / (pb * pb * pb))
            step = -f / df
            if it == 0:
                t = np.maximum(t + np.where(np.isfinite(step), step, 0.0), lower)
                continue
            step = np.where((f > 0) & np.isfinite(step), step, 0.0)
            t = t + step
            if not np.any(step > 1e-12 * (np.abs(t) + a * a)):
                break
    with np.errstate(divide="ignore", invalid="ignore"):
        px = a * a * u / (t + a * a)
        py = b * b * v / (t + b * b)
    dist = np.hypot(u - px, v - py)
    # points on the minor axis inside the ellipse: closest point is the co-vertex
    inside_axis = ~np.isfinite(dist)
    if np.any(inside_axis):
        dist[inside_axis] = np.abs(b - v[inside_axis])
    # centre-region points whose closest point lies on the major axis fold (t -> -b^2)
    fold = (u < (a * a - b * b) / a) & (v == 0)
    if np.any(fold):
        x = a * a * u[fold] / (a * a - b * b)
        dist[fold] = np.hypot(u[fold] - x, b * np.sqrt(np.maximum(0.0, 1 - (x / a) ** 2)))
    return dist


def ellipse_residual(e, points):
    """RMS geometric distance divided by the semi-major axis."""
    d = _ellipse_distances(e, points)
    return float(np.sqrt(np.mean(d * d)) / e.semi_major)


# inverse of the ellipse constraint matrix restricted to the quadratic terms
_C1_INV = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])


def fit_ellipse(points):
    """Ellipse-specific direct least-squares fit (numerically stable variant).

    Returns the sign-normalized pixel-plane conic and the geometric residual
    (RMS point-to-ellipse distance over the semi-major axis).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) points, got shape {pts.shape}")
    if len(pts) < 6:
        raise TooFewPointsError(f"need at least 6 points, got {len(pts)}")
    mean = pts.mean(axis=0)
    d = pts - mean
    scatter = d.T @ d / len(d)
    ev = np.linalg.eigvalsh(scatter)
    if ev[1] <= 0 or ev[0] <= 1e-12 * ev[1]:
        raise DegenerateConfigurationError("points are collinear or coincident")
    scale = math.sqrt(ev[0] + ev[1])
    x, y = d[:, 0] / scale, d[:, 1] / scale

    d1 = np.stack([x * x, x * y, y * y], axis=1)
    d2 = np.stack([x, y, np.ones_like(x)], axis=1)
    s1, s2, s3 = d1.T @ d1, d1.T @ d2, d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError("linear scatter matrix is singular") from exc
    reduced = _C1_INV @ (s1 + s2 @ t)
    vals, vecs = np.linalg.eig(reduced)
    vecs = np.real(vecs)
    cond = 4.0 * vecs[0] * vecs[2] - vecs[1] ** 2
    candidates = [i for i in range(3) if cond[i] > 0]
    if not candidates:
        raise NotAnEllipseError("no ellipse-constrained solution")
    full = np.concatenate([s1, s2], axis=1), np.concatenate([s2.T, s3], axis=1)
    scatter6 = np.concatenate(full, axis=0)

    def cost(i):
        a1 = vecs[:, i]
        coef = np.concatenate([a1, t @ a1])
        return coef @ scatter6 @ coef / cond[i]

    best = min(candidates, key=cost)
    a1 = vecs[:, best]
    A, B, Cq, D, E, F = np.concatenate([a1, t @ a1])
    local = np.array([[A, B / 2, D / 2], [B / 2, Cq, E / 2], [D / 2, E / 2, F]])
    # pixel -> normalized-fit coordinates
    to_local = np.array([[1 / scale, 0, -mean[0] / scale],
                         [0, 1 / scale, -mean[1] / scale],
                         [0, 0, 1.0]])
    m = to_local.T @ local @ to_local
    conic = sign_normalize(0.5 * (m + m.T))
    return conic, ellipse_residual(conic_to_geometric(conic), pts)
