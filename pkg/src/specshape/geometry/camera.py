"""Pinhole camera intrinsics and the pixel <-> normalized-plane mapping."""
from dataclasses import dataclass

import numpy as np

from ..errors import BehindCameraError, ConfigError


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole calibration. Pixel centres sit at integer coordinates, y points down."""

    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy", "skew"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ConfigError(f"intrinsic {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @classmethod
    def from_string(cls, text):
        """Parse ``"fx,fy,cx,cy[,skew]"``."""
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad intrinsics {text!r}") from exc
        if len(values) not in (4, 5):
            raise ConfigError(f"intrinsics need 4 or 5 comma-separated values, got {text!r}")
        return cls(*values)

    @classmethod
    def from_matrix(cls, K):
        K = np.asarray(K, dtype=float)
        return cls(K[0, 0], K[1, 1], K[0, 2], K[1, 2], K[0, 1])

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy, "skew": self.skew}

    @property
    def K(self):
        return np.array([[self.fx, self.skew, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def K_inv(self):
        # closed form inverse of the upper-triangular K
        fx, fy, s, cx, cy = self.fx, self.fy, self.skew, self.cx, self.cy
        return np.array([[1.0 / fx, -s / (fx * fy), (s * cy - cx * fy) / (fx * fy)],
                         [0.0, 1.0 / fy, -cy / fy],
                         [0.0, 0.0, 1.0]])

    def to_normalized(self, pixels):
        """Map pixel coordinates (..., 2) to the normalized image plane."""
        pixels = np.asarray(pixels, dtype=float)
        y = (pixels[..., 1] - self.cy) / self.fy
        x = (pixels[..., 0] - self.cx - self.skew * y) / self.fx
        return np.stack([x, y], axis=-1)

    def to_pixels(self, normalized):
        normalized = np.asarray(normalized, dtype=float)
        x, y = normalized[..., 0], normalized[..., 1]
        return np.stack([self.fx * x + self.skew * y + self.cx, self.fy * y + self.cy], axis=-1)

    def backproject(self, pixels):
        """Unit ray direction(s) through the given pixel(s)."""
        xy = self.to_normalized(pixels)
        rays = np.concatenate([xy, np.ones(xy.shape[:-1] + (1,))], axis=-1)
        return rays / np.linalg.norm(rays, axis=-1, keepdims=True)

    def project(self, points):
        """Pixel coordinates of camera-frame 3D point(s); raises for z <= 0."""
        points = np.asarray(points, dtype=float)
        z = points[..., 2]
        if np.any(z <= 0):
            raise BehindCameraError("cannot project a point with z <= 0")
        return self.to_pixels(points[..., :2] / z[..., None])


def backproject(k, pixel):
    return k.backproject(pixel)


def project(k, point):
    return k.project(point)
