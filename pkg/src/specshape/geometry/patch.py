"""Per-specularity normal, principal directions and curvature ratio."""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import NotAnEllipseError
from .conic import GeometricEllipse, conic_to_geometric, transfer_to_normalized
from .eig import eig_sym3

# below this eccentricity the principal directions are not meaningful
CIRCLE_ECCENTRICITY = 0.05


@dataclass(frozen=True)
class SurfacePatchEstimate:
    bp: tuple
    normal: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    axis_ratio: float
    eccentricity: float
    fit_residual: float
    ellipse: GeometricEllipse
    # eigenvector of the negative conic eigenvalue, oriented like ``normal``
    v3: np.ndarray

    @property
    def circle_degenerate(self):
        return self.eccentricity < CIRCLE_ECCENTRICITY

    @property
    def normal_v3_angle(self):
        """Angle in radians between the sightline normal and u1 x u2."""
        c = abs(float(np.dot(self.normal, np.cross(self.u1, self.u2))))
        return math.acos(min(1.0, c))


def normal_from_center(k, bp):
    """Unit sightline through the brightest point, pointing into the scene."""
    n = k.K_inv @ np.array([bp[0], bp[1], 1.0])
    return n / np.linalg.norm(n)


def reconstruct_patch(c, k, residual=0.0):
    """Recover the local surface frame and curvature ratio from a pixel-plane ellipse."""
    ellipse = conic_to_geometric(c)
    bp = ellipse.center
    normal = normal_from_center(k, bp)
    cn = transfer_to_normalized(c, k)
    eig = eig_sym3(cn.m)
    vals = eig.values
    tol = 1e-14 * max(1.0, float(np.max(np.abs(vals))))
    if not (vals[0] < -tol and vals[1] > tol):
        raise NotAnEllipseError(f"normalized conic signature is not (2, 1): {vals}")
    mu1, mu2 = vals[1], vals[2]
    u1 = eig.v2.copy()
    u2 = eig.v3.copy()
    if np.dot(np.cross(u1, u2), normal) < 0:
        u2 = -u2
    v3 = eig.v1.copy()
    if np.dot(v3, normal) < 0:
        v3 = -v3
    rho = math.sqrt(mu1 / mu2)
    ecc = math.sqrt(1.0 - rho * rho)
    return SurfacePatchEstimate(bp=bp, normal=normal, u1=u1, u2=u2, axis_ratio=rho,
                                eccentricity=ecc, fit_residual=float(residual),
                                ellipse=ellipse, v3=v3)
