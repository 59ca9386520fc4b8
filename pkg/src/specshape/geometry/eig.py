"""Symmetric 3x3 eigendecomposition by cyclic Jacobi rotations.

Written out in plain floats rather than delegated to LAPACK so the eigenvector
signs and ordering are identical on every platform.
"""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import NotSymmetricError

_MAX_SWEEPS = 50


@dataclass(frozen=True)
class SymEig3:
    """Ascending eigenvalues and a right-handed orthonormal eigenvector frame.

    ``vectors`` holds v1, v2, v3 as its *columns*, so ``M = V diag(w) V^T``.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def v1(self):
        return self.vectors[:, 0]

    @property
    def v2(self):
        return self.vectors[:, 1]

    @property
    def v3(self):
        return self.vectors[:, 2]

    def reconstruct(self):
        return self.vectors @ np.diag(self.values) @ self.vectors.T


def _jacobi(a):
    """Diagonalize the symmetric 3x3 list-of-lists ``a`` in place."""
    v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    for _ in range(_MAX_SWEEPS):
        off = abs(a[0][1]) + abs(a[0][2]) + abs(a[1][2])
        if off == 0.0:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p][q]
            if apq == 0.0:
                continue
            app, aqq = a[p][p], a[q][q]
            # skip rotations that can no longer change the diagonal
            if abs(apq) * 1e18 < abs(app) and abs(apq) * 1e18 < abs(aqq):
                a[p][q] = a[q][p] = 0.0
                continue
            theta = (aqq - app) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            tau = s / (1.0 + c)
            a[p][p] = app - t * apq
            a[q][q] = aqq + t * apq
            a[p][q] = a[q][p] = 0.0
            r = 3 - p - q
            arp, arq = a[r][p], a[r][q]
            a[r][p] = a[p][r] = arp - s * (arq + tau * arp)
            a[r][q] = a[q][r] = arq + s * (arp - tau * arq)
            for row in v:
                vp, vq = row[p], row[q]
                row[p] = vp - s * (vq + tau * vp)
                row[q] = vq + s * (vp - tau * vq)
    return [a[0][0], a[1][1], a[2][2]], v


def _sign_fix(vec):
    mags = [abs(c) for c in vec]
    top = max(mags)
    # lowest index among (near-)ties carries the positive sign
    idx = next(i for i, m in enumerate(mags) if m >= top * (1.0 - 1e-12))
    return [-c for c in vec] if vec[idx] < 0 else vec


def eig_sym3(m, tol=1e-12):
    """Eigen-decompose a symmetric 3x3 matrix.

    Eigenvalues come back ascending. v1 and v2 carry the sign convention that
    their largest-magnitude component is positive; v3 is then v1 x v2, which
    makes the frame right-handed.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > tol * scale:
        raise NotSymmetricError("matrix is not symmetric")
    sym = 0.5 * (m + m.T)
    top = float(np.max(np.abs(sym)))
    if top == 0.0:
        return SymEig3(np.zeros(3), np.eye(3))
    # work at unit magnitude; power-of-two scaling is exact and the rotations
    # are scale-free, so only extreme inputs see any difference
    exp = math.frexp(top)[1]
    sym = np.ldexp(sym, -exp)
    values, v = _jacobi(sym.tolist())
    order = sorted(range(3), key=lambda i: values[i])
    cols = [[v[r][i] for r in range(3)] for i in order]
    v1 = _sign_fix(_unit(cols[0]))
    v2 = _sign_fix(_unit(cols[1]))
    v3 = _cross(v1, v2)
    vecs = np.array([v1, v2, v3]).T
    vals = np.array([values[i] for i in order])
    resid = sym @ vecs[:, 2] - vals[2] * vecs[:, 2]
    if np.max(np.abs(resid)) > 1e-9 * max(np.linalg.norm(sym), 1e-300):
        raise FloatingPointError("third eigenvector failed its residual check")
    return SymEig3(np.ldexp(vals, exp), vecs)


def _unit(vec):
    n = math.sqrt(vec[0] ** 2 + vec[1] ** 2 + vec[2] ** 2)
    return [vec[0] / n, vec[1] / n, vec[2] / n]


def _cross(a, b):
    return [a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]]
