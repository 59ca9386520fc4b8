"""Specular blob detection and closed isophote extraction."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyImageError, InvalidParamsError, TooFewPointsError


@dataclass(frozen=True)
class DetectorParams:
    intensity_threshold: float = 0.92
    min_area: int = 20
    max_area: int = 5000
    border_margin: int = 2

    def __post_init__(self):
        if not 0 < self.intensity_threshold <= 1:
            raise InvalidParamsError("intensity_threshold must lie in (0, 1]")
        if not 0 < self.min_area < self.max_area:
            raise InvalidParamsError("need 0 < min_area < max_area")
        if self.border_margin < 0:
            raise InvalidParamsError("border_margin must be non-negative")


@dataclass(frozen=True)
class Component:
    id: int
    offset: tuple   # (row, col) of the crop's top-left corner
    mask: np.ndarray  # boolean crop
    area: int

    @property
    def first_pixel(self):
        r, c = np.argwhere(self.mask)[0]
        return (self.offset[0] + int(r), self.offset[1] + int(c))


@dataclass(frozen=True)
class Isophote:
    points: np.ndarray  # (n, 2) as (x, y) = (col, row); closure implied
    source_component_id: int


def specular_mask(img, params=DetectorParams()):
    """Pixels whose darkest channel reaches the intensity threshold."""
    data = img.data
    if data.size == 0:
        raise EmptyImageError("image has no pixels")
    darkest = data if data.ndim == 2 else data.min(axis=2)
    # sample / 255 >= t  <=>  sample >= ceil(255 t), compared in the 8-bit domain
    level = int(np.ceil(params.intensity_threshold * 255.0 - 1e-9))
    return darkest >= np.uint8(level)


_EIGHT = np.ones((3, 3), dtype=bool)


def connected_components(mask, params=DetectorParams()):
    """8-connected components passing the area and border filters, in raster order."""
    labels, count = ndimage.label(mask, structure=_EIGHT)
    if count == 0:
        return []
    h, w = mask.shape
    mg = params.border_margin
    out = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        rs, cs = sl
        if rs.start < mg or cs.start < mg or rs.stop > h - mg or cs.stop > w - mg:
            continue
        crop = labels[sl] == idx
        area = int(np.count_nonzero(crop))
        if not params.min_area <= area <= params.max_area:
            continue
        out.append(Component(idx, (rs.start, cs.start), crop, area))
    out.sort(key=lambda c: c.first_pixel)
    return [Component(i, c.offset, c.mask, c.area) for i, c in enumerate(out)]


# clockwise on screen (y down): W, NW, N, NE, E, SE, S, SW
_OFFSETS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_DIR_OF = {off: i for i, off in enumerate(_OFFSETS)}


def trace_outer_boundary(component):
    """Moore-neighbour trace of the outer boundary as (x, y) pixel coordinates.

    The loop starts at the top-most, left-most pixel and runs clockwise on
    screen, which is positive (counter-clockwise) orientation in raw (x, y)
    image coordinates. Pixels on one-pixel-wide parts are visited once per pass.
    """
    h, w = component.mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = component.mask
    grid = padded.tolist()
    rows, cols = np.nonzero(component.mask)
    start = (int(rows[0]) + 1, int(cols[0]) + 1)
    cur, back = start, 0
    loop = [start]
    state0 = None
    while True:
        for k in range(1, 9):
            d = (back + k) % 8
            dr, dc = _OFFSETS[d]
            r, c = cur[0] + dr, cur[1] + dc
            if grid[r][c]:
                pr, pc = _OFFSETS[(d - 1) % 8]
                # previously examined (background) cell, as seen from the new pixel
                back = _DIR_OF[(cur[0] + pr - r, cur[1] + pc - c)]
                cur = (r, c)
                break
        else:
            break  # isolated pixel
        if state0 is None:
            state0 = (cur, back)
        elif (cur, back) == state0:
            break
        loop.append(cur)
    loop.pop() if len(loop) > 1 and loop[-1] == start else None
    r0, c0 = component.offset
    pts = np.array(loop, dtype=float)
    return np.stack([pts[:, 1] - 1 + c0, pts[:, 0] - 1 + r0], axis=1)


def _periodic_basis(u, m):
    """Uniform periodic cubic B-spline design matrix for parameters u in [0, m)."""
    j = np.floor(u).astype(int)
    t = u - j
    t2, t3 = t * t, t * t * t
    weights = np.stack([(1 - t) ** 3 / 6.0,
                        (3 * t3 - 6 * t2 + 4) / 6.0,
                        (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0,
                        t3 / 6.0], axis=1)
    basis = np.zeros((len(u), m))
    rows = np.arange(len(u))
    for k in range(4):
        # m >= 4, so the four columns of a row are distinct
        basis[rows, (j - 1 + k) % m] += weights[:, k]
    return basis


def default_control_points(n):
    return max(8, n // 10)


def smooth_closed_curve(poly, control_points=None):
    """Least-squares periodic cubic B-spline fit, resampled at len(poly) points."""
    pts = np.asarray(poly, dtype=float)
    n = len(pts)
    if n < 8:
        raise TooFewPointsError(f"need at least 8 boundary points, got {n}")
    m = default_control_points(n) if control_points is None else int(control_points)
    if not 4 <= m <= n:
        raise InvalidParamsError(f"control point count must lie in [4, {n}], got {m}")
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    total = seg.sum()
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    u = m * s / total
    basis = _periodic_basis(u, m)
    # normal equations: the Gram matrix is banded and well conditioned for m <= n
    ctrl = np.linalg.solve(basis.T @ basis, basis.T @ pts)
    u_out = m * np.arange(n) / n
    return _periodic_basis(u_out, m) @ ctrl


def _isophote_for(component, control_points):
    boundary = trace_outer_boundary(component)
    if len(boundary) < 8:
        return None
    if callable(control_points):
        control_points = control_points(len(boundary))
    return Isophote(smooth_closed_curve(boundary, control_points), component.id)


def extract_isophotes(img, params=DetectorParams(), control_points=None, threads=1):
    """Mask, label, trace and smooth every candidate specularity in ``img``."""
    comps = connected_components(specular_mask(img, params), params)
    if threads > 1 and len(comps) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(pool.map(lambda c: _isophote_for(c, control_points), comps))
    else:
        found = [_isophote_for(c, control_points) for c in comps]
    return [iso for iso in found if iso is not None]
