import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specshape.errors import EmptyImageError, InvalidParamsError, TooFewPointsError
from specshape.geometry import fit_ellipse, conic_to_geometric
from specshape.imageio import Image
from specshape.isophote import (Component, DetectorParams, connected_components,
                                extract_isophotes, smooth_closed_curve, specular_mask,
                                trace_outer_boundary)
from specshape.render import analytic_bp


def blocks(shape, *rects):
    img = np.zeros(shape, dtype=np.uint8)
    for r, c, h, w in rects:
        img[r:r + h, c:c + w] = 255
    return img


def component_of(mask):
    mask = np.asarray(mask, dtype=bool)
    return Component(0, (0, 0), mask, int(mask.sum()))


def shoelace(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ---------------------------------------------------------------- mask

def test_gray_image_has_empty_mask():
    assert not specular_mask(Image(np.full((10, 12), 128, np.uint8))).any()


def test_white_square_mask():
    data = blocks((20, 20), (4, 6, 5, 5))
    np.testing.assert_array_equal(specular_mask(Image(data)), data > 0)


def test_mask_uses_darkest_channel():
    data = np.full((4, 4, 3), 255, np.uint8)
    data[0, 0, 2] = 200  # yellowish, not white
    mask = specular_mask(Image(data))
    assert not mask[0, 0] and mask.sum() == 15


def test_threshold_boundary_in_8_bits():
    data = np.array([[234, 235]], np.uint8)
    np.testing.assert_array_equal(specular_mask(Image(data)), [[False, True]])


def test_empty_image():
    with pytest.raises(EmptyImageError):
        specular_mask(Image(np.zeros((0, 5), np.uint8)))


def test_rendered_scene_has_component_at_bp(sphere_scene):
    k, patch, img = sphere_scene
    comps = connected_components(specular_mask(img))
    x, y = analytic_bp(patch, k).bp_pixel
    row, col = int(round(y)), int(round(x))
    hits = [c for c in comps
            if 0 <= row - c.offset[0] < c.mask.shape[0] and 0 <= col - c.offset[1] < c.mask.shape[1]
            and c.mask[row - c.offset[0], col - c.offset[1]]]
    assert len(hits) == 1


@settings(max_examples=60)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_mask_monotone_in_threshold(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    data = np.random.default_rng(seed).integers(0, 256, (16, 16, 3), dtype=np.uint8)
    img = Image(data)
    loose = specular_mask(img, DetectorParams(intensity_threshold=lo))
    tight = specular_mask(img, DetectorParams(intensity_threshold=hi))
    assert not np.any(tight & ~loose)


def test_detector_params_validation():
    with pytest.raises(InvalidParamsError):
        DetectorParams(intensity_threshold=0.0)
    with pytest.raises(InvalidParamsError):
        DetectorParams(min_area=50, max_area=50)


# ---------------------------------------------------------------- components

def test_two_squares():
    comps = connected_components(blocks((30, 30), (5, 5, 5, 5), (15, 18, 5, 5)) > 0)
    assert len(comps) == 2
    assert [c.first_pixel for c in comps] == [(5, 5), (15, 18)]
    assert [c.area for c in comps] == [25, 25]


def test_single_pixel_is_too_small():
    assert connected_components(blocks((10, 10), (5, 5, 1, 1)) > 0) == []


def test_diagonal_contact_joins_components():
    mask = blocks((20, 20), (3, 3, 3, 3), (6, 6, 3, 3), (9, 9, 3, 3)) > 0
    comps = connected_components(mask)
    assert len(comps) == 1 and comps[0].area == 27


def test_border_and_area_filters():
    mask = blocks((40, 40), (0, 10, 6, 6), (20, 20, 6, 6), (30, 2, 2, 2)) > 0
    comps = connected_components(mask, DetectorParams(min_area=5, max_area=40, border_margin=2))
    assert [c.first_pixel for c in comps] == [(20, 20)]
    assert connected_components(mask, DetectorParams(min_area=40, max_area=50)) == []


def test_components_ordered_top_then_left():
    mask = blocks((40, 40), (20, 3, 5, 5), (5, 30, 5, 5), (5, 10, 5, 5)) > 0
    comps = connected_components(mask)
    assert [c.first_pixel for c in comps] == [(5, 10), (5, 30), (20, 3)]
    assert [c.id for c in comps] == [0, 1, 2]


# ---------------------------------------------------------------- tracing

@pytest.mark.parametrize("shape, count", [((3, 3), 8), ((1, 30), 58), ((20, 20), 76)])
def test_boundary_lengths(shape, count):
    assert len(trace_outer_boundary(component_of(np.ones(shape)))) == count


def test_single_pixel_trace():
    np.testing.assert_array_equal(trace_outer_boundary(component_of([[1]])), [[0, 0]])


def _check_boundary(mask, pts):
    padded = np.pad(mask, 1)
    step = np.abs(np.diff(np.vstack([pts, pts[:1]]), axis=0))
    assert np.all(step.max(axis=1) == 1), "consecutive points must be 8-adjacent"
    for x, y in pts.astype(int):
        assert mask[y, x]
        assert not padded[y:y + 3, x:x + 3].all(), "boundary pixel must touch the exterior"


@settings(max_examples=80)
@given(st.integers(0, 2 ** 32 - 1))
def test_trace_closed_and_adjacent_on_random_blobs(seed):
    rng = np.random.default_rng(seed)
    from scipy import ndimage
    mask = ndimage.binary_opening(rng.random((14, 14)) < 0.6)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3)))
    if n == 0:
        return
    blob = labels == 1
    pts = trace_outer_boundary(component_of(blob))
    if len(pts) > 1:
        _check_boundary(blob, pts)
    # every pixel of a hole-free blob with a 4-neighbour outside lies on the trace
    filled = ndimage.binary_fill_holes(blob)
    if np.array_equal(filled, blob):
        edge = blob & ~ndimage.binary_erosion(blob, border_value=0)
        traced = {(int(x), int(y)) for x, y in pts}
        assert traced == {(c, r) for r, c in zip(*np.nonzero(edge))}


def test_trace_orientation_is_positive_in_image_coordinates():
    yy, xx = np.mgrid[0:30, 0:30]
    disc = (xx - 14.5) ** 2 + (yy - 14.5) ** 2 <= 12 ** 2
    pts = trace_outer_boundary(component_of(disc))
    assert shoelace(pts) > 0


def test_trace_uses_component_offset():
    comp = Component(0, (10, 20), np.ones((3, 3), bool), 9)
    pts = trace_outer_boundary(comp)
    assert pts[:, 0].min() == 20 and pts[:, 1].min() == 10


# ---------------------------------------------------------------- smoothing

def test_circle_is_reproduced():
    t = 2 * np.pi * np.arange(64) / 64
    pts = np.column_stack([10 * np.cos(t), 10 * np.sin(t)])
    out = smooth_closed_curve(pts)
    assert len(out) == 64
    assert np.max(np.abs(np.linalg.norm(out, axis=1) - 10)) <= 0.05


def test_square_staircase_rounding():
    pts = trace_outer_boundary(component_of(np.ones((20, 20))))
    out = smooth_closed_curve(pts)
    # distance to the perimeter of the pixel-centre square [0, 19]^2
    inside = np.minimum.reduce([out[:, 0], 19 - out[:, 0], out[:, 1], 19 - out[:, 1]])
    outside = np.hypot(np.maximum(0, np.maximum(-out[:, 0], out[:, 0] - 19)),
                       np.maximum(0, np.maximum(-out[:, 1], out[:, 1] - 19)))
    dev = np.where(outside > 0, outside, np.abs(inside))
    assert dev.max() <= 1.5
    # corners get rounded off
    corner = np.hypot(out[:, 0], out[:, 1]).min()
    assert corner > 0.2


def test_alternating_noise_reduced():
    n = 120
    t = 2 * np.pi * np.arange(n) / n
    noise = 0.5 * (-1.0) ** np.arange(n)
    r = 20 + noise
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    out = smooth_closed_curve(pts)
    before = math.sqrt(np.mean(noise ** 2))
    after = math.sqrt(np.mean((np.linalg.norm(out, axis=1) - 20) ** 2))
    assert after * 3 <= before


def test_smoothing_needs_eight_points():
    with pytest.raises(TooFewPointsError):
        smooth_closed_curve(np.zeros((7, 2)))


def test_control_point_bounds():
    pts = np.column_stack([np.cos(np.arange(10)), np.sin(np.arange(10))])
    with pytest.raises(InvalidParamsError):
        smooth_closed_curve(pts, control_points=11)


@pytest.mark.parametrize("radius, ratio, angle", [(8, 1.0, 0.0), (15, 0.5, 0.4), (25, 0.3, 2.0)])
def test_smoothing_preserves_centroid_and_area(radius, ratio, angle):
    yy, xx = np.mgrid[0:80, 0:80].astype(float)
    c, s = math.cos(angle), math.sin(angle)
    u = c * (xx - 40.3) + s * (yy - 39.6)
    v = -s * (xx - 40.3) + c * (yy - 39.6)
    mask = (u / radius) ** 2 + (v / (radius * ratio)) ** 2 <= 1
    raw = trace_outer_boundary(component_of(mask))
    out = smooth_closed_curve(raw)
    assert np.linalg.norm(out.mean(axis=0) - raw.mean(axis=0)) <= 1.0
    assert abs(shoelace(out) - mask.sum()) <= 0.15 * mask.sum()


# ---------------------------------------------------------------- extraction

def test_sphere_render_gives_one_round_isophote(sphere_scene):
    _, _, img = sphere_scene
    isos = extract_isophotes(img)
    assert len(isos) == 1
    e = conic_to_geometric(fit_ellipse(isos[0].points)[0])
    assert e.eccentricity <= 0.05


def test_black_image_gives_nothing():
    assert extract_isophotes(Image(np.zeros((50, 60), np.uint8))) == []


def test_two_patch_render_gives_two_isophotes(two_patch):
    _, img, _ = two_patch
    isos = extract_isophotes(img)
    assert [i.source_component_id for i in isos] == [0, 1]


def test_extraction_independent_of_threads(two_patch):
    _, img, _ = two_patch
    one = extract_isophotes(img, threads=1)
    four = extract_isophotes(img, threads=4)
    assert len(one) == len(four)
    for a, b in zip(one, four):
        np.testing.assert_array_equal(a.points, b.points)
