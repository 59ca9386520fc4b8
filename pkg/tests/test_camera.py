import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specshape.errors import BehindCameraError, ConfigError
from specshape.geometry import CameraIntrinsics, backproject, normal_from_center, project

IDENTITY = CameraIntrinsics(1.0, 1.0, 0.0, 0.0)


def test_identity_backprojection_of_origin():
    np.testing.assert_allclose(backproject(IDENTITY, (0.0, 0.0)), [0, 0, 1])


def test_identity_projection():
    np.testing.assert_allclose(project(IDENTITY, (1.0, 1.0, 2.0)), [0.5, 0.5])


def test_principal_point_projection(k500):
    np.testing.assert_allclose(project(k500, (0.0, 0.0, 10.0)), [320, 240])


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_behind_camera(k500, z):
    with pytest.raises(BehindCameraError):
        project(k500, (0.1, 0.2, z))


def test_k_inverse_matches_numpy():
    k = CameraIntrinsics(812.5, 790.0, 301.25, 255.75, skew=1.5)
    np.testing.assert_allclose(k.K_inv @ k.K, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(k.K_inv, np.linalg.inv(k.K), rtol=1e-14, atol=1e-18)


@pytest.mark.parametrize("text, expected", [
    ("500,500,320,240", (500, 500, 320, 240, 0)),
    (" 400, 410 ,300,200, 2 ", (400, 410, 300, 200, 2)),
])
def test_from_string(text, expected):
    k = CameraIntrinsics.from_string(text)
    assert (k.fx, k.fy, k.cx, k.cy, k.skew) == expected


@pytest.mark.parametrize("text", ["500,500,320", "a,b,c,d", "0,500,320,240", "500,-1,1,1",
                                  "nan,500,320,240"])
def test_bad_intrinsics(text):
    with pytest.raises(ConfigError):
        CameraIntrinsics.from_string(text)


@pytest.mark.parametrize("bp, expected", [
    ((0.0, 0.0), (0, 0, 1)),
    ((1.0, 0.0), (2 ** -0.5, 0, 2 ** -0.5)),
])
def test_normal_from_center_identity(bp, expected):
    np.testing.assert_allclose(normal_from_center(IDENTITY, bp), expected, atol=1e-15)


def test_normal_from_center_principal_point(k500):
    np.testing.assert_allclose(normal_from_center(k500, (320.0, 240.0)), [0, 0, 1])


@settings(max_examples=200, deadline=None)
@given(px=st.floats(-2000, 2000), py=st.floats(-2000, 2000), s=st.floats(1e-3, 1e4),
       skew=st.floats(-5, 5))
def test_project_backproject_round_trip(px, py, s, skew):
    k = CameraIntrinsics(640.0, 655.0, 319.5, 241.0, skew=skew)
    ray = backproject(k, (px, py))
    assert abs(np.linalg.norm(ray) - 1) < 1e-12
    assert ray[2] > 0
    np.testing.assert_allclose(project(k, ray * s), [px, py], atol=1e-9)
