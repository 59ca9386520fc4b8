import math
import os
import warnings

import numpy as np
import pytest
from hypothesis import settings

from specshape.geometry import CameraIntrinsics
from specshape.render import QuadricPatch, RenderParams, analytic_bp, render
from specshape.scenarios import two_patch_scene

# reproducible property runs; HYPOTHESIS_PROFILE=explore lifts this
settings.register_profile("ci", derandomize=True, deadline=None)
settings.register_profile("explore", deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def k500():
    return CameraIntrinsics(500.0, 500.0, 320.0, 240.0)


@pytest.fixture
def k_odd():
    # principal point on a pixel centre of an odd-sized grid: exact mirror symmetry
    return CameraIntrinsics(500.0, 500.0, 60.0, 60.0)


@pytest.fixture
def rp_odd():
    return RenderParams(width=121, height=121)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sphere_scene():
    """Frontoparallel umbilic patch on the optical axis, renderer defaults."""
    k = CameraIntrinsics(500.0, 500.0, 319.5, 239.5)
    patch = QuadricPatch(5.0, 5.0, np.eye(3), np.array([0.0, 0.0, 0.1]))
    return k, patch, render(patch, k)


@pytest.fixture(scope="session")
def two_patch():
    scene = two_patch_scene()
    img = render(list(scene.patches), scene.intrinsics, scene.render_params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        truths = [analytic_bp(p, scene.intrinsics) for p in scene.patches]
    return scene, img, truths


def rotation_about(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    cross = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    return c * np.eye(3) + s * cross + (1 - c) * np.outer(axis, axis)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)
