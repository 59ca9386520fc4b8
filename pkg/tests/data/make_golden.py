"""Regenerate the two-patch overlay golden image.

Run from the repository root after checking that the reconstruction still matches
ground truth: ``python3 tests/data/make_golden.py``.
"""
from pathlib import Path

from specshape.evaluation import overlay
from specshape.imageio import write_image
from specshape.pipeline import PipelineConfig, run_pipeline
from specshape.render import render
from specshape.scenarios import two_patch_scene

scene = two_patch_scene()
img = render(list(scene.patches), scene.intrinsics, scene.render_params)
report = run_pipeline(img, PipelineConfig(scene.intrinsics))
assert len(report.accepted) == 2
write_image(Path(__file__).with_name("two_patch_overlay.ppm"),
            overlay(img, [r.estimate for r in report.accepted], scene.intrinsics))
