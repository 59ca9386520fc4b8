import json

import numpy as np
import pytest

from specshape.errors import ConfigError
from specshape.evaluation import angular_error_unsigned
from specshape.geometry import CameraIntrinsics
from specshape.imageio import Image
from specshape.pipeline import THREADS_ENV, PipelineConfig, dumps, run_pipeline, thread_cap

RECORD_KEYS = {"id", "component_id", "accepted", "reason", "residual", "bp", "normal", "u1",
               "u2", "v3", "normal_v3_angle_deg", "rho", "eccentricity", "circle_degenerate",
               "ellipse"}
K80 = CameraIntrinsics(500.0, 500.0, 40.0, 40.0)


def cross_image():
    d = np.zeros((80, 80), np.uint8)
    d[20:60, 35:45] = 255
    d[35:45, 20:60] = 255
    return Image(d)


def test_sphere_gives_one_accepted_record(sphere_scene):
    k, _, img = sphere_scene
    report = run_pipeline(img, PipelineConfig(k))
    assert len(report.records) == 1
    rec = report.records[0]
    assert rec.accepted and rec.reason is None
    assert rec.estimate.axis_ratio >= 0.95
    assert angular_error_unsigned(rec.estimate.normal, np.array([0, 0, 1.0])) <= 0.5


def test_black_image_gives_empty_report(k500):
    report = run_pipeline(Image(np.zeros((480, 640), np.uint8)), PipelineConfig(k500))
    doc = json.loads(report.to_json())
    assert doc["records"] == []
    assert doc["counts"] == {"detected": 0, "accepted": 0, "rejected": 0}


def test_non_elliptical_blob_is_rejected():
    report = run_pipeline(cross_image(), PipelineConfig(K80))
    (rec,) = report.records
    assert rec.residual > 0.05
    assert not rec.accepted and rec.reason == "ellipticity"
    # the estimate is still reported for inspection
    assert rec.estimate is not None


def test_threshold_decides_acceptance(sphere_scene):
    k, _, img = sphere_scene
    residual = run_pipeline(img, PipelineConfig(k)).records[0].residual
    strict = run_pipeline(img, PipelineConfig(k, threshold=residual / 2)).records[0]
    assert not strict.accepted and strict.reason == "ellipticity"
    loose = run_pipeline(img, PipelineConfig(k, threshold=residual)).records[0]
    assert loose.accepted


def test_too_many_control_points_recorded_not_raised(sphere_scene):
    k, _, img = sphere_scene
    rec = run_pipeline(img, PipelineConfig(k, control_points=10_000)).records[0]
    assert not rec.accepted and rec.reason == "too_few_points"
    assert set(rec.to_dict()) == RECORD_KEYS


def test_schema_keys(two_patch):
    scene, img, _ = two_patch
    doc = json.loads(run_pipeline(img, PipelineConfig(scene.intrinsics)).to_json())
    assert set(doc) == {"schema", "image", "intrinsics", "threshold", "detector", "counts",
                        "timing_ms", "records"}
    assert doc["schema"] == "specshape.report/1"
    for rec in doc["records"]:
        assert set(rec) == RECORD_KEYS
    assert doc["counts"]["detected"] == doc["counts"]["accepted"] + doc["counts"]["rejected"]


def test_record_order_and_thread_independence(two_patch, monkeypatch):
    scene, img, _ = two_patch
    monkeypatch.delenv(THREADS_ENV, raising=False)
    texts = {run_pipeline(img, PipelineConfig(scene.intrinsics, threads=n)).to_json(True)
             for n in (1, 2, 4, 8)}
    assert len(texts) == 1
    ids = [r["id"] for r in json.loads(texts.pop())["records"]]
    assert ids == sorted(ids)


def test_deterministic_mode_zeroes_timing(sphere_scene):
    k, _, img = sphere_scene
    report = run_pipeline(img, PipelineConfig(k))
    assert report.timing_ms > 0
    assert json.loads(report.to_json(True))["timing_ms"] == 0.0


def test_nine_significant_digits():
    text = dumps({"a": 1 / 3, "b": [2.0, -0.0, 123456789012.0, 1e-20], "c": float("nan"),
                  "d": True, "e": None, "f": np.float64(2 / 3), "g": np.int64(7)})
    doc = json.loads(text)
    assert doc["a"] == 0.333333333 and doc["f"] == 0.666666667
    assert doc["b"] == [2.0, 0.0, 123456789000.0, 1e-20]
    assert "-0.0" not in text
    assert doc["c"] is None and doc["d"] is True and doc["g"] == 7


@pytest.mark.parametrize("env, requested, expected", [(None, 4, 4), ("2", 8, 2), ("16", 3, 3),
                                                      ("0", 4, 1)])
def test_thread_cap(monkeypatch, env, requested, expected):
    if env is None:
        monkeypatch.delenv(THREADS_ENV, raising=False)
    else:
        monkeypatch.setenv(THREADS_ENV, env)
    assert thread_cap(requested) == expected


def test_thread_cap_rejects_garbage(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        thread_cap(2)


@pytest.mark.parametrize("kwargs", [dict(threshold=0.0), dict(threshold=-1.0),
                                    dict(control_points=3), dict(threads=0)])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        PipelineConfig(K80, **kwargs)
