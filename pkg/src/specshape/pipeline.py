"""Single-image reconstruction: isophotes -> ellipses -> local surface frames."""
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, DegenerateConfigurationError, InvalidParamsError,
                     NotAnEllipseError, TooFewPointsError)
from .geometry import CameraIntrinsics, fit_ellipse, reconstruct_patch
from .isophote import (DetectorParams, connected_components, smooth_closed_curve,
                       specular_mask, trace_outer_boundary)

REPORT_SCHEMA = "specshape.report/1"
THREADS_ENV = "SPECSHAPE_THREADS"


@dataclass(frozen=True)
class PipelineConfig:
    intrinsics: CameraIntrinsics
    detector: DetectorParams = field(default_factory=DetectorParams)
    threshold: float = 0.05
    control_points: int = None  # None: max(8, n // 10) per isophote
    threads: int = 1

    def __post_init__(self):
        if not self.threshold > 0:
            raise ConfigError("ellipticity threshold must be positive")
        if self.control_points is not None and self.control_points < 4:
            raise ConfigError("control_points must be at least 4")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")


def thread_cap(requested):
    """Honour SPECSHAPE_THREADS as an upper bound on worker threads."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, min(requested, int(env)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return requested


@dataclass
class PatchRecord:
    id: int
    component_id: int
    accepted: bool
    reason: str = None
    estimate: object = None
    residual: float = None

    def to_dict(self):
        e = self.estimate
        d = {"id": self.id, "component_id": self.component_id, "accepted": self.accepted,
             "reason": self.reason,
             "residual": self.residual}
        if e is None:
            d.update(bp=None, normal=None, u1=None, u2=None, v3=None, normal_v3_angle_deg=None,
                     rho=None, eccentricity=None, circle_degenerate=None, ellipse=None)
        else:
            d.update(bp=list(e.bp), normal=e.normal.tolist(), u1=e.u1.tolist(), u2=e.u2.tolist(),
                     v3=e.v3.tolist(), normal_v3_angle_deg=math.degrees(e.normal_v3_angle),
                     rho=e.axis_ratio, eccentricity=e.eccentricity,
                     circle_degenerate=e.circle_degenerate,
                     ellipse={"center": list(e.ellipse.center),
                              "semi_major": e.ellipse.semi_major,
                              "semi_minor": e.ellipse.semi_minor,
                              "angle": e.ellipse.angle})
        return d


@dataclass
class ReconstructionReport:
    width: int
    height: int
    config: PipelineConfig
    records: list
    timing_ms: float = 0.0

    @property
    def accepted(self):
        return [r for r in self.records if r.accepted]

    def to_dict(self, deterministic=False):
        n_acc = sum(r.accepted for r in self.records)
        cfg = self.config
        return {
            "schema": REPORT_SCHEMA,
            "image": {"width": self.width, "height": self.height},
            "intrinsics": cfg.intrinsics.to_dict(),
            "threshold": cfg.threshold,
            "detector": {"intensity_threshold": cfg.detector.intensity_threshold,
                         "min_area": cfg.detector.min_area,
                         "max_area": cfg.detector.max_area,
                         "border_margin": cfg.detector.border_margin},
            "counts": {"detected": len(self.records), "accepted": n_acc,
                       "rejected": len(self.records) - n_acc},
            "timing_ms": 0.0 if deterministic else self.timing_ms,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self, deterministic=False):
        return dumps(self.to_dict(deterministic))


def _round9(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        # shortest repr of the 9-significant-digit value; -0.0 folded to 0.0
        return float(f"{x:.9g}") + 0.0
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def dumps(obj):
    """JSON text with every float cut to 9 significant digits."""
    return json.dumps(_round9(obj), indent=2) + "\n"


def _process(component, config):
    boundary = trace_outer_boundary(component)
    rec = PatchRecord(id=component.id, component_id=component.id, accepted=False)
    try:
        points = smooth_closed_curve(boundary, config.control_points)
        conic, residual = fit_ellipse(points)
        rec.residual = residual
        rec.estimate = reconstruct_patch(conic, config.intrinsics, residual)
    except (TooFewPointsError, InvalidParamsError):
        # also covers a fixed control-point count larger than the boundary
        rec.reason = "too_few_points"
        return rec
    except DegenerateConfigurationError:
        rec.reason = "degenerate"
        return rec
    except NotAnEllipseError:
        rec.reason = "not_an_ellipse"
        return rec
    if residual <= config.threshold:
        rec.accepted = True
    else:
        rec.reason = "ellipticity"
    return rec


def run_pipeline(img, config):
    """Detect specularities in ``img`` and reconstruct a surface frame at each one."""
    start = time.perf_counter()
    comps = connected_components(specular_mask(img, config.detector), config.detector)
    threads = thread_cap(config.threads)
    if threads > 1 and len(comps) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: _process(c, config), comps))
    else:
        records = [_process(c, config) for c in comps]
    elapsed = 1000.0 * (time.perf_counter() - start)
    return ReconstructionReport(img.width, img.height, config, records, elapsed)
