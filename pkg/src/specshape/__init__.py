"""Surface normals, principal directions and curvature ratios from specular highlights."""
from .geometry import (CameraIntrinsics, Conic, GeometricEllipse, SurfacePatchEstimate,
                       fit_ellipse, reconstruct_patch)
from .imageio import Image, decode_image, encode_image
from .isophote import DetectorParams, extract_isophotes
from .pipeline import PipelineConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics", "Conic", "GeometricEllipse", "SurfacePatchEstimate", "fit_ellipse",
    "reconstruct_patch", "Image", "decode_image", "encode_image", "DetectorParams",
    "extract_isophotes", "PipelineConfig", "run_pipeline",
]
