from .camera import CameraIntrinsics, backproject, project
from .conic import (Conic, GeometricEllipse, conic_to_geometric, ellipse_residual, fit_ellipse,
                    geometric_to_conic, sign_normalize, transfer_to_normalized)
from .eig import SymEig3, eig_sym3
from .patch import SurfacePatchEstimate, normal_from_center, reconstruct_patch

__all__ = [
    "CameraIntrinsics", "backproject", "project",
    "Conic", "GeometricEllipse", "conic_to_geometric", "ellipse_residual", "fit_ellipse",
    "geometric_to_conic", "sign_normalize", "transfer_to_normalized",
    "SymEig3", "eig_sym3",
    "SurfacePatchEstimate", "normal_from_center", "reconstruct_patch",
]
