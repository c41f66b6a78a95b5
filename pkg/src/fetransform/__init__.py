"""Basis transformations for mapped finite elements on triangles."""

from .geometry import Triangle, affine_map, edge_frames, reference_triangle
from .kernels import HAS_NUMBA, use_backend
from .reference_element import build_nodal_basis, element, reference_basis
from .transform import TransformMatrix, compute_transform, oracle_transform

__all__ = [
    "HAS_NUMBA",
    "Triangle",
    "TransformMatrix",
    "affine_map",
    "build_nodal_basis",
    "compute_transform",
    "edge_frames",
    "element",
    "oracle_transform",
    "reference_basis",
    "reference_triangle",
    "use_backend",
]
