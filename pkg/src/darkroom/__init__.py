"""Deferred shading of triangle-mesh G-buffer image databases."""

from .camera import Camera, Projection, SamplingGrid, fibonacci_sphere_grid, manual_grid
from .cinema import CinemaDatabase, read_database, write_database
from .geometry import Bvh, Hit, Ray, TriangleMesh, build_bvh, intersect
from .imaging import GBuffer, reconstruct_normals, reconstruct_positions, render_gbuffer
from .passes import ColorMap, RgbaImage, SsaoParams
from .pipeline import PipelineGraph

__all__ = [
    "Bvh", "Camera", "CinemaDatabase", "ColorMap", "GBuffer", "Hit",
    "PipelineGraph", "Projection", "Ray", "RgbaImage", "SamplingGrid",
    "SsaoParams", "TriangleMesh", "build_bvh", "fibonacci_sphere_grid",
    "intersect", "manual_grid", "read_database", "reconstruct_normals",
    "reconstruct_positions", "render_gbuffer", "write_database",
]

__version__ = "0.1.0"
