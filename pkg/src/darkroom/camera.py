"""Pinhole and orthographic cameras, ray generation, sampling grids."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CameraError
from .geometry import Ray

DEFAULT_FOV_Y = 45.0
DEFAULT_UP = (0.0, 1.0, 0.0)
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class Projection:
    kind: str                 # "perspective" | "orthographic"
    fov_y: float = DEFAULT_FOV_Y   # degrees, perspective only
    height: float = 1.0            # world units, orthographic only

    def __post_init__(self):
        if self.kind not in ("perspective", "orthographic"):
            raise CameraError(f"unknown projection {self.kind!r}")
        if self.kind == "perspective" and not 0.0 < self.fov_y < 180.0:
            raise CameraError("fov_y must lie in (0, 180) degrees")
        if self.kind == "orthographic" and self.height <= 0:
            raise CameraError("orthographic height must be positive")

    def to_dict(self):
        if self.kind == "perspective":
            return {"type": "perspective", "fov_y": self.fov_y}
        return {"type": "orthographic", "height": self.height}

    @classmethod
    def from_dict(cls, d):
        if d["type"] == "perspective":
            return cls("perspective", fov_y=float(d.get("fov_y", DEFAULT_FOV_Y)))
        if d["type"] == "orthographic":
            return cls("orthographic", height=float(d["height"]))
        raise CameraError(f"unknown projection {d.get('type')!r}")


class Camera:
    """Look-at camera. Pixel (0, 0) is top-left; +x right, +y down."""

    def __init__(self, position, target, up=DEFAULT_UP, projection=None,
                 resolution=(256, 256)):
        self.position = np.asarray(position, dtype=np.float64)
        self.target = np.asarray(target, dtype=np.float64)
        self.projection = projection or Projection("perspective")
        w, h = int(resolution[0]), int(resolution[1])
        if w < 1 or h < 1:
            raise CameraError("resolution must be at least 1x1")
        self.resolution = (w, h)

        view = self.target - self.position
        norm = np.linalg.norm(view)
        if norm == 0:
            raise CameraError("camera position coincides with target")
        self.forward = view / norm
        up = np.asarray(up, dtype=np.float64)
        up = up / np.linalg.norm(up)
        if abs(float(self.forward @ up)) > 1.0 - 1e-6:
            up = np.array([1.0, 0.0, 0.0])  # pole fallback
            if abs(float(self.forward @ up)) > 1.0 - 1e-6:
                up = np.array([0.0, 0.0, 1.0])
        if math.acos(min(1.0, abs(float(self.forward @ up)))) <= 1e-4:
            raise CameraError("up vector parallel to view direction")
        self.up_hint = up
        right = np.cross(self.forward, up)
        self.right = right / np.linalg.norm(right)
        self.up = np.cross(self.right, self.forward)

    @property
    def aspect(self):
        return self.resolution[0] / self.resolution[1]

    def _half_extents(self):
        """Half width/height of the image plane at unit distance
        (perspective) or in world units (orthographic)."""
        if self.projection.kind == "perspective":
            half_h = math.tan(math.radians(self.projection.fov_y) / 2.0)
        else:
            half_h = self.projection.height / 2.0
        return half_h * self.aspect, half_h

    def generate_ray(self, pixel, jitter=(0.5, 0.5)) -> Ray:
        x, y = pixel
        w, h = self.resolution
        if not (0 <= x < w and 0 <= y < h):
            raise CameraError(f"pixel {pixel} outside resolution {self.resolution}")
        o, d = self._rays_for(np.array([x + jitter[0]]), np.array([y + jitter[1]]))
        return Ray(origin=o[0], direction=d[0])

    def _rays_for(self, px, py):
        """Vectorized ray origins/directions for fractional pixel coords."""
        w, h = self.resolution
        half_w, half_h = self._half_extents()
        sx = (px / w) * 2.0 - 1.0
        sy = -((py / h) * 2.0 - 1.0)
        u = sx * half_w
        v = sy * half_h
        if self.projection.kind == "perspective":
            d = (self.forward[None, :]
                 + u[:, None] * self.right[None, :]
                 + v[:, None] * self.up[None, :])
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            o = np.broadcast_to(self.position, d.shape).copy()
        else:
            o = (self.position[None, :]
                 + u[:, None] * self.right[None, :]
                 + v[:, None] * self.up[None, :])
            d = np.broadcast_to(self.forward, o.shape).copy()
        return o, d

    def ray_grid(self, jitter=None):
        """Origins/directions for every pixel center, row-major.

        jitter: optional (H, W, 2) offsets in [0, 1); default centers."""
        w, h = self.resolution
        xs, ys = np.meshgrid(np.arange(w), np.arange(h))
        if jitter is None:
            px = xs.ravel() + 0.5
            py = ys.ravel() + 0.5
        else:
            px = xs.ravel() + jitter[..., 0].ravel()
            py = ys.ravel() + jitter[..., 1].ravel()
        return self._rays_for(px.astype(np.float64), py.astype(np.float64))

    def project(self, points):
        """World points -> (px, py, depth). Inverse of ray generation.

        depth follows the render convention: Euclidean distance for
        perspective, axial distance for orthographic. Points behind the
        camera get depth <= 0 and unreliable pixel coords."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        d = p - self.position[None, :]
        z = d @ self.forward
        w, h = self.resolution
        half_w, half_h = self._half_extents()
        if self.projection.kind == "perspective":
            with np.errstate(divide="ignore", invalid="ignore"):
                sx = (d @ self.right) / (z * half_w)
                sy = (d @ self.up) / (z * half_h)
            depth = np.linalg.norm(d, axis=1)
            depth = np.where(z > 0, depth, -depth)
        else:
            sx = (d @ self.right) / half_w
            sy = (d @ self.up) / half_h
            depth = z
        px = (sx + 1.0) * 0.5 * w
        py = (1.0 - sy) * 0.5 * h
        return px, py, depth

    def world_units_per_pixel(self, axial_depth):
        """Footprint of one pixel (height-wise) at the given axial depth."""
        _, half_h = self._half_extents()
        if self.projection.kind == "perspective":
            return 2.0 * np.asarray(axial_depth) * half_h / self.resolution[1]
        footprint = 2.0 * half_h / self.resolution[1]
        return np.full_like(np.asarray(axial_depth, dtype=float), footprint)

    def to_dict(self):
        return {
            "position": list(map(float, self.position)),
            "target": list(map(float, self.target)),
            "up": list(map(float, self.up_hint)),
            "projection": self.projection.to_dict(),
            "resolution": list(self.resolution),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            position=d["position"],
            target=d["target"],
            up=d.get("up", DEFAULT_UP),
            projection=Projection.from_dict(d["projection"]),
            resolution=tuple(d["resolution"]),
        )


@dataclass(frozen=True)
class SamplingGrid:
    cameras: tuple
    axis_values: dict  # axis name -> per-camera values

    def __post_init__(self):
        if not self.cameras:
            raise CameraError("sampling grid needs at least one camera")
        res = self.cameras[0].resolution
        if any(c.resolution != res for c in self.cameras):
            raise CameraError("all grid cameras must share one resolution")
        for name, vals in self.axis_values.items():
            if len(vals) != len(self.cameras):
                raise CameraError(f"axis {name!r} has wrong length")

    def __len__(self):
        return len(self.cameras)


def fibonacci_sphere_grid(center, radius, n, resolution=(256, 256),
                          projection=None, target=None) -> SamplingGrid:
    """n cameras on a Fibonacci spiral over the sphere around `center`,
    all targeting the center. Axis columns phi/theta are in degrees."""
    if n < 1:
        raise CameraError("need at least one camera")
    if radius <= 0:
        raise CameraError("radius must be positive")
    center = np.asarray(center, dtype=np.float64)
    cameras, phis, thetas = [], [], []
    for i in range(n):
        y = 1.0 - 2.0 * (i + 0.5) / n          # elevation axis = +y
        r_xz = math.sqrt(max(0.0, 1.0 - y * y))
        ang = i * GOLDEN_ANGLE
        direction = np.array([math.cos(ang) * r_xz, y, math.sin(ang) * r_xz])
        phi = math.degrees(ang) % 360.0
        theta = math.degrees(math.asin(max(-1.0, min(1.0, y))))
        cameras.append(Camera(
            position=center + radius * direction,
            target=center if target is None else target,
            projection=projection,
            resolution=resolution,
        ))
        phis.append(phi)
        thetas.append(theta)
    return SamplingGrid(tuple(cameras), {"phi": phis, "theta": thetas})


def manual_grid(entries, target, up=DEFAULT_UP, projection=None,
                resolution=(256, 256)) -> SamplingGrid:
    """One camera per (position, axis_values) entry with shared calibration."""
    if not entries:
        raise CameraError("manual grid needs at least one entry")
    axis_names = list(entries[0][1].keys())
    cameras = []
    axis_values = {name: [] for name in axis_names}
    for position, values in entries:
        if set(values) != set(axis_names):
            raise CameraError("inconsistent axis names across entries")
        cameras.append(Camera(position=position, target=target, up=up,
                              projection=projection, resolution=resolution))
        for name in axis_names:
            axis_values[name].append(values[name])
    return SamplingGrid(tuple(cameras), axis_values)


def load_grid_json(path) -> SamplingGrid:
    """Grid description file; see README for the schema."""
    with open(path) as fh:
        spec = json.load(fh)
    mode = spec.get("mode")
    resolution = tuple(spec.get("resolution", (256, 256)))
    projection = (Projection.from_dict(spec["projection"])
                  if "projection" in spec else None)
    if mode == "fibonacci":
        return fibonacci_sphere_grid(
            center=spec.get("center", [0, 0, 0]),
            radius=float(spec["radius"]),
            n=int(spec["n"]),
            resolution=resolution,
            projection=projection,
        )
    if mode == "manual":
        entries = [(c["position"], c.get("axes", {})) for c in spec["cameras"]]
        return manual_grid(
            entries,
            target=spec.get("center", [0, 0, 0]),
            up=spec.get("up", DEFAULT_UP),
            projection=projection,
            resolution=resolution,
        )
    raise CameraError(f"unknown grid mode {mode!r}")
