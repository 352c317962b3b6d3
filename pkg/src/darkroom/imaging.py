"""G-buffer rendering and image-space geometry reconstruction."""

from __future__ import annotations

import numpy as np

from . import geometry
from .camera import Camera

DEPTH = "depth"
POSITION = "position"
NORMAL = "normal"

# depth steps larger than this multiple of the image-wide median step are
# treated as silhouettes when differencing positions
DISCONTINUITY_FACTOR = 10.0


class GBuffer:
    """Named float32 channel stack at a fixed resolution.

    "depth" is always present (background = +inf). Scalar channels are
    named "scalar:<field>" with NaN background. "position" and "normal"
    hold 3 planes each.
    """

    def __init__(self, width, height, channels, camera: Camera):
        self.width = int(width)
        self.height = int(height)
        self.channels = {}
        for name, data in channels.items():
            arr = np.asarray(data, dtype=np.float32)
            if arr.shape[:2] != (self.height, self.width):
                raise ValueError(f"channel {name!r} resolution mismatch")
            self.channels[name] = arr
        if DEPTH not in self.channels:
            raise ValueError("GBuffer requires a depth channel")
        self.camera = camera

    def __getitem__(self, name):
        return self.channels[name]

    def __contains__(self, name):
        return name in self.channels

    @property
    def depth(self):
        return self.channels[DEPTH]

    def channel_names(self):
        return list(self.channels)


def render_gbuffer(mesh, bvh, camera: Camera, fields=(), emit_position=False,
                   emit_normal=False, jitter_seed=None) -> GBuffer:
    """One primary ray per pixel against the mesh.

    Depth is Euclidean camera distance for perspective projections and
    axial distance for orthographic ones; both equal the ray parameter t.
    """
    for f in fields:
        if f not in mesh.scalar_fields:
            raise KeyError(f"unknown scalar field {f!r}")
    w, h = camera.resolution
    jitter = None
    if jitter_seed is not None:
        rng = np.random.default_rng(jitter_seed)
        jitter = rng.random((h, w, 2))
    origins, dirs = camera.ray_grid(jitter)
    t, tid, u, v = geometry.trace(bvh, origins, dirs, t_min=1e-9)
    hit = tid >= 0
    channels = {DEPTH: t.reshape(h, w)}

    tri = mesh.triangles[np.where(hit, tid, 0)]
    uu = u[:, None]
    vv = v[:, None]
    ww = 1.0 - uu - vv
    for f in fields:
        vals = mesh.scalar_fields[f]
        s = ww[:, 0] * vals[tri[:, 0]] + uu[:, 0] * vals[tri[:, 1]] + vv[:, 0] * vals[tri[:, 2]]
        channels[f"scalar:{f}"] = np.where(hit, s, np.nan).reshape(h, w)
    if emit_position:
        p = origins + dirs * t[:, None]
        p[~hit] = np.nan
        channels[POSITION] = p.reshape(h, w, 3)
    if emit_normal:
        n = np.cross(bvh.e1[np.where(hit, tid, 0)], bvh.e2[np.where(hit, tid, 0)])
        n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-30)
        n = np.where((np.sum(n * dirs, axis=1) > 0)[:, None], -n, n)  # face the camera
        n[~hit] = np.nan
        channels[NORMAL] = n.reshape(h, w, 3)
    return GBuffer(w, h, channels, camera)


def reconstruct_positions(depth, camera: Camera):
    """World positions from a depth channel, inverting the render
    convention; background (non-finite depth) becomes NaN."""
    depth = np.asarray(depth, dtype=np.float64)
    h, w = depth.shape
    origins, dirs = camera.ray_grid()
    t = depth.ravel()
    finite = np.isfinite(t)
    p = origins + dirs * np.where(finite, t, 0.0)[:, None]
    p[~finite] = np.nan
    return p.reshape(h, w, 3).astype(np.float32)


def reconstruct_normals(positions, camera: Camera):
    """Normals from screen-space position differences.

    Central differences where both neighbors are usable, one-sided at
    boundaries and across depth discontinuities; oriented to face the
    camera. Pixels without a usable difference in either direction are NaN.
    """
    p = np.asarray(positions, dtype=np.float64)
    h, w = p.shape[:2]

    fwd_x = np.full_like(p, np.nan)
    fwd_x[:, :-1] = p[:, 1:] - p[:, :-1]
    bwd_x = np.full_like(p, np.nan)
    bwd_x[:, 1:] = fwd_x[:, :-1]
    fwd_y = np.full_like(p, np.nan)
    fwd_y[:-1, :] = p[1:, :] - p[:-1, :]
    bwd_y = np.full_like(p, np.nan)
    bwd_y[1:, :] = fwd_y[:-1, :]

    def usable(diff):
        n = np.linalg.norm(diff, axis=2)
        finite = np.isfinite(n)
        steps = n[finite]
        if steps.size:
            cutoff = DISCONTINUITY_FACTOR * max(np.median(steps), 1e-30)
            finite &= n <= cutoff
        return finite

    def pick(fwd, bwd):
        ok_f, ok_b = usable(fwd), usable(bwd)
        central = ok_f & ok_b
        d = np.full_like(p, np.nan)
        d[central] = 0.5 * (fwd[central] + bwd[central])
        only_f = ok_f & ~central
        d[only_f] = fwd[only_f]
        only_b = ok_b & ~central
        d[only_b] = bwd[only_b]
        return d

    dpdx = pick(fwd_x, bwd_x)
    dpdy = pick(fwd_y, bwd_y)
    n = np.cross(dpdx, dpdy)
    norm = np.linalg.norm(n, axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = n / norm
    n[norm[..., 0] < 1e-30] = np.nan

    if camera.projection.kind == "perspective":
        view = p - camera.position[None, None, :]
    else:
        view = np.broadcast_to(camera.forward, p.shape).copy()
    flip = np.nansum(n * view, axis=2) > 0
    n[flip] = -n[flip]
    n[~np.isfinite(p).all(axis=2)] = np.nan
    return n.astype(np.float32)
