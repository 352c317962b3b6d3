"""Triangle meshes and accelerated ray intersection.

The BVH is stored as flat numpy arrays so the traversal kernel can run
under numba without touching Python objects. Backface hits are reported:
surfaces are shaded from both sides downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .errors import MeshError

DET_EPS = 1e-9
LEAF_SIZE = 4
SAH_BINS = 16


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    t_min: float = 0.0
    t_max: float = np.inf

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError("ray direction must be unit length")
        if self.t_min < 0 or not self.t_min < self.t_max:
            raise ValueError("require 0 <= t_min < t_max")


@dataclass(frozen=True)
class Hit:
    t: float
    triangle_id: int
    barycentric: tuple[float, float]  # (u, v); w = 1 - u - v


class TriangleMesh:
    """Indexed triangle surface with named per-vertex scalar fields."""

    def __init__(self, vertices, triangles, scalar_fields=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) array")
        if len(self.triangles) == 0:
            raise MeshError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle index out of range")
        self.scalar_fields = {}
        for name, values in (scalar_fields or {}).items():
            v = np.ascontiguousarray(values, dtype=np.float64)
            if v.shape != (len(self.vertices),):
                raise MeshError(
                    f"scalar field {name!r} has {v.shape[0] if v.ndim == 1 else '?'} "
                    f"values for {len(self.vertices)} vertices"
                )
            self.scalar_fields[name] = v

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def interpolate_scalar(self, hit: Hit, field: str) -> float:
        if field not in self.scalar_fields:
            raise KeyError(f"unknown scalar field {field!r}")
        i, j, k = self.triangles[hit.triangle_id]
        u, v = hit.barycentric
        w = 1.0 - u - v
        vals = self.scalar_fields[field]
        return float(w * vals[i] + u * vals[j] + v * vals[k])


def load_obj(path, fields_path=None) -> TriangleMesh:
    """Minimal ASCII OBJ reader: `v x y z` and triangulated `f` lines.

    `f` entries may carry `/vt/vn` suffixes, which are ignored. Per-vertex
    scalars come from an optional JSON sidecar {"fields": {name: [floats]}}.
    """
    vertices, triangles = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex line")
                vertices.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise MeshError(f"{path}:{lineno}: only triangulated faces supported")
                idx = [int(p.split("/")[0]) for p in parts[1:4]]
                triangles.append([i - 1 if i > 0 else len(vertices) + i for i in idx])
    scalar_fields = None
    if fields_path is not None:
        with open(fields_path) as fh:
            scalar_fields = json.load(fh).get("fields", {})
    return TriangleMesh(vertices, triangles, scalar_fields)


# ---------------------------------------------------------------------------
# BVH
# ---------------------------------------------------------------------------


@dataclass
class Bvh:
    """Flat binary BVH. Interior nodes store children, leaves store a slice
    of the triangle ordering permutation."""

    bounds_min: np.ndarray  # (n_nodes, 3)
    bounds_max: np.ndarray
    left: np.ndarray        # child index, -1 for leaves
    right: np.ndarray
    start: np.ndarray       # leaf slice into tri_order
    count: np.ndarray       # 0 for interior nodes
    tri_order: np.ndarray
    # cached triangle data for the traversal kernel
    v0: np.ndarray = field(repr=False, default=None)
    e1: np.ndarray = field(repr=False, default=None)
    e2: np.ndarray = field(repr=False, default=None)

    @property
    def n_nodes(self):
        return len(self.left)


def build_bvh(mesh: TriangleMesh) -> Bvh:
    """Binned-SAH build (16 bins, leaves of up to 4 triangles)."""
    tris = mesh.triangles
    verts = mesh.vertices
    corners = verts[tris]                       # (m, 3, 3)
    tri_min = corners.min(axis=1)
    tri_max = corners.max(axis=1)
    centroids = (tri_min + tri_max) * 0.5
    order = np.arange(len(tris), dtype=np.int64)

    bmin, bmax, left, right, start, count = [], [], [], [], [], []

    def new_node():
        bmin.append(None)
        bmax.append(None)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(left) - 1

    root = new_node()
    stack = [(root, 0, len(tris))]
    while stack:
        node, lo, hi = stack.pop()
        ids = order[lo:hi]
        bmin[node] = tri_min[ids].min(axis=0)
        bmax[node] = tri_max[ids].max(axis=0)
        n = hi - lo
        if n <= LEAF_SIZE:
            start[node], count[node] = lo, n
            continue
        split = _sah_split(centroids[ids], tri_min[ids], tri_max[ids])
        if split is None:
            mid = n // 2  # all centroids coincide: median split on arbitrary order
            sel = np.zeros(n, dtype=bool)
            sel[:mid] = True
        else:
            sel = split
            mid = int(sel.sum())
            if mid == 0 or mid == n:
                mid = n // 2
                sel = np.zeros(n, dtype=bool)
                sel[:mid] = True
        order[lo:hi] = np.concatenate([ids[sel], ids[~sel]])
        lchild, rchild = new_node(), new_node()
        left[node], right[node] = lchild, rchild
        stack.append((lchild, lo, lo + mid))
        stack.append((rchild, lo + mid, hi))

    i, j, k = tris[:, 0], tris[:, 1], tris[:, 2]
    v0 = np.ascontiguousarray(verts[i])
    return Bvh(
        bounds_min=np.ascontiguousarray(np.array(bmin), dtype=np.float64),
        bounds_max=np.ascontiguousarray(np.array(bmax), dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        start=np.array(start, dtype=np.int64),
        count=np.array(count, dtype=np.int64),
        tri_order=order,
        v0=v0,
        e1=np.ascontiguousarray(verts[j] - verts[i]),
        e2=np.ascontiguousarray(verts[k] - verts[i]),
    )


def _sah_split(cent, tmin, tmax):
    """Best binned-SAH partition mask on the widest centroid axis, or None."""
    lo = cent.min(axis=0)
    hi = cent.max(axis=0)
    axis = int(np.argmax(hi - lo))
    extent = hi[axis] - lo[axis]
    if extent <= 0:
        return None
    bin_of = np.minimum(
        ((cent[:, axis] - lo[axis]) / extent * SAH_BINS).astype(np.int64), SAH_BINS - 1
    )
    n = len(cent)
    counts = np.bincount(bin_of, minlength=SAH_BINS)
    # per-bin bounds, then prefix/suffix sweep for surface areas
    bin_min = np.full((SAH_BINS, 3), np.inf)
    bin_max = np.full((SAH_BINS, 3), -np.inf)
    for b in range(SAH_BINS):
        m = bin_of == b
        if m.any():
            bin_min[b] = tmin[m].min(axis=0)
            bin_max[b] = tmax[m].max(axis=0)

    def area(mn, mx):
        d = np.maximum(mx - mn, 0)
        return d[..., 0] * d[..., 1] + d[..., 1] * d[..., 2] + d[..., 0] * d[..., 2]

    lmin = np.minimum.accumulate(bin_min, axis=0)
    lmax = np.maximum.accumulate(bin_max, axis=0)
    rmin = np.minimum.accumulate(bin_min[::-1], axis=0)[::-1]
    rmax = np.maximum.accumulate(bin_max[::-1], axis=0)[::-1]
    lcount = np.cumsum(counts)
    best_cost, best_split = np.inf, None
    for b in range(SAH_BINS - 1):
        nl, nr = lcount[b], n - lcount[b]
        if nl == 0 or nr == 0:
            continue
        cost = area(lmin[b], lmax[b]) * nl + area(rmin[b + 1], rmax[b + 1]) * nr
        if cost < best_cost:
            best_cost, best_split = cost, b
    if best_split is None:
        return None
    return bin_of <= best_split


# ---------------------------------------------------------------------------
# Traversal kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _tri_hit(ox, oy, oz, dx, dy, dz, v0, e1, e2, tid):
    """Moller-Trumbore; returns (t, u, v) or t = -1 on miss."""
    px = dy * e2[tid, 2] - dz * e2[tid, 1]
    py = dz * e2[tid, 0] - dx * e2[tid, 2]
    pz = dx * e2[tid, 1] - dy * e2[tid, 0]
    det = e1[tid, 0] * px + e1[tid, 1] * py + e1[tid, 2] * pz
    if abs(det) < DET_EPS:
        return -1.0, 0.0, 0.0
    inv = 1.0 / det
    sx = ox - v0[tid, 0]
    sy = oy - v0[tid, 1]
    sz = oz - v0[tid, 2]
    u = (sx * px + sy * py + sz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0, 0.0, 0.0
    qx = sy * e1[tid, 2] - sz * e1[tid, 1]
    qy = sz * e1[tid, 0] - sx * e1[tid, 2]
    qz = sx * e1[tid, 1] - sy * e1[tid, 0]
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0, 0.0, 0.0
    t = (e2[tid, 0] * qx + e2[tid, 1] * qy + e2[tid, 2] * qz) * inv
    return t, u, v


@njit(cache=True, parallel=True)
def _trace_kernel(bmin, bmax, left, right, start, count, tri_order,
                  v0, e1, e2, origins, dirs, t_min, t_max,
                  out_t, out_id, out_u, out_v):
    n_rays = origins.shape[0]
    for r in prange(n_rays):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        inv_x = 1.0 / dx if dx != 0.0 else np.inf
        inv_y = 1.0 / dy if dy != 0.0 else np.inf
        inv_z = 1.0 / dz if dz != 0.0 else np.inf
        best_t = t_max
        best_id = -1
        best_u = 0.0
        best_v = 0.0
        stack = np.empty(64, dtype=np.int64)
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            # slab test against the current best interval
            tx1 = (bmin[node, 0] - ox) * inv_x
            tx2 = (bmax[node, 0] - ox) * inv_x
            tn = min(tx1, tx2)
            tf = max(tx1, tx2)
            ty1 = (bmin[node, 1] - oy) * inv_y
            ty2 = (bmax[node, 1] - oy) * inv_y
            tn = max(tn, min(ty1, ty2))
            tf = min(tf, max(ty1, ty2))
            tz1 = (bmin[node, 2] - oz) * inv_z
            tz2 = (bmax[node, 2] - oz) * inv_z
            tn = max(tn, min(tz1, tz2))
            tf = min(tf, max(tz1, tz2))
            if tn > tf or tf < t_min or tn > best_t:
                continue
            if count[node] > 0:
                for s in range(start[node], start[node] + count[node]):
                    tid = tri_order[s]
                    t, u, v = _tri_hit(ox, oy, oz, dx, dy, dz, v0, e1, e2, tid)
                    if t >= t_min and t <= t_max:
                        if t < best_t or (t == best_t and tid < best_id):
                            best_t, best_id, best_u, best_v = t, tid, u, v
            else:
                stack[sp] = left[node]
                sp += 1
                stack[sp] = right[node]
                sp += 1
        out_t[r] = best_t
        out_id[r] = best_id
        out_u[r] = best_u
        out_v[r] = best_v


def trace(bvh: Bvh, origins, dirs, t_min=0.0, t_max=np.inf):
    """Nearest hits for a ray batch.

    Returns (t, triangle_id, u, v); triangle_id is -1 and t is +inf where
    the ray misses. Equal-t ties resolve to the lowest triangle id.
    """
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    n = origins.shape[0]
    out_t = np.empty(n)
    out_id = np.empty(n, dtype=np.int64)
    out_u = np.empty(n)
    out_v = np.empty(n)
    _trace_kernel(bvh.bounds_min, bvh.bounds_max, bvh.left, bvh.right,
                  bvh.start, bvh.count, bvh.tri_order,
                  bvh.v0, bvh.e1, bvh.e2, origins, dirs,
                  float(t_min), float(t_max), out_t, out_id, out_u, out_v)
    out_t[out_id < 0] = np.inf
    return out_t, out_id, out_u, out_v


def intersect(bvh: Bvh, mesh: TriangleMesh, ray: Ray) -> Hit | None:
    """Nearest hit of a single ray, or None on a miss."""
    t, tid, u, v = trace(
        bvh,
        ray.origin[None, :],
        ray.direction[None, :],
        t_min=ray.t_min,
        t_max=ray.t_max,
    )
    if tid[0] < 0:
        return None
    return Hit(t=float(t[0]), triangle_id=int(tid[0]), barycentric=(float(u[0]), float(v[0])))


def interpolate_scalar(mesh: TriangleMesh, hit: Hit, field: str) -> float:
    return mesh.interpolate_scalar(hit, field)
