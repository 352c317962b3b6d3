import numpy as np
import pytest

from darkroom import Camera, Projection, TriangleMesh
from darkroom.geometry import build_bvh
from darkroom.meshes import quad


def brute_force_intersect(mesh, origin, direction, t_min=0.0, t_max=np.inf):
    """Independent Moller-Trumbore scan over every triangle.

    Returns (t, triangle_id) of the nearest hit or (inf, -1). Ties on t
    resolve to the lowest triangle id (argmin semantics).
    """
    v = mesh.vertices
    tri = mesh.triangles
    v0 = v[tri[:, 0]]
    e1 = v[tri[:, 1]] - v0
    e2 = v[tri[:, 2]] - v0
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = o[None, :] - v0
        u = np.einsum("ij,ij->i", s, p) * inv
        q = np.cross(s, e1)
        vv = np.einsum("j,ij->i", d, q) * inv
        t = np.einsum("ij,ij->i", e2, q) * inv
    valid = (np.abs(det) >= 1e-9) & (u >= 0) & (u <= 1) & (vv >= 0) \
        & (u + vv <= 1) & (t >= t_min) & (t <= t_max)
    t = np.where(valid, t, np.inf)
    best = int(np.argmin(t))
    if not np.isfinite(t[best]):
        return np.inf, -1
    return float(t[best]), best


def random_mesh(n_triangles, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-scale, scale, size=(n_triangles, 3))
    offsets = rng.normal(scale=0.15 * scale, size=(n_triangles, 2, 3))
    verts = np.concatenate(
        [centers[:, None], centers[:, None] + offsets], axis=1).reshape(-1, 3)
    tris = np.arange(3 * n_triangles).reshape(-1, 3)
    return TriangleMesh(verts, tris)


def random_rays(n, seed, scale=3.0):
    rng = np.random.default_rng(seed)
    origins = rng.uniform(-scale, scale, size=(n, 3))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origins, dirs


def crease_scene(resolution=(128, 128)):
    """Two perpendicular half-planes meeting along the x axis, viewed from
    the open quadrant; returns (mesh, bvh, camera)."""
    v1, t1 = quad((-5, 0, 0), (5, 0, 0), (5, 0, 5), (-5, 0, 5))
    v2, t2 = quad((-5, 0, 0), (5, 0, 0), (5, 5, 0), (-5, 5, 0))
    mesh = TriangleMesh(np.vstack([v1, v2]), np.vstack([t1, t2 + 4]))
    camera = Camera(position=(0, 3, 3), target=(0, 0, 0),
                    projection=Projection("perspective", fov_y=50),
                    resolution=resolution)
    return mesh, build_bvh(mesh), camera


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the numba kernels once before anything is timed."""
    from darkroom.geometry import trace
    from darkroom.meshes import plane

    mesh = plane(size=2.0)
    bvh = build_bvh(mesh)
    trace(bvh, np.array([[0.0, 0.0, -1.0]]), np.array([[0.0, 0.0, 1.0]]))
    return True
