"""Procedural demo meshes (also used heavily by the test-suite fixtures)."""

from __future__ import annotations

import numpy as np

from .geometry import TriangleMesh


def icosphere(subdivisions=3, radius=1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Subdivided icosahedron projected onto the sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    midpoint_cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in midpoint_cache:
            m = np.add(verts[i], verts[j]) / 2.0
            m /= np.linalg.norm(m)
            verts.append(tuple(m))
            midpoint_cache[key] = len(verts) - 1
        return midpoint_cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    v = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(v, np.array(faces), {"height": v[:, 1].copy()})


def torus(major_radius=1.0, minor_radius=0.35, segments=48, sides=24,
          center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    us = np.arange(segments) / segments * 2.0 * np.pi
    vs = np.arange(sides) / sides * 2.0 * np.pi
    u, v = np.meshgrid(us, vs, indexing="ij")
    x = (major_radius + minor_radius * np.cos(v)) * np.cos(u)
    y = minor_radius * np.sin(v)
    z = (major_radius + minor_radius * np.cos(v)) * np.sin(u)
    verts = np.stack([x, y, z], axis=-1).reshape(-1, 3) + np.asarray(center)

    tris = []
    for i in range(segments):
        for j in range(sides):
            a = i * sides + j
            b = ((i + 1) % segments) * sides + j
            c = i * sides + (j + 1) % sides
            d = ((i + 1) % segments) * sides + (j + 1) % sides
            tris.append((a, b, c))
            tris.append((b, d, c))
    return TriangleMesh(verts, np.array(tris), {"height": verts[:, 1].copy()})


def quad(p00, p10, p11, p01) -> tuple[np.ndarray, np.ndarray]:
    verts = np.array([p00, p10, p11, p01], dtype=np.float64)
    tris = np.array([(0, 1, 2), (0, 2, 3)])
    return verts, tris


def plane(center=(0.0, 0.0, 0.0), normal_axis=2, size=10.0) -> TriangleMesh:
    """Axis-aligned square made of two triangles."""
    c = np.asarray(center, dtype=np.float64)
    a1, a2 = [i for i in range(3) if i != normal_axis]
    h = size / 2.0
    verts = np.tile(c, (4, 1))
    offsets = [(-h, -h), (h, -h), (h, h), (-h, h)]
    for i, (d1, d2) in enumerate(offsets):
        verts[i, a1] += d1
        verts[i, a2] += d2
    return TriangleMesh(verts, np.array([(0, 1, 2), (0, 2, 3)]))


def write_obj(mesh: TriangleMesh, path):
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]} {v[1]} {v[2]}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def write_fields_json(mesh: TriangleMesh, path):
    import json

    with open(path, "w") as fh:
        json.dump({"fields": {k: list(map(float, v))
                              for k, v in mesh.scalar_fields.items()}}, fh)
