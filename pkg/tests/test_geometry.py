import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkroom.errors import MeshError
from darkroom.geometry import (
    Bvh,
    Hit,
    Ray,
    TriangleMesh,
    build_bvh,
    intersect,
    interpolate_scalar,
    load_obj,
    trace,
)

from conftest import brute_force_intersect, random_mesh, random_rays


def single_triangle(z=1.0):
    return TriangleMesh(
        [(-1, -1, z), (1, -1, z), (0, 1, z)], [(0, 1, 2)],
        {"f": [0.0, 1.0, 0.0]})


class TestTriangleMesh:
    def test_rejects_empty(self):
        with pytest.raises(MeshError):
            TriangleMesh([(0, 0, 0)], np.zeros((0, 3), dtype=int))

    def test_rejects_bad_index(self):
        with pytest.raises(MeshError):
            TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 3)])

    def test_rejects_short_scalar_field(self):
        with pytest.raises(MeshError):
            TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)],
                         {"f": [1.0, 2.0]})

    def test_zero_area_triangle_allowed_and_never_hit(self):
        mesh = TriangleMesh([(0, 0, 1), (1, 0, 1), (2, 0, 1)], [(0, 1, 2)])
        bvh = build_bvh(mesh)
        ray = Ray(origin=(0.5, 0.0, 0.0), direction=(0, 0, 1))
        assert intersect(bvh, mesh, ray) is None


class TestRay:
    def test_requires_unit_direction(self):
        with pytest.raises(ValueError):
            Ray(origin=(0, 0, 0), direction=(0, 0, 2))

    def test_requires_valid_interval(self):
        with pytest.raises(ValueError):
            Ray(origin=(0, 0, 0), direction=(0, 0, 1), t_min=2.0, t_max=1.0)


class TestBuild:
    def test_single_triangle_single_leaf(self):
        mesh = single_triangle()
        bvh = build_bvh(mesh)
        assert bvh.n_nodes == 1
        assert bvh.count[0] == 1
        np.testing.assert_allclose(bvh.bounds_min[0], [-1, -1, 1])
        np.testing.assert_allclose(bvh.bounds_max[0], [1, 1, 1])

    def test_root_box_is_union_of_leaves(self):
        mesh = TriangleMesh(
            [(-10, 0, 0), (-9, 0, 0), (-9, 1, 0),
             (10, 0, 5), (11, 0, 5), (11, 1, 5)],
            [(0, 1, 2), (3, 4, 5)])
        bvh = build_bvh(mesh)
        np.testing.assert_allclose(bvh.bounds_min[0], [-10, 0, 0])
        np.testing.assert_allclose(bvh.bounds_max[0], [11, 1, 5])

    def test_every_triangle_in_exactly_one_leaf(self):
        mesh = random_mesh(300, seed=7)
        bvh = build_bvh(mesh)
        seen = []
        for n in range(bvh.n_nodes):
            if bvh.count[n] > 0:
                seen.extend(bvh.tri_order[bvh.start[n]:bvh.start[n] + bvh.count[n]])
        assert sorted(seen) == list(range(mesh.n_triangles))

    def test_leaf_boxes_cover_their_vertices(self):
        mesh = random_mesh(300, seed=8)
        bvh = build_bvh(mesh)
        for n in range(bvh.n_nodes):
            if bvh.count[n] == 0:
                continue
            tids = bvh.tri_order[bvh.start[n]:bvh.start[n] + bvh.count[n]]
            verts = mesh.vertices[mesh.triangles[tids].ravel()]
            assert (verts >= bvh.bounds_min[n] - 1e-12).all()
            assert (verts <= bvh.bounds_max[n] + 1e-12).all()


class TestIntersect:
    def test_axis_aligned_hit(self):
        mesh = single_triangle(z=1.0)
        bvh = build_bvh(mesh)
        hit = intersect(bvh, mesh, Ray(origin=(0, 0, 0), direction=(0, 0, 1)))
        assert hit is not None
        assert hit.t == pytest.approx(1.0)
        assert hit.triangle_id == 0

    def test_translated_triangle_misses(self):
        mesh = TriangleMesh([(5, -1, 1), (6, -1, 1), (5.5, 1, 1)], [(0, 1, 2)])
        bvh = build_bvh(mesh)
        assert intersect(bvh, mesh, Ray(origin=(0, 0, 0), direction=(0, 0, 1))) is None

    def test_backface_hits_reported(self):
        mesh = single_triangle(z=-1.0)
        bvh = build_bvh(mesh)
        hit = intersect(bvh, mesh, Ray(origin=(0, 0, 0), direction=(0, 0, -1)))
        assert hit is not None and hit.t == pytest.approx(1.0)

    def test_matches_brute_force_oracle(self, warm_kernels):
        mesh = random_mesh(500, seed=1)
        bvh = build_bvh(mesh)
        origins, dirs = random_rays(1000, seed=2)
        t, tid, _, _ = trace(bvh, origins, dirs)
        for i in range(len(origins)):
            t_ref, id_ref = brute_force_intersect(mesh, origins[i], dirs[i])
            if id_ref < 0:
                assert tid[i] == -1
            else:
                assert tid[i] == id_ref or abs(t[i] - t_ref) <= 1e-6 * max(t_ref, 1.0)

    def test_tmax_shrink_turns_hit_into_miss(self):
        mesh = single_triangle(z=1.0)
        bvh = build_bvh(mesh)
        ray = Ray(origin=(0, 0, 0), direction=(0, 0, 1), t_max=0.5)
        assert intersect(bvh, mesh, ray) is None

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_oracle_property_small_meshes(self, seed):
        mesh = random_mesh(40, seed=seed)
        bvh = build_bvh(mesh)
        origins, dirs = random_rays(25, seed=seed + 1)
        t, tid, _, _ = trace(bvh, origins, dirs)
        for i in range(len(origins)):
            t_ref, id_ref = brute_force_intersect(mesh, origins[i], dirs[i])
            if id_ref < 0:
                assert tid[i] == -1
            else:
                assert abs(t[i] - t_ref) <= 1e-6 * max(t_ref, 1.0)


class TestInterpolateScalar:
    def test_constant_field(self):
        mesh = TriangleMesh([(0, 0, 1), (1, 0, 1), (0, 1, 1)], [(0, 1, 2)],
                            {"f": [5.0, 5.0, 5.0]})
        hit = Hit(t=1.0, triangle_id=0, barycentric=(0.2, 0.3))
        assert interpolate_scalar(mesh, hit, "f") == pytest.approx(5.0)

    def test_vertex_value(self):
        mesh = TriangleMesh([(0, 0, 1), (1, 0, 1), (0, 1, 1)], [(0, 1, 2)],
                            {"f": [0.0, 1.0, 0.0]})
        hit = Hit(t=1.0, triangle_id=0, barycentric=(1.0, 0.0))
        assert interpolate_scalar(mesh, hit, "f") == pytest.approx(1.0)

    def test_centroid_of_single_nonzero(self):
        mesh = TriangleMesh([(0, 0, 1), (1, 0, 1), (0, 1, 1)], [(0, 1, 2)],
                            {"f": [0.0, 0.0, 3.0]})
        hit = Hit(t=1.0, triangle_id=0, barycentric=(1 / 3, 1 / 3))
        assert interpolate_scalar(mesh, hit, "f") == pytest.approx(1.0)

    def test_unknown_field(self):
        mesh = single_triangle()
        hit = Hit(t=1.0, triangle_id=0, barycentric=(0.0, 0.0))
        with pytest.raises(KeyError):
            interpolate_scalar(mesh, hit, "nope")


class TestObjLoader:
    def test_roundtrip_with_fields(self, tmp_path):
        from darkroom.meshes import icosphere, write_fields_json, write_obj

        mesh = icosphere(1)
        obj = tmp_path / "m.obj"
        sidecar = tmp_path / "m.json"
        write_obj(mesh, obj)
        write_fields_json(mesh, sidecar)
        loaded = load_obj(obj, sidecar)
        np.testing.assert_allclose(loaded.vertices, mesh.vertices)
        np.testing.assert_array_equal(loaded.triangles, mesh.triangles)
        np.testing.assert_allclose(loaded.scalar_fields["height"],
                                   mesh.scalar_fields["height"])

    def test_rejects_quads(self, tmp_path):
        obj = tmp_path / "bad.obj"
        obj.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshError):
            load_obj(obj)
