import csv
import io
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from darkroom import Camera, Projection
from darkroom.camera import SamplingGrid, fibonacci_sphere_grid
from darkroom.cinema import (
    decode_gbuffer,
    encode_gbuffer,
    export_png_preview,
    read_database,
    write_database,
)
from darkroom.errors import (
    DanglingReferenceError,
    DatabaseError,
    DatabaseParseError,
)
from darkroom.imaging import GBuffer


def make_gbuffer(seed=0, size=(8, 8), extra=()):
    rng = np.random.default_rng(seed)
    w, h = size
    cam = Camera(position=(0, 0, -2), target=(0, 0, 0), resolution=size)
    channels = {"depth": rng.random((h, w)).astype(np.float32)}
    channels["depth"][0, 0] = np.inf
    for name in extra:
        planes = 3 if name in ("position", "normal") else 1
        shape = (h, w) if planes == 1 else (h, w, planes)
        channels[name] = rng.standard_normal(shape).astype(np.float32)
    return GBuffer(w, h, channels, cam)


def make_db(tmp_path, n=4, size=(8, 8), name="db"):
    grid = fibonacci_sphere_grid(center=(0, 0, 0), radius=2.0, n=n,
                                 resolution=size)
    gbuffers = [make_gbuffer(seed=i, size=size) for i in range(n)]
    return write_database(tmp_path / name, grid, gbuffers), gbuffers


class TestContainer:
    def test_roundtrip_bit_exact(self):
        gbuf = make_gbuffer(extra=("scalar:height", "position", "normal"))
        back = decode_gbuffer(encode_gbuffer(gbuf))
        assert back.channel_names() == gbuf.channel_names()
        for name in gbuf.channel_names():
            np.testing.assert_array_equal(back[name], gbuf[name])
        assert back.camera.to_dict() == gbuf.camera.to_dict()

    def test_size_accounting(self):
        # a single-channel float32 plane costs exactly 4 bytes per pixel
        w = h = 128
        cam = Camera(position=(0, 0, -2), target=(0, 0, 0), resolution=(w, h))
        gbuf = GBuffer(w, h, {"depth": np.zeros((h, w), np.float32)}, cam)
        payload = encode_gbuffer(gbuf)
        header = 4 + 16 + 2 + len(b"depth") + 1
        assert len(payload) >= 4 * w * h + header
        assert len(payload) < 4 * w * h + header + 1024  # camera JSON trailer

    def test_truncated_payload_rejected(self):
        payload = encode_gbuffer(make_gbuffer())
        with pytest.raises(DatabaseError):
            decode_gbuffer(payload[: len(payload) // 2])

    def test_version_mismatch_rejected(self):
        payload = bytearray(encode_gbuffer(make_gbuffer()))
        payload[4] = 99
        with pytest.raises(DatabaseError):
            decode_gbuffer(bytes(payload))


class TestWriteRead:
    def test_csv_shape(self, tmp_path):
        db, _ = make_db(tmp_path, n=1)
        lines = (tmp_path / "db" / "data.csv").read_text().strip().splitlines()
        assert len(lines) == 2
        assert lines[0] == "phi,theta,FILE"

    def test_roundtrip(self, tmp_path):
        db, gbuffers = make_db(tmp_path, n=3)
        back = read_database(tmp_path / "db")
        assert back.axes == db.axes
        assert [r.values for r in back.rows] == [r.values for r in db.rows]
        for row, gbuf in zip(back.rows, gbuffers):
            loaded = back.load_gbuffer(row)
            np.testing.assert_array_equal(loaded.depth, gbuf.depth)

    def test_resolution_mismatch_rejected(self, tmp_path):
        grid = fibonacci_sphere_grid(center=(0, 0, 0), radius=2.0, n=2,
                                     resolution=(8, 8))
        buffers = [make_gbuffer(size=(8, 8)), make_gbuffer(size=(16, 16))]
        with pytest.raises(DatabaseError):
            write_database(tmp_path / "bad", grid, buffers)

    def test_count_mismatch_rejected(self, tmp_path):
        grid = fibonacci_sphere_grid(center=(0, 0, 0), radius=2.0, n=2,
                                     resolution=(8, 8))
        with pytest.raises(DatabaseError):
            write_database(tmp_path / "bad", grid, [make_gbuffer()])

    def test_wrong_column_count_names_row(self, tmp_path):
        make_db(tmp_path)
        path = tmp_path / "db" / "data.csv"
        lines = path.read_text().splitlines()
        lines[3] = lines[3] + ",extra"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatabaseParseError) as err:
            read_database(tmp_path / "db")
        assert err.value.row == 3
        assert "row 3" in str(err.value)

    def test_missing_file_reported(self, tmp_path):
        db, _ = make_db(tmp_path)
        victim = tmp_path / "db" / db.rows[1].file
        victim.unlink()
        with pytest.raises(DanglingReferenceError) as err:
            read_database(tmp_path / "db")
        assert err.value.path == db.rows[1].file

    def test_index_scales_without_touching_pixels(self, tmp_path):
        # build a >2000-row index by hand; referenced files are tiny stubs,
        # proving the parse never reads pixel data
        root = tmp_path / "big"
        (root / "image").mkdir(parents=True)
        rows = []
        for i in range(2100):
            rel = f"image/{i:06d}.gbuf"
            (root / rel).write_bytes(b"stub")
            rows.append(f"{float(i % 360)},{float(i % 90)},{rel}")
        (root / "data.csv").write_text(
            "phi,theta,FILE\n" + "\n".join(rows) + "\n")
        t0 = time.perf_counter()
        db = read_database(root)
        elapsed = time.perf_counter() - t0
        assert len(db) == 2100
        assert elapsed < 1.0


class TestQuery:
    def test_empty_predicate_returns_all(self, tmp_path):
        db, _ = make_db(tmp_path, n=5)
        assert db.query({}) == db.rows

    def test_exact_match_on_cross_product(self, tmp_path):
        grid_cams = []
        axis_values = {"phi": [], "theta": []}
        for phi in (0.0, 90.0, 180.0, 270.0):
            for theta in (0.0, 45.0):
                axis_values["phi"].append(phi)
                axis_values["theta"].append(theta)
                grid_cams.append(Camera(position=(0, 0, -2), target=(0, 0, 0),
                                        resolution=(4, 4)))
        grid = SamplingGrid(tuple(grid_cams), axis_values)
        buffers = [make_gbuffer(size=(4, 4)) for _ in range(8)]
        db = write_database(tmp_path / "cross", grid, buffers)
        assert len(db.query({"phi": 0.0})) == 2

    def test_unknown_axis(self, tmp_path):
        db, _ = make_db(tmp_path)
        with pytest.raises(KeyError):
            db.query({"zeta": 1.0})

    @settings(max_examples=50, deadline=None)
    @given(data=st.data())
    def test_query_equals_linear_scan(self, data, tmp_path_factory):
        db = _session_db(tmp_path_factory)
        predicate = {}
        for axis in db.axes:
            choice = data.draw(st.sampled_from(["skip", "exact", "range"]))
            if choice == "exact":
                predicate[axis] = data.draw(
                    st.sampled_from(db.distinct_values(axis)))
            elif choice == "range":
                lo = data.draw(st.floats(-100, 400))
                hi = lo + data.draw(st.floats(0, 200))
                predicate[axis] = (lo, hi)
        expected = []
        for row in db.rows:  # independent linear scan
            keep = True
            for axis, want in predicate.items():
                v = row.values[axis]
                if isinstance(want, tuple):
                    keep = want[0] <= v <= want[1]
                else:
                    keep = v == want
                if not keep:
                    break
            if keep:
                expected.append(row)
        assert db.query(predicate) == expected


_DB_CACHE = {}


def _session_db(tmp_path_factory):
    if "db" not in _DB_CACHE:
        root = tmp_path_factory.mktemp("query")
        _DB_CACHE["db"], _ = make_db(root, n=24)
    return _DB_CACHE["db"]


class TestPreview:
    def test_constant_channel_rounds_half_up(self):
        cam = Camera(position=(0, 0, -2), target=(0, 0, 0), resolution=(4, 4))
        gbuf = GBuffer(4, 4, {"depth": np.full((4, 4), 5.0, np.float32)}, cam)
        png = export_png_preview(gbuf, "depth", (0.0, 10.0))
        img = np.array(Image.open(io.BytesIO(png)).convert("LA"))
        assert (img[..., 0] == 128).all()
        assert (img[..., 1] == 255).all()

    def test_all_background_transparent(self):
        cam = Camera(position=(0, 0, -2), target=(0, 0, 0), resolution=(4, 4))
        gbuf = GBuffer(4, 4, {"depth": np.full((4, 4), np.inf, np.float32)}, cam)
        png = export_png_preview(gbuf, "depth", (0.0, 1.0))
        img = np.array(Image.open(io.BytesIO(png)).convert("LA"))
        assert (img[..., 1] == 0).all()

    def test_unknown_channel(self):
        gbuf = make_gbuffer()
        with pytest.raises(KeyError):
            export_png_preview(gbuf, "nope", (0, 1))


def test_csv_is_rfc4180(tmp_path):
    db, _ = make_db(tmp_path)
    with open(tmp_path / "db" / "data.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][-1] == "FILE"
    assert all(len(r) == len(rows[0]) for r in rows)
