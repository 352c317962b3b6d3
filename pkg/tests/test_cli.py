import json

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from darkroom.cli import EXIT_INPUT, EXIT_PIPELINE, main
from darkroom.cinema import read_database
from darkroom.meshes import icosphere, write_fields_json, write_obj
from darkroom.service import create_app


@pytest.fixture(scope="module")
def mesh_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("mesh")
    mesh = icosphere(2)
    write_obj(mesh, root / "sphere.obj")
    write_fields_json(mesh, root / "sphere.json")
    return root / "sphere.obj", root / "sphere.json"


@pytest.fixture(scope="module")
def rendered_db(mesh_files, tmp_path_factory):
    obj, fields = mesh_files
    out = tmp_path_factory.mktemp("out") / "db"
    result = CliRunner().invoke(main, [
        "render", "--mesh", str(obj), "--fields", str(fields),
        "--grid", "fibonacci:n=4,radius=3", "--out", str(out),
        "--resolution", "32x32",
    ])
    assert result.exit_code == 0, result.output
    return out


def pipeline_file(tmp_path, payload=None):
    path = tmp_path / "pipeline.json"
    path.write_text(json.dumps(payload or {
        "schema": 1,
        "nodes": [
            {"id": "src", "type": "source", "params": {"channel": "depth"}},
        ],
        "edges": [],
    }))
    return path


class TestRender:
    def test_creates_valid_database(self, rendered_db):
        db = read_database(rendered_db)
        assert len(db) == 4
        assert db.axes == ["phi", "theta"]
        gbuf = db.load_gbuffer(db.rows[0])
        assert gbuf.depth.shape == (32, 32)
        assert "scalar:height" in gbuf

    def test_missing_mesh_exit_2(self, tmp_path):
        result = CliRunner().invoke(main, [
            "render", "--mesh", str(tmp_path / "nope.obj"),
            "--grid", "fibonacci:n=1", "--out", str(tmp_path / "db"),
        ])
        assert result.exit_code == EXIT_INPUT

    def test_bad_grid_spec_exit_2(self, mesh_files, tmp_path):
        obj, _ = mesh_files
        result = CliRunner().invoke(main, [
            "render", "--mesh", str(obj), "--grid", "swirl:n=4",
            "--out", str(tmp_path / "db"),
        ])
        assert result.exit_code == EXIT_INPUT

    def test_bad_resolution_exit_2(self, mesh_files, tmp_path):
        obj, _ = mesh_files
        result = CliRunner().invoke(main, [
            "render", "--mesh", str(obj), "--grid", "fibonacci:n=1",
            "--out", str(tmp_path / "db"), "--resolution", "huge",
        ])
        assert result.exit_code == EXIT_INPUT

    def test_grid_center_parsing(self, mesh_files, tmp_path):
        obj, _ = mesh_files
        out = tmp_path / "db"
        result = CliRunner().invoke(main, [
            "render", "--mesh", str(obj),
            "--grid", "fibonacci:n=2,radius=4,center=0,0,1",
            "--out", str(out), "--resolution", "8x8",
        ])
        assert result.exit_code == 0, result.output
        db = read_database(out)
        cam = db.load_gbuffer(db.rows[0]).camera
        assert np.linalg.norm(np.asarray(cam.position) - [0, 0, 1]) == \
            pytest.approx(4.0, abs=1e-6)

    def test_deterministic_bytes(self, mesh_files, tmp_path):
        obj, _ = mesh_files
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = CliRunner().invoke(main, [
                "render", "--mesh", str(obj), "--grid", "fibonacci:n=2",
                "--out", str(out), "--resolution", "16x16",
            ])
            assert result.exit_code == 0, result.output
            db = read_database(out)
            blobs.append([(out / r.file).read_bytes() for r in db.rows])
        assert blobs[0] == blobs[1]

    def test_refuses_overwrite(self, mesh_files, rendered_db):
        obj, _ = mesh_files
        result = CliRunner().invoke(main, [
            "render", "--mesh", str(obj), "--grid", "fibonacci:n=1",
            "--out", str(rendered_db), "--resolution", "8x8",
        ])
        assert result.exit_code != 0


class TestShade:
    def test_writes_png(self, rendered_db, tmp_path):
        out = tmp_path / "shaded.png"
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--sink", "src:channel", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_matches_service_bytes(self, rendered_db, tmp_path):
        """The CLI and POST /api/execute must agree byte for byte."""
        out = tmp_path / "cli.png"
        db = read_database(rendered_db)
        row = db.rows[1]
        select = f"phi={row.values['phi']!r},theta={row.values['theta']!r}"
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--select", select,
            "--sink", "src:channel", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output

        client = TestClient(create_app(rendered_db.parent))
        res = client.post("/api/execute", json={
            "database": rendered_db.name,
            "select": {"phi": row.values["phi"], "theta": row.values["theta"]},
            "pipeline": json.loads(pipeline_file(tmp_path).read_text()),
            "sink": ["src", "channel"],
            "format": "png8",
        })
        assert res.status_code == 200
        assert out.read_bytes() == res.content

    def test_unknown_axis_exit_2(self, rendered_db, tmp_path):
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--select", "zeta=1", "--sink", "src:channel",
            "--out", str(tmp_path / "x.png"),
        ])
        assert result.exit_code == EXIT_INPUT

    def test_no_matching_sample_exit_2(self, rendered_db, tmp_path):
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--select", "phi=999.5", "--sink", "src:channel",
            "--out", str(tmp_path / "x.png"),
        ])
        assert result.exit_code == EXIT_INPUT

    def test_bad_sink_syntax_exit_2(self, rendered_db, tmp_path):
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--sink", "src", "--out", str(tmp_path / "x.png"),
        ])
        assert result.exit_code == EXIT_INPUT

    def test_unconnected_input_exit_3(self, rendered_db, tmp_path):
        payload = {
            "schema": 1,
            "nodes": [{"id": "cmap", "type": "colormap", "params": {}}],
            "edges": [],
        }
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path, payload)),
            "--sink", "cmap:image", "--out", str(tmp_path / "x.png"),
        ])
        assert result.exit_code == EXIT_PIPELINE

    def test_missing_database_exit_2(self, tmp_path):
        result = CliRunner().invoke(main, [
            "shade", "--db", str(tmp_path / "missing"),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--sink", "src:channel", "--out", str(tmp_path / "x.png"),
        ])
        assert result.exit_code == EXIT_INPUT

    def test_gbuf_format(self, rendered_db, tmp_path):
        from darkroom.cinema import decode_gbuffer

        out = tmp_path / "shaded.gbuf"
        result = CliRunner().invoke(main, [
            "shade", "--db", str(rendered_db),
            "--pipeline", str(pipeline_file(tmp_path)),
            "--sink", "src:channel", "--out", str(out),
            "--format", "gbuf",
        ])
        assert result.exit_code == 0, result.output
        assert "depth" in decode_gbuffer(out.read_bytes())


class TestThreadCap:
    def test_env_cap_applies(self, monkeypatch):
        import numba

        from darkroom.cli import _apply_thread_cap

        before = numba.get_num_threads()
        monkeypatch.setenv("DARKROOM_THREADS", "1")
        _apply_thread_cap()
        assert numba.get_num_threads() == 1
        numba.set_num_threads(before)

    def test_bad_value_ignored(self, monkeypatch):
        from darkroom.cli import _apply_thread_cap

        monkeypatch.setenv("DARKROOM_THREADS", "many")
        _apply_thread_cap()  # must not raise


def test_help_lists_commands():
    result = CliRunner().invoke(main, ["--help"])
    assert result.exit_code == 0
    for cmd in ("render", "shade", "serve"):
        assert cmd in result.output
