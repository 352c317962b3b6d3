"""Batch entry points: render databases, shade them headless, serve the UI.

Exit codes: 2 = input/parse problems, 3 = pipeline validation, 4 = IO.
"""

from __future__ import annotations

import json
import os
import sys
import time

import click

from . import cinema, geometry, session
from .camera import fibonacci_sphere_grid, load_grid_json
from .errors import (
    CameraError,
    DarkroomError,
    DatabaseError,
    MeshError,
    PipelineError,
    UnconnectedInputError,
)
from .imaging import render_gbuffer

EXIT_INPUT = 2
EXIT_PIPELINE = 3
EXIT_IO = 4


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _apply_thread_cap():
    cap = os.environ.get("DARKROOM_THREADS")
    if cap:
        try:
            import numba

            numba.set_num_threads(max(1, int(cap)))
        except (ValueError, RuntimeError):
            pass


def _parse_grid(spec, resolution):
    """`spec` is either a grid JSON path or an inline fibonacci spec like
    `fibonacci:n=64,radius=3,center=0,0,0`."""
    if os.path.exists(spec):
        return load_grid_json(spec)
    if spec.startswith("fibonacci:"):
        args = {}
        center = [0.0, 0.0, 0.0]
        body = spec[len("fibonacci:"):]
        # center takes three comma-separated floats, so parse key by key
        for chunk in body.split(","):
            if "=" in chunk:
                key, val = chunk.split("=", 1)
                args[key] = [val]
                last = key
            else:
                args[last].append(chunk)
        if "center" in args:
            center = [float(v) for v in args["center"]]
        return fibonacci_sphere_grid(
            center=center,
            radius=float(args.get("radius", ["3"])[0]),
            n=int(args.get("n", ["16"])[0]),
            resolution=resolution,
        )
    raise CameraError(f"grid spec {spec!r} is neither a file nor fibonacci:...")


def _parse_resolution(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise CameraError(f"bad resolution {text!r}, expected WxH") from None


@click.group()
def main():
    """Render, shade and serve G-buffer image databases."""


@main.command()
@click.option("--mesh", "mesh_path", required=True, help="triangulated OBJ file")
@click.option("--fields", "fields_path", default=None,
              help="JSON sidecar with per-vertex scalar fields")
@click.option("--grid", "grid_spec", required=True,
              help="grid JSON file or fibonacci:n=..,radius=..[,center=x,y,z]")
@click.option("--out", "out_dir", required=True, help="database directory to create")
@click.option("--resolution", default="256x256", show_default=True)
@click.option("--emit-normals", is_flag=True, default=False)
@click.option("--emit-positions", is_flag=True, default=False)
@click.option("--seed", default=None, type=int,
              help="jitter seed; omit for deterministic pixel centers")
def render(mesh_path, fields_path, grid_spec, out_dir, resolution,
           emit_normals, emit_positions, seed):
    """Render a mesh from every grid camera into a Cinema database."""
    _apply_thread_cap()
    if not os.path.exists(mesh_path):
        _fail(EXIT_INPUT, f"mesh file not found: {mesh_path}")
    if fields_path and not os.path.exists(fields_path):
        _fail(EXIT_INPUT, f"fields file not found: {fields_path}")
    try:
        res = _parse_resolution(resolution)
        mesh = geometry.load_obj(mesh_path, fields_path)
        grid = _parse_grid(grid_spec, res)
    except (MeshError, CameraError, json.JSONDecodeError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))
    bvh = geometry.build_bvh(mesh)
    fields = sorted(mesh.scalar_fields)
    gbuffers = []
    total = time.perf_counter()
    for i, camera in enumerate(grid.cameras):
        t0 = time.perf_counter()
        gbuffers.append(render_gbuffer(
            mesh, bvh, camera, fields=fields,
            emit_position=emit_positions, emit_normal=emit_normals,
            jitter_seed=seed))
        click.echo(f"camera {i + 1}/{len(grid)}: "
                   f"{time.perf_counter() - t0:.2f}s")
    try:
        db = cinema.write_database(out_dir, grid, gbuffers)
    except (DatabaseError, OSError) as exc:
        _fail(EXIT_IO, str(exc))
    size = sum(
        os.path.getsize(os.path.join(db.root, r.file)) for r in db.rows)
    click.echo(f"wrote {len(db)} buffers, {size / 2**20:.1f} MiB total, "
               f"{time.perf_counter() - total:.2f}s")


def _parse_selector(text):
    out = {}
    if not text:
        return out
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ValueError(f"bad selector term {chunk!r}")
        key, val = chunk.split("=", 1)
        out[key.strip()] = float(val)
    return out


@main.command()
@click.option("--db", "db_dir", required=True)
@click.option("--pipeline", "pipeline_path", required=True)
@click.option("--select", "selector", default="", help="axis=value,...")
@click.option("--sink", required=True, help="node:port to render")
@click.option("--out", "out_path", required=True)
@click.option("--format", "fmt", default="png8", show_default=True,
              type=click.Choice(session.OUTPUT_FORMATS))
def shade(db_dir, pipeline_path, selector, sink, out_path, fmt):
    """Run a filter pipeline headless on one database sample."""
    _apply_thread_cap()
    try:
        db = cinema.read_database(db_dir)
    except DatabaseError as exc:
        _fail(EXIT_INPUT, str(exc))
    try:
        with open(pipeline_path) as fh:
            pipeline_payload = json.load(fh)
        select = _parse_selector(selector)
        if ":" not in sink:
            raise ValueError(f"sink must be node:port, got {sink!r}")
        sink_pair = tuple(sink.split(":", 1))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _fail(EXIT_INPUT, str(exc))
    try:
        payload = session.run_pipeline(db, select, pipeline_payload, sink_pair, fmt)
    except (session.SampleNotFoundError, KeyError) as exc:
        _fail(EXIT_INPUT, str(exc))
    except UnconnectedInputError as exc:
        _fail(EXIT_PIPELINE, f"{exc} (node {exc.node}, port {exc.port})")
    except (PipelineError, DarkroomError) as exc:
        _fail(EXIT_PIPELINE, str(exc))
    try:
        with open(out_path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"wrote {out_path} ({len(payload)} bytes)")


@main.command()
@click.option("--root", "databases_root", required=True,
              help="directory containing database subdirectories")
@click.option("--port", default=8200, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(databases_root, port, host):
    """Serve the filter registry, database indices and pipeline execution."""
    import uvicorn

    from .service import create_app

    _apply_thread_cap()
    app = create_app(databases_root)
    click.echo(f"serving databases from {databases_root} on http://{host}:{port}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


if __name__ == "__main__":
    main()
