"""Shared request execution for the CLI and the HTTP service.

Keeping this in one place guarantees `darkroom shade` and POST
/api/execute produce byte-identical output for equivalent requests.
"""

from __future__ import annotations

import numpy as np

from . import cinema
from .errors import DarkroomError
from .imaging import GBuffer
from .passes import RgbaImage
from .pipeline import PipelineGraph

OUTPUT_FORMATS = ("png8", "gbuf")


class SampleNotFoundError(DarkroomError):
    pass


def select_row(db, selector):
    rows = db.query(selector)
    if not rows:
        raise SampleNotFoundError(f"no sample matches {selector}")
    return rows[0]  # first match wins


def run_pipeline(db, selector, pipeline_payload, sink, output_format="png8") -> bytes:
    """Execute a pipeline on the first sample matching `selector` and
    encode the sink value."""
    if output_format not in OUTPUT_FORMATS:
        raise ValueError(f"unknown output format {output_format!r}")
    row = select_row(db, selector)
    gbuf = db.load_gbuffer(row)
    graph = PipelineGraph.from_json(pipeline_payload)
    value = graph.execute(tuple(sink), {"gbuffer": gbuf})
    return encode_value(value, gbuf, output_format)


def encode_value(value, context_gbuf: GBuffer, output_format: str) -> bytes:
    if output_format == "png8":
        if isinstance(value, RgbaImage):
            return cinema.encode_rgba_png(value.data)
        if isinstance(value, GBuffer):
            value = value.depth
        data = np.asarray(value, dtype=np.float64)
        finite = data[np.isfinite(data)]
        if finite.size and finite.max() > finite.min():
            rng = (float(finite.min()), float(finite.max()))
        elif finite.size:
            rng = (float(finite.min()), float(finite.min()) + 1.0)
        else:
            rng = (0.0, 1.0)
        return cinema.gray_png(data, rng)
    # gbuf container; depth comes along so the result stays reloadable
    if isinstance(value, GBuffer):
        return cinema.encode_gbuffer(value)
    if isinstance(value, RgbaImage):
        channels = {"depth": context_gbuf.depth, "rgba": value.data}
    else:
        channels = {"depth": context_gbuf.depth,
                    "value": np.asarray(value, dtype=np.float32)}
    out = GBuffer(context_gbuf.width, context_gbuf.height, channels,
                  context_gbuf.camera)
    return cinema.encode_gbuffer(out)
