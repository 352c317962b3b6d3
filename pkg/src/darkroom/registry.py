"""Self-describing filter catalog.

Each filter declares its parameters (with types, ranges and defaults),
its typed input/output ports, and a kernel that maps input-port values
plus parameters to output-port values. The JSON form of the catalog
drives both server-side validation and the browser editor's widgets.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import passes
from .errors import ParamError, PipelineError
from .imaging import GBuffer

PORT_TYPES = ("gbuffer", "channel", "image", "colormap", "number")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str                  # float | int | enum | color
    default: object
    minimum: float = None
    maximum: float = None
    choices: tuple = None

    def validate(self, value):
        if self.kind == "float":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParamError(f"{self.name}: expected a number, got {value!r}")
            value = float(value)
            if self.minimum is not None and value < self.minimum:
                raise ParamError(f"{self.name}: {value} below minimum {self.minimum}")
            if self.maximum is not None and value > self.maximum:
                raise ParamError(f"{self.name}: {value} above maximum {self.maximum}")
            return value
        if self.kind == "int":
            if not isinstance(value, int) or isinstance(value, bool):
                raise ParamError(f"{self.name}: expected an integer, got {value!r}")
            if self.minimum is not None and value < self.minimum:
                raise ParamError(f"{self.name}: {value} below minimum {self.minimum}")
            if self.maximum is not None and value > self.maximum:
                raise ParamError(f"{self.name}: {value} above maximum {self.maximum}")
            return value
        if self.kind == "enum":
            if value not in self.choices:
                raise ParamError(f"{self.name}: {value!r} not one of {self.choices}")
            return value
        if self.kind == "string":
            if not isinstance(value, str):
                raise ParamError(f"{self.name}: expected a string, got {value!r}")
            return value
        if self.kind == "color":
            try:
                rgb = [float(v) for v in value]
            except (TypeError, ValueError):
                raise ParamError(f"{self.name}: expected [r, g, b]") from None
            if len(rgb) != 3 or any(not 0.0 <= v <= 1.0 for v in rgb):
                raise ParamError(f"{self.name}: color components must lie in [0, 1]")
            return rgb
        raise ParamError(f"{self.name}: unknown parameter kind {self.kind}")

    def to_dict(self):
        d = {"name": self.name, "type": self.kind, "default": self.default}
        if self.minimum is not None:
            d["min"] = self.minimum
        if self.maximum is not None:
            d["max"] = self.maximum
        if self.choices is not None:
            d["choices"] = list(self.choices)
        return d


@dataclass(frozen=True)
class PortSpec:
    name: str
    type: str
    required: bool = True


@dataclass(frozen=True)
class FilterSpec:
    name: str
    params: tuple
    inputs: tuple          # PortSpec...
    outputs: tuple         # PortSpec...
    kernel: callable

    def param(self, name):
        for p in self.params:
            if p.name == name:
                return p
        raise ParamError(f"filter {self.name!r} has no parameter {name!r}")

    def input_port(self, name):
        for p in self.inputs:
            if p.name == name:
                return p
        return None

    def output_port(self, name):
        for p in self.outputs:
            if p.name == name:
                return p
        return None

    def defaults(self):
        return {p.name: p.default for p in self.params}

    def to_dict(self):
        return {
            "name": self.name,
            "params": [p.to_dict() for p in self.params],
            "inputs": [{"name": p.name, "type": p.type, "required": p.required}
                       for p in self.inputs],
            "outputs": [{"name": p.name, "type": p.type} for p in self.outputs],
        }


def _require_gbuffer(context):
    gb = context.get("gbuffer")
    if not isinstance(gb, GBuffer):
        raise PipelineError("no G-buffer loaded in the execution context")
    return gb


def _source_kernel(inputs, params, context):
    gb = _require_gbuffer(context)
    name = params["channel"]
    if name not in gb:
        raise PipelineError(
            f"G-buffer has no channel {name!r}; available: {gb.channel_names()}")
    return {"gbuffer": gb, "channel": gb[name]}


def _colormap_kernel(inputs, params, context):
    cmap = passes.COLORMAP_PRESETS[params["preset"]]
    return {"image": passes.color_map(
        inputs["channel"], (params["range_lo"], params["range_hi"]), cmap)}


def _composite_kernel(inputs, params, context):
    depth, image = passes.composite([
        (inputs["depth_a"], inputs["image_a"]),
        (inputs["depth_b"], inputs["image_b"]),
    ])
    return {"depth": depth, "image": image}


def _ssao_kernel(inputs, params, context):
    gb = inputs["gbuffer"]
    p = passes.SsaoParams(
        radius_pct=params["radius_pct"], samples=params["samples"],
        bias=params["bias"], seed=params["seed"], strength=params["strength"])
    return {"occlusion": passes.ssao(gb.depth, gb.camera, p)}


def _ssdd_kernel(inputs, params, context):
    return {"image": passes.ssdd(inputs["depth"], inputs["image"],
                                 params["sigma"], params["strength"])}


def _ssdof_kernel(inputs, params, context):
    return {"image": passes.ssdof(inputs["image"], inputs["depth"],
                                  params["focal_depth"], params["aperture"],
                                  params["max_radius"])}


def _ibs_kernel(inputs, params, context):
    return {"mask": passes.ibs(inputs["depth"], params["threshold"],
                               params["halfwidth"])}


def _fxaa_kernel(inputs, params, context):
    return {"image": passes.fxaa(inputs["image"], params["edge_threshold"],
                                 params["edge_threshold_min"], params["subpixel"])}


def _modulate_kernel(inputs, params, context):
    return {"image": passes.modulate(inputs["image"], inputs["mask"],
                                     params["mode"], params["color"])}


FILTERS = {
    f.name: f
    for f in (
        FilterSpec(
            name="source",
            params=(ParamSpec("channel", "string", "depth"),),
            inputs=(),
            outputs=(PortSpec("gbuffer", "gbuffer"), PortSpec("channel", "channel")),
            kernel=_source_kernel,
        ),
        FilterSpec(
            name="colormap",
            params=(
                ParamSpec("preset", "enum", "viridis",
                          choices=tuple(passes.COLORMAP_PRESETS)),
                ParamSpec("range_lo", "float", 0.0),
                ParamSpec("range_hi", "float", 1.0),
            ),
            inputs=(PortSpec("channel", "channel"),),
            outputs=(PortSpec("image", "image"),),
            kernel=_colormap_kernel,
        ),
        FilterSpec(
            name="composite",
            params=(),
            inputs=(PortSpec("depth_a", "channel"), PortSpec("image_a", "image"),
                    PortSpec("depth_b", "channel"), PortSpec("image_b", "image")),
            outputs=(PortSpec("depth", "channel"), PortSpec("image", "image")),
            kernel=_composite_kernel,
        ),
        FilterSpec(
            name="ssao",
            params=(
                ParamSpec("radius_pct", "float", 1.0, minimum=0.01, maximum=50.0),
                ParamSpec("samples", "int", 32, minimum=1, maximum=512),
                ParamSpec("bias", "float", 0.025, minimum=0.0, maximum=1.0),
                ParamSpec("seed", "int", 0, minimum=0),
                ParamSpec("strength", "float", 1.0, minimum=0.0, maximum=4.0),
            ),
            inputs=(PortSpec("gbuffer", "gbuffer"),),
            outputs=(PortSpec("occlusion", "channel"),),
            kernel=_ssao_kernel,
        ),
        FilterSpec(
            name="ssdd",
            params=(
                ParamSpec("sigma", "float", 4.0, minimum=0.1, maximum=64.0),
                ParamSpec("strength", "float", 1.0, minimum=0.0, maximum=10.0),
            ),
            inputs=(PortSpec("depth", "channel"), PortSpec("image", "image")),
            outputs=(PortSpec("image", "image"),),
            kernel=_ssdd_kernel,
        ),
        FilterSpec(
            name="ssdof",
            params=(
                ParamSpec("focal_depth", "float", 1.0, minimum=1e-6),
                ParamSpec("aperture", "float", 2.0, minimum=0.0, maximum=64.0),
                ParamSpec("max_radius", "float", 8.0, minimum=1.0, maximum=32.0),
            ),
            inputs=(PortSpec("image", "image"), PortSpec("depth", "channel")),
            outputs=(PortSpec("image", "image"),),
            kernel=_ssdof_kernel,
        ),
        FilterSpec(
            name="ibs",
            params=(
                ParamSpec("threshold", "float", 0.05, minimum=1e-6, maximum=1.0),
                ParamSpec("halfwidth", "float", 0.0, minimum=0.0, maximum=16.0),
            ),
            inputs=(PortSpec("depth", "channel"),),
            outputs=(PortSpec("mask", "channel"),),
            kernel=_ibs_kernel,
        ),
        FilterSpec(
            name="fxaa",
            params=(
                ParamSpec("edge_threshold", "float", 0.125, minimum=0.0, maximum=1.0),
                ParamSpec("edge_threshold_min", "float", 0.0312, minimum=0.0,
                          maximum=1.0),
                ParamSpec("subpixel", "float", 0.75, minimum=0.0, maximum=1.0),
            ),
            inputs=(PortSpec("image", "image"),),
            outputs=(PortSpec("image", "image"),),
            kernel=_fxaa_kernel,
        ),
        FilterSpec(
            name="modulate",
            params=(
                ParamSpec("mode", "enum", "multiply-darken",
                          choices=("multiply-darken", "draw-color")),
                ParamSpec("color", "color", [0.0, 0.0, 0.0]),
            ),
            inputs=(PortSpec("image", "image"), PortSpec("mask", "channel")),
            outputs=(PortSpec("image", "image"),),
            kernel=_modulate_kernel,
        ),
    )
}


def registry_json():
    """Stable-ordered catalog description served to clients."""
    return {"filters": [FILTERS[name].to_dict() for name in sorted(FILTERS)]}
