"""Image-space shading passes over G-buffer channels and RGBA images.

Every pass is a pure function, resolution-preserving, deterministic under
fixed seeds, and explicit about +inf/NaN background handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage

from .camera import Camera
from .imaging import reconstruct_normals, reconstruct_positions

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class RgbaImage:
    """4-plane float image; values are clamped to [0, 1]."""

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise ValueError("RgbaImage needs an (H, W, 4) array")
        self.data = np.clip(arr, 0.0, 1.0)

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def rgb(self):
        return self.data[..., :3]

    @property
    def alpha(self):
        return self.data[..., 3]

    def copy(self):
        return RgbaImage(self.data.copy())


@dataclass(frozen=True)
class ColorMap:
    """Piecewise-linear transfer function over [0, 1]."""

    points: tuple          # ((pos, (r, g, b)), ...), pos strictly increasing 0..1
    nan_color: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        pos = [p for p, _ in self.points]
        if len(pos) < 2 or pos[0] != 0.0 or pos[-1] != 1.0:
            raise ValueError("control points must span [0, 1]")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("control point positions must strictly increase")

    def lookup(self, t):
        """t in [0,1] (any shape) -> rgb planes."""
        pos = np.array([p for p, _ in self.points])
        cols = np.array([c for _, c in self.points])
        out = np.empty(t.shape + (3,))
        for c in range(3):
            out[..., c] = np.interp(t, pos, cols[:, c])
        return out


_VIRIDIS = (
    (0.0, (0.267, 0.005, 0.329)),
    (0.25, (0.229, 0.322, 0.546)),
    (0.5, (0.128, 0.567, 0.551)),
    (0.75, (0.369, 0.789, 0.383)),
    (1.0, (0.993, 0.906, 0.144)),
)

COLORMAP_PRESETS = {
    "grayscale": ColorMap(((0.0, (0.0, 0.0, 0.0)), (1.0, (1.0, 1.0, 1.0)))),
    "viridis": ColorMap(_VIRIDIS),
    "cool-warm": ColorMap(((0.0, (0.23, 0.30, 0.75)),
                           (0.5, (0.87, 0.87, 0.87)),
                           (1.0, (0.71, 0.016, 0.15)))),
}


def color_map(scalars, value_range, cmap: ColorMap) -> RgbaImage:
    """Map a scalar channel through a transfer function; NaN -> nan_color."""
    lo, hi = value_range
    if not hi > lo:
        raise ValueError("degenerate color-map range")
    s = np.asarray(scalars, dtype=np.float64)
    nan = ~np.isfinite(s)
    t = np.clip((np.where(nan, 0.0, s) - lo) / (hi - lo), 0.0, 1.0)
    rgb = cmap.lookup(t)
    out = np.concatenate([rgb, np.ones(s.shape + (1,))], axis=-1)
    out[nan] = cmap.nan_color
    return RgbaImage(out)


def composite(layers) -> tuple[np.ndarray, RgbaImage]:
    """Per-pixel minimum-depth merge; ties go to the earliest layer.

    layers: sequence of (depth array, RgbaImage). Returns the merged
    depth and image; pixels where all layers are background become +inf
    depth and transparent color."""
    if not layers:
        raise ValueError("composite needs at least one layer")
    shape = np.asarray(layers[0][0]).shape
    for d, img in layers:
        if np.asarray(d).shape != shape or img.data.shape[:2] != shape:
            raise ValueError("composite layer resolution mismatch")
    depths = np.stack([np.asarray(d, dtype=np.float64) for d, _ in layers])
    colors = np.stack([img.data for _, img in layers])
    winner = np.argmin(depths, axis=0)  # first minimum = earliest layer
    out_depth = np.take_along_axis(depths, winner[None], axis=0)[0]
    out_color = np.take_along_axis(
        colors, winner[None, ..., None], axis=0)[0]
    background = ~np.isfinite(out_depth)
    out_color[background] = 0.0
    return out_depth.astype(np.float32), RgbaImage(out_color)


# ---------------------------------------------------------------------------
# SSAO
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SsaoParams:
    radius_pct: float = 1.0     # sampling radius as percent of image height
    samples: int = 32
    bias: float = 0.025
    seed: int = 0
    strength: float = 1.0

    def __post_init__(self):
        if self.radius_pct <= 0:
            raise ValueError("radius_pct must be positive")
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if not 0.0 <= self.strength <= 4.0:
            raise ValueError("strength must lie in [0, 4]")


def _hemisphere_points(n, seed):
    """Points uniform in the +z unit hemisphere (volume)."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    d[:, 2] = np.abs(d[:, 2])
    r = rng.random(n) ** (1.0 / 3.0)
    return d * r[:, None]


def _smoothstep(e0, e1, x):
    t = np.clip((x - e0) / (e1 - e0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def ssao(depth, camera: Camera, params: SsaoParams) -> np.ndarray:
    """Hemisphere-sampled screen-space ambient occlusion.

    Returns an occlusion channel in [0, 1]; 0 means unoccluded.
    Background pixels and pixels without a reconstructable normal are 0.
    Off-screen samples count as unoccluded.
    """
    depth = np.asarray(depth, dtype=np.float64)
    h, w = depth.shape
    P = reconstruct_positions(depth, camera).astype(np.float64)
    N = reconstruct_normals(P, camera).astype(np.float64)
    valid = np.isfinite(depth) & np.isfinite(N).all(axis=2)

    if camera.projection.kind == "perspective":
        axial = (P - camera.position[None, None, :]) @ camera.forward
    else:
        axial = depth
    axial = np.where(valid, axial, 1.0)
    r_w = params.radius_pct / 100.0 * h * camera.world_units_per_pixel(axial)

    # tangent frame per pixel
    helper = np.where(np.abs(N[..., 0:1]) < 0.9,
                      np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    T = np.cross(helper, N)
    T /= np.maximum(np.linalg.norm(T, axis=2, keepdims=True), 1e-30)
    B = np.cross(N, T)

    # per-pixel azimuthal rotation of the shared sample set
    ys, xs = np.mgrid[0:h, 0:w]
    angle = 2.0 * np.pi * np.modf(
        np.sin(xs * 12.9898 + ys * 78.233) * 43758.5453)[0]
    ca, sa = np.cos(angle), np.sin(angle)

    pts = _hemisphere_points(params.samples, params.seed)
    ao = np.zeros((h, w))
    flat_P = P.reshape(-1, 3)
    for k in range(params.samples):
        px, py, pz = pts[k]
        rx = px * ca - py * sa
        ry = px * sa + py * ca
        world = (rx[..., None] * T + ry[..., None] * B + pz * N)
        S = P + r_w[..., None] * world
        sx, sy, s_depth = camera.project(S.reshape(-1, 3))
        ix = np.floor(np.nan_to_num(sx, nan=-1.0)).astype(np.int64)
        iy = np.floor(np.nan_to_num(sy, nan=-1.0)).astype(np.int64)
        onscreen = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h) & (s_depth > 0)
        ix = np.clip(ix, 0, w - 1)
        iy = np.clip(iy, 0, h - 1)
        buf = depth[iy, ix]
        occluded = onscreen & np.isfinite(buf) & (
            buf < s_depth - params.bias * r_w.ravel())
        # range falloff: occluders far in front of the sample are likely
        # disconnected silhouettes, not local geometry
        occ_P = flat_P[(iy * w + ix)]
        dist = np.linalg.norm(occ_P - S.reshape(-1, 3), axis=1) / np.maximum(
            r_w.ravel(), 1e-30)
        falloff = 1.0 - _smoothstep(0.8, 1.2, np.nan_to_num(dist, nan=np.inf))
        ao += np.where(occluded, falloff, 0.0).reshape(h, w)

    ao = params.strength * ao / params.samples
    ao = np.clip(np.where(valid, ao, 0.0), 0.0, 1.0)
    return ao.astype(np.float32)


# ---------------------------------------------------------------------------
# Depth darkening / depth of field / silhouettes
# ---------------------------------------------------------------------------


def _normalize_depth(depth):
    """Finite depths min-max scaled to [0, 1]; background becomes 1."""
    d = np.asarray(depth, dtype=np.float64)
    finite = np.isfinite(d)
    out = np.ones_like(d)
    if finite.any():
        lo = d[finite].min()
        hi = d[finite].max()
        if hi > lo:
            out[finite] = (d[finite] - lo) / (hi - lo)
        else:
            out[finite] = 0.0
    return out, finite


def ssdd(depth, image: RgbaImage, sigma: float, strength: float) -> RgbaImage:
    """Depth darkening: pixels farther than their blurred surroundings
    darken, nearer pixels are untouched."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    norm, _ = _normalize_depth(depth)
    blurred = ndimage.gaussian_filter(norm, sigma, mode="nearest", truncate=3.0)
    delta = blurred - norm
    darken = strength * np.minimum(delta, 0.0)
    out = image.data.copy()
    out[..., :3] = np.clip(out[..., :3] + darken[..., None], 0.0, 1.0)
    return RgbaImage(out)


def ssdof(image: RgbaImage, depth, focal_depth: float, aperture: float,
          max_radius: float = 8.0) -> RgbaImage:
    """Depth of field via a circle-of-confusion disk gather.

    A sample contributes to a pixel when it lies inside the pixel's
    gather disk and its own CoC reaches back to the pixel. Pixels with
    CoC below half a pixel pass through untouched."""
    if aperture < 0:
        raise ValueError("aperture must be non-negative")
    if focal_depth <= 0:
        raise ValueError("focal_depth must be positive")
    d = np.asarray(depth, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        coc = aperture * np.abs(d - focal_depth) / d
    coc = np.where(np.isfinite(d), coc, aperture)
    coc = np.clip(np.nan_to_num(coc, nan=0.0), 0.0, max_radius)
    sharp = coc < 0.5
    if sharp.all():
        return image.copy()

    h, w = d.shape
    radius = int(np.ceil(min(max_radius, coc.max())))
    pad_img = np.pad(image.data.astype(np.float64),
                     ((radius, radius), (radius, radius), (0, 0)))
    pad_coc = np.pad(coc, radius, constant_values=-1.0)  # off-frame never contributes
    acc = np.zeros((h, w, 4))
    wsum = np.zeros((h, w))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            dist = np.hypot(dx, dy)
            if dist > max_radius:
                continue
            s_img = pad_img[radius + dy:radius + dy + h,
                            radius + dx:radius + dx + w]
            s_coc = pad_coc[radius + dy:radius + dy + h,
                            radius + dx:radius + dx + w]
            weight = ((dist <= coc) & (s_coc >= dist)).astype(np.float64)
            if dist == 0:
                weight[:] = 1.0  # the pixel always sees itself
            acc += weight[..., None] * s_img
            wsum += weight
    out = acc / wsum[..., None]
    out[sharp] = image.data[sharp]
    return RgbaImage(out)


def ibs(depth, threshold: float, halfwidth: float = 0.0) -> np.ndarray:
    """Silhouette mask from depth discontinuities, in [0, 1].

    Edge strength is the max absolute neighbor difference of the
    frame-normalized depth; background-vs-background pairs are ignored.
    The binary mask is widened to `halfwidth` pixels with a smoothstep
    feather."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    norm, finite = _normalize_depth(depth)
    h, w = norm.shape
    e = np.zeros((h, w))
    for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1),
                   (0, 1), (1, -1), (1, 0), (1, 1)):
        shifted = np.full((h, w), np.nan)
        sfin = np.zeros((h, w), dtype=bool)
        ys = slice(max(0, dy), h + min(0, dy))
        yd = slice(max(0, -dy), h + min(0, -dy))
        xs = slice(max(0, dx), w + min(0, dx))
        xd = slice(max(0, -dx), w + min(0, -dx))
        shifted[yd, xd] = norm[ys, xs]
        sfin[yd, xd] = finite[ys, xs]
        pair = finite | sfin  # skip background-vs-background only
        diff = np.abs(norm - shifted)
        diff[~pair | ~np.isfinite(diff)] = 0.0
        e = np.maximum(e, diff)
    mask = e > threshold
    if not mask.any():
        return np.zeros((h, w), dtype=np.float32)
    dist = ndimage.distance_transform_edt(~mask)
    m = np.clip(1.0 - dist / (halfwidth + 1.0), 0.0, 1.0)
    return (m * m * (3.0 - 2.0 * m)).astype(np.float32)


# ---------------------------------------------------------------------------
# FXAA
# ---------------------------------------------------------------------------

FXAA_SEARCH_STEPS = 12


@njit(cache=True)
def _fxaa_kernel(rgb, luma, out, edge_threshold, edge_threshold_min, subpix):
    h, w = luma.shape
    for y in range(h):
        for x in range(w):
            for c in range(3):
                out[y, x, c] = rgb[y, x, c]
            xm = max(x - 1, 0)
            xp = min(x + 1, w - 1)
            ym = max(y - 1, 0)
            yp = min(y + 1, h - 1)
            lC = luma[y, x]
            lN = luma[ym, x]
            lS = luma[yp, x]
            lW = luma[y, xm]
            lE = luma[y, xp]
            lNW = luma[ym, xm]
            lNE = luma[ym, xp]
            lSW = luma[yp, xm]
            lSE = luma[yp, xp]
            lmin = min(lC, min(min(lN, lS), min(lW, lE)))
            lmax = max(lC, max(max(lN, lS), max(lW, lE)))
            lrange = lmax - lmin
            if lrange < max(edge_threshold_min, lmax * edge_threshold):
                continue
            edge_h = (abs(-2.0 * lW + lNW + lSW)
                      + 2.0 * abs(-2.0 * lC + lN + lS)
                      + abs(-2.0 * lE + lNE + lSE))
            edge_v = (abs(-2.0 * lN + lNW + lNE)
                      + 2.0 * abs(-2.0 * lC + lW + lE)
                      + abs(-2.0 * lS + lSW + lSE))
            horizontal = edge_h >= edge_v  # the edge itself runs horizontally
            if horizontal:
                luma1 = lN
                luma2 = lS
            else:
                luma1 = lW
                luma2 = lE
            g1 = luma1 - lC
            g2 = luma2 - lC
            steep1 = abs(g1) >= abs(g2)
            gradient_scaled = 0.25 * max(abs(g1), abs(g2))
            if steep1:
                step = -1
                local_avg = 0.5 * (luma1 + lC)
            else:
                step = 1
                local_avg = 0.5 * (luma2 + lC)

            # walk along the edge in both directions; the midpoint luma is
            # the average of the two pixel rows/columns forming the edge.
            # Samples clamp at the image border so an edge leaving the
            # frame reads as continuing, exactly like clamped texturing.
            d1 = FXAA_SEARCH_STEPS
            d2 = FXAA_SEARCH_STEPS
            end1 = 0.0
            end2 = 0.0
            found1 = False
            found2 = False
            for i in range(1, FXAA_SEARCH_STEPS + 1):
                if not found1:
                    if horizontal:
                        ex = min(max(x - i, 0), w - 1)
                        mid = 0.5 * (luma[y, ex]
                                     + luma[min(max(y + step, 0), h - 1), ex])
                    else:
                        ey = min(max(y - i, 0), h - 1)
                        mid = 0.5 * (luma[ey, x]
                                     + luma[ey, min(max(x + step, 0), w - 1)])
                    end1 = mid - local_avg
                    if abs(end1) >= gradient_scaled:
                        found1 = True
                        d1 = i
                if not found2:
                    if horizontal:
                        ex = min(max(x + i, 0), w - 1)
                        mid = 0.5 * (luma[y, ex]
                                     + luma[min(max(y + step, 0), h - 1), ex])
                    else:
                        ey = min(max(y + i, 0), h - 1)
                        mid = 0.5 * (luma[ey, x]
                                     + luma[ey, min(max(x + step, 0), w - 1)])
                    end2 = mid - local_avg
                    if abs(end2) >= gradient_scaled:
                        found2 = True
                        d2 = i
                if found1 and found2:
                    break

            if not (found1 or found2):
                continue  # straight edge spanning the search: leave untouched

            dist1 = float(d1)
            dist2 = float(d2)
            if dist1 < dist2:
                dist_final = dist1
                end_final = end1
            else:
                dist_final = dist2
                end_final = end2
            span = dist1 + dist2
            center_smaller = lC < local_avg
            good_span = (end_final < 0.0) != center_smaller
            offset = 0.0
            if good_span:
                offset = max(0.0, 0.5 - dist_final / span)

            # subpixel aliasing contribution
            avg = (1.0 / 12.0) * (2.0 * (lN + lS + lW + lE)
                                  + lNW + lNE + lSW + lSE)
            sp1 = min(abs(avg - lC) / lrange, 1.0)
            sp2 = (-2.0 * sp1 + 3.0) * sp1 * sp1
            offset = max(offset, sp2 * sp2 * subpix)
            if offset <= 0.0:
                continue
            if horizontal:
                ny = min(max(y + step, 0), h - 1)
                nx = x
            else:
                ny = y
                nx = min(max(x + step, 0), w - 1)
            for c in range(3):
                out[y, x, c] = ((1.0 - offset) * rgb[y, x, c]
                                + offset * rgb[ny, nx, c])


def fxaa(image: RgbaImage, edge_threshold: float = 0.125,
         edge_threshold_min: float = 0.0312,
         subpixel: float = 0.75) -> RgbaImage:
    """Luma-driven post-process anti-aliasing; alpha passes through."""
    rgb = np.ascontiguousarray(image.rgb, dtype=np.float64)
    luma = (LUMA_WEIGHTS[0] * rgb[..., 0]
            + LUMA_WEIGHTS[1] * rgb[..., 1]
            + LUMA_WEIGHTS[2] * rgb[..., 2])
    out = np.empty_like(rgb)
    _fxaa_kernel(rgb, np.ascontiguousarray(luma), out,
                 edge_threshold, edge_threshold_min, subpixel)
    result = np.concatenate([out, image.alpha[..., None].astype(np.float64)],
                            axis=2)
    return RgbaImage(result)


def modulate(image: RgbaImage, mask, mode: str = "multiply-darken",
             color=(0.0, 0.0, 0.0)) -> RgbaImage:
    """Apply an occlusion/silhouette mask to an image.

    multiply-darken: rgb * (1 - m); draw-color: mix(rgb, color, m)."""
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != image.data.shape[:2]:
        raise ValueError("mask resolution mismatch")
    out = image.data.copy().astype(np.float64)
    if mode == "multiply-darken":
        out[..., :3] *= (1.0 - m)[..., None]
    elif mode == "draw-color":
        c = np.asarray(color, dtype=np.float64)
        out[..., :3] = out[..., :3] * (1.0 - m[..., None]) + c * m[..., None]
    else:
        raise ValueError(f"unknown modulate mode {mode!r}")
    return RgbaImage(out)
