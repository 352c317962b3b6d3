"""Cinema-style image databases: CSV parameter index + .gbuf files.

Directory layout::

    <root>/data.csv          header: <axis>,...,FILE
    <root>/image/NNNNNN.gbuf one container per row

The .gbuf container is little-endian: magic ``CDGB``, u32 version (1),
u32 width, u32 height, u32 channel count; per channel u16 name length,
UTF-8 name, u8 plane count, then the planes row-major as float32; the
remainder of the file is a JSON blob with the camera calibration.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .camera import Camera
from .errors import DanglingReferenceError, DatabaseError, DatabaseParseError
from .imaging import GBuffer

MAGIC = b"CDGB"
VERSION = 1
FILE_COLUMN = "FILE"


def encode_gbuffer(gbuf: GBuffer) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<IIII", VERSION, gbuf.width, gbuf.height,
                          len(gbuf.channels)))
    for name, data in gbuf.channels.items():
        raw = name.encode("utf-8")
        planes = 1 if data.ndim == 2 else data.shape[2]
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
        out.write(struct.pack("<B", planes))
        arr = np.ascontiguousarray(data, dtype="<f4")
        out.write(arr.tobytes())
    out.write(json.dumps({"camera": gbuf.camera.to_dict()}).encode("utf-8"))
    return out.getvalue()


def decode_gbuffer(payload: bytes) -> GBuffer:
    buf = io.BytesIO(payload)
    if buf.read(4) != MAGIC:
        raise DatabaseError("not a .gbuf container (bad magic)")
    version, width, height, n_channels = struct.unpack("<IIII", buf.read(16))
    if version != VERSION:
        raise DatabaseError(f"unsupported .gbuf version {version}")
    channels = {}
    for _ in range(n_channels):
        (name_len,) = struct.unpack("<H", buf.read(2))
        name = buf.read(name_len).decode("utf-8")
        (planes,) = struct.unpack("<B", buf.read(1))
        count = width * height * planes
        raw = buf.read(count * 4)
        if len(raw) != count * 4:
            raise DatabaseError(f"truncated channel payload for {name!r}")
        arr = np.frombuffer(raw, dtype="<f4").copy()
        shape = (height, width) if planes == 1 else (height, width, planes)
        channels[name] = arr.reshape(shape)
    trailer = buf.read()
    try:
        meta = json.loads(trailer.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DatabaseError(f"corrupt .gbuf metadata trailer: {exc}") from exc
    camera = Camera.from_dict(meta["camera"])
    return GBuffer(width, height, channels, camera)


def _format_axis_value(v):
    if isinstance(v, float):
        return repr(v)  # shortest roundtrip formatting
    return str(v)


@dataclass(frozen=True)
class Row:
    values: dict   # axis -> float
    file: str      # path relative to the database root


class CinemaDatabase:
    def __init__(self, root, axes, rows):
        self.root = str(root)
        self.axes = list(axes)
        self.rows = list(rows)

    def __len__(self):
        return len(self.rows)

    def distinct_values(self, axis):
        if axis not in self.axes:
            raise KeyError(f"unknown axis {axis!r}")
        return sorted({r.values[axis] for r in self.rows})

    def query(self, predicate):
        """Rows matching every constraint, in index order.

        Constraint values are either an exact value or an inclusive
        (lo, hi) range tuple."""
        for axis in predicate:
            if axis not in self.axes:
                raise KeyError(f"unknown axis {axis!r}")
        out = []
        for row in self.rows:
            ok = True
            for axis, want in predicate.items():
                have = row.values[axis]
                if isinstance(want, tuple):
                    lo, hi = want
                    ok = lo <= have <= hi
                else:
                    ok = have == want
                if not ok:
                    break
            if ok:
                out.append(row)
        return out

    def load_gbuffer(self, row: Row) -> GBuffer:
        path = os.path.join(self.root, row.file)
        with open(path, "rb") as fh:
            return decode_gbuffer(fh.read())


def write_database(root, grid, gbuffers, extra_axes=None) -> CinemaDatabase:
    """Write a database directory atomically (temp dir + rename)."""
    if len(gbuffers) != len(grid.cameras):
        raise DatabaseError("one G-buffer required per grid camera")
    res = {(g.width, g.height) for g in gbuffers}
    if len(res) > 1:
        raise DatabaseError(f"mixed buffer resolutions {sorted(res)}")
    axes = dict(grid.axis_values)
    for name, vals in (extra_axes or {}).items():
        if len(vals) != len(gbuffers):
            raise DatabaseError(f"extra axis {name!r} has wrong length")
        axes[name] = vals

    root = str(root)
    parent = os.path.dirname(os.path.abspath(root)) or "."
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".cinema-", dir=parent)
    rows = []
    try:
        os.makedirs(os.path.join(tmp, "image"))
        for i, gbuf in enumerate(gbuffers):
            rel = f"image/{i:06d}.gbuf"
            with open(os.path.join(tmp, rel), "wb") as fh:
                fh.write(encode_gbuffer(gbuf))
            rows.append(Row(
                values={a: float(axes[a][i]) for a in axes}, file=rel))
        with open(os.path.join(tmp, "data.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(axes) + [FILE_COLUMN])
            for row in rows:
                writer.writerow(
                    [_format_axis_value(row.values[a]) for a in axes]
                    + [row.file])
        if os.path.exists(root):
            raise DatabaseError(f"refusing to overwrite {root}")
        os.rename(tmp, root)
    except BaseException:
        import shutil

        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return CinemaDatabase(root, list(axes), rows)


def read_database(root) -> CinemaDatabase:
    """Parse the index; buffers load lazily via load_gbuffer."""
    index = os.path.join(root, "data.csv")
    if not os.path.exists(index):
        raise DatabaseParseError(f"no data.csv under {root}")
    with open(index, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatabaseParseError("data.csv is empty", row=0) from None
        if not header or header[-1] != FILE_COLUMN:
            raise DatabaseParseError(
                f"last column must be {FILE_COLUMN}, got {header[-1] if header else 'nothing'}",
                row=0)
        axes = header[:-1]
        rows = []
        for lineno, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DatabaseParseError(
                    f"row {lineno}: expected {len(header)} columns, got {len(record)}",
                    row=lineno)
            try:
                values = {a: float(v) for a, v in zip(axes, record[:-1])}
            except ValueError as exc:
                raise DatabaseParseError(f"row {lineno}: {exc}", row=lineno) from None
            rows.append(Row(values=values, file=record[-1]))
    for row in rows:
        path = os.path.join(root, row.file)
        if not os.path.exists(path):
            raise DanglingReferenceError(
                f"index references missing file {row.file}", path=row.file)
    return CinemaDatabase(root, axes, rows)


def export_png_preview(gbuf: GBuffer, channel, value_range) -> bytes:
    """8-bit grayscale+alpha preview of one channel.

    [lo, hi] maps to [0, 255] with round-half-up; non-finite and NaN
    pixels become fully transparent."""
    if channel not in gbuf.channels:
        raise KeyError(f"unknown channel {channel!r}")
    return gray_png(gbuf.channels[channel], value_range)


def gray_png(data, value_range) -> bytes:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 3:
        data = np.linalg.norm(data, axis=2)
    lo, hi = value_range
    if not hi > lo:
        raise ValueError("degenerate preview range")
    finite = np.isfinite(data)
    t = np.clip((np.where(finite, data, 0.0) - lo) / (hi - lo), 0.0, 1.0)
    gray = np.floor(t * 255.0 + 0.5).astype(np.uint8)
    alpha = np.where(finite, 255, 0).astype(np.uint8)
    img = Image.fromarray(np.dstack([gray, alpha]), mode="LA")
    out = io.BytesIO()
    img.save(out, format="PNG")
    return out.getvalue()


def encode_rgba_png(rgba) -> bytes:
    """8-bit RGBA PNG (sRGB-tagged) from float [0,1] planes."""
    arr = np.clip(np.asarray(rgba, dtype=np.float64), 0.0, 1.0)
    data = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    img = Image.fromarray(data, mode="RGBA")
    info = PngInfo()
    info.add(b"sRGB", b"\x00")
    out = io.BytesIO()
    img.save(out, format="PNG", pnginfo=info)
    return out.getvalue()
