"""On-disk formats: binary rasters, probability stacks, ASCII PLY, and JSON.

Raster files are little-endian with an 8-byte header of two uint32 values
(width, height) followed by row-major samples, float32 for depth and
uncertainty rasters, uint8 for label rasters.  Probability stacks use a
16-byte header (inferences, classes, height, width) followed by float32
values in (K, C, H, W) order.

Point clouds are ASCII PLY.  Floats are written with shortest round-trip
``repr`` so re-reading a file reproduces the doubles bit for bit, which keeps
generated artifacts byte-stable across identical runs.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import InputError

_RASTER_HEADER = struct.Struct("<II")
_STACK_HEADER = struct.Struct("<IIII")


def write_raster_f32(path, values: np.ndarray) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise InputError("raster must be 2-D")
    height, width = values.shape
    with open(path, "wb") as fh:
        fh.write(_RASTER_HEADER.pack(width, height))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_raster_f32(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_RASTER_HEADER.size)
        if len(header) != _RASTER_HEADER.size:
            raise InputError(f"{path}: truncated raster header")
        width, height = _RASTER_HEADER.unpack(header)
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != width * height:
        raise InputError(f"{path}: expected {width * height} samples, found {data.size}")
    return data.reshape(height, width).copy()


def write_raster_u8(path, values: np.ndarray) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise InputError("raster must be 2-D")
    if values.size and (values.min() < 0 or values.max() > 255):
        raise InputError("uint8 raster values must lie in [0, 255]")
    height, width = values.shape
    with open(path, "wb") as fh:
        fh.write(_RASTER_HEADER.pack(width, height))
        fh.write(np.ascontiguousarray(values, dtype=np.uint8).tobytes())


def read_raster_u8(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_RASTER_HEADER.size)
        if len(header) != _RASTER_HEADER.size:
            raise InputError(f"{path}: truncated raster header")
        width, height = _RASTER_HEADER.unpack(header)
        data = np.frombuffer(fh.read(), dtype=np.uint8)
    if data.size != width * height:
        raise InputError(f"{path}: expected {width * height} samples, found {data.size}")
    return data.reshape(height, width).astype(np.int32)


def write_prob_stack(path, probs: np.ndarray) -> None:
    probs = np.asarray(probs)
    if probs.ndim != 4:
        raise InputError("probability stack must have shape (K, C, H, W)")
    k, c, h, w = probs.shape
    with open(path, "wb") as fh:
        fh.write(_STACK_HEADER.pack(k, c, h, w))
        fh.write(np.ascontiguousarray(probs, dtype="<f4").tobytes())


def read_prob_stack(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_STACK_HEADER.size)
        if len(header) != _STACK_HEADER.size:
            raise InputError(f"{path}: truncated stack header")
        k, c, h, w = _STACK_HEADER.unpack(header)
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != k * c * h * w:
        raise InputError(f"{path}: expected {k * c * h * w} samples, found {data.size}")
    return data.reshape(k, c, h, w).astype(float)


def write_ply(path, points: np.ndarray, parts: np.ndarray, scalar: np.ndarray, scalar_name: str = "uncertainty") -> None:
    """Write an ASCII PLY with per-vertex x, y, z, part, and one named scalar."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    parts = np.asarray(parts, dtype=np.int64).reshape(-1)
    scalar = np.asarray(scalar, dtype=float).reshape(-1)
    if not (len(points) == len(parts) == len(scalar)):
        raise InputError("points, parts, and scalar columns must have equal length")
    if len(parts) and (parts.min() < 0 or parts.max() > 255):
        raise InputError("part labels must fit in uint8")
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property double x",
        "property double y",
        "property double z",
        "property uchar part",
        f"property double {scalar_name}",
        "end_header",
    ]
    # repr of a Python float round-trips exactly and is byte-stable; numpy
    # scalars repr as 'np.float64(...)', so convert first.
    for (x, y, z), c, s in zip(points.tolist(), parts.tolist(), scalar.tolist()):
        lines.append(f"{x!r} {y!r} {z!r} {c} {s!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_ply(path) -> dict:
    """Parse a PLY written by :func:`write_ply`.

    Returns a dict with ``points`` (N, 3), ``parts`` (N,), ``scalar`` (N,),
    and ``scalar_name``.
    """
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != "ply":
        raise InputError(f"{path}: not a PLY file")
    n_vertices = None
    properties = []
    body_start = None
    for i, line in enumerate(text[1:], start=1):
        token = line.strip().split()
        if not token:
            continue
        if token[0] == "element" and token[1] == "vertex":
            n_vertices = int(token[2])
        elif token[0] == "property":
            properties.append(token[2])
        elif token[0] == "end_header":
            body_start = i + 1
            break
    if n_vertices is None or body_start is None:
        raise InputError(f"{path}: malformed PLY header")
    expected = ["x", "y", "z", "part"]
    if properties[:4] != expected or len(properties) != 5:
        raise InputError(f"{path}: expected properties x y z part <scalar>, got {properties}")
    rows = text[body_start : body_start + n_vertices]
    if len(rows) != n_vertices:
        raise InputError(f"{path}: expected {n_vertices} vertex rows, found {len(rows)}")
    points = np.zeros((n_vertices, 3))
    parts = np.zeros(n_vertices, dtype=np.int64)
    scalar = np.zeros(n_vertices)
    for i, row in enumerate(rows):
        fields = row.split()
        points[i] = [float(fields[0]), float(fields[1]), float(fields[2])]
        parts[i] = int(fields[3])
        scalar[i] = float(fields[4])
    return {"points": points, "parts": parts, "scalar": scalar, "scalar_name": properties[4]}


def write_json(path, payload) -> Path:
    """Serialize JSON deterministically (sorted keys, repr floats, newline EOF)."""
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
