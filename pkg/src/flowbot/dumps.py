"""Binary debug dumps: PGM/PPM frames and ``.flo2`` flow fields.

``.flo2`` layout: an ASCII header line ``FLO2 <width> <height>\\n`` followed
by the u grid then the v grid, each row-major little-endian float32.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .flow import FlowField


def _to_bytes(img: np.ndarray) -> bytes:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8).tobytes()


def write_pgm(path, gray: np.ndarray) -> None:
    h, w = gray.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + _to_bytes(gray))


def write_ppm(path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + _to_bytes(rgb))


def read_pnm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos].decode())
    pos += 1
    magic, w, h = fields[0], int(fields[1]), int(fields[2])
    channels = 3 if magic == "P6" else 1
    arr = np.frombuffer(data[pos:], dtype=np.uint8, count=w * h * channels).astype(float) / 255.0
    return arr.reshape(h, w, 3) if channels == 3 else arr.reshape(h, w)


def write_flo2(path, flow: FlowField) -> None:
    h, w = flow.u.shape
    body = flow.u.astype("<f4").tobytes() + flow.v.astype("<f4").tobytes()
    Path(path).write_bytes(f"FLO2 {w} {h}\n".encode() + body)


def read_flo2(path) -> FlowField:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    magic, w, h = data[:nl].decode().split()
    if magic != "FLO2":
        raise ValueError(f"{path}: not a FLO2 file")
    w, h = int(w), int(h)
    grid = np.frombuffer(data[nl + 1 :], dtype="<f4", count=2 * w * h).astype(np.float64)
    return FlowField(grid[: w * h].reshape(h, w), grid[w * h :].reshape(h, w))
