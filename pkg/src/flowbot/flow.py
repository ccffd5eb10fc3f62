"""Image preprocessing and dense optical flow (Horn-Schunck, Lucas-Kanade).

Intensities are kept in [0, 1]. Horn-Schunck's smoothness weight ``alpha``
is expressed in 8-bit intensity units, so gradients are multiplied by
``FlowParams.intensity_scale`` (255) before that solver runs. The
Lucas-Kanade eigenvalue threshold is in normalised [0, 1] units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

ALGORITHMS = ("horn_schunck", "lucas_kanade")
ENHANCE_MODES = ("stretch", "equalize", "both", "none")


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray
    timestamp: float = 0.0


@dataclass(frozen=True)
class FlowField:
    u: np.ndarray  # px/frame, positive rightward
    v: np.ndarray  # px/frame, positive downward

    @property
    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.u * self.u + self.v * self.v)


@dataclass(frozen=True)
class FlowParams:
    algorithm: str = "horn_schunck"
    alpha: float = 15.0
    iterations: int = 100
    window: int = 5
    eig_threshold: float = 1e-4
    intensity_scale: float = 255.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown flow algorithm {self.algorithm!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.eig_threshold < 0:
            raise ValueError("eig_threshold must be >= 0")


def _pixels(frame) -> np.ndarray:
    return np.asarray(getattr(frame, "pixels", frame), dtype=np.float64)


def to_grayscale(frame) -> Frame:
    rgb = _pixels(frame)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return Frame(np.clip(gray, 0.0, 1.0), getattr(frame, "timestamp", 0.0))


def stretch(img: np.ndarray) -> np.ndarray:
    lo, hi = np.percentile(img, [1.0, 99.0])
    if hi <= lo:
        return img.copy()
    return np.clip((img - lo) / (hi - lo), 0.0, 1.0)


def equalize(img: np.ndarray, bins: int = 256) -> np.ndarray:
    if img.min() == img.max():
        return img.copy()
    levels = np.minimum((img * bins).astype(np.int64), bins - 1)
    hist = np.bincount(levels.ravel(), minlength=bins)
    cdf = np.cumsum(hist)
    cdf_min = cdf[np.nonzero(hist)[0][0]]
    lut = (cdf - cdf_min) / float(cdf[-1] - cdf_min)
    return np.clip(lut[levels], 0.0, 1.0)


def enhance(frame, mode: str = "both") -> Frame:
    """Contrast stretch and/or histogram equalisation."""
    if mode not in ENHANCE_MODES:
        raise ValueError(f"unknown enhance mode {mode!r}")
    img = _pixels(frame)
    if mode in ("stretch", "both"):
        img = stretch(img)
    if mode in ("equalize", "both"):
        img = equalize(img)
    return Frame(img, getattr(frame, "timestamp", 0.0))


def _central_diff(img: np.ndarray):
    p = np.pad(img, 1, mode="edge")
    ix = (p[1:-1, 2:] - p[1:-1, :-2]) * 0.5
    iy = (p[2:, 1:-1] - p[:-2, 1:-1]) * 0.5
    return ix, iy


def gradients(prev, next):
    """Spatial gradients of the temporal mean image and the temporal difference."""
    a, b = _pixels(prev), _pixels(next)
    if a.shape != b.shape:
        raise ValueError(f"frame dimensions differ: {a.shape} vs {b.shape}")
    ix, iy = _central_diff((a + b) * 0.5)
    return ix, iy, b - a


def _neighbor_mean(u: np.ndarray) -> np.ndarray:
    p = np.pad(u, 1, mode="edge")
    return ((p[1:-1, :-2] + p[1:-1, 2:]) + (p[:-2, 1:-1] + p[2:, 1:-1])) * 0.25


def hs_energy(ix, iy, it, u, v, alpha) -> float:
    """Objective descended by the Jacobi sweeps (gradients pre-scaled).

    Data term plus alpha^2/4 times the squared differences across every
    4-neighbour edge, which is the discretisation whose blockwise minimiser
    is the sweep update.
    """
    data = ix * u + iy * v + it
    smooth = 0.0
    for f in (u, v):
        smooth += np.sum(np.diff(f, axis=0) ** 2) + np.sum(np.diff(f, axis=1) ** 2)
    return float(np.sum(data * data) + alpha**2 / 4 * smooth)


@numba.njit(cache=True)
def _hs_sweeps(ix, iy, it, denom, iterations):
    h, w = ix.shape
    u = np.zeros((h, w))
    v = np.zeros((h, w))
    un = np.empty((h, w))
    vn = np.empty((h, w))
    for _ in range(iterations):
        for r in range(h):
            ru = r - 1 if r > 0 else 0
            rd = r + 1 if r < h - 1 else h - 1
            for c in range(w):
                cl = c - 1 if c > 0 else 0
                cr = c + 1 if c < w - 1 else w - 1
                ub = ((u[r, cl] + u[r, cr]) + (u[ru, c] + u[rd, c])) * 0.25
                vb = ((v[r, cl] + v[r, cr]) + (v[ru, c] + v[rd, c])) * 0.25
                common = (ix[r, c] * ub + iy[r, c] * vb + it[r, c]) / denom[r, c]
                un[r, c] = ub - ix[r, c] * common
                vn[r, c] = vb - iy[r, c] * common
        u, un = un, u
        v, vn = vn, v
    return u, v


def _hs_terms(prev, next, params: FlowParams):
    ix, iy, it = gradients(prev, next)
    s = params.intensity_scale
    ix, iy, it = ix * s, iy * s, it * s
    return ix, iy, it, params.alpha**2 + ix * ix + iy * iy


def horn_schunck(prev, next, params: FlowParams = FlowParams()) -> FlowField:
    """Jacobi iteration of the Horn-Schunck equations from zero flow."""
    ix, iy, it, denom = _hs_terms(prev, next, params)
    u, v = _hs_sweeps(ix, iy, it, denom, params.iterations)
    return FlowField(u, v)


def horn_schunck_reference(prev, next, params: FlowParams = FlowParams(), callback=None) -> FlowField:
    """Array-at-a-time version of :func:`horn_schunck`; bit-identical, slower.

    ``callback(k, u, v)`` runs after every sweep, which lets tests watch the
    objective.
    """
    ix, iy, it, denom = _hs_terms(prev, next, params)
    u = np.zeros_like(ix)
    v = np.zeros_like(ix)
    for k in range(params.iterations):
        ub = _neighbor_mean(u)
        vb = _neighbor_mean(v)
        common = (ix * ub + iy * vb + it) / denom
        u = ub - ix * common
        v = vb - iy * common
        if callback is not None:
            callback(k, u, v)
    return FlowField(u, v)


def _box_sum(a: np.ndarray, window: int) -> np.ndarray:
    """Window sum with replicated borders, symmetric in summation order."""
    k = window // 2
    p = np.pad(a, k, mode="edge")
    h, w = a.shape
    rows = p[:, k : k + w].copy()
    for j in range(1, k + 1):
        rows += p[:, k - j : k - j + w] + p[:, k + j : k + j + w]
    out = rows[k : k + h].copy()
    for j in range(1, k + 1):
        out += rows[k - j : k - j + h] + rows[k + j : k + j + h]
    return out


def lucas_kanade(prev, next, params: FlowParams = FlowParams(algorithm="lucas_kanade")) -> FlowField:
    """Per-pixel windowed least squares; ill-conditioned windows get zero flow."""
    ix, iy, it = gradients(prev, next)
    n = params.window
    a = _box_sum(ix * ix, n)
    b = _box_sum(ix * iy, n)
    c = _box_sum(iy * iy, n)
    p = _box_sum(ix * it, n)
    q = _box_sum(iy * it, n)
    half_trace = (a + c) * 0.5
    min_eig = half_trace - np.sqrt(((a - c) * 0.5) ** 2 + b * b)
    ok = min_eig >= params.eig_threshold
    ok &= min_eig > 0.0
    det = np.where(ok, a * c - b * b, 1.0)
    u = np.where(ok, (b * q - c * p) / det, 0.0)
    v = np.where(ok, (b * p - a * q) / det, 0.0)
    return FlowField(u, v)


def compute_flow(prev, next, params: FlowParams) -> FlowField:
    if params.algorithm == "horn_schunck":
        return horn_schunck(prev, next, params)
    return lucas_kanade(prev, next, params)
