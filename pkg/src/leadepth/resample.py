"""Simulated small-FoV partial depth cut out of a dense ground-truth map.

Four modes: ``center`` (centred crop), ``sparse`` (centred crop then a
Bernoulli keep mask), ``random`` (crop whose centre falls uniformly inside a
bounds region) and ``bottom`` (crop anchored to the bottom edge).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DepthMap, Rect
from .errors import DegenerateRegion

MODES = ("center", "sparse", "random", "bottom")
DEFAULT_KEEP_RATE = 0.25
# Central third of the frame, as (x0, y0, x1, y1) fractions.
DEFAULT_RANDOM_BOUNDS = (1 / 3, 1 / 3, 2 / 3, 2 / 3)


@dataclass(frozen=True)
class ResampleMode:
    kind: str = "center"
    fraction: tuple = (0.5, 0.5)
    keep_rate: float = DEFAULT_KEEP_RATE
    bounds: tuple = DEFAULT_RANDOM_BOUNDS
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODES:
            raise DegenerateRegion(f"unknown resample mode {self.kind!r}; choose from {MODES}")
        frac = self.fraction
        if np.ndim(frac) == 0:
            frac = (float(frac), float(frac))
        frac = tuple(float(f) for f in frac)
        object.__setattr__(self, "fraction", frac)
        if len(frac) != 2 or not all(0 < f <= 1 for f in frac):
            raise DegenerateRegion(f"crop fractions must lie in (0, 1], got {frac}")
        if not 0 < self.keep_rate <= 1:
            raise DegenerateRegion(f"keep rate must lie in (0, 1], got {self.keep_rate}")
        b = tuple(float(x) for x in self.bounds)
        object.__setattr__(self, "bounds", b)
        if len(b) != 4 or not (0 <= b[0] <= b[2] <= 1 and 0 <= b[1] <= b[3] <= 1):
            raise DegenerateRegion(f"bad random bounds {b}")


@dataclass(frozen=True)
class PartialDepth:
    """Partial depth embedded in the full frame, with the sensor FoV rect it came from."""

    depth: DepthMap
    rect: Rect


def _size(full, n):
    s = int(math.floor(full * n + 0.5))
    if s < 1:
        raise DegenerateRegion(f"crop fraction {n} of {full} px rounds to zero")
    return s


def crop_rect(shape, mode, rng=None):
    h, w = shape
    fw, fh = mode.fraction
    cw, ch = _size(w, fw), _size(h, fh)
    if mode.kind in ("center", "sparse"):
        return Rect((w - cw) // 2, (h - ch) // 2, cw, ch)
    if mode.kind == "bottom":
        return Rect((w - cw) // 2, h - ch, cw, ch)
    rng = rng if rng is not None else np.random.default_rng(mode.seed)
    bx0, by0, bx1, by1 = mode.bounds
    cx = rng.uniform(bx0, bx1) * w
    cy = rng.uniform(by0, by1) * h
    x0 = min(max(int(math.floor(cx - cw / 2 + 0.5)), 0), w - cw)
    y0 = min(max(int(math.floor(cy - ch / 2 + 0.5)), 0), h - ch)
    return Rect(x0, y0, cw, ch)


def resample(gt, mode):
    rng = np.random.default_rng(mode.seed)
    r = crop_rect(gt.shape, mode, rng)
    out = np.zeros(gt.shape)
    out[r.slices] = gt.values[r.slices]
    if mode.kind == "sparse":
        keep = rng.random((r.height, r.width)) < mode.keep_rate
        out[r.slices] *= keep
    return PartialDepth(DepthMap(out), r)


def valid_bbox(d):
    """Tight bounding rect of the valid pixels."""
    ys, xs = np.nonzero(d.mask)
    if ys.size == 0:
        raise DegenerateRegion("depth map has no valid pixel")
    return Rect(int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1),
                int(ys.max() - ys.min() + 1))
