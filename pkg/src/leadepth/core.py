"""Depth and image containers plus the masked-array helpers everything else uses.

Depth maps use 0.0 as the only "no measurement" value; every positive pixel
is valid. Arrays are row-major with the origin at the top-left, y pointing down.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyMask, OutOfBounds, DegenerateRect


def _frozen(values, dtype=np.float64):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class DepthMap:
    """Dense metric depth grid; zero marks an invalid pixel."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = _frozen(values)
        if arr.ndim != 2:
            raise DimensionMismatch(f"depth map must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise DimensionMismatch("depth map is empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("depth map contains non-finite values")
        if np.any(arr < 0):
            raise ValueError("depth map contains negative values")
        self.values = arr

    @classmethod
    def zeros(cls, height, width):
        return cls(np.zeros((height, width)))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    @property
    def mask(self):
        return self.values > 0

    def scaled(self, s):
        return DepthMap(self.values * s)

    def __eq__(self, other):
        if not isinstance(other, DepthMap):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return f"DepthMap({self.width}x{self.height}, valid={int(self.mask.sum())})"


class ImageFrame:
    """RGB image with intensities in [0, 1], shape (height, width, 3)."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = _frozen(values)
        if arr.ndim == 2:
            arr = _frozen(np.repeat(arr[:, :, None], 3, axis=2))
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionMismatch(f"image must be (H, W, 3), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1:
            raise ValueError("image intensities must lie in [0, 1]")
        self.values = arr

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape[:2]

    def __eq__(self, other):
        if not isinstance(other, ImageFrame):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return f"ImageFrame({self.width}x{self.height})"


class UncertaintyMap:
    """Per-pixel standard deviation in meters."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = _frozen(values)
        if arr.ndim != 2:
            raise DimensionMismatch(f"uncertainty map must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("uncertainty must be finite and non-negative")
        self.values = arr

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __repr__(self):
        return f"UncertaintyMap({self.width}x{self.height}, max={self.values.max():.4g})"


@dataclass(frozen=True)
class Rect:
    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        for name in ("x0", "y0", "width", "height"):
            v = getattr(self, name)
            if int(v) != v:
                raise TypeError(f"Rect.{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.width <= 0 or self.height <= 0:
            raise DegenerateRect(f"rect must have positive size, got {self.width}x{self.height}")

    @classmethod
    def full(cls, height, width):
        return cls(0, 0, width, height)

    @property
    def x1(self):
        return self.x0 + self.width

    @property
    def y1(self):
        return self.y0 + self.height

    @property
    def slices(self):
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def fits(self, height, width):
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= width and self.y1 <= height

    def contains(self, other):
        return (other.x0 >= self.x0 and other.y0 >= self.y0
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def relative_to(self, outer):
        """This rect expressed in the coordinates of ``outer``."""
        return Rect(self.x0 - outer.x0, self.y0 - outer.y0, self.width, self.height)

    def as_list(self):
        return [self.x0, self.y0, self.width, self.height]


def _grid(x):
    return x.values if isinstance(x, (DepthMap, ImageFrame, UncertaintyMap)) else np.asarray(x)


def check_same_shape(*maps):
    shapes = {tuple(_grid(m).shape[:2]) for m in maps}
    if len(shapes) != 1:
        raise DimensionMismatch(f"shape mismatch: {sorted(shapes)}")


def valid_mask(d):
    return _grid(d) > 0


def masked_median(d):
    """Median over valid (positive) pixels; mean of the two middle values for even counts."""
    vals = _grid(d)
    vals = vals[vals > 0]
    if vals.size == 0:
        raise EmptyMask("no valid pixel to take a median over")
    return float(np.median(vals))


def crop(d, r):
    arr = _grid(d)
    if not r.fits(arr.shape[0], arr.shape[1]):
        raise OutOfBounds(f"{r} does not fit a {arr.shape[1]}x{arr.shape[0]} frame")
    return type(d)(arr[r.slices])


def pad_into(inner, outer_size, at):
    """Embed ``inner`` into a zero (invalid) map of ``outer_size`` = (height, width)."""
    h, w = outer_size
    if (at.height, at.width) != inner.shape:
        raise DimensionMismatch(
            f"placement {at.width}x{at.height} does not match inner {inner.width}x{inner.height}")
    if not at.fits(h, w):
        raise DimensionMismatch(f"{at} does not fit a {w}x{h} frame")
    out = np.zeros((h, w))
    out[at.slices] = inner.values
    return DepthMap(out)
