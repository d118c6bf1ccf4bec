"""Multi-stage growth of the trusted depth region from the partial FoV to the full frame.

Each stage rescales the coarse depth crop so that its median matches the
already-refined region, then keeps refined pixels and takes the rescaled
coarse depth everywhere else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DepthMap, Rect, check_same_shape, masked_median
from .errors import DegenerateRect, EmptyMask, ZeroMedian

DEFAULT_STAGE_COUNT = 5


@dataclass(frozen=True)
class StageSchedule:
    """Nested crop rects; ``stages[0]`` is the partial-depth FoV, ``stages[-1]`` the full frame."""

    stages: tuple

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if len(stages) < 2:
            raise DegenerateRect("a schedule needs the partial rect and at least one expansion")
        full = stages[-1]
        if (full.x0, full.y0) != (0, 0):
            raise DegenerateRect(f"final stage must be the full frame, got {full}")
        for inner, outer in zip(stages, stages[1:]):
            if not outer.contains(inner):
                raise DegenerateRect(f"{inner} is not nested in {outer}")

    @property
    def count(self):
        return len(self.stages) - 1

    @property
    def frame_size(self):
        return self.stages[-1].height, self.stages[-1].width

    def as_lists(self):
        return [r.as_list() for r in self.stages]

    @classmethod
    def from_lists(cls, rects):
        return cls(tuple(Rect(*r) for r in rects))


@dataclass(frozen=True)
class StageState:
    refined: DepthMap
    blur: DepthMap

    def __post_init__(self):
        check_same_shape(self.refined, self.blur)
        if not self.refined.mask.any():
            raise EmptyMask("refined map of a stage has no valid pixel")


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def build_schedule(full, partial_rect, count=DEFAULT_STAGE_COUNT):
    """Linearly shrink the four margins of ``partial_rect`` to zero over ``count`` steps.

    ``full`` is the (height, width) of the frame.
    """
    h, w = full
    if count < 1:
        raise DegenerateRect(f"stage count must be >= 1, got {count}")
    if not partial_rect.fits(h, w):
        raise DegenerateRect(f"{partial_rect} does not fit a {w}x{h} frame")
    left, top = partial_rect.x0, partial_rect.y0
    right, bottom = w - partial_rect.x1, h - partial_rect.y1
    stages = []
    for k in range(count + 1):
        f = 1.0 - k / count
        l, t = _round_half_up(left * f), _round_half_up(top * f)
        r, b = _round_half_up(right * f), _round_half_up(bottom * f)
        stages.append(Rect(l, t, w - l - r, h - t - b))
    return StageSchedule(tuple(stages))


def median_ratio(anchor, blur):
    num = masked_median(anchor)
    den = masked_median(blur)
    if den <= 0:
        raise ZeroMedian("median of the coarse depth is zero")
    return num / den


def scale_adjust(blur, anchor):
    """Rescale ``blur`` by median(anchor valid) / median(blur valid)."""
    check_same_shape(blur, anchor)
    return DepthMap(blur.values * median_ratio(anchor, blur))


def mix(refined, scaled):
    """Refined depth where it is valid, scaled coarse depth elsewhere."""
    check_same_shape(refined, scaled)
    r = refined.values
    return DepthMap(np.where(r > 0, r, scaled.values))


def run_stage(state):
    return mix(state.refined, scale_adjust(state.blur, state.refined))
