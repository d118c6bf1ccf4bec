"""
Depth metrics and scale protocols
=================================

A prediction that is right up to a global factor looks bad under raw
metrics and perfect once its scale is aligned.
"""

import numpy as np

from leadepth import DepthMap, Rect, ScaleProtocol, correct_scale, evaluate, evaluate_protocol
from leadepth.core import crop, pad_into

rng = np.random.default_rng(0)

# a ground-truth map with a few holes (0 marks "no measurement")
gt = rng.uniform(2.0, 60.0, (48, 64))
gt[rng.random(gt.shape) < 0.2] = 0
gt = DepthMap(gt)

# a monocular network only knows depth up to scale: pretend it is 30% too far
pred = gt.scaled(1.3)
print("raw:      ", evaluate(pred, gt).line())

# M: rescale by the ratio of medians against the ground truth itself
print("M:        ", evaluate_protocol(pred, gt, ScaleProtocol("M")).line())

# P: use only a small, trusted patch (what a narrow LiDAR would see)
patch = Rect(24, 16, 16, 16)
partial = pad_into(crop(gt, patch), gt.shape, patch)
print("P:        ", evaluate_protocol(pred, gt, ScaleProtocol("P"), partial).line())

# the scale each protocol chose
for mode in "MP":
    _, s = correct_scale(pred, gt, partial, ScaleProtocol(mode))
    print(f"scale {mode}: {s:.6f}  (1/1.3 = {1 / 1.3:.6f})")

# restricting to a depth range keeps lo <= gt < hi
print("0-30 m:   ", evaluate(pred, gt, range_filter=(0.0, 30.0)).line())
