"""
Simulated partial depth
=======================

Four ways to cut a partial measurement out of a dense map.
"""

import numpy as np

from leadepth import DepthMap
from leadepth.resample import ResampleMode, resample

gt = DepthMap(np.linspace(1.0, 40.0, 60 * 80).reshape(60, 80))

for kind in ("center", "bottom", "random", "sparse"):
    part = resample(gt, ResampleMode(kind, (0.4, 0.3), seed=3))
    m = part.depth.mask
    print(f"{kind:7s} rect={part.rect.as_list()}  kept {m.sum():4d} px "
          f"({m.sum() / (part.rect.width * part.rect.height):.0%} of the rect)")

# the sparse keep rate is a Bernoulli draw per pixel, so counts scatter around n*p
counts = [resample(gt, ResampleMode("sparse", (0.4, 0.3), keep_rate=0.25, seed=s)).depth.mask.sum()
          for s in range(200)]
n = int(round(80 * 0.4)) * int(round(60 * 0.3))
print(f"\nsparse survivors over 200 seeds: mean {np.mean(counts):.1f}, "
      f"expected {n * 0.25:.1f}, sd {np.std(counts):.2f} vs {np.sqrt(n * 0.25 * 0.75):.2f}")
