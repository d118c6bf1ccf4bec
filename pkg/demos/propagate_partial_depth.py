"""
Growing a narrow-FoV depth patch to the full frame
==================================================

The LiDAR only covers the middle of the image. A stage schedule widens the
trusted region step by step; at each step several candidate depth maps are
drawn and the one closest to what is already trusted wins.
"""

import numpy as np

from leadepth import GuidedInterpolator, NoisyOracle, PdcConfig, build_schedule, compose_full
from leadepth.resample import ResampleMode, resample
from leadepth.scene import boxes_scene, default_rig, render_scene

# how much of the camera image the LiDAR sees on the default hardware
rig = default_rig()
fw, fh = rig.lidar_fraction
print(f"lidar covers {fw:.3f} x {fh:.3f} of a {rig.width}x{rig.height} frame")

scene = boxes_scene(256, 192)
image, gt = render_scene(scene, 0)
partial = resample(gt, ResampleMode("center", (fw, fh)))
print(f"partial depth: {partial.depth.mask.mean():.1%} of pixels, rect {partial.rect.as_list()}")

schedule = build_schedule(gt.shape, partial.rect, count=5)
for r in schedule.stages:
    print("  stage rect", r.as_list())


def rmse(d):
    return float(np.sqrt(((d.values - gt.values) ** 2).mean()))


# a noisy oracle stands in for a trained generator: per-pixel noise sigma (m)
# plus a per-candidate global scale jitter, which is what selection has to fight
for sigma, jitter in ((0.0, 0.0), (0.05, 0.0), (0.0, 0.05), (0.2, 0.05)):
    gen = NoisyOracle(gt, sigma=sigma, jitter=jitter)
    res = compose_full(image, partial.depth, schedule, gen, PdcConfig(samples_per_stage=5),
                       seed=1, coarse=gt.scaled(0.6))
    winners = [r.winner for r in res.stages]
    print(f"sigma={sigma:<4} jitter={jitter:<4} rmse={rmse(res.depth):.4f} m  "
          f"mean uncertainty={res.uncertainty.values.mean():.4f}  winners={winners}")

# without ground truth: interpolate from the patch, guided by image edges
res = compose_full(image, partial.depth, schedule, GuidedInterpolator(noise=0.02), seed=1)
print(f"guided interpolation rmse={rmse(res.depth):.3f} m")
