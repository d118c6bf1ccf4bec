"""
Warping a neighbouring frame with depth
=======================================

Render three frames of a tilted plane, pull the neighbours onto the
centre frame through the true depth, and watch the photometric loss
react to a wrong depth scale.
"""

import numpy as np

from leadepth import CameraRig, photometric_error, warp
from leadepth.losses import loss_peg, loss_photometric_multiscale
from leadepth.scene import Texture, plane_scene, render_scene

scene = plane_scene(128, 96, tilt=0.3, texture=Texture(frequency=(0.1, 0.08)))
frames = [render_scene(scene, t)[0] for t in (-1, 0, 1)]
target, depth = render_scene(scene, 0)
poses = [scene.relative_pose(0, -1), scene.relative_pose(0, 1)]

# warp the previous frame onto the centre one
warped, mask = warp(frames[0], depth, CameraRig(scene.intrinsics, poses[0]))
print(f"valid warped pixels: {mask.mean():.1%}")
print(f"mean |warped - target| = {np.abs(warped.values - target.values)[mask].mean():.2e}")
print(f"SSIM+L1 error        = {photometric_error(warped, target, mask):.2e}")

# a depth pyramid rendered at each scale
pyramid = []
for s in range(5):
    sub = plane_scene(128 >> s, 96 >> s, tilt=0.3, texture=Texture(frequency=(0.1, 0.08)))
    pyramid.append(render_scene(sub, 0)[1])

K = scene.intrinsics
print("\nmultiscale loss, depth scaled by k:")
for k in (0.8, 0.9, 1.0, 1.1, 1.25):
    loss = loss_photometric_multiscale(frames, [d.scaled(k) for d in pyramid], poses, K)
    print(f"  k={k:<5} loss={loss:.5f}")

# scaling depth and pose translation together leaves the loss unchanged
s = 3.0
print(f"\ndepth x{s} with translations x{s}: "
      f"{loss_peg(frames, [d.scaled(s) for d in pyramid], poses, K, s):.5f}")
