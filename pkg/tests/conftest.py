from dataclasses import replace

import math

import numpy as np
import pytest
from scipy import ndimage

from leadepth.core import DepthMap, ImageFrame, Rect, crop, pad_into
from leadepth.scene import Texture, plane_scene, render_scene

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_depth(rng, shape, lo=1.0, hi=50.0, valid_frac=1.0):
    d = rng.uniform(lo, hi, size=shape)
    if valid_frac < 1.0:
        d[rng.random(shape) >= valid_frac] = 0.0
    return DepthMap(d)


def random_image(rng, shape):
    return ImageFrame(rng.random(shape + (3,)))


def balanced_gt(rng, shape=(20, 24), inner=Rect(8, 6, 8, 8)):
    """GT whose inner-crop median equals its full-frame median.

    Ring values are split evenly below and above the inner crop's two central
    values, so adding them leaves the median unchanged.
    """
    inner_vals = rng.uniform(10.0, 20.0, (inner.height, inner.width))
    lo_c, hi_c = np.sort(inner_vals.ravel())[[inner_vals.size // 2 - 1, inner_vals.size // 2]]
    gt = np.empty(shape)
    ring = np.ones(shape, bool)
    ring[inner.slices] = False
    n = int(ring.sum())
    assert n % 2 == 0
    vals = np.concatenate([rng.uniform(1.0, lo_c - 1e-6, n // 2), rng.uniform(hi_c + 1e-6, 60.0, n // 2)])
    gt[ring] = rng.permutation(vals)
    gt[inner.slices] = inner_vals
    gt = DepthMap(gt)
    assert np.median(gt.values) == np.median(inner_vals)
    return gt, pad_into(crop(gt, inner), shape, inner)


def smooth_plane_scene(width=128, height=96, tilt=0.3, motion=(0.0, 0.0, 0.4)):
    return plane_scene(width, height, tilt=tilt, motion=motion,
                       texture=Texture(frequency=(0.1, 0.08)))


def rendered_pyramid(scene, time=0, levels=5):
    """Depth rendered directly at each pyramid level's resolution and intrinsics."""
    K = scene.intrinsics
    out = []
    for s in range(levels):
        sc = replace(scene, intrinsics=K.downscaled(s), width=scene.width >> s,
                     height=scene.height >> s)
        out.append(render_scene(sc, time)[1])
    return out


# independent oracles


def plane_homography(K, pose, normal, dist):
    """Target->source pixel homography for points with normal . X = dist in the target camera."""
    Km = K.matrix
    H = Km @ (pose.rotation + np.outer(pose.translation, normal) / dist) @ np.linalg.inv(Km)
    return H


def plane_depth(K, shape, normal, dist):
    h, w = shape
    v, u = np.mgrid[0:h, 0:w].astype(float)
    rays = np.stack([(u - K.cx) / K.fx, (v - K.cy) / K.fy, np.ones_like(u)], -1)
    return dist / (rays @ normal)


def homography_oracle(src, H, shape):
    """Sample ``src`` at homography-mapped coordinates with scipy's linear interpolation."""
    h, w = shape
    v, u = np.mgrid[0:h, 0:w].astype(float)
    p = np.stack([u, v, np.ones_like(u)], -1) @ H.T
    us, vs = p[..., 0] / p[..., 2], p[..., 1] / p[..., 2]
    inside = (us >= 0) & (us <= w - 1) & (vs >= 0) & (vs <= h - 1)
    out = np.stack([ndimage.map_coordinates(src[..., c], [vs, us], order=1, mode="nearest")
                    for c in range(3)], -1)
    return out, inside


def loop_metrics(pred, gt):
    """Scalar recomputation of the seven metrics over mutually valid pixels."""
    pairs = [(p, g) for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()) if p > 0 and g > 0]
    n = len(pairs)
    abs_rel = math.fsum(abs(p - g) / g for p, g in pairs) / n
    sq_rel = math.fsum((p - g) ** 2 / g for p, g in pairs) / n
    rmse = math.sqrt(math.fsum((p - g) ** 2 for p, g in pairs) / n)
    rmse_log = math.sqrt(math.fsum((math.log(min(max(p, 1e-3), 200.0)) - math.log(g)) ** 2
                                   for p, g in pairs) / n)
    deltas = [sum(1 for p, g in pairs if max(p / g, g / p) < 1.25 ** k) / n for k in (1, 2, 3)]
    return (abs_rel, sq_rel, rmse, rmse_log, *deltas)


def brute_objective(cand, prev, part, lam, norm):
    """Pixel-loop recomputation of the stage selection objective."""
    h, w = cand.shape
    t1, t2 = [], []
    for y in range(h):
        for x in range(w):
            if prev[y, x] > 0:
                t1.append(cand[y, x] - prev[y, x])
            if part[y, x] > 0:
                t2.append(cand[y, x] - part[y, x])
    if norm == "l1":
        a, b = math.fsum(abs(v) for v in t1), math.fsum(abs(v) for v in t2)
    else:
        a, b = math.sqrt(math.fsum(v * v for v in t1)), math.sqrt(math.fsum(v * v for v in t2))
    return a + lam * b


def loop_population_std(arrays):
    """Per-pixel population standard deviation, one pixel at a time."""
    h, w = np.shape(arrays[0])
    out = []
    for y in range(h):
        row = []
        for x in range(w):
            vals = [float(a[y][x]) for a in arrays]
            mu = math.fsum(vals) / len(vals)
            row.append(math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / len(vals)))
        out.append(row)
    return out
