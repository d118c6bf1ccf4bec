"""Forward evaluators for the self-supervision losses and the discriminator augmentation.

Nothing here computes gradients; these return plain floats so that an
external trainer, or the test suite, can check values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DepthMap, ImageFrame, check_same_shape
from .errors import DimensionMismatch, EmptyMask, EmptyOverlap, ScoreOutOfRange
from .geometry import CameraRig, bilinear_sample, photometric_map, scale_translation, ssim, warp

PYRAMID_LEVELS = 5


def _default_scale_weights():
    return tuple(1.0 / 2 ** s for s in range(PYRAMID_LEVELS))


@dataclass(frozen=True)
class LossWeights:
    w_pe: float = 1.0
    w_p: float = 1.0
    w_s: float = 1.0
    w_peg: float = 1.0
    w_pse: float = 1.0
    w_G: float = 1.0
    scale_weights: tuple = field(default_factory=_default_scale_weights)
    alpha: float = 0.85
    alpha_pseudo: float = 0.95
    photometric_norm: str = "l1"

    def __post_init__(self):
        object.__setattr__(self, "scale_weights", tuple(float(x) for x in self.scale_weights))
        vals = [self.w_pe, self.w_p, self.w_s, self.w_peg, self.w_pse, self.w_G,
                self.alpha, self.alpha_pseudo, *self.scale_weights]
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError("loss weights must be finite and >= 0")
        if self.alpha > 1 or self.alpha_pseudo > 1:
            raise ValueError("SSIM mixing weights must lie in [0, 1]")

    def scaled(self, c):
        """Every term weight multiplied by ``c``.

        Per-level weights and mixing alphas are left alone, so each loss scales by exactly ``c``.
        """
        return LossWeights(self.w_pe * c, self.w_p * c, self.w_s * c, self.w_peg * c,
                           self.w_pse * c, self.w_G * c, self.scale_weights,
                           self.alpha, self.alpha_pseudo, self.photometric_norm)


# pyramids

def downsample_image(img, level):
    """Average 2**level x 2**level blocks (trailing rows/cols that don't fill a block are dropped)."""
    a = img.values if isinstance(img, ImageFrame) else np.asarray(img, dtype=np.float64)
    k = 2 ** level
    h, w = a.shape[0] // k, a.shape[1] // k
    a = a[:h * k, :w * k]
    out = a.reshape(h, k, w, k, *a.shape[2:]).mean(axis=(1, 3))
    return ImageFrame(out) if isinstance(img, ImageFrame) else out


def resize_depth_nearest(d, out_shape):
    """Valid-aware nearest resampling.

    Each output pixel takes the input pixel nearest to its footprint centre; if
    that one is invalid, the nearest valid pixel inside the footprint is used
    instead, so downsampling never drops measurements that fall in a block.
    """
    src = d.values if isinstance(d, DepthMap) else np.asarray(d, dtype=np.float64)
    h, w = src.shape
    oh, ow = out_shape
    sy, sx = h / oh, w / ow
    cy = (np.arange(oh) + 0.5) * sy - 0.5
    cx = (np.arange(ow) + 0.5) * sx - 0.5
    iy = np.clip(np.floor(cy + 0.5).astype(np.intp), 0, h - 1)
    ix = np.clip(np.floor(cx + 0.5).astype(np.intp), 0, w - 1)
    out = src[np.ix_(iy, ix)].copy()
    if sy > 1 or sx > 1:
        y_lo = np.floor(np.arange(oh) * sy).astype(np.intp)
        y_hi = np.minimum(np.ceil((np.arange(oh) + 1) * sy).astype(np.intp), h) - 1
        x_lo = np.floor(np.arange(ow) * sx).astype(np.intp)
        x_hi = np.minimum(np.ceil((np.arange(ow) + 1) * sx).astype(np.intp), w) - 1
        ry, rx = int(math.ceil(sy)), int(math.ceil(sx))
        offsets = sorted(((dy, dx) for dy in range(-ry, ry + 1) for dx in range(-rx, rx + 1)),
                         key=lambda o: (o[0] ** 2 + o[1] ** 2, o))
        YY, XX = iy[:, None], ix[None, :]
        ylo, yhi = y_lo[:, None], y_hi[:, None]
        xlo, xhi = x_lo[None, :], x_hi[None, :]
        for dy, dx in offsets:
            holes = out <= 0
            if not holes.any():
                break
            ny, nx = YY + dy, XX + dx
            ok = holes & (ny >= ylo) & (ny <= yhi) & (nx >= xlo) & (nx <= xhi)
            ny, nx = np.clip(ny, 0, h - 1), np.clip(nx, 0, w - 1)
            cand = src[ny, nx]
            take = ok & (cand > 0)
            out[take] = cand[take]
    return DepthMap(out) if isinstance(d, DepthMap) else out


def depth_pyramid_shapes(shape, levels=PYRAMID_LEVELS):
    h, w = shape
    return [(h >> s, w >> s) for s in range(levels)]


# photometric

def _check_pyramid(frames, depth_pyramid):
    h, w = frames[1].shape
    for s, d in enumerate(depth_pyramid):
        if d.shape != (h >> s, w >> s):
            raise DimensionMismatch(
                f"pyramid level {s} is {d.shape}, expected {(h >> s, w >> s)}")


def photometric_level_map(frames, depth, poses, K, level, alpha=0.85, norm="l1"):
    """Per-pixel min over the neighbouring frames of the photometric map at one pyramid level.

    ``poses`` take points from the centre frame's camera into the previous and
    next frames' cameras. Pixels with no valid warp in either frame are NaN.
    """
    prev, cur, nxt = (downsample_image(f, level) for f in frames)
    Ks = K.downscaled(level)
    best = None
    for src, pose in zip((prev, nxt), poses):
        warped, mask = warp(src, depth, CameraRig(Ks, pose))
        err = photometric_map(warped, cur, alpha, norm)
        err = np.where(mask, err, np.inf)
        best = err if best is None else np.minimum(best, err)
    return np.where(np.isfinite(best), best, np.nan)


def loss_photometric_multiscale(frames, depth_pyramid, poses, K, w=LossWeights()):
    """Weighted sum over pyramid levels of the mean per-pixel min photometric error."""
    if len(frames) != 3 or len(poses) != 2:
        raise ValueError("expected frames (t-1, t, t+1) and two poses")
    _check_pyramid(frames, depth_pyramid)
    if len(depth_pyramid) > len(w.scale_weights):
        raise ValueError("more pyramid levels than scale weights")
    total = 0.0
    for s, depth in enumerate(depth_pyramid):
        err = photometric_level_map(frames, depth, poses, K, s, w.alpha, w.photometric_norm)
        ok = np.isfinite(err)
        if not ok.any():
            raise EmptyMask(f"no pixel warps validly at pyramid level {s}")
        total += w.scale_weights[s] * float(err[ok].mean())
    return total


def loss_peg(frames, depth_pyramid, poses, K, scale, w=LossWeights()):
    """Photometric loss of the generator with pose translations rescaled by ``scale``."""
    poses = [scale_translation(p, scale) for p in poses]
    return loss_photometric_multiscale(frames, depth_pyramid, poses, K, w)


# partial supervision

def loss_partial(depth_pyramid, partial):
    """Sum over levels of the mean |D - partial| on the partial depth's valid pixels."""
    if not partial.mask.any():
        raise EmptyMask("partial depth has no valid pixel")
    total = 0.0
    for s, d in enumerate(depth_pyramid):
        p = partial if d.shape == partial.shape else resize_depth_nearest(partial, d.shape)
        m = p.mask
        if not m.any():
            raise EmptyMask(f"partial depth vanished at pyramid level {s}")
        total += float(np.abs(d.values[m] - p.values[m]).mean())
    return total


# smoothness

def loss_smooth(depth, image):
    """Edge-aware smoothness of the mean-normalised depth."""
    check_same_shape(depth, image)
    d = depth.values
    valid = d > 0
    if not valid.any():
        raise EmptyMask("smoothness needs at least one valid depth")
    d = d / d[valid].mean()
    img = image.values
    dx = np.abs(d[:, 1:] - d[:, :-1])
    dy = np.abs(d[1:, :] - d[:-1, :])
    ix = np.abs(img[:, 1:] - img[:, :-1]).mean(axis=2)
    iy = np.abs(img[1:, :] - img[:-1, :]).mean(axis=2)
    terms = []
    if dx.size:
        terms.append(float((dx * np.exp(-ix)).mean()))
    if dy.size:
        terms.append(float((dy * np.exp(-iy)).mean()))
    return sum(terms)


def stn_terms(frames, depth_pyramid, poses, K, partial, w=LossWeights()):
    return {
        "photometric": loss_photometric_multiscale(frames, depth_pyramid, poses, K, w),
        "partial": loss_partial(depth_pyramid, partial),
        "smooth": loss_smooth(depth_pyramid[0], frames[1]),
    }


def loss_stn(frames, depth_pyramid, poses, K, partial, w=LossWeights()):
    """w_pe * photometric + w_p * partial + w_s * smoothness. Zero-weight terms are skipped."""
    total = 0.0
    if w.w_pe:
        total += w.w_pe * loss_photometric_multiscale(frames, depth_pyramid, poses, K, w)
    if w.w_p:
        total += w.w_p * loss_partial(depth_pyramid, partial)
    if w.w_s:
        total += w.w_s * loss_smooth(depth_pyramid[0], frames[1])
    return total


# generator supervision

def pseudo_scale(blur, partial):
    check_same_shape(blur, partial)
    m = partial.mask & blur.mask
    if not m.any():
        raise EmptyOverlap("partial depth and coarse depth share no valid pixel")
    return float(np.median(partial.values[m]) / np.median(blur.values[m]))


def pseudo_depth(blur, partial):
    """Coarse depth rescaled so its median on the partial mask matches the partial depth."""
    return blur.scaled(pseudo_scale(blur, partial))


def pseudo_terms(pseudo, prediction, alpha=0.95):
    """(structure term, value term) of the pseudo-depth loss.

    Both maps are divided by their shared maximum so SSIM sees values in [0, 1].
    """
    check_same_shape(pseudo, prediction)
    m = pseudo.mask & prediction.mask
    if not m.any():
        raise EmptyMask("pseudo depth and prediction share no valid pixel")
    norm = max(pseudo.values.max(), prediction.values.max())
    a, b = pseudo.values / norm, prediction.values / norm
    l1 = float(np.abs(a - b)[m].mean())
    structure = float((0.5 * alpha * (1.0 - ssim(a, b)))[m].mean()) if alpha else 0.0
    return structure, l1


def loss_pseudo(pseudo, prediction, alpha=0.95):
    return sum(pseudo_terms(pseudo, prediction, alpha))


def gan_loss_eval(disc_scores_real, disc_scores_fake):
    """Sum over stages of E[log D(real)] + E[log(1 - D(fake))].

    Each argument is either a flat sequence of scores (one stage) or a sequence
    of per-stage sequences. Empty stages contribute nothing.
    """
    real = _per_stage(disc_scores_real)
    fake = _per_stage(disc_scores_fake)
    if len(real) != len(fake):
        if not real or not fake:
            real = real or [np.empty(0)] * len(fake)
            fake = fake or [np.empty(0)] * len(real)
        else:
            raise ValueError("real and fake scores cover different numbers of stages")
    total = 0.0
    for r, f in zip(real, fake):
        for arr in (r, f):
            if arr.size and (np.any(arr <= 0) or np.any(arr >= 1)):
                raise ScoreOutOfRange("discriminator scores must lie strictly inside (0, 1)")
        if r.size:
            total += float(np.log(r).mean())
        if f.size:
            total += float(np.log1p(-f).mean())
    return total


def _per_stage(scores):
    scores = list(scores)
    if not scores:
        return []
    if np.ndim(scores[0]) == 0:
        return [np.asarray(scores, dtype=np.float64)]
    return [np.asarray(s, dtype=np.float64).reshape(-1) for s in scores]


def loss_ppg(peg, pseudo, gan, w=LossWeights()):
    """w_peg * photometric + w_pse * pseudo + w_G * GAN, from precomputed terms."""
    return w.w_peg * peg + w.w_pse * pseudo + w.w_G * gan


# discriminator augmentation

VALUE_SCALE_RANGE = (0.8, 1.2)
SIZE_SCALE_RANGE = (0.5, 1.8)


@dataclass(frozen=True)
class AugmentSample:
    value_scale: float
    size_scale: float

    def __post_init__(self):
        lo, hi = VALUE_SCALE_RANGE
        if not lo <= self.value_scale <= hi:
            raise ValueError(f"value scale {self.value_scale} outside [{lo}, {hi}]")
        lo, hi = SIZE_SCALE_RANGE
        if not lo <= self.size_scale <= hi:
            raise ValueError(f"size scale {self.size_scale} outside [{lo}, {hi}]")


def sample_augment(seed):
    rng = np.random.default_rng(seed)
    return AugmentSample(float(rng.uniform(*VALUE_SCALE_RANGE)),
                         float(rng.uniform(*SIZE_SCALE_RANGE)))


def resize_image_bilinear(image, out_shape):
    h, w = image.shape
    oh, ow = out_shape
    v, u = np.mgrid[0:oh, 0:ow].astype(np.float64)
    us = np.clip((u + 0.5) * (w / ow) - 0.5, 0, w - 1)
    vs = np.clip((v + 0.5) * (h / oh) - 0.5, 0, h - 1)
    out, _ = bilinear_sample(image.values, us, vs)
    return ImageFrame(np.clip(out, 0.0, 1.0))


def apply_augment(depth, image, a):
    """Multiply depth values by the value scale and resize the RGBD pair by the size scale."""
    check_same_shape(depth, image)
    d = depth.scaled(a.value_scale)
    if a.size_scale == 1.0:
        return d, image
    h, w = depth.shape
    out_shape = (max(1, int(round(h * a.size_scale))), max(1, int(round(w * a.size_scale))))
    return resize_depth_nearest(d, out_shape), resize_image_bilinear(image, out_shape)
