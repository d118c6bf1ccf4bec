"""Pinhole camera model, depth-based reprojection warping and photometric comparison."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import DepthMap, ImageFrame, check_same_shape
from .errors import DimensionMismatch, EmptyMask, NonPositiveScale

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2

# Reprojections landing this close outside the image are snapped onto the border.
_BOUNDS_EPS = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def downscaled(self, level):
        """Intrinsics for an image 2**level times smaller built by block averaging."""
        k = 2.0 ** level
        return CameraIntrinsics(self.fx / k, self.fy / k,
                                (self.cx + 0.5) / k - 0.5, (self.cy + 0.5) / k - 0.5)


@dataclass(frozen=True, eq=False)
class PoseSE3:
    """Rigid transform X' = R X + t."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            raise DimensionMismatch("pose needs a 3x3 rotation and a 3-vector translation")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls()

    def __matmul__(self, other):
        return PoseSE3(self.rotation @ other.rotation,
                       self.rotation @ other.translation + self.translation)

    def inverse(self):
        Rt = self.rotation.T
        return PoseSE3(Rt, -Rt @ self.translation)

    def __eq__(self, other):
        if not isinstance(other, PoseSE3):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))

    __hash__ = None


@dataclass(frozen=True)
class CameraRig:
    """Intrinsics plus the pose taking target-camera points into the source camera."""

    intrinsics: CameraIntrinsics
    relative_pose: PoseSE3 = field(default_factory=PoseSE3)


def rotation_from_euler(rx, ry, rz):
    """Rotation matrix Rz @ Ry @ Rx from angles in radians."""
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def scale_translation(p, s):
    if not (np.isfinite(s) and s > 0):
        raise NonPositiveScale(f"translation scale must be finite and positive, got {s}")
    return PoseSE3(p.rotation, p.translation * s)


def pixel_grid(height, width):
    v, u = np.mgrid[0:height, 0:width].astype(np.float64)
    return u, v


def reproject(depth, intrinsics, pose):
    """Source-image pixel coordinates (u, v) and camera-frame z for every target pixel."""
    h, w = depth.shape
    u, v = pixel_grid(h, w)
    K = intrinsics
    x = (u - K.cx) / K.fx * depth
    y = (v - K.cy) / K.fy * depth
    pts = np.stack([x, y, depth], axis=-1) @ pose.rotation.T + pose.translation
    z = pts[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        us = K.fx * pts[..., 0] / z + K.cx
        vs = K.fy * pts[..., 1] / z + K.cy
    return us, vs, z


def bilinear_sample(img, us, vs):
    """Sample ``img`` (H, W[, C]) at float coordinates.

    Returns (values, inside); samples outside the image get value 0 and inside False.
    """
    h, w = img.shape[:2]
    finite = np.isfinite(us) & np.isfinite(vs)
    inside = (finite & (us >= -_BOUNDS_EPS) & (us <= w - 1 + _BOUNDS_EPS)
              & (vs >= -_BOUNDS_EPS) & (vs <= h - 1 + _BOUNDS_EPS))
    uc = np.clip(np.where(inside, us, 0.0), 0, w - 1)
    vc = np.clip(np.where(inside, vs, 0.0), 0, h - 1)
    x0 = np.floor(uc).astype(np.intp)
    y0 = np.floor(vc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = uc - x0
    ay = vc - y0
    if img.ndim == 3:
        ax = ax[..., None]
        ay = ay[..., None]
    out = ((1 - ay) * ((1 - ax) * img[y0, x0] + ax * img[y0, x1])
           + ay * ((1 - ax) * img[y1, x0] + ax * img[y1, x1]))
    out[~inside] = 0.0
    return out, inside


def warp(src, depth_tgt, rig):
    """Synthesize the target view by sampling ``src`` through ``depth_tgt`` and the rig.

    Returns the warped ImageFrame and a boolean mask of pixels that have a valid
    target depth, land in front of the source camera, and sample inside ``src``.
    """
    if src.shape != depth_tgt.shape:
        raise DimensionMismatch(f"source {src.shape} and depth {depth_tgt.shape} differ in size")
    d = depth_tgt.values
    if rig.relative_pose == PoseSE3.identity():
        # Pixels map onto themselves; skip the K^-1/K round trip and its rounding.
        vals = src.values.copy()
        mask = d > 0
    else:
        us, vs, z = reproject(d, rig.intrinsics, rig.relative_pose)
        vals, inside = bilinear_sample(src.values, us, vs)
        mask = inside & (d > 0) & (z > 0)
    vals[~mask] = 0.0
    return ImageFrame(np.clip(vals, 0.0, 1.0)), mask


def _as_channels(x):
    arr = x.values if isinstance(x, (ImageFrame, DepthMap)) else np.asarray(x, dtype=np.float64)
    return arr[:, :, None] if arr.ndim == 2 else arr


def ssim(a, b):
    """Per-pixel SSIM over 3x3 windows (reflect-101 border), averaged over channels."""
    x, y = _as_channels(a), _as_channels(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"ssim inputs differ in shape: {x.shape} vs {y.shape}")
    size = (3, 3, 1)
    mu_x = ndimage.uniform_filter(x, size, mode="mirror")
    mu_y = ndimage.uniform_filter(y, size, mode="mirror")
    var_x = ndimage.uniform_filter(x * x, size, mode="mirror") - mu_x ** 2
    var_y = ndimage.uniform_filter(y * y, size, mode="mirror") - mu_y ** 2
    cov = ndimage.uniform_filter(x * y, size, mode="mirror") - mu_x * mu_y
    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return np.clip(num / den, -1.0, 1.0).mean(axis=2)


def photometric_map(warped, target, alpha=0.85, norm="l1"):
    """Per-pixel (alpha/2)(1 - SSIM) + intensity difference."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    x, y = _as_channels(warped), _as_channels(target)
    if x.shape != y.shape:
        raise DimensionMismatch(f"inputs differ in shape: {x.shape} vs {y.shape}")
    if norm == "l1":
        diff = np.abs(x - y).mean(axis=2)
    elif norm == "l2":
        diff = np.sqrt(((x - y) ** 2).mean(axis=2))
    else:
        raise ValueError(f"unknown norm {norm!r}")
    if alpha == 0.0:
        return diff
    return 0.5 * alpha * (1.0 - ssim(x, y)) + diff


def photometric_error(warped, target, mask, alpha=0.85, norm="l1"):
    check_same_shape(warped, target, mask)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("photometric error over an empty mask")
    return float(photometric_map(warped, target, alpha, norm)[mask].mean())
