"""Analytic ray-traced scenes that give exact depth and consistent multi-frame images.

Also holds the hardware geometry preset (MEMS LiDAR inside a wider camera).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DepthMap, ImageFrame, Rect
from .errors import NoIntersection
from .geometry import CameraIntrinsics, PoseSE3, pixel_grid


@dataclass(frozen=True)
class Texture:
    """Smooth sinusoidal RGB albedo over in-plane coordinates (meters)."""

    base: tuple = (0.5, 0.5, 0.5)
    amplitude: tuple = (0.3, 0.25, 0.2)
    frequency: tuple = (0.8, 0.6)
    phase: tuple = (0.0, 1.0, 2.0)

    def __call__(self, a, b):
        fa, fb = self.frequency
        out = np.empty(a.shape + (3,))
        for c in range(3):
            out[..., c] = self.base[c] + self.amplitude[c] * np.sin(
                2 * np.pi * (fa * a + self.phase[c] / 7.0)) * np.cos(
                2 * np.pi * (fb * b + self.phase[c] / 5.0))
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Plane:
    """Plane through ``origin`` spanned by unit axes ``u``, ``v`` (world frame).

    ``extent`` = (half_u, half_v) bounds it to a rectangle; None makes it infinite.
    """

    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    extent: tuple | None = None
    texture: Texture = field(default_factory=Texture)

    def __post_init__(self):
        for name in ("origin", "u", "v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        u = self.u / np.linalg.norm(self.u)
        v = self.v - u * (u @ self.v)
        v = v / np.linalg.norm(v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def normal(self):
        return np.cross(self.u, self.v)


def box_faces(center, size, texture=None):
    """Six bounded planes of an axis-aligned box."""
    c = np.asarray(center, dtype=np.float64)
    hx, hy, hz = (s / 2 for s in size)
    tex = texture or Texture()
    ex, ey, ez = np.eye(3)
    return [
        Plane(c - hz * ez, ex, ey, (hx, hy), tex), Plane(c + hz * ez, ex, ey, (hx, hy), tex),
        Plane(c - hx * ex, ey, ez, (hy, hz), tex), Plane(c + hx * ex, ey, ez, (hy, hz), tex),
        Plane(c - hy * ey, ex, ez, (hx, hz), tex), Plane(c + hy * ey, ex, ez, (hx, hz), tex),
    ]


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    """Camera intrinsics, surfaces, light and camera-to-world poses per time offset."""

    intrinsics: CameraIntrinsics
    width: int
    height: int
    surfaces: tuple
    poses: dict  # time offset (-1, 0, 1) -> camera-to-world PoseSE3
    light: tuple = (0.3, -0.5, -1.0)
    ambient: float = 0.4

    def relative_pose(self, target, source):
        """Pose taking points in the ``target``-time camera into the ``source``-time camera."""
        return self.poses[source].inverse() @ self.poses[target]


def render_scene(s, time=0):
    """Ray-trace frame ``time``; depth is camera-frame z of the nearest hit."""
    pose = s.poses[time]
    K = s.intrinsics
    u, v = pixel_grid(s.height, s.width)
    rays_cam = np.stack([(u - K.cx) / K.fx, (v - K.cy) / K.fy, np.ones_like(u)], axis=-1)
    rays = rays_cam @ pose.rotation.T
    cam = pose.translation
    best_t = np.full(u.shape, np.inf)
    albedo = np.zeros(u.shape + (3,))
    shade = np.zeros(u.shape)
    light = np.asarray(s.light, dtype=np.float64)
    light = light / np.linalg.norm(light)
    for surf in s.surfaces:
        n = surf.normal
        denom = rays @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((surf.origin - cam) @ n) / denom
        hit = np.isfinite(t) & (t > 1e-9) & (t < best_t)
        if not hit.any():
            continue
        pts = cam + rays * np.where(hit, t, 0.0)[..., None]
        rel = pts - surf.origin
        a, b = rel @ surf.u, rel @ surf.v
        if surf.extent is not None:
            hit &= (np.abs(a) <= surf.extent[0]) & (np.abs(b) <= surf.extent[1])
        if not hit.any():
            continue
        best_t = np.where(hit, t, best_t)
        albedo[hit] = surf.texture(a[hit], b[hit])
        # Face the normal toward the camera for shading.
        facing = np.where(denom[hit] < 0, 1.0, -1.0)
        shade[hit] = np.maximum(0.0, -(light @ n) * facing)
    if not np.all(np.isfinite(best_t)):
        raise NoIntersection(f"{int((~np.isfinite(best_t)).sum())} camera rays hit nothing")
    # The ray direction has unit z in the camera frame, so the ray parameter is the depth.
    depth = best_t
    img = albedo * (s.ambient + (1 - s.ambient) * shade)[..., None]
    return ImageFrame(np.clip(img, 0.0, 1.0)), DepthMap(depth)


def look_pose(position, rotation=None):
    return PoseSE3(np.eye(3) if rotation is None else rotation, np.asarray(position, float))


def plane_scene(width=128, height=96, depth=8.0, tilt=0.0, motion=(0.0, 0.0, 0.4),
                fov_x_deg=60.0, texture=None):
    """A single textured plane facing the camera, tilted about the y axis by ``tilt`` radians.

    The camera sits at the origin at t=0 and moves by ``motion`` per frame.
    """
    fx = (width / 2) / math.tan(math.radians(fov_x_deg) / 2)
    K = CameraIntrinsics(fx, fx, (width - 1) / 2, (height - 1) / 2)
    c, s = math.cos(tilt), math.sin(tilt)
    u_axis = np.array([c, 0.0, -s])
    plane = Plane(np.array([0.0, 0.0, depth]), u_axis, np.array([0.0, 1.0, 0.0]),
                  texture=texture or Texture())
    m = np.asarray(motion, dtype=np.float64)
    poses = {k: look_pose(k * m) for k in (-1, 0, 1)}
    return SyntheticScene(K, width, height, (plane,), poses)


def boxes_scene(width=128, height=96, motion=(0.1, 0.0, 0.3), fov_x_deg=60.0):
    """Back wall, floor and two boxes; every ray hits the wall or the floor."""
    fx = (width / 2) / math.tan(math.radians(fov_x_deg) / 2)
    K = CameraIntrinsics(fx, fx, (width - 1) / 2, (height - 1) / 2)
    wall = Plane([0.0, 0.0, 30.0], [1, 0, 0], [0, 1, 0],
                 texture=Texture((0.6, 0.55, 0.5), (0.2, 0.2, 0.2), (0.15, 0.1)))
    floor = Plane([0.0, 1.6, 0.0], [1, 0, 0], [0, 0, 1],
                  texture=Texture((0.35, 0.4, 0.35), (0.15, 0.1, 0.1), (0.3, 0.2)))
    surfaces = [wall, floor]
    surfaces += box_faces((-2.0, 0.6, 12.0), (2.0, 2.0, 2.0),
                          Texture((0.7, 0.3, 0.3), (0.2, 0.1, 0.1), (0.6, 0.6)))
    surfaces += box_faces((2.5, 0.1, 18.0), (3.0, 3.0, 3.0),
                          Texture((0.3, 0.4, 0.7), (0.1, 0.1, 0.2), (0.4, 0.5)))
    m = np.asarray(motion, dtype=np.float64)
    poses = {k: look_pose(k * m) for k in (-1, 0, 1)}
    return SyntheticScene(K, width, height, tuple(surfaces), poses)


SCENES = {"plane": plane_scene, "boxes": boxes_scene}


# hardware preset

LIDAR_FOV_DEG = (14.5, 16.2)
CAMERA_FOV_DEG = (41.3, 31.3)
CAMERA_RESOLUTION = (1536, 1024)  # width, height


@dataclass(frozen=True)
class RigPreset:
    width: int
    height: int
    intrinsics: CameraIntrinsics
    lidar_fraction: tuple  # (width fraction, height fraction)
    lidar_rect: Rect


def lidar_fraction(lidar_fov=LIDAR_FOV_DEG, camera_fov=CAMERA_FOV_DEG):
    """Share of the image spanned by the LiDAR frustum, per axis, from the half-angle tangents."""
    return tuple(math.tan(math.radians(l) / 2) / math.tan(math.radians(c) / 2)
                 for l, c in zip(lidar_fov, camera_fov))


def default_rig(lidar_fov=LIDAR_FOV_DEG, camera_fov=CAMERA_FOV_DEG, resolution=CAMERA_RESOLUTION):
    w, h = resolution
    fx = (w / 2) / math.tan(math.radians(camera_fov[0]) / 2)
    fy = (h / 2) / math.tan(math.radians(camera_fov[1]) / 2)
    K = CameraIntrinsics(fx, fy, (w - 1) / 2, (h - 1) / 2)
    fw, fh = lidar_fraction(lidar_fov, camera_fov)
    rw, rh = int(round(w * fw)), int(round(h * fh))
    # Even/odd parity of the rect matches the frame so the centres coincide.
    rw += (w - rw) % 2
    rh += (h - rh) % 2
    rect = Rect((w - rw) // 2, (h - rh) // 2, rw, rh)
    return RigPreset(w, h, K, (fw, fh), rect)
