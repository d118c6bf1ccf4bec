"""PNG containers: 16-bit depth (meters * 256, 0 = invalid) and 8-bit RGB images."""
from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import DepthMap, ImageFrame, UncertaintyMap
from .errors import BadFormat, BitDepthMismatch

DEPTH_SCALE = 256.0
MAX_STORED = 65535


def _open(path):
    try:
        im = Image.open(path)
        im.load()
    except (UnidentifiedImageError, OSError) as e:
        raise BadFormat(f"{path}: not a readable image ({e})") from e
    if im.format != "PNG":
        raise BadFormat(f"{path}: expected PNG, got {im.format}")
    return im


def load_depth_png(path):
    im = _open(path)
    if im.mode in ("I;16", "I;16B", "I;16L"):
        raw = np.array(im, dtype=np.uint16)
    elif im.mode == "I":
        # Pillow opens some 16-bit greyscale files as 32-bit "I".
        raw = np.array(im)
        if raw.min() < 0 or raw.max() > MAX_STORED:
            raise BitDepthMismatch(f"{path}: values exceed 16 bits")
    elif im.mode in ("L", "P", "1"):
        raise BitDepthMismatch(f"{path}: {im.mode} image is not 16-bit")
    else:
        raise BadFormat(f"{path}: expected single-channel 16-bit PNG, got mode {im.mode}")
    return DepthMap(raw.astype(np.float64) / DEPTH_SCALE)


def encode_depth(values):
    """Meters -> stored uint16, rounding to the nearest 1/256 m and clamping to the 16-bit range."""
    v = values.values if isinstance(values, (DepthMap, UncertaintyMap)) else np.asarray(values)
    return np.clip(np.floor(v * DEPTH_SCALE + 0.5), 0, MAX_STORED).astype(np.uint16)


def save_depth_png(d, path):
    Image.fromarray(encode_depth(d)).save(path, format="PNG", optimize=False, compress_level=6)


def load_image_png(path):
    im = _open(path)
    if im.mode != "RGB":
        if im.mode in ("L", "RGBA", "P"):
            im = im.convert("RGB")
        else:
            raise BadFormat(f"{path}: expected 8-bit RGB PNG, got mode {im.mode}")
    return ImageFrame(np.asarray(im, dtype=np.float64) / 255.0)


def save_image_png(img, path):
    arr = np.clip(np.floor(img.values * 255.0 + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG", optimize=False, compress_level=6)


def save_gray_png(arr, path):
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(
        path, format="PNG", optimize=False, compress_level=6)
