"""Probabilistic derivation and composition over per-stage candidate depth sets.

At every propagation stage a generator proposes N full-coverage depth maps.
The stage result is the single candidate closest to the previous stage's
refined depth (on its valid pixels) plus ``lambda`` times its distance to the
partial depth. The spread of the candidates gives the uncertainty map.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .core import (DepthMap, ImageFrame, UncertaintyMap, check_same_shape, crop,
                   masked_median, pad_into)
from .errors import DimensionMismatch, EmptyDistribution, OracleUnavailable
from .propagation import StageState, run_stage


@dataclass(frozen=True)
class PdcConfig:
    lam: float = 1.0
    samples_per_stage: int = 5
    norm: str = "l1"

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.samples_per_stage < 1:
            raise ValueError("samples_per_stage must be >= 1")
        if self.norm not in ("l1", "l2"):
            raise ValueError(f"norm must be 'l1' or 'l2', got {self.norm!r}")


@dataclass(frozen=True)
class DistributionSet:
    candidates: tuple
    stage_index: int = 0

    def __post_init__(self):
        cands = tuple(self.candidates)
        object.__setattr__(self, "candidates", cands)
        if not cands:
            raise EmptyDistribution("distribution set has no candidates")
        check_same_shape(*cands)
        for k, c in enumerate(cands):
            if not c.mask.all():
                raise ValueError(f"candidate {k} has invalid pixels; generators must fill the frame")

    def __len__(self):
        return len(self.candidates)

    def stack(self):
        return np.stack([c.values for c in self.candidates])


class HypothesisGenerator(Protocol):
    """Proposes one everywhere-valid candidate for a stage.

    ``rect`` is the stage crop in full-frame pixel coordinates; ``seed`` is the
    derived per-(stage, sample) seed. Output must be deterministic in its inputs.
    """

    def __call__(self, image: ImageFrame, mixed: DepthMap, *, sample_index: int,
                 seed: int, rect) -> DepthMap: ...


def derive_seed(master_seed, stage, sample):
    """64-bit seed for one (stage, sample) pair, independent of evaluation order."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(stage), int(sample)))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def uncertainty(p):
    """Population standard deviation across candidates, per pixel."""
    stack = p.stack()
    # Shifting by the first candidate keeps identical candidates at exactly zero.
    return UncertaintyMap((stack - stack[0]).std(axis=0))


def _norm(residual, kind):
    if kind == "l1":
        return float(np.abs(residual).sum())
    return float(np.sqrt((residual ** 2).sum()))


def selection_objectives(p, refined_prev, partial, cfg):
    check_same_shape(refined_prev, partial, *p.candidates)
    prev, part = refined_prev.values, partial.values
    m_prev, m_part = prev > 0, part > 0
    out = []
    for c in p.candidates:
        d = c.values
        cost = _norm((d - prev)[m_prev], cfg.norm)
        if cfg.lam:
            cost += cfg.lam * _norm((d - part)[m_part], cfg.norm)
        out.append(cost)
    return np.array(out)


def derive_stage(p, refined_prev, partial, cfg):
    """Select the candidate minimizing the stage objective; ties go to the lowest index."""
    if len(p) == 0:
        raise EmptyDistribution("no candidates to select from")
    costs = selection_objectives(p, refined_prev, partial, cfg)
    return p.candidates[int(np.argmin(costs))]


@dataclass
class StageRecord:
    index: int
    rect: object
    seeds: list
    objectives: list
    winner: int


@dataclass
class Composition:
    depth: DepthMap
    uncertainty: UncertaintyMap
    stages: list


def compose_full(image, partial, schedule, gen, cfg=PdcConfig(), seed=0, coarse=None):
    """Propagate ``partial`` over every stage of ``schedule``.

    ``coarse`` is the full-frame teacher depth whose crops are rescaled and
    mixed in at each stage; without it the generator sees only the padded
    refined depth and must fill the rest.

    Returns a :class:`Composition` with the final depth, the last stage's
    uncertainty and per-stage seeds/objectives for the run manifest.
    """
    check_same_shape(image, partial)
    if (image.height, image.width) != schedule.frame_size:
        raise DimensionMismatch("schedule frame does not match the image")
    if coarse is not None:
        check_same_shape(image, coarse)
    first = schedule.stages[0]
    outside = partial.values.copy()
    outside[first.slices] = 0
    if outside.any():
        raise DimensionMismatch("partial depth has valid pixels outside the first stage rect")

    refined = crop(partial, first)
    records = []
    unc = None
    for i, (prev_rect, rect) in enumerate(zip(schedule.stages, schedule.stages[1:]), start=1):
        padded = pad_into(refined, (rect.height, rect.width), prev_rect.relative_to(rect))
        if coarse is not None and padded.mask.any():
            mixed = run_stage(StageState(padded, crop(coarse, rect)))
        else:
            mixed = padded
        img = crop(image, rect)
        seeds = [derive_seed(seed, i, k) for k in range(cfg.samples_per_stage)]
        cands = [gen(img, mixed, sample_index=k, seed=s, rect=rect) for k, s in enumerate(seeds)]
        dist = DistributionSet(tuple(cands), stage_index=i)
        part_i = crop(partial, rect)
        costs = selection_objectives(dist, padded, part_i, cfg)
        winner = int(np.argmin(costs))
        refined = dist.candidates[winner]
        unc = uncertainty(dist)
        records.append(StageRecord(i, rect, seeds, costs.tolist(), winner))
    return Composition(refined, unc, records)


# builtin generators

class NoisyOracle:
    """Ground truth plus seeded Gaussian noise and a per-sample global scale jitter.

    Invalid ground-truth pixels are filled from the nearest valid one so that
    candidates always cover the frame.
    """

    name = "noisy-oracle"

    def __init__(self, gt, sigma=0.0, jitter=0.0, min_depth=1e-3):
        if gt is None:
            raise OracleUnavailable("noisy-oracle generator needs a ground-truth depth map")
        if sigma < 0 or not 0 <= jitter < 1:
            raise ValueError("sigma must be >= 0 and jitter in [0, 1)")
        self.gt = DepthMap(nearest_fill(gt.values))
        self.sigma = float(sigma)
        self.jitter = float(jitter)
        self.min_depth = min_depth

    def __call__(self, image, mixed, *, sample_index, seed, rect):
        base = self.gt.values[rect.slices]
        if base.shape != mixed.shape:
            raise DimensionMismatch("stage rect does not match the mixed depth")
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(base.shape)
        scale = 1.0 + self.jitter * (2.0 * rng.random() - 1.0)
        out = base * scale + self.sigma * noise
        return DepthMap(np.maximum(out, self.min_depth))


class GuidedInterpolator:
    """Fill holes by inverse-distance weighting over the k nearest valid pixels.

    Weights are ``exp(-|dI| / intensity_sigma) / dist**power`` where ``dI`` is the
    mean RGB difference between the hole pixel and the neighbour.
    """

    name = "guided-interpolator"

    def __init__(self, k=8, power=2.0, intensity_sigma=0.1, noise=0.0):
        self.k = int(k)
        self.power = float(power)
        self.intensity_sigma = float(intensity_sigma)
        self.noise = float(noise)

    def __call__(self, image, mixed, *, sample_index, seed, rect):
        d = mixed.values
        valid = d > 0
        if not valid.any():
            raise ValueError("guided interpolation needs at least one valid pixel")
        out = d.copy()
        holes = ~valid
        if holes.any():
            vy, vx = np.nonzero(valid)
            hy, hx = np.nonzero(holes)
            k = min(self.k, vy.size)
            tree = cKDTree(np.column_stack([vy, vx]))
            dist, idx = tree.query(np.column_stack([hy, hx]), k=k)
            dist = dist.reshape(hy.size, k)
            idx = idx.reshape(hy.size, k)
            img = image.values
            di = np.abs(img[hy, hx][:, None, :] - img[vy[idx], vx[idx]]).mean(axis=2)
            w = np.exp(-di / self.intensity_sigma) / dist ** self.power
            out[hy, hx] = (w * d[vy[idx], vx[idx]]).sum(axis=1) / w.sum(axis=1)
        if self.noise:
            rng = np.random.default_rng(seed)
            out = out * (1.0 + self.noise * rng.standard_normal(out.shape))
        return DepthMap(np.maximum(out, 1e-3))


class ConstantFill:
    """Fill every hole with the median of the valid pixels."""

    name = "constant-fill"

    def __call__(self, image, mixed, *, sample_index, seed, rect):
        d = mixed.values
        return DepthMap(np.where(d > 0, d, masked_median(mixed)))


class NearestFill:
    """Fill every hole with its nearest valid pixel (exact on piecewise-constant input)."""

    name = "nearest-fill"

    def __call__(self, image, mixed, *, sample_index, seed, rect):
        return DepthMap(nearest_fill(mixed.values))


def nearest_fill(d):
    d = np.asarray(d, dtype=np.float64)
    holes = d <= 0
    if not holes.any():
        return d.copy()
    if holes.all():
        raise ValueError("cannot fill a map with no valid pixel")
    idx = ndimage.distance_transform_edt(holes, return_distances=False, return_indices=True)
    return d[tuple(idx)]


_CATALOG = {
    NoisyOracle.name: NoisyOracle,
    GuidedInterpolator.name: GuidedInterpolator,
    ConstantFill.name: ConstantFill,
    NearestFill.name: NearestFill,
}


def builtin_generators():
    """Name -> generator class for the stand-in hypothesis generators."""
    return dict(_CATALOG)


def make_generator(name, gt=None, **params):
    try:
        cls = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown generator {name!r}; choose from {sorted(_CATALOG)}") from None
    if cls is NoisyOracle:
        return cls(gt, **params)
    return cls(**params)
