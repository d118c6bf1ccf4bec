"""Standard depth-benchmark error metrics and scale-correction protocols.

Protocols:
    M -- per-image ratio of ground-truth median to prediction median
    F -- one fixed scale (the mean M-scale over a calibration split)
    P -- ratio of partial-depth median to prediction median on the partial mask
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import DepthMap, check_same_shape
from .errors import EmptyMask, MissingPartial

DELTA_BASE = 1.25
LOG_CLAMP = (1e-3, 200.0)
CSV_COLUMNS = ("image_id", "protocol", "scale", "n_valid",
               "abs_rel", "sq_rel", "rmse", "rmse_log", "d1", "d2", "d3")


@dataclass(frozen=True)
class ScaleProtocol:
    mode: str = "M"
    fixed_scale: float = 1.0

    def __post_init__(self):
        if self.mode not in ("M", "F", "P"):
            raise ValueError(f"unknown scale protocol {self.mode!r}")
        if self.mode == "F" and not (np.isfinite(self.fixed_scale) and self.fixed_scale > 0):
            raise ValueError("F protocol needs a positive fixed scale")


@dataclass(frozen=True)
class MetricReport:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float
    n_valid: int
    scale_applied: float = 1.0
    protocol: str = "-"
    depth_range_filter: tuple | None = None
    image_id: str = ""

    def __post_init__(self):
        if self.n_valid < 1:
            raise EmptyMask("report over zero pixels")
        if not 0 <= self.delta1 <= self.delta2 <= self.delta3 <= 1:
            raise ValueError("delta thresholds out of order")

    def row(self):
        return {"image_id": self.image_id, "protocol": self.protocol,
                "scale": self.scale_applied, "n_valid": self.n_valid,
                "abs_rel": self.abs_rel, "sq_rel": self.sq_rel, "rmse": self.rmse,
                "rmse_log": self.rmse_log, "d1": self.delta1, "d2": self.delta2,
                "d3": self.delta3}

    def line(self):
        """One ``key=value`` line in CSV column order."""
        parts = []
        for k, v in self.row().items():
            parts.append(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}")
        return " ".join(parts)

    def as_dict(self):
        return asdict(self)


def _median_ratio(num_map, den_map, mask, what):
    if not mask.any():
        raise EmptyMask(f"no pixel where both {what} and the prediction are valid")
    return float(np.median(num_map[mask]) / np.median(den_map[mask]))


def correct_scale(pred, gt=None, partial=None, proto=ScaleProtocol()):
    """Return (scale * pred, scale) under the chosen protocol.

    Medians are taken over pixels where both the reference and the prediction
    are valid.
    """
    p = pred.values
    if proto.mode == "F":
        s = float(proto.fixed_scale)
    elif proto.mode == "M":
        if gt is None:
            raise ValueError("M protocol needs ground truth")
        check_same_shape(pred, gt)
        s = _median_ratio(gt.values, p, gt.mask & pred.mask, "ground truth")
    else:
        if partial is None:
            raise MissingPartial("P protocol needs the partial depth")
        check_same_shape(pred, partial)
        s = _median_ratio(partial.values, p, partial.mask & pred.mask, "partial depth")
    return DepthMap(p * s), s


def calibrate_fixed_scale(pairs):
    """Mean per-image M-scale over (pred, gt) pairs; the F protocol's constant."""
    scales = [correct_scale(p, g, proto=ScaleProtocol("M"))[1] for p, g in pairs]
    if not scales:
        raise EmptyMask("no calibration pairs")
    return float(np.mean(scales))


def evaluation_mask(pred, gt, range_filter=None):
    m = gt.mask & pred.mask
    if range_filter is not None:
        lo, hi = range_filter
        g = gt.values
        if lo is not None:
            m &= g >= lo
        if hi is not None:
            m &= g < hi
    return m


def compute_errors(p, g):
    """The seven metrics over matched 1-D arrays of positive depths."""
    thresh = np.maximum(g / p, p / g)
    d1 = float((thresh < DELTA_BASE).mean())
    d2 = float((thresh < DELTA_BASE ** 2).mean())
    d3 = float((thresh < DELTA_BASE ** 3).mean())
    diff = p - g
    rmse = math.sqrt(float((diff ** 2).mean()))
    pl = np.clip(p, *LOG_CLAMP)
    rmse_log = math.sqrt(float(((np.log(pl) - np.log(g)) ** 2).mean()))
    abs_rel = float((np.abs(diff) / g).mean())
    sq_rel = float((diff ** 2 / g).mean())
    return abs_rel, sq_rel, rmse, rmse_log, d1, d2, d3


def evaluate(pred, gt, range_filter=None, *, scale=1.0, protocol="-", image_id=""):
    """Metrics over pixels valid in both maps; ``range_filter`` keeps lo <= gt < hi."""
    check_same_shape(pred, gt)
    m = evaluation_mask(pred, gt, range_filter)
    n = int(m.sum())
    if n == 0:
        raise EmptyMask("no mutually valid pixel to evaluate")
    errs = compute_errors(pred.values[m], gt.values[m])
    rf = tuple(range_filter) if range_filter is not None else None
    return MetricReport(*errs, n_valid=n, scale_applied=scale, protocol=protocol,
                        depth_range_filter=rf, image_id=image_id)


def evaluate_protocol(pred, gt, proto, partial=None, range_filter=None, image_id=""):
    corrected, s = correct_scale(pred, gt, partial, proto)
    return evaluate(corrected, gt, range_filter, scale=s, protocol=proto.mode, image_id=image_id)


def mean_report(reports):
    """Column-wise mean of the error metrics, summed pixel counts."""
    if not reports:
        raise EmptyMask("no reports to aggregate")
    keys = ("abs_rel", "sq_rel", "rmse", "rmse_log", "delta1", "delta2", "delta3")
    means = {k: float(np.mean([getattr(r, k) for r in reports])) for k in keys}
    return MetricReport(**means, n_valid=sum(r.n_valid for r in reports),
                        scale_applied=float(np.mean([r.scale_applied for r in reports])),
                        protocol=reports[0].protocol,
                        depth_range_filter=reports[0].depth_range_filter, image_id="mean")


def write_csv(reports, path):
    reports = sorted(reports, key=lambda r: r.image_id)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for r in reports:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.row().items()})


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
