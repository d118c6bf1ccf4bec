"""Run configuration (TOML) and run manifests.

Unknown sections or keys are hard errors. The README lists every section and key.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, fields, asdict, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .losses import LossWeights
from .metrics import ScaleProtocol
from .pdc import PdcConfig, builtin_generators
from .resample import DEFAULT_KEEP_RATE, DEFAULT_RANDOM_BOUNDS, MODES, ResampleMode


@dataclass(frozen=True)
class PathsSection:
    image: str | None = None
    partial: str | None = None
    coarse: str | None = None
    gt: str | None = None
    out_dir: str = "out"


@dataclass(frozen=True)
class ResampleSection:
    mode: str = "center"
    fraction: tuple = (0.5, 0.5)
    keep_rate: float = DEFAULT_KEEP_RATE
    bounds: tuple = DEFAULT_RANDOM_BOUNDS


@dataclass(frozen=True)
class PropagationSection:
    stages: int = 5
    partial_rect: tuple | None = None


@dataclass(frozen=True)
class GeneratorSection:
    name: str = "guided-interpolator"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PdcSection:
    lam: float = 1.0
    samples_per_stage: int = 5
    norm: str = "l1"


@dataclass(frozen=True)
class LossSection:
    w_pe: float = 1.0
    w_p: float = 1.0
    w_s: float = 1.0
    w_peg: float = 1.0
    w_pse: float = 1.0
    w_G: float = 1.0
    scale_weights: tuple = (1.0, 0.5, 0.25, 0.125, 0.0625)
    alpha: float = 0.85
    alpha_pseudo: float = 0.95
    photometric_norm: str = "l1"


@dataclass(frozen=True)
class MetricsSection:
    protocol: str = "P"
    fixed_scale: float = 1.0
    range_min: float | None = None
    range_max: float | None = None


@dataclass(frozen=True)
class SynthSection:
    scene: str = "plane"
    width: int = 128
    height: int = 96


_SECTIONS = {
    "paths": PathsSection,
    "resample": ResampleSection,
    "propagation": PropagationSection,
    "generator": GeneratorSection,
    "pdc": PdcSection,
    "losses": LossSection,
    "metrics": MetricsSection,
    "synth": SynthSection,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    paths: PathsSection = field(default_factory=PathsSection)
    resample: ResampleSection = field(default_factory=ResampleSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    pdc: PdcSection = field(default_factory=PdcSection)
    losses: LossSection = field(default_factory=LossSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    synth: SynthSection = field(default_factory=SynthSection)

    # typed views

    def pdc_config(self):
        return PdcConfig(self.pdc.lam, self.pdc.samples_per_stage, self.pdc.norm)

    def loss_weights(self):
        return LossWeights(**asdict(self.losses))

    def resample_mode(self):
        r = self.resample
        return ResampleMode(r.mode, r.fraction, r.keep_rate, r.bounds, self.seed)

    def scale_protocol(self):
        return ScaleProtocol(self.metrics.protocol, self.metrics.fixed_scale)

    def range_filter(self):
        m = self.metrics
        if m.range_min is None and m.range_max is None:
            return None
        return (m.range_min, m.range_max)

    def to_dict(self):
        return json.loads(json.dumps(asdict(self)))

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _coerce(cls, section, data):
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    kwargs = {}
    for k, v in data.items():
        default = known[k].default
        if isinstance(v, list):
            v = tuple(v)
        if isinstance(default, float) and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        kwargs[k] = v
    return cls(**kwargs)


def config_from_dict(data):
    data = dict(data)
    unknown = sorted(set(data) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    seed = data.pop("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    sections = {name: _coerce(cls, name, data.get(name, {})) for name, cls in _SECTIONS.items()}
    cfg = RunConfig(seed=seed, **sections)
    validate(cfg)
    return cfg


def validate(cfg):
    """Cross-field checks; raises ConfigError."""
    try:
        cfg.pdc_config()
        cfg.loss_weights()
        cfg.resample_mode()
        cfg.scale_protocol()
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e
    if cfg.resample.mode not in MODES:
        raise ConfigError(f"unknown resample mode {cfg.resample.mode!r}")
    if cfg.generator.name not in builtin_generators():
        raise ConfigError(f"unknown generator {cfg.generator.name!r}; "
                          f"choose from {sorted(builtin_generators())}")
    if not isinstance(cfg.propagation.stages, int) or cfg.propagation.stages < 1:
        raise ConfigError("propagation.stages must be an integer >= 1")
    pr = cfg.propagation.partial_rect
    if pr is not None and (len(pr) != 4 or not all(isinstance(x, int) for x in pr)):
        raise ConfigError("propagation.partial_rect must be [x0, y0, width, height]")


def load_config(path=None, overrides=()):
    """Read a TOML config (defaults if ``path`` is None) and apply ``key.path=value`` overrides."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    for ov in overrides:
        apply_override(data, ov)
    return config_from_dict(data)


def apply_override(data, override):
    """Set ``a.b=value`` in a nested dict; the value is parsed as a TOML value when possible."""
    if "=" not in override:
        raise ConfigError(f"override {override!r} is not of the form key=value")
    key, raw = override.split("=", 1)
    parts = key.strip().split(".")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {override!r} descends into a non-table")
    node[parts[-1]] = value


def with_seed(cfg, seed):
    return replace(cfg, seed=seed)


def write_manifest(path, payload):
    """Deterministic JSON (sorted keys, fixed separators, trailing newline)."""
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def read_manifest(path):
    with open(path) as f:
        return json.load(f)
