"""Run configuration: defaults, YAML files and command-line overrides."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from .engine import SCHEMES
from .stochastic import RusModel, TimingConfig

OUT_ENV = "RUSCHED_OUT"
SWEEP_AXES = ("d", "p", "k", "c", "tau_mst", "compression")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "dynamic"
    circuit: str = "qft:18"
    d: int = 7
    p: float = 1e-4
    k: int = 25
    c: int = 100
    tau_mst: int = 100
    compression: float = 0.0
    compression_seed: int = 0
    seeds: tuple[int, ...] = (0,)
    q0: float = 0.5
    expand_c: float = 10.0
    prep_attempt_rounds: int = 2
    expansion_rounds: int | None = None
    out_dir: str = "results"
    trace: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.k < 1 or self.c < 1 or self.tau_mst < 0:
            raise ConfigError("k and c must be >= 1 and tau_mst >= 0")
        if not 0.0 <= self.compression <= 1.0:
            raise ConfigError("compression must lie in [0, 1] (fraction of blocks)")
        if not 0.0 < self.q0 <= 1.0:
            raise ConfigError("q0 must lie in (0, 1]")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        self.timing()  # validates d, p and durations

    def timing(self) -> TimingConfig:
        try:
            return TimingConfig(d=self.d, p=self.p, prep_attempt_rounds=self.prep_attempt_rounds,
                                expansion_rounds=self.expansion_rounds)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def rus(self) -> RusModel:
        return RusModel(q0=self.q0, expand_c=self.expand_c)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["seeds"] = list(self.seeds)
        return out

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_ALIASES = {"tau": "tau_mst", "seed": "seeds", "out": "out_dir"}


def parse_seeds(value) -> tuple[int, ...]:
    """``5`` means seeds 0..4; ``"1,4,9"`` or a list is taken literally;
    ``"3:7"`` is a half-open range."""
    if isinstance(value, int):
        if value < 1:
            raise ConfigError("seed count must be positive")
        return tuple(range(value))
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    s = str(value).strip()
    if ":" in s:
        lo, hi = s.split(":", 1)
        return tuple(range(int(lo), int(hi)))
    if "," in s:
        return tuple(int(v) for v in s.split(",") if v.strip())
    return parse_seeds(int(s))


def _coerce(name: str, value):
    if name == "seeds":
        return parse_seeds(value)
    if value is None:
        return None
    ftype = str(_FIELDS[name].type)
    if "bool" in ftype:
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if ftype.startswith("int"):
        return int(value)
    if ftype.startswith("float"):
        v = float(value)
        if name == "compression" and v > 1.0:
            v /= 100.0  # accept percentages
        return v
    return value


def normalise_keys(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        name = _ALIASES.get(key, key).replace("-", "_")
        name = _ALIASES.get(name, name)
        if name not in _FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}")
        out[name] = _coerce(name, value)
    return out


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed config file {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return raw


def resolve(file_values: dict | None = None, cli_values: dict | None = None) -> RunConfig:
    """Merge defaults < config file < environment (output dir only) < CLI."""
    merged: dict = {}
    rest = {}
    if file_values:
        rest = {k: v for k, v in file_values.items() if k in ("axes", "schemes", "jobs")}
        merged.update(normalise_keys({k: v for k, v in file_values.items() if k not in rest}))
    env_out = os.environ.get(OUT_ENV)
    if env_out:
        merged["out_dir"] = env_out
    if cli_values:
        merged.update(normalise_keys({k: v for k, v in cli_values.items() if v is not None}))
    try:
        return RunConfig(**merged)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def parse_axis(spec: str) -> tuple[str, list]:
    """``"k=25,50,100"`` -> ("k", [25, 50, 100])."""
    if "=" not in spec:
        raise ConfigError(f"axis {spec!r} must look like name=v1,v2")
    name, values = spec.split("=", 1)
    name = _ALIASES.get(name.strip(), name.strip())
    if name not in SWEEP_AXES:
        raise ConfigError(f"cannot sweep {name!r}; sweepable axes: {', '.join(SWEEP_AXES)}")
    vals = [v for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError(f"axis {name!r} has no values")
    return name, [_coerce(name, v) for v in vals]
