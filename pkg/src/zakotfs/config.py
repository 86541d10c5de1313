"""Experiment configuration: schema, defaults and YAML/JSON loading."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import yaml

from .channel import VEH_A, delay_spread_bins
from .dd_core import GridParams
from .pulse import RRCFilterSpec

ESTIMATORS = ("ls", "ambiguity", "perfect")


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass(frozen=True)
class GridConfig:
    M: int = 64
    N: int = 24
    nu_p: float = 7.5e3


@dataclass(frozen=True)
class FilterConfig:
    beta_tau: float = 0.6
    beta_nu: float = 0.6
    cutoff: float = 40.0


@dataclass(frozen=True)
class ChannelConfig:
    profile: str = "veh-a"
    nu_max_hz: tuple = (1000.0,)
    tau_max: Optional[float] = None
    window_margin: int = 4


@dataclass(frozen=True)
class FrameConfig:
    Q: tuple = (1,)
    spacing: Union[str, tuple] = "regular"
    k_max: Optional[int] = None
    pdr_db: tuple = (5.0,)
    snr_db: tuple = (25.0,)
    oversample: int = 16


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    frame: FrameConfig = field(default_factory=FrameConfig)
    estimators: tuple = ("ls", "ambiguity")
    trials: int = 200
    seed: int = 0
    output: str = "results"
    workers: int = 1
    write_traces: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def nonempty(name, seq):
            if len(seq) == 0:
                raise ConfigError(f"{name} must be a nonempty list")
        nonempty("channel.nu_max_hz", self.channel.nu_max_hz)
        nonempty("frame.Q", self.frame.Q)
        nonempty("frame.pdr_db", self.frame.pdr_db)
        nonempty("frame.snr_db", self.frame.snr_db)
        nonempty("estimators", self.estimators)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if any(q < 1 for q in self.frame.Q):
            raise ConfigError("every Q must be >= 1")
        if any(nu < 0 for nu in self.channel.nu_max_hz):
            raise ConfigError("nu_max_hz values must be >= 0")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        if self.channel.profile != "veh-a":
            raise ConfigError(f"unknown channel profile {self.channel.profile!r}")
        if isinstance(self.frame.spacing, str) and self.frame.spacing != "regular":
            raise ConfigError("frame.spacing must be 'regular' or a list of pilot delays")
        try:
            self.params
            self.filter_spec
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def params(self) -> GridParams:
        return GridParams(self.grid.M, self.grid.N, self.grid.nu_p)

    @property
    def filter_spec(self) -> RRCFilterSpec:
        f = self.filters
        return RRCFilterSpec(self.params, f.beta_tau, f.beta_nu, f.cutoff)

    @property
    def tau_max(self) -> float:
        return self.channel.tau_max if self.channel.tau_max is not None else VEH_A.max_delay

    @property
    def k_max(self) -> int:
        if self.frame.k_max is not None:
            return self.frame.k_max
        return delay_spread_bins(self.tau_max, self.params)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        return json.loads(json.dumps(d))


_SECTIONS = {"grid": GridConfig, "filters": FilterConfig, "channel": ChannelConfig, "frame": FrameConfig}
_LISTS = {"nu_max_hz", "Q", "pdr_db", "snr_db"}


def _as_tuple(v):
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return (v,)


def from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping")
    kwargs = {}
    for key, value in d.items():
        if key in _SECTIONS:
            cls = _SECTIONS[key]
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            known = cls.__dataclass_fields__
            unknown = set(value) - set(known)
            if unknown:
                raise ConfigError(f"unknown keys in {key!r}: {sorted(unknown)}")
            sec = {}
            for k, v in value.items():
                if k in _LISTS:
                    v = _as_tuple(v)
                elif k == "spacing" and isinstance(v, list):
                    v = tuple(int(x) for x in v)
                sec[k] = v
            try:
                kwargs[key] = cls(**sec)
            except TypeError as exc:
                raise ConfigError(str(exc)) from exc
        elif key in ExperimentConfig.__dataclass_fields__:
            kwargs[key] = _as_tuple(value) if key == "estimators" else value
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read a YAML or JSON file (JSON is valid YAML, so one parser handles both)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) if path.suffix != ".json" else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return from_dict(data or {})
