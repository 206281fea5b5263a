"""Experiment configuration and its YAML representation.

A config file is a nested mapping; the recognised keys, written dotted,
are listed in :data:`CONFIG_KEYS`. Unknown keys are rejected so typos do not
silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .channel import GeometryConfig, RainFadingModel
from .cooperation import SCENARIOS, CooperationScheme, scheme_from_name
from .impairments import FeederLinkModel
from .precoder import MMSE_REG_MODES

__all__ = ["ConfigError", "ExperimentConfig", "CONFIG_KEYS", "FULL_SCALE",
           "config_from_mapping", "load_config", "resolve_scenario"]


class ConfigError(ValueError):
    """Bad or unreadable experiment configuration."""


# dotted key -> (section, field)
CONFIG_KEYS = {
    "satellite.longitude_deg": ("geometry", "satellite_longitude_deg"),
    "satellite.latitude_deg": ("geometry", "satellite_latitude_deg"),
    "satellite.altitude_km": ("geometry", "altitude_km"),
    "coverage.latitude_deg": ("geometry", "coverage_latitude_deg"),
    "coverage.longitude_deg": ("geometry", "coverage_longitude_deg"),
    "beams.count": ("geometry", "num_beams"),
    "beams.grid_spacing_deg": ("geometry", "grid_spacing_deg"),
    "feeds.per_beam": ("geometry", "feeds_per_beam"),
    "clusters.size": ("geometry", "cluster_size"),
    "pattern.peak_gain_dbi": ("geometry", "feed_peak_gain_dbi"),
    "pattern.theta_3db_deg": ("geometry", "feed_theta_3db_deg"),
    "pattern.focal_length_m": ("geometry", "focal_length_m"),
    "rf.carrier_hz": ("geometry", "carrier_hz"),
    "rf.bandwidth_hz": ("geometry", "bandwidth_hz"),
    "rf.noise_temp_k": ("geometry", "noise_temp_k"),
    "rf.user_gain_dbi": ("geometry", "user_gain_dbi"),
    "rain.mean_db": ("rain", "mean_db"),
    "rain.sigma_db": ("rain", "sigma_db"),
    "rain.clear_sky": ("rain", "clear_sky"),
    "layout.preset": ("top", "preset"),
    "cooperation": ("top", "cooperation"),
    "precoder.flavor": ("top", "flavor"),
    "precoder.mmse_reg": ("top", "mmse_reg"),
    "feeder.rho": ("feeder", "rho"),
    "feeder.num_interferers": ("feeder", "num_interferers"),
    "feeder.known_at_gateway": ("top", "feeder_known"),
    "csi.quantized": ("top", "csi_quantized"),
    "csi.max_feeds": ("top", "csi_max_feeds"),
    "run.drops": ("top", "drops"),
    "run.seed": ("top", "seed"),
    "run.power_dbw": ("top", "power_dbw"),
    "run.powers_dbw": ("top", "powers_dbw"),
    "run.workers": ("top", "workers"),
}

FULL_SCALE = {"num_beams": 100, "cluster_size": 7}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a Monte Carlo run depends on.

    ``cooperation`` is a scheme name (``icm``, ``4gc``, ``7gc``, ``gcm``,
    ``ref``, ``lmc``) or a scenario number 1-6.
    """

    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    rain: RainFadingModel = field(default_factory=RainFadingModel)
    cooperation: str = "gcm"
    flavor: str = "mmse"
    mmse_reg: str = "gram"
    power_dbw: float = 30.0
    powers_dbw: tuple = (10.0, 20.0, 30.0, 40.0)
    feeder: FeederLinkModel = field(default_factory=FeederLinkModel)
    feeder_known: bool = True
    csi_quantized: bool = False
    csi_max_feeds: Optional[int] = None
    drops: int = 500
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.drops < 1:
            raise ConfigError("run.drops must be at least 1")
        if self.seed < 0:
            raise ConfigError("run.seed must be non-negative")
        if self.workers < 1:
            raise ConfigError("run.workers must be at least 1")
        if self.flavor not in ("zf", "mmse"):
            raise ConfigError(f"precoder.flavor must be zf or mmse, got {self.flavor!r}")
        if self.mmse_reg not in MMSE_REG_MODES:
            raise ConfigError(f"precoder.mmse_reg must be one of {MMSE_REG_MODES}")
        if not self.powers_dbw:
            raise ConfigError("run.powers_dbw must not be empty")
        if self.csi_max_feeds is not None and self.csi_max_feeds < 1:
            raise ConfigError("csi.max_feeds must be at least 1")
        resolve_scenario(self.cooperation)

    @property
    def scheme(self) -> CooperationScheme:
        return resolve_scenario(self.cooperation)

    @property
    def power_w(self) -> float:
        return 10.0 ** (self.power_dbw / 10.0)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_mapping(self) -> dict:
        """Flat dotted-key view, the inverse of :func:`config_from_mapping`."""
        out = {}
        for key, (section, name) in CONFIG_KEYS.items():
            if section == "top":
                if name == "preset":
                    continue
                value = getattr(self, name)
            else:
                value = getattr(getattr(self, section), name)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


def resolve_scenario(value) -> CooperationScheme:
    if isinstance(value, int) and not isinstance(value, bool):
        if value not in SCENARIOS:
            raise ConfigError(f"scenario must be 1-6, got {value}")
        return SCENARIOS[value]
    text = str(value).strip()
    if text.isdigit():
        return resolve_scenario(int(text))
    try:
        return scheme_from_name(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _flatten(mapping, prefix=""):
    flat = {}
    for k, v in mapping.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _check_type(key: str, value, default):
    ok = True
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, tuple):
        ok = isinstance(value, (list, tuple)) and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    if not ok:
        raise ConfigError(f"{key}: unexpected value {value!r}")


def config_from_mapping(mapping: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Build a config from a nested or dotted mapping on top of ``base``."""
    if not isinstance(mapping, dict):
        raise ConfigError("config must be a mapping")
    flat = _flatten(mapping)
    unknown = sorted(set(flat) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    base = base or ExperimentConfig()
    parts = {"geometry": {}, "rain": {}, "feeder": {}, "top": {}}
    for key, value in flat.items():
        section, name = CONFIG_KEYS[key]
        if name == "csi_max_feeds":
            if value is not None:
                _check_type(key, value, 0)
        elif name not in ("preset", "cooperation"):
            owner = base if section == "top" else getattr(base, section)
            _check_type(key, value, getattr(owner, name))
        parts[section][name] = value

    top = parts["top"]
    preset = top.pop("preset", None)
    geo_changes = dict(parts["geometry"])
    if preset is not None:
        if preset == "full":
            geo_changes = {**FULL_SCALE, **geo_changes}
        elif preset != "desk":
            raise ConfigError(f"layout.preset must be desk or full, got {preset!r}")
    if "powers_dbw" in top:
        top["powers_dbw"] = tuple(float(x) for x in top["powers_dbw"])
    if "cooperation" in top:
        top["cooperation"] = str(top["cooperation"])
    try:
        geometry = dataclasses.replace(base.geometry, **geo_changes)
        rain = dataclasses.replace(base.rain, **parts["rain"])
        feeder = dataclasses.replace(base.feeder, **parts["feeder"])
        return dataclasses.replace(base, geometry=geometry, rain=rain, feeder=feeder, **top)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return config_from_mapping(data or {}, base)
