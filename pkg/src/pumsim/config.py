"""Experiment configuration: INI files, defaults and a stable digest."""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields

from .analog import AnalogParams
from .bank import Geometry
from .decoder import DecoderLayout
from .engine import CommandDurations, TimingParams
from .errors import ConfigError

SPATIAL_PROFILES = ("flat", "m_pattern")


@dataclass
class ExperimentConfig:
    """Everything a run needs, loadable from an INI file."""

    # geometry
    group_widths: tuple[int, ...] = (1, 2, 2, 2, 2)
    n_subarrays: int = 1
    n_bitlines: int = 1024
    # timing (nanoseconds)
    t_ras: float = 32.0
    t_rp: float = 13.5
    t_violation: float = 3.0
    t_faw: float = 25.0
    max_acts_in_faw: int = 4
    # analog
    vdd: float = 1.2
    cb_ratio: float = 5.79
    variation_sigma: float = 0.0
    sense_offset_sigma: float | None = None
    sense_threshold: float = 0.0
    first_row_weight: float = 1.0
    # profile
    biased_senseamps: bool = False
    static_variation: bool = True
    spatial_profile: str = "flat"
    spatial_amplitude: float = 0.6
    # experiment scale
    seed: int = 1
    trials: int = 128
    groups_per_subarray: int = 4
    subarrays_sampled: int = 1
    group_size: int = 8

    def __post_init__(self) -> None:
        if self.spatial_profile not in SPATIAL_PROFILES:
            raise ConfigError(
                f"spatial_profile must be one of {SPATIAL_PROFILES}, "
                f"got {self.spatial_profile!r}"
            )
        if self.trials < 1:
            raise ConfigError(f"trials must be positive, got {self.trials}")

    def layout(self) -> DecoderLayout:
        return DecoderLayout(group_widths=self.group_widths,
                             subarray_count=self.n_subarrays)

    def geometry(self) -> Geometry:
        return Geometry(
            n_subarrays=self.n_subarrays,
            subarray_size=self.layout().subarray_size,
            n_bitlines=self.n_bitlines,
        )

    def timing(self) -> TimingParams:
        return TimingParams(
            t_ras=self.t_ras,
            t_rp=self.t_rp,
            t_violation=self.t_violation,
            t_faw=self.t_faw,
            max_acts_in_faw=self.max_acts_in_faw,
        )

    def durations(self) -> CommandDurations:
        return CommandDurations.from_timing(self.timing())

    def analog_params(self, variation_sigma: float | None = None) -> AnalogParams:
        sigma = self.variation_sigma if variation_sigma is None else variation_sigma
        return AnalogParams(
            vdd=self.vdd,
            cb_ratio=self.cb_ratio,
            variation_sigma=sigma,
            sense_offset_sigma=self.sense_offset_sigma,
            sense_threshold=self.sense_threshold,
            first_row_weight=self.first_row_weight,
            static_variation=self.static_variation,
        )

    def to_ini(self) -> str:
        """Canonical INI rendering; equal configs render identically."""
        parser = configparser.ConfigParser()
        parser["geometry"] = {
            "group_widths": ",".join(str(w) for w in self.group_widths),
            "n_subarrays": str(self.n_subarrays),
            "n_bitlines": str(self.n_bitlines),
        }
        parser["timing"] = {
            "t_ras": repr(self.t_ras),
            "t_rp": repr(self.t_rp),
            "t_violation": repr(self.t_violation),
            "t_faw": repr(self.t_faw),
            "max_acts_in_faw": str(self.max_acts_in_faw),
        }
        parser["analog"] = {
            "vdd": repr(self.vdd),
            "cb_ratio": repr(self.cb_ratio),
            "variation_sigma": repr(self.variation_sigma),
            "sense_offset_sigma": (
                "auto" if self.sense_offset_sigma is None
                else repr(self.sense_offset_sigma)
            ),
            "sense_threshold": repr(self.sense_threshold),
            "first_row_weight": repr(self.first_row_weight),
        }
        parser["profile"] = {
            "biased_senseamps": str(self.biased_senseamps).lower(),
            "static_variation": str(self.static_variation).lower(),
            "spatial_profile": self.spatial_profile,
            "spatial_amplitude": repr(self.spatial_amplitude),
        }
        parser["experiment"] = {
            "seed": str(self.seed),
            "trials": str(self.trials),
            "groups_per_subarray": str(self.groups_per_subarray),
            "subarrays_sampled": str(self.subarrays_sampled),
            "group_size": str(self.group_size),
        }
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]


_BOOL_FIELDS = {"biased_senseamps", "static_variation"}
_INT_FIELDS = {
    "n_subarrays", "n_bitlines", "max_acts_in_faw", "seed", "trials",
    "groups_per_subarray", "subarrays_sampled", "group_size",
}
_STR_FIELDS = {"spatial_profile"}


def from_ini(text: str) -> ExperimentConfig:
    """Parse an INI document; unknown keys or sections are errors."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in ("geometry", "timing", "analog", "profile", "experiment"):
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser[section].items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            values[key] = _convert(key, raw)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def _convert(key: str, raw: str) -> object:
    raw = raw.strip()
    try:
        if key == "group_widths":
            return tuple(int(part) for part in raw.split(","))
        if key == "sense_offset_sigma":
            return None if raw == "auto" else float(raw)
        if key in _BOOL_FIELDS:
            if raw.lower() in ("true", "yes", "on", "1"):
                return True
            if raw.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if key in _INT_FIELDS:
            return int(raw)
        if key in _STR_FIELDS:
            return raw
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def load(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return from_ini(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def save(config: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config.to_ini())
