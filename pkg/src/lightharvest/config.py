"""Run configuration: defaults, file loading, and dotted-key overrides.

Settings live in small per-section dataclasses gathered by SystemConfig.
Overrides address fields as "section.field" (for example
"slipt.max_dc_offset=3"); files may either be JSON objects (nested or flat)
or plain text with one "section.field = value" per line and '#' comments.
Keys ending in "_dbm" set the matching "*_power" or "*_per_user" watts field
through value_watts = 1e-3 * 10^(dbm/10). Unknown keys are rejected with the
list of valid ones, and every derived run report can echo which keys were
left at their defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from lightharvest.channels import OpticalFrontend, RoomGeometry
from lightharvest.slipt import SliptInstance
from lightharvest.wpcn import WpcnInstance

__all__ = [
    "RoomConfig",
    "OpticalConfig",
    "ChannelConfig",
    "WpcnConfig",
    "SliptConfig",
    "SolverConfig",
    "ExperimentConfig",
    "SystemConfig",
    "dbm_to_watts",
    "default_config",
    "load_config_file",
    "parse_override_pairs",
    "apply_overrides",
    "flatten_config",
    "validate_config",
    "room_geometry",
    "optical_frontend",
    "wpcn_instance",
    "slipt_instance",
]


def dbm_to_watts(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


@dataclass
class RoomConfig:
    length: float = 5.0
    width: float = 5.0
    height: float = 3.0
    led_x: float = 2.5
    led_y: float = 2.5
    rf_receiver_x: float = 4.0
    rf_receiver_y: float = 1.0
    rf_receiver_z: float = 1.0
    user_height: float = 1.0


@dataclass
class OpticalConfig:
    detector_area: float = 1e-4
    responsivity: float = 0.53
    semi_angle_deg: float = 60.0
    fov_deg: float = 60.0
    filter_gain: float = 1.0
    refractive_index: float = 1.5
    conversion_efficiency: float = 1.0


@dataclass
class ChannelConfig:
    path_loss_exponent: float = 2.7


@dataclass
class WpcnConfig:
    harvest_efficiency: float = 0.2
    max_led_power: float = 5.0
    rf_noise_power: float = 1e-9


@dataclass
class SliptConfig:
    harvest_efficiency: float = 0.2
    max_led_power: float = 5.0
    max_dc_offset: float = 4.0
    peak_amplitude_ratio: float = 1.0
    vlc_noise_power: float = 3e-14
    rf_noise_power: float = 1e-9
    min_harvest_per_user: float = 0.0
    dc_offset: float = 2.0


@dataclass
class SolverConfig:
    wpcn_backend: str = "bisection"   # bisection | subgradient
    slipt_backend: str = "exact"      # exact | dual
    tol: float = 1e-11
    max_outer: int = 200
    cross_check: bool = True
    fallback_iterations: int = 600
    inner_iterations: int = 500
    bisection_steps: int = 40


@dataclass
class ExperimentConfig:
    n_drops: int = 500
    seed: int = 2024
    jobs: int = 1
    user_count: int = 2
    front_points: int = 11


@dataclass
class SystemConfig:
    room: RoomConfig = field(default_factory=RoomConfig)
    optical: OpticalConfig = field(default_factory=OpticalConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    wpcn: WpcnConfig = field(default_factory=WpcnConfig)
    slipt: SliptConfig = field(default_factory=SliptConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)


def default_config() -> SystemConfig:
    return SystemConfig()


def _valid_keys(config: SystemConfig):
    keys = []
    for section_field in fields(config):
        section = getattr(config, section_field.name)
        for f in fields(section):
            keys.append(f"{section_field.name}.{f.name}")
    return keys


def _coerce(raw, target_type, key):
    if isinstance(raw, str):
        text = raw.strip()
        if target_type is bool:
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"config key {key!r} expects a boolean, got {raw!r}")
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        return text
    if target_type is bool:
        if isinstance(raw, bool):
            return raw
        raise ValueError(f"config key {key!r} expects a boolean, got {raw!r}")
    if target_type is int:
        if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
            raise ValueError(f"config key {key!r} expects an integer, got {raw!r}")
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def parse_override_pairs(pairs):
    """Turn ["a.b=1", ...] from repeated --set flags into a dotted-key dict."""
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _flatten_nested(prefix, obj, out):
    for key, value in obj.items():
        name = f"{prefix}{key}" if not prefix else f"{prefix}.{key}"
        if isinstance(value, dict):
            _flatten_nested(name, value, out)
        else:
            out[name] = value


def load_config_file(path) -> dict:
    """Read a config file into a dotted-key override dict."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if str(path).endswith(".json") or stripped.startswith("{"):
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValueError("a JSON config must be an object")
        flat = {}
        _flatten_nested("", raw, flat)
        return flat
    out = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {ln}: expected 'section.field = value'")
        key, value = body.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def apply_overrides(config: SystemConfig, overrides: dict):
    """Apply dotted-key overrides; returns (new_config, applied_keys).

    applied_keys holds the canonical watts-field names, so a "_dbm" override
    is reported against the field it actually set.
    """
    applied = []
    for key, raw in overrides.items():
        if key.count(".") != 1:
            raise ValueError(
                f"unknown config key {key!r}; valid keys: {', '.join(_valid_keys(config))}"
            )
        section_name, field_name = key.split(".")
        if not hasattr(config, section_name) or section_name not in {
            f.name for f in fields(config)
        }:
            raise ValueError(
                f"unknown config section {section_name!r}; valid keys: "
                f"{', '.join(_valid_keys(config))}"
            )
        section = getattr(config, section_name)
        target = field_name
        value = raw
        if field_name.endswith("_dbm"):
            base = field_name[: -len("_dbm")]
            candidates = [
                f.name
                for f in fields(section)
                if f.name == base or f.name.startswith(base + "_")
            ]
            if len(candidates) != 1:
                raise ValueError(
                    f"config key {key!r} has no matching watts field in "
                    f"section {section_name!r}"
                )
            target = candidates[0]
            value = dbm_to_watts(_coerce(raw, float, key))
        names = {f.name: f for f in fields(section)}
        if target not in names:
            raise ValueError(
                f"unknown config key {key!r}; valid keys: {', '.join(_valid_keys(config))}"
            )
        setattr(section, target, _coerce(value, type(getattr(section, target)), key))
        applied.append(f"{section_name}.{target}")
    validate_config(config)
    return config, sorted(set(applied))


def flatten_config(config: SystemConfig) -> dict:
    """Dotted-key view of every setting, for reports and echoing defaults."""
    flat = {}
    _flatten_nested("", asdict(config), flat)
    return flat


def validate_config(config: SystemConfig):
    room, opt = config.room, config.optical
    checks = [
        (room.length > 0 and room.width > 0 and room.height > 0, "room dimensions must be positive"),
        (0 <= room.led_x <= room.length and 0 <= room.led_y <= room.width, "room.led_x/led_y must lie inside the floor plan"),
        (0 <= room.user_height < room.height, "room.user_height must lie below the ceiling"),
        (opt.detector_area > 0 and opt.responsivity > 0, "optical detector area and responsivity must be positive"),
        (0 < opt.semi_angle_deg < 90, "optical.semi_angle_deg must lie in (0, 90)"),
        (0 < opt.fov_deg <= 90, "optical.fov_deg must lie in (0, 90]"),
        (opt.refractive_index >= 1.0, "optical.refractive_index must be at least 1"),
        (config.channel.path_loss_exponent > 0, "channel.path_loss_exponent must be positive"),
        (0 < config.wpcn.harvest_efficiency <= 1, "wpcn.harvest_efficiency must lie in (0, 1]"),
        (config.wpcn.max_led_power > 0, "wpcn.max_led_power must be positive"),
        (config.wpcn.rf_noise_power > 0, "wpcn.rf_noise_power must be positive"),
        (0 < config.slipt.harvest_efficiency <= 1, "slipt.harvest_efficiency must lie in (0, 1]"),
        (config.slipt.max_led_power > 0, "slipt.max_led_power must be positive"),
        (config.slipt.max_dc_offset > 0, "slipt.max_dc_offset must be positive"),
        (config.slipt.peak_amplitude_ratio > 0, "slipt.peak_amplitude_ratio must be positive"),
        (config.slipt.vlc_noise_power > 0, "slipt.vlc_noise_power must be positive"),
        (config.slipt.rf_noise_power > 0, "slipt.rf_noise_power must be positive"),
        (config.slipt.min_harvest_per_user >= 0, "slipt.min_harvest_per_user must be nonnegative"),
        (0 <= config.slipt.dc_offset <= config.slipt.max_dc_offset, "slipt.dc_offset must lie in [0, max_dc_offset]"),
        (config.solver.wpcn_backend in ("bisection", "subgradient"), "solver.wpcn_backend must be 'bisection' or 'subgradient'"),
        (config.solver.slipt_backend in ("exact", "dual"), "solver.slipt_backend must be 'exact' or 'dual'"),
        (config.solver.tol > 0, "solver.tol must be positive"),
        (config.solver.max_outer >= 1, "solver.max_outer must be at least 1"),
        (config.solver.fallback_iterations >= 1, "solver.fallback_iterations must be at least 1"),
        (config.solver.inner_iterations >= 1, "solver.inner_iterations must be at least 1"),
        (config.solver.bisection_steps >= 1, "solver.bisection_steps must be at least 1"),
        (config.experiment.n_drops >= 1, "experiment.n_drops must be at least 1"),
        (config.experiment.jobs >= 1, "experiment.jobs must be at least 1"),
        (config.experiment.user_count >= 1, "experiment.user_count must be at least 1"),
        (config.experiment.front_points >= 2, "experiment.front_points must be at least 2"),
    ]
    for ok, message in checks:
        if not ok:
            raise ValueError(message)
    return config


def room_geometry(config: SystemConfig) -> RoomGeometry:
    r = config.room
    return RoomGeometry(
        length=r.length,
        width=r.width,
        height=r.height,
        led_position=(r.led_x, r.led_y, r.height),
        rf_receiver_position=(r.rf_receiver_x, r.rf_receiver_y, r.rf_receiver_z),
        user_height=r.user_height,
    )


def optical_frontend(config: SystemConfig) -> OpticalFrontend:
    o = config.optical
    return OpticalFrontend(
        detector_area=o.detector_area,
        responsivity=o.responsivity,
        semi_angle_deg=o.semi_angle_deg,
        fov_deg=o.fov_deg,
        filter_gain=o.filter_gain,
        refractive_index=o.refractive_index,
        conversion_efficiency=o.conversion_efficiency,
    )


def wpcn_instance(config: SystemConfig, vlc_gain, rf_power_gain) -> WpcnInstance:
    w = config.wpcn
    return WpcnInstance(
        vlc_gain=vlc_gain,
        rf_power_gain=rf_power_gain,
        harvest_efficiency=w.harvest_efficiency,
        max_led_power=w.max_led_power,
        rf_noise_power=w.rf_noise_power,
    )


def slipt_instance(config: SystemConfig, vlc_gain, rf_power_gain) -> SliptInstance:
    s = config.slipt
    return SliptInstance(
        vlc_gain=vlc_gain,
        rf_power_gain=rf_power_gain,
        harvest_efficiency=s.harvest_efficiency,
        max_led_power=s.max_led_power,
        max_dc_offset=s.max_dc_offset,
        peak_amplitude_ratio=s.peak_amplitude_ratio,
        vlc_noise_power=s.vlc_noise_power,
        rf_noise_power=s.rf_noise_power,
        min_harvest_per_user=s.min_harvest_per_user,
        dc_offset=s.dc_offset,
    )
