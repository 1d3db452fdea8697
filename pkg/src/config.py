"""Parking Planner — Configuration Loader.

Loads and validates application configuration from YAML files.
Resolves environment variables referenced via ${VAR_NAME} or
${VAR_NAME:-default} syntax. Uses frozen dataclasses for type-safe
configuration access.

Override files may be sectioned like settings.yaml or flat
``key: value`` text; leaf keys are unique across sections so a flat key
always resolves to exactly one section.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

from src.geometry.se2 import VehicleParams
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Path Constants ────────────────────────────────────────
PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = PROJECT_ROOT / "config"
SETTINGS_PATH = CONFIG_DIR / "settings.yaml"

# ── Environment Variable Pattern ─────────────────────────
ENV_VAR_PATTERN = re.compile(r"\$\{([^}:]+)(?::-([^}]*))?}")

SECTIONS = (
    "vehicle", "ogm", "collision", "simulator", "action_mask", "sac",
    "training", "hybrid", "astar", "bench", "logging",
)


# ═══════════════════════════════════════════════════════════
# Configuration Dataclasses
# ═══════════════════════════════════════════════════════════


@dataclass(frozen=True)
class OgmBuildConfig:
    """Point-cloud filtering and rasterization settings."""

    z_min: float
    z_max: float
    hit_threshold: int
    resolution: float
    carve_free_space: bool
    keyframe_window: int
    map_padding_cells: int = 10

    def __post_init__(self) -> None:
        if not self.z_min < self.z_max:
            raise ValueError(f"ogm: z_min ({self.z_min}) must be < z_max ({self.z_max})")
        if self.hit_threshold < 1:
            raise ValueError("ogm: hit_threshold must be >= 1")
        if self.keyframe_window < 1:
            raise ValueError("ogm: keyframe_window must be >= 1")
        if self.map_padding_cells < 0:
            raise ValueError("ogm: map_padding_cells must be >= 0")


@dataclass(frozen=True)
class CollisionConfig:
    """Footprint inflation and path sampling density."""

    safety_margin: float
    sample_step: float

    def __post_init__(self) -> None:
        if self.safety_margin < 0.0:
            raise ValueError("collision: safety_margin must be >= 0")
        if not self.sample_step > 0.0:
            raise ValueError("collision: sample_step must be > 0")


@dataclass(frozen=True)
class SimConfig:
    """Simulator timing, observation, tolerances, reward and slot sizes."""

    dt: float
    max_steps: int
    n_beams: int
    max_range: float
    pos_tol: float
    ang_tol_deg: float
    sim_collision_margin: float
    progress_weight: float
    progress_pos_weight: float
    progress_ang_weight: float
    step_penalty: float
    gear_shift_penalty: float
    collision_penalty: float
    success_bonus: float
    perpendicular_slot_width: float
    perpendicular_slot_length: float
    parallel_slot_width: float
    parallel_slot_length: float
    scenario_max_attempts: int = 40
    scenario_verify_pops: int = 20000

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError("simulator: dt must be > 0")
        if self.max_steps < 1 or self.n_beams < 1:
            raise ValueError("simulator: max_steps and n_beams must be >= 1")
        if not self.max_range > 0.0:
            raise ValueError("simulator: max_range must be > 0")

    @property
    def ang_tol(self) -> float:
        return math.radians(self.ang_tol_deg)

    @property
    def observation_size(self) -> int:
        return self.n_beams + 6


@dataclass(frozen=True)
class MaskConfig:
    """Action-mask discretization."""

    steering_bins: int
    speed_levels: int
    horizon_steps: int

    def __post_init__(self) -> None:
        if self.steering_bins < 3 or self.steering_bins % 2 == 0:
            raise ValueError("action_mask: steering_bins must be odd and >= 3")
        if self.speed_levels < 1 or self.horizon_steps < 1:
            raise ValueError("action_mask: speed_levels and horizon_steps must be >= 1")


@dataclass(frozen=True)
class SacConfig:
    """Soft Actor-Critic hyperparameters."""

    gamma: float
    tau: float
    lr: float
    batch_size: int
    buffer_capacity: int
    alpha_init: float
    target_entropy: float
    hidden_width: int
    seed: int
    log_std_min: float = -20.0
    log_std_max: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("sac: gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("sac: tau must lie in (0, 1]")
        if not self.lr > 0.0 or not self.alpha_init > 0.0:
            raise ValueError("sac: lr and alpha_init must be > 0")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("sac: need 1 <= batch_size <= buffer_capacity")
        if self.hidden_width < 1:
            raise ValueError("sac: hidden_width must be >= 1")
        if not self.log_std_min < self.log_std_max:
            raise ValueError("sac: log_std_min must be < log_std_max")


@dataclass(frozen=True)
class TrainingConfig:
    """Training-loop schedule."""

    budget_steps: int
    warmup_steps: int
    update_every: int
    train_pool_size: int
    eval_pool_size: int
    eval_interval: int
    checkpoint_interval: int
    monitor_interval: int
    pure_sac_use_mask: bool
    train_difficulty: str

    def __post_init__(self) -> None:
        if self.budget_steps < 0 or self.warmup_steps < 0:
            raise ValueError("training: budget_steps and warmup_steps must be >= 0")
        if min(self.update_every, self.train_pool_size, self.eval_interval,
               self.checkpoint_interval, self.monitor_interval) < 1:
            raise ValueError("training: intervals and pool size must be >= 1")
        if self.eval_pool_size < 0:
            raise ValueError("training: eval_pool_size must be >= 0")


@dataclass(frozen=True)
class HybridConfig:
    """RS path tracking inside the hybrid planner."""

    track_tolerance: float


@dataclass(frozen=True)
class AStarConfig:
    """Hybrid A* lattice, costs and budget."""

    xy_resolution: float
    yaw_resolution_deg: float
    primitive_length: float
    reverse_weight: float
    shift_weight: float
    max_pops: int
    goal_pos_tol: float
    goal_ang_tol_deg: float
    analytic_scale: float
    astar_seed: int

    def __post_init__(self) -> None:
        if not (self.xy_resolution > 0 and self.yaw_resolution_deg > 0 and self.primitive_length > 0):
            raise ValueError("astar: resolutions and primitive_length must be > 0")
        if self.reverse_weight < 1.0 or self.shift_weight < 0.0:
            raise ValueError("astar: reverse_weight must be >= 1 and shift_weight >= 0")
        if self.max_pops < 1:
            raise ValueError("astar: max_pops must be >= 1")

    @property
    def yaw_resolution(self) -> float:
        return math.radians(self.yaw_resolution_deg)

    @property
    def goal_ang_tol(self) -> float:
        return math.radians(self.goal_ang_tol_deg)


@dataclass(frozen=True)
class BenchConfig:
    """Suite sizes and output locations."""

    parallel_count: int
    perpendicular_count: int
    out_dir: str
    results_file: str
    stochastic_eval: bool


@dataclass(frozen=True)
class AppConfig:
    """Top-level application configuration container."""

    vehicle: VehicleParams
    ogm: OgmBuildConfig
    collision: CollisionConfig
    sim: SimConfig
    mask: MaskConfig
    sac: SacConfig
    training: TrainingConfig
    hybrid: HybridConfig
    astar: AStarConfig
    bench: BenchConfig
    log_level: str


# ═══════════════════════════════════════════════════════════
# YAML Loading & Environment Variable Resolution
# ═══════════════════════════════════════════════════════════


def _resolve_env_vars(value: Any) -> Any:
    """Recursively resolve ${VAR} / ${VAR:-default} references in YAML values.

    Args:
        value: A string, dict, list, or primitive from parsed YAML.

    Returns:
        The same structure with placeholders replaced.

    Raises:
        ValueError: If a referenced variable without default is not set.
    """
    if isinstance(value, str):
        def _sub(match: re.Match[str]) -> str:
            var_name, default = match.group(1), match.group(2)
            env_value = os.environ.get(var_name)
            if env_value is None:
                if default is None:
                    raise ValueError(
                        f"Environment variable '${{{var_name}}}' is required but not set. "
                        f"Add it to your .env file or export it in your shell."
                    )
                return default
            return env_value

        return ENV_VAR_PATTERN.sub(_sub, value)
    elif isinstance(value, dict):
        return {k: _resolve_env_vars(v) for k, v in value.items()}
    elif isinstance(value, list):
        return [_resolve_env_vars(item) for item in value]
    return value


def _load_yaml(path: Path) -> dict[str, Any]:
    """Load and parse a YAML mapping with UTF-8 encoding.

    Raises:
        FileNotFoundError: If the YAML file does not exist.
        ValueError: If the file is empty or not a mapping.
    """
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)

    if data is None:
        raise ValueError(f"Configuration file is empty: {path}")
    if not isinstance(data, dict):
        raise ValueError(f"Configuration file must contain a mapping: {path}")

    logger.debug("Loaded configuration from %s", path)
    return data


def _merge_override(settings: dict[str, Any], override: dict[str, Any], source: Path) -> None:
    """Apply a sectioned or flat override mapping onto ``settings`` in place.

    Raises:
        ValueError: If a key matches no known setting.
    """
    owner: dict[str, str] = {}
    for section in SECTIONS:
        for key in settings.get(section, {}):
            owner[key] = section

    for key, value in override.items():
        if key in SECTIONS and isinstance(value, dict):
            for sub_key, sub_value in value.items():
                if sub_key not in settings[key]:
                    raise ValueError(f"Unknown setting '{key}.{sub_key}' in {source}")
                settings[key][sub_key] = sub_value
        elif key in owner:
            settings[owner[key]][key] = value
        else:
            raise ValueError(f"Unknown setting '{key}' in {source}")
    logger.info("Applied %d override(s) from %s", len(override), source)


# ═══════════════════════════════════════════════════════════
# Dataclass Builders
# ═══════════════════════════════════════════════════════════


def _validate_keys(data: dict[str, Any], required: list[str], section: str) -> None:
    """Validate that all required keys exist in a config section.

    Raises:
        ValueError: If any required key is missing.
    """
    missing = [key for key in required if key not in data]
    if missing:
        raise ValueError(
            f"Missing required configuration keys in '{section}': {', '.join(missing)}"
        )


def _build_vehicle(data: dict[str, Any]) -> VehicleParams:
    keys = ["wheelbase", "width", "front_overhang", "rear_overhang", "max_steer", "max_speed"]
    _validate_keys(data, keys, "vehicle")
    return VehicleParams(**{k: float(data[k]) for k in keys})


def _build_ogm_config(data: dict[str, Any]) -> OgmBuildConfig:
    _validate_keys(
        data, ["z_min", "z_max", "hit_threshold", "resolution", "carve_free_space", "keyframe_window"],
        "ogm",
    )
    return OgmBuildConfig(
        z_min=float(data["z_min"]),
        z_max=float(data["z_max"]),
        hit_threshold=int(data["hit_threshold"]),
        resolution=float(data["resolution"]),
        carve_free_space=bool(data["carve_free_space"]),
        keyframe_window=int(data["keyframe_window"]),
        map_padding_cells=int(data.get("map_padding_cells", 10)),
    )


def _build_sim_config(data: dict[str, Any]) -> SimConfig:
    """Build a SimConfig from the 'simulator' section.

    Every field except ``scenario_max_attempts`` and
    ``scenario_verify_pops`` is required; integers are
    coerced by field name, everything else to float.
    """
    int_fields = {"max_steps", "n_beams", "scenario_max_attempts", "scenario_verify_pops"}
    required = [
        f for f in SimConfig.__dataclass_fields__
        if f not in ("scenario_max_attempts", "scenario_verify_pops")
    ]
    _validate_keys(data, required, "simulator")
    values = {
        name: (int(data[name]) if name in int_fields else float(data[name]))
        for name in SimConfig.__dataclass_fields__ if name in data
    }
    return SimConfig(**values)


def _build_sac_config(data: dict[str, Any]) -> SacConfig:
    required = [
        "gamma", "tau", "lr", "batch_size", "buffer_capacity", "alpha_init",
        "target_entropy", "hidden_width", "seed",
    ]
    _validate_keys(data, required, "sac")
    return SacConfig(
        gamma=float(data["gamma"]),
        tau=float(data["tau"]),
        lr=float(data["lr"]),
        batch_size=int(data["batch_size"]),
        buffer_capacity=int(data["buffer_capacity"]),
        alpha_init=float(data["alpha_init"]),
        target_entropy=float(data["target_entropy"]),
        hidden_width=int(data["hidden_width"]),
        seed=int(data["seed"]),
        log_std_min=float(data.get("log_std_min", -20.0)),
        log_std_max=float(data.get("log_std_max", 2.0)),
    )


def _build_training_config(data: dict[str, Any]) -> TrainingConfig:
    required = list(TrainingConfig.__dataclass_fields__)
    _validate_keys(data, required, "training")
    return TrainingConfig(
        budget_steps=int(data["budget_steps"]),
        warmup_steps=int(data["warmup_steps"]),
        update_every=int(data["update_every"]),
        train_pool_size=int(data["train_pool_size"]),
        eval_pool_size=int(data["eval_pool_size"]),
        eval_interval=int(data["eval_interval"]),
        checkpoint_interval=int(data["checkpoint_interval"]),
        monitor_interval=int(data["monitor_interval"]),
        pure_sac_use_mask=bool(data["pure_sac_use_mask"]),
        train_difficulty=str(data["train_difficulty"]).upper(),
    )


def _build_astar_config(data: dict[str, Any]) -> AStarConfig:
    required = list(AStarConfig.__dataclass_fields__)
    _validate_keys(data, required, "astar")
    return AStarConfig(
        xy_resolution=float(data["xy_resolution"]),
        yaw_resolution_deg=float(data["yaw_resolution_deg"]),
        primitive_length=float(data["primitive_length"]),
        reverse_weight=float(data["reverse_weight"]),
        shift_weight=float(data["shift_weight"]),
        max_pops=int(data["max_pops"]),
        goal_pos_tol=float(data["goal_pos_tol"]),
        goal_ang_tol_deg=float(data["goal_ang_tol_deg"]),
        analytic_scale=float(data["analytic_scale"]),
        astar_seed=int(data["astar_seed"]),
    )


def _build_bench_config(data: dict[str, Any]) -> BenchConfig:
    required = list(BenchConfig.__dataclass_fields__)
    _validate_keys(data, required, "bench")
    return BenchConfig(
        parallel_count=int(data["parallel_count"]),
        perpendicular_count=int(data["perpendicular_count"]),
        out_dir=str(data["out_dir"]),
        results_file=str(data["results_file"]),
        stochastic_eval=bool(data["stochastic_eval"]),
    )


# ═══════════════════════════════════════════════════════════
# Public API
# ═══════════════════════════════════════════════════════════


def load_config(
    settings_path: Path | None = None,
    override_path: Path | None = None,
    env_path: Path | None = None,
) -> AppConfig:
    """Load the complete application configuration.

    Args:
        settings_path: Override path to settings.yaml. Defaults to config/settings.yaml.
        override_path: Optional flat or sectioned override file (--config).
        env_path: Override path to .env file. Defaults to project root .env.

    Returns:
        A fully validated AppConfig instance.

    Raises:
        FileNotFoundError: If a config file is missing.
        ValueError: If keys are missing/unknown, values are out of range,
            or a required env var is unset.
    """
    env_file = env_path or (PROJECT_ROOT / ".env")
    load_dotenv(env_file)

    settings = _load_yaml(settings_path or SETTINGS_PATH)
    _validate_keys(settings, list(SECTIONS), "settings")
    settings = {section: dict(settings[section]) for section in SECTIONS}

    if override_path is not None:
        _merge_override(settings, _load_yaml(Path(override_path)), Path(override_path))

    settings = _resolve_env_vars(settings)
    _validate_keys(settings["collision"], ["safety_margin", "sample_step"], "collision")
    _validate_keys(
        settings["action_mask"], ["steering_bins", "speed_levels", "horizon_steps"], "action_mask",
    )
    _validate_keys(settings["hybrid"], ["track_tolerance"], "hybrid")
    _validate_keys(settings["logging"], ["log_level"], "logging")

    config = AppConfig(
        vehicle=_build_vehicle(settings["vehicle"]),
        ogm=_build_ogm_config(settings["ogm"]),
        collision=CollisionConfig(
            safety_margin=float(settings["collision"]["safety_margin"]),
            sample_step=float(settings["collision"]["sample_step"]),
        ),
        sim=_build_sim_config(settings["simulator"]),
        mask=MaskConfig(
            steering_bins=int(settings["action_mask"]["steering_bins"]),
            speed_levels=int(settings["action_mask"]["speed_levels"]),
            horizon_steps=int(settings["action_mask"]["horizon_steps"]),
        ),
        sac=_build_sac_config(settings["sac"]),
        training=_build_training_config(settings["training"]),
        hybrid=HybridConfig(track_tolerance=float(settings["hybrid"]["track_tolerance"])),
        astar=_build_astar_config(settings["astar"]),
        bench=_build_bench_config(settings["bench"]),
        log_level=str(settings["logging"]["log_level"]),
    )

    logger.debug("Configuration loaded (r_min=%.3f m)", config.vehicle.min_turn_radius)
    return config
