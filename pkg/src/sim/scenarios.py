"""Parking Planner — Scenario Generation.

Seeded parallel and perpendicular parking layouts at three difficulty
levels, plus placement of a slot and start pose inside a user-supplied map.
Every generated scenario is checked for a collision-free start and target
and for solvability with Hybrid A*; failures are resampled.

Files:
    <id>.scenario.yaml   flat key: value description, grid referenced by name
    <id>_grid.pgm/.yaml  grid file and sidecar
    manifest             ``# scenario_class: X`` then one scenario path per line
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from src.config import AppConfig, CollisionConfig
from src.geometry.se2 import Pose2D, VehicleParams, footprint_polygon, points_in_rectangle
from src.mapping.grid import CellState, OccupancyGrid
from src.mapping.grid_io import load_grid, save_grid
from src.planning.collision import pose_collides
from src.planning.hybrid_astar import HybridAStar
from src.utils.errors import ScenarioError, StartInCollisionError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Constants ─────────────────────────────────────────────
SCENARIO_SUFFIX = ".scenario.yaml"
MANIFEST_CLASS_PREFIX = "# scenario_class:"
SUITE_SEED_STRIDE = 10000
# Parallel : perpendicular share of the mixed simulation suite.
MIXED_RATIO = (20, 50)

_WALL = 0.3
_BORDER = 1.0
_PERPENDICULAR_SLOTS = 7
_PARALLEL_SLOTS = 3


class ScenarioKind(str, Enum):
    PARALLEL = "PARALLEL"
    PERPENDICULAR = "PERPENDICULAR"


class Difficulty(str, Enum):
    SIM_NORMAL = "SIM_NORMAL"
    SIM_COMPLEX = "SIM_COMPLEX"
    REAL_WORLD_STYLE = "REAL_WORLD_STYLE"

    @classmethod
    def parse(cls, label: str) -> Difficulty:
        """Accept ``normal`` / ``complex`` / ``real`` as well as full names."""
        aliases = {"normal": cls.SIM_NORMAL, "complex": cls.SIM_COMPLEX, "real": cls.REAL_WORLD_STYLE}
        text = label.strip()
        if text.lower() in aliases:
            return aliases[text.lower()]
        try:
            return cls(text.upper())
        except ValueError:
            raise ValueError(
                f"Unknown difficulty '{label}' (use normal, complex or real)"
            ) from None


_KIND_CODE = {ScenarioKind.PARALLEL: 0, ScenarioKind.PERPENDICULAR: 1}
_DIFFICULTY_CODE = {Difficulty.SIM_NORMAL: 0, Difficulty.SIM_COMPLEX: 1, Difficulty.REAL_WORLD_STYLE: 2}


@dataclass(frozen=True)
class _Profile:
    aisle: tuple[float, float]
    lane: tuple[float, float]
    neighbor_prob: float
    pillars: bool
    clutter: int
    dead_end_prob: float
    unknown_outside: bool
    heading_noise_deg: float


_PROFILES = {
    Difficulty.SIM_NORMAL: _Profile((7.0, 8.0), (5.5, 6.5), 0.5, False, 0, 0.0, False, 10.0),
    Difficulty.SIM_COMPLEX: _Profile((5.5, 6.0), (4.5, 5.0), 0.8, True, 3, 0.0, False, 10.0),
    Difficulty.REAL_WORLD_STYLE: _Profile((5.0, 5.5), (4.0, 4.5), 1.0, True, 8, 0.5, True, 15.0),
}


# ═══════════════════════════════════════════════════════════
# Data Models
# ═══════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class Scenario:
    """One parking task.

    Attributes:
        scenario_id: Stable name used for files and logs.
        grid: Static global map.
        start: Initial rear-axle pose.
        target: Rear-axle pose that centers the footprint in the slot.
        slot: Slot center pose (heading along the slot's long side).
        slot_width: Slot size across the vehicle (meters).
        slot_length: Slot size along the vehicle (meters).
    """

    scenario_id: str
    grid: OccupancyGrid
    start: Pose2D
    target: Pose2D
    slot: Pose2D
    slot_width: float
    slot_length: float
    kind: ScenarioKind
    difficulty: Difficulty
    seed: int

    @property
    def slot_bounds(self) -> tuple[float, float, float, float]:
        return (-self.slot_length / 2.0, self.slot_length / 2.0,
                -self.slot_width / 2.0, self.slot_width / 2.0)

    def footprint_in_slot(self, pose: Pose2D, vehicle: VehicleParams) -> bool:
        """True when the whole footprint at ``pose`` lies inside the slot rectangle."""
        corners = footprint_polygon(pose, vehicle)
        return bool(points_in_rectangle(corners, self.slot, self.slot_bounds).all())


def validate_scenario(scenario: Scenario, vehicle: VehicleParams, cfg: CollisionConfig) -> None:
    """Raise ScenarioError unless start and target are clear and the target fits the slot."""
    if pose_collides(scenario.grid, scenario.start, vehicle, cfg):
        raise ScenarioError(f"{scenario.scenario_id}: start pose is in collision")
    if pose_collides(scenario.grid, scenario.target, vehicle, cfg):
        raise ScenarioError(f"{scenario.scenario_id}: target pose is in collision")
    if not scenario.footprint_in_slot(scenario.target, vehicle):
        raise ScenarioError(f"{scenario.scenario_id}: target footprint leaves the slot")


def scenario_id_for(kind: ScenarioKind, difficulty: Difficulty, seed: int) -> str:
    return f"{kind.value.lower()}_{difficulty.value.lower()}_{seed}"


# ═══════════════════════════════════════════════════════════
# Layout Helpers
# ═══════════════════════════════════════════════════════════


class _Canvas:
    """Mutable cell array with world-space drawing helpers."""

    def __init__(self, width_m: float, height_m: float, resolution: float, unknown_outside: bool) -> None:
        self.resolution = resolution
        self.origin = Pose2D(-_BORDER, -_BORDER, 0.0)
        self.width_m = width_m
        self.height_m = height_m
        w = int(math.ceil((width_m + 2 * _BORDER) / resolution))
        h = int(math.ceil((height_m + 2 * _BORDER) / resolution))
        self.cells = np.full((h, w), int(CellState.FREE), dtype=np.uint8)
        cols, rows = np.meshgrid(np.arange(w), np.arange(h))
        self.xs = self.origin.x + (cols + 0.5) * resolution
        self.ys = self.origin.y + (rows + 0.5) * resolution
        inside = (self.xs >= 0.0) & (self.xs <= width_m) & (self.ys >= 0.0) & (self.ys <= height_m)
        wall = (
            (self.xs >= -_WALL) & (self.xs <= width_m + _WALL)
            & (self.ys >= -_WALL) & (self.ys <= height_m + _WALL)
        ) & ~inside
        outside = ~(inside | wall)
        self.cells[wall] = int(CellState.OCCUPIED)
        self.cells[outside] = int(CellState.UNKNOWN if unknown_outside else CellState.OCCUPIED)

    def box(self, center: Pose2D, length: float, width: float) -> None:
        pts = np.column_stack([self.xs.ravel(), self.ys.ravel()])
        hit = points_in_rectangle(pts, center, (-length / 2, length / 2, -width / 2, width / 2))
        self.cells[hit.reshape(self.cells.shape)] = int(CellState.OCCUPIED)

    def grid(self) -> OccupancyGrid:
        return OccupancyGrid(self.resolution, self.origin, self.cells)


def _target_for_slot(slot: Pose2D, vehicle: VehicleParams) -> Pose2D:
    """Rear-axle pose whose footprint center sits on the slot center."""
    off = vehicle.center_offset
    return Pose2D(slot.x - off * math.cos(slot.theta), slot.y - off * math.sin(slot.theta), slot.theta)


def _parked_car(canvas: _Canvas, rng: np.random.Generator, slot: Pose2D,
                vehicle: VehicleParams, jitter: tuple[float, float]) -> None:
    c, s = math.cos(slot.theta), math.sin(slot.theta)
    along = rng.uniform(-jitter[0], jitter[0])
    across = rng.uniform(-jitter[1], jitter[1])
    center = Pose2D(
        slot.x + along * c - across * s,
        slot.y + along * s + across * c,
        slot.theta + math.radians(rng.uniform(-3.0, 3.0)),
    )
    canvas.box(center, vehicle.length, vehicle.width)


def _clutter(canvas: _Canvas, rng: np.random.Generator, count: int, y_lo: float, y_hi: float) -> None:
    for _ in range(count):
        size = rng.uniform(0.3, 0.6, size=2)
        center = Pose2D(rng.uniform(0.0, canvas.width_m), rng.uniform(y_lo, y_hi), rng.uniform(-math.pi, math.pi))
        canvas.box(center, float(size[0]), float(size[1]))


def _perpendicular_layout(
    rng: np.random.Generator, profile: _Profile, config: AppConfig,
) -> tuple[OccupancyGrid, Pose2D, Pose2D, float, float]:
    sim, vehicle = config.sim, config.vehicle
    sw, sl = sim.perpendicular_slot_width, sim.perpendicular_slot_length
    aisle = rng.uniform(*profile.aisle)
    dead_end = rng.random() < profile.dead_end_prob
    side_left, side_right = 3.0, (0.8 if dead_end else 3.0)
    width_m = side_left + _PERPENDICULAR_SLOTS * sw + side_right
    height_m = sl + aisle
    canvas = _Canvas(width_m, height_m, config.ogm.resolution, profile.unknown_outside)

    k = int(rng.integers(2, _PERPENDICULAR_SLOTS - 2))
    slots = [Pose2D(side_left + (i + 0.5) * sw, sl / 2.0, math.pi / 2) for i in range(_PERPENDICULAR_SLOTS)]
    for i, slot in enumerate(slots):
        if i != k and rng.random() < profile.neighbor_prob:
            _parked_car(canvas, rng, slot, vehicle, (0.2, 0.15))
    if profile.pillars:
        for i in range(1, _PERPENDICULAR_SLOTS):
            if i in (k, k + 1):
                continue
            canvas.box(Pose2D(side_left + i * sw, sl - 0.25, 0.0), 0.4, 0.5)
    _clutter(canvas, rng, profile.clutter, height_m - 0.8, height_m - 0.2)

    slot = slots[k]
    target = _target_for_slot(slot, vehicle)
    heading = 0.0 if rng.random() < 0.5 else math.pi
    if dead_end:
        heading = math.pi
    direction = 1.0 if heading == 0.0 else -1.0
    x = slot.x + direction * rng.uniform(2.0, 5.0)
    y = sl + aisle / 2.0 + rng.uniform(-0.3, 0.3)
    start = Pose2D(x, y, heading + math.radians(rng.uniform(-profile.heading_noise_deg, profile.heading_noise_deg)))
    return canvas.grid(), start, target, sw, sl


def _parallel_layout(
    rng: np.random.Generator, profile: _Profile, config: AppConfig,
) -> tuple[OccupancyGrid, Pose2D, Pose2D, float, float]:
    sim, vehicle = config.sim, config.vehicle
    sw, sl = sim.parallel_slot_width, sim.parallel_slot_length
    lane = rng.uniform(*profile.lane)
    side = 3.0
    width_m = 2 * side + _PARALLEL_SLOTS * sl
    height_m = sw + lane
    canvas = _Canvas(width_m, height_m, config.ogm.resolution, profile.unknown_outside)

    k = _PARALLEL_SLOTS // 2
    slots = [Pose2D(side + (i + 0.5) * sl, sw / 2.0, 0.0) for i in range(_PARALLEL_SLOTS)]
    for i, slot in enumerate(slots):
        if i != k and rng.random() < profile.neighbor_prob:
            _parked_car(canvas, rng, slot, vehicle, (0.3, 0.1))
    _clutter(canvas, rng, profile.clutter, height_m - 0.8, height_m - 0.2)

    slot = slots[k]
    target = _target_for_slot(slot, vehicle)
    x = slot.x + rng.uniform(1.0, 4.0)
    y = sw + lane / 2.0 + rng.uniform(-0.3, 0.3)
    start = Pose2D(x, y, math.radians(rng.uniform(-profile.heading_noise_deg, profile.heading_noise_deg)))
    return canvas.grid(), start, target, sw, sl


def _layout_on_map(
    rng: np.random.Generator, kind: ScenarioKind, base_grid: OccupancyGrid, config: AppConfig,
) -> tuple[OccupancyGrid, Pose2D, Pose2D, float, float]:
    """Place a slot and a start pose in the free space of a supplied map."""
    sim, vehicle = config.sim, config.vehicle
    if kind is ScenarioKind.PERPENDICULAR:
        sw, sl = sim.perpendicular_slot_width, sim.perpendicular_slot_length
    else:
        sw, sl = sim.parallel_slot_width, sim.parallel_slot_length
    free_rows, free_cols = np.nonzero(base_grid.cells == CellState.FREE)
    if free_rows.size == 0:
        raise ScenarioError("Supplied map has no free cells")
    pick = int(rng.integers(free_rows.size))
    sx, sy = base_grid.cell_center(int(free_cols[pick]), int(free_rows[pick]))
    slot = Pose2D(sx, sy, rng.uniform(-math.pi, math.pi))
    target = _target_for_slot(slot, vehicle)

    radius = rng.uniform(3.0, 8.0)
    bearing = rng.uniform(-math.pi, math.pi)
    start = Pose2D(
        slot.x + radius * math.cos(bearing), slot.y + radius * math.sin(bearing),
        rng.uniform(-math.pi, math.pi),
    )
    return base_grid, start, target, sw, sl


# ═══════════════════════════════════════════════════════════
# Generation
# ═══════════════════════════════════════════════════════════


def _solvable(scenario: Scenario, config: AppConfig) -> bool:
    astar_cfg = config.astar
    if astar_cfg.max_pops > config.sim.scenario_verify_pops:
        astar_cfg = replace(astar_cfg, max_pops=config.sim.scenario_verify_pops)
    planner = HybridAStar(scenario.grid, config.vehicle, astar_cfg, config.collision)
    try:
        return planner.plan(scenario.start, scenario.target) is not None
    except StartInCollisionError:
        return False


def generate_scenario(
    kind: ScenarioKind, difficulty: Difficulty, seed: int, config: AppConfig,
    base_grid: Optional[OccupancyGrid] = None,
) -> Scenario:
    """Deterministic solvable scenario for ``(kind, difficulty, seed)``.

    Args:
        kind: Parallel or perpendicular.
        difficulty: Layout profile.
        seed: Scenario seed.
        config: Application config (vehicle, slot sizes, A* settings).
        base_grid: Optional map to place the task in instead of a synthetic layout.

    Raises:
        ScenarioError: If no valid scenario is found within
            ``scenario_max_attempts`` resamples.
    """
    profile = _PROFILES[difficulty]
    for attempt in range(config.sim.scenario_max_attempts):
        rng = np.random.default_rng([seed, _KIND_CODE[kind], _DIFFICULTY_CODE[difficulty], attempt])
        if base_grid is not None:
            layout = _layout_on_map(rng, kind, base_grid, config)
        elif kind is ScenarioKind.PERPENDICULAR:
            layout = _perpendicular_layout(rng, profile, config)
        else:
            layout = _parallel_layout(rng, profile, config)
        grid, start, target, sw, sl = layout
        slot_center = Pose2D(
            target.x + config.vehicle.center_offset * math.cos(target.theta),
            target.y + config.vehicle.center_offset * math.sin(target.theta),
            target.theta,
        )
        scenario = Scenario(
            scenario_id=scenario_id_for(kind, difficulty, seed),
            grid=grid, start=start, target=target, slot=slot_center,
            slot_width=sw, slot_length=sl, kind=kind, difficulty=difficulty, seed=seed,
        )
        try:
            validate_scenario(scenario, config.vehicle, config.collision)
        except ScenarioError as exc:
            logger.debug("Attempt %d rejected: %s", attempt, exc)
            continue
        if not _solvable(scenario, config):
            logger.debug("Attempt %d rejected: no Hybrid A* solution", attempt)
            continue
        logger.debug("Generated %s on attempt %d", scenario.scenario_id, attempt)
        return scenario
    raise ScenarioError(
        f"No valid {kind.value}/{difficulty.value} scenario for seed {seed} "
        f"after {config.sim.scenario_max_attempts} attempts"
    )


def suite_plan(kind: str, n: int) -> list[ScenarioKind]:
    """Kinds for an ``n``-scenario suite; ``mixed`` keeps the 20:50 split."""
    label = kind.strip().lower()
    if label == "parallel":
        return [ScenarioKind.PARALLEL] * n
    if label == "perpendicular":
        return [ScenarioKind.PERPENDICULAR] * n
    if label == "mixed":
        n_par = round(n * MIXED_RATIO[0] / sum(MIXED_RATIO))
        return [ScenarioKind.PARALLEL] * n_par + [ScenarioKind.PERPENDICULAR] * (n - n_par)
    raise ValueError(f"Unknown scenario kind '{kind}' (use parallel, perpendicular or mixed)")


def suite_seed(base_seed: int, index: int) -> int:
    return base_seed * SUITE_SEED_STRIDE + index


def generate_suite(
    kinds: Sequence[ScenarioKind], difficulty: Difficulty, base_seed: int,
    config: AppConfig, base_grid: Optional[OccupancyGrid] = None,
) -> list[Scenario]:
    """Scenarios for a suite; scenario ``i`` uses seed ``base_seed * 10000 + i``."""
    scenarios = []
    for i, kind in enumerate(kinds):
        scenarios.append(generate_scenario(kind, difficulty, suite_seed(base_seed, i), config, base_grid))
        if (i + 1) % 10 == 0 or i + 1 == len(kinds):
            logger.info("Generated %d/%d scenarios", i + 1, len(kinds))
    return scenarios


# ═══════════════════════════════════════════════════════════
# Files
# ═══════════════════════════════════════════════════════════


def save_scenario(scenario: Scenario, directory: Path) -> Path:
    """Write the scenario description and its grid into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grid_name = f"{scenario.scenario_id}_grid.pgm"
    save_grid(scenario.grid, directory / grid_name)
    data = {
        "scenario_id": scenario.scenario_id,
        "kind": scenario.kind.value,
        "difficulty": scenario.difficulty.value,
        "seed": scenario.seed,
        "grid": grid_name,
        "start_x": scenario.start.x, "start_y": scenario.start.y, "start_theta": scenario.start.theta,
        "target_x": scenario.target.x, "target_y": scenario.target.y, "target_theta": scenario.target.theta,
        "slot_x": scenario.slot.x, "slot_y": scenario.slot.y, "slot_theta": scenario.slot.theta,
        "slot_width": scenario.slot_width,
        "slot_length": scenario.slot_length,
    }
    path = directory / f"{scenario.scenario_id}{SCENARIO_SUFFIX}"
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False, default_flow_style=False)
    return path


def load_scenario(path: Path) -> Scenario:
    """Read a scenario file and its referenced grid.

    Raises:
        ScenarioError: On missing keys or unknown enum values.
        FileNotFoundError: If the file or its grid is missing.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario file must be a key: value mapping")
    try:
        return Scenario(
            scenario_id=str(data["scenario_id"]),
            grid=load_grid(path.parent / str(data["grid"])),
            start=Pose2D(float(data["start_x"]), float(data["start_y"]), float(data["start_theta"])),
            target=Pose2D(float(data["target_x"]), float(data["target_y"]), float(data["target_theta"])),
            slot=Pose2D(float(data["slot_x"]), float(data["slot_y"]), float(data["slot_theta"])),
            slot_width=float(data["slot_width"]),
            slot_length=float(data["slot_length"]),
            kind=ScenarioKind(data["kind"]),
            difficulty=Difficulty(data["difficulty"]),
            seed=int(data["seed"]),
        )
    except KeyError as exc:
        raise ScenarioError(f"{path}: missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def write_manifest(scenario_paths: Sequence[Path], manifest_path: Path, scenario_class: str) -> Path:
    """List scenario files relative to the manifest's directory."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{MANIFEST_CLASS_PREFIX} {scenario_class}"]
    for p in scenario_paths:
        lines.append(Path(p).resolve().relative_to(manifest_path.parent.resolve()).as_posix())
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest_path


def read_manifest(manifest_path: Path) -> tuple[str, list[Path]]:
    """Scenario class and absolute scenario paths of a manifest.

    Raises:
        FileNotFoundError: If the manifest is missing.
        ScenarioError: If it lists no scenarios.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"Suite manifest not found: {manifest_path}")
    scenario_class = "UNSPECIFIED"
    paths = []
    for line in manifest_path.read_text(encoding="utf-8").splitlines():
        text = line.strip()
        if not text:
            continue
        if text.startswith(MANIFEST_CLASS_PREFIX):
            scenario_class = text[len(MANIFEST_CLASS_PREFIX):].strip()
        elif not text.startswith("#"):
            paths.append(manifest_path.parent / text)
    if not paths:
        raise ScenarioError(f"Manifest {manifest_path} lists no scenarios")
    return scenario_class, paths
