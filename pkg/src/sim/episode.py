"""Parking Planner — Episode Records and Logs.

One text line per step ``t x y theta v delta reward outcome`` (``t`` is
the step index, floats written with ``repr`` so they round-trip exactly),
followed by a ``# key: value`` footer. Metrics are recomputed from these
files alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from src.utils.errors import EpisodeStateError

LOG_COLUMNS = ("t", "x", "y", "theta", "v", "delta", "reward", "outcome")
FOOTER_KEYS = (
    "scenario", "method", "outcome", "success", "gear_shifts",
    "path_length", "duration", "steps", "rs_steps", "rl_steps",
)


@dataclass(frozen=True)
class StepLog:
    t: int
    x: float
    y: float
    theta: float
    v: float
    delta: float
    reward: float
    outcome: str
    source: str = ""

    def as_line(self) -> str:
        return " ".join([
            str(self.t), repr(self.x), repr(self.y), repr(self.theta),
            repr(self.v), repr(self.delta), repr(self.reward), self.outcome,
        ])


@dataclass
class EpisodeRecord:
    """Everything a finished episode contributes to the metrics.

    Attributes:
        duration: Simulated time (steps × dt) in seconds.
        latency_ms: Mean wall-clock decision latency; kept out of log files.
    """

    scenario_id: str
    method: str
    outcome: str = "RUNNING"
    gear_shifts: int = 0
    path_length: float = 0.0
    duration: float = 0.0
    rs_steps: int = 0
    rl_steps: int = 0
    episode_return: float = 0.0
    latency_ms: float = 0.0
    steps: list[StepLog] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.outcome == "SUCCESS"

    @property
    def rs_share(self) -> float:
        total = self.rs_steps + self.rl_steps
        return self.rs_steps / total if total else 0.0

    def footer(self) -> dict[str, str]:
        return {
            "scenario": self.scenario_id,
            "method": self.method,
            "outcome": self.outcome,
            "success": "true" if self.success else "false",
            "gear_shifts": str(self.gear_shifts),
            "path_length": repr(self.path_length),
            "duration": repr(self.duration),
            "steps": str(len(self.steps)),
            "rs_steps": str(self.rs_steps),
            "rl_steps": str(self.rl_steps),
        }


def write_episode_log(record: EpisodeRecord, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(LOG_COLUMNS)]
    lines.extend(step.as_line() for step in record.steps)
    lines.extend(f"# {k}: {v}" for k, v in record.footer().items())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_episode_log(path: Path) -> EpisodeRecord:
    """Parse a log written by :func:`write_episode_log`.

    Raises:
        FileNotFoundError: If the log is missing.
        EpisodeStateError: If the footer is incomplete or a line is malformed.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Episode log not found: {path}")
    footer: dict[str, str] = {}
    steps: list[StepLog] = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(":")
            if sep:
                footer[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != len(LOG_COLUMNS):
            raise EpisodeStateError(f"{path}:{n}: expected {len(LOG_COLUMNS)} columns, got {len(parts)}")
        steps.append(StepLog(int(parts[0]), *(float(p) for p in parts[1:7]), parts[7]))

    missing = [k for k in FOOTER_KEYS if k not in footer]
    if missing:
        raise EpisodeStateError(f"{path}: footer lacks {', '.join(missing)}")
    return EpisodeRecord(
        scenario_id=footer["scenario"],
        method=footer["method"],
        outcome=footer["outcome"],
        gear_shifts=int(footer["gear_shifts"]),
        path_length=float(footer["path_length"]),
        duration=float(footer["duration"]),
        rs_steps=int(footer["rs_steps"]),
        rl_steps=int(footer["rl_steps"]),
        episode_return=sum(s.reward for s in steps),
        steps=steps,
    )

