"""Parking Planner — Benchmark Metrics.

PSR (success rate, percent), ANGS (mean gear shifts over all episodes),
PL (mean path length of successes) and AOT (mean simulated operation time
of successes). PL and AOT are NaN when nothing succeeded.

Results CSV columns: ``method,scenario_class,episodes,psr,angs,pl,aot``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from src.sim.episode import EpisodeRecord

RESULTS_HEADER = ("method", "scenario_class", "episodes", "psr", "angs", "pl", "aot")


@dataclass(frozen=True)
class MetricsRow:
    method: str
    scenario_class: str
    episodes: int
    psr: float
    angs: float
    pl: float
    aot: float

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("MetricsRow needs at least one episode")
        if not 0.0 <= self.psr <= 100.0:
            raise ValueError(f"PSR {self.psr} outside [0, 100]")

    def as_csv_row(self) -> list[str]:
        return [
            self.method, self.scenario_class, str(self.episodes),
            repr(self.psr), repr(self.angs), repr(self.pl), repr(self.aot),
        ]


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def compute_metrics(method: str, scenario_class: str, records: Sequence[EpisodeRecord]) -> MetricsRow:
    """Aggregate episode records; order-independent (records are sorted by scenario id).

    Raises:
        ValueError: If ``records`` is empty.
    """
    if not records:
        raise ValueError("compute_metrics() needs at least one episode")
    ordered = sorted(records, key=lambda r: r.scenario_id)
    successes = [r for r in ordered if r.success]
    return MetricsRow(
        method=method,
        scenario_class=scenario_class,
        episodes=len(ordered),
        psr=100.0 * len(successes) / len(ordered),
        angs=_mean([float(r.gear_shifts) for r in ordered]),
        pl=_mean([r.path_length for r in successes]),
        aot=_mean([r.duration for r in successes]),
    )


def append_results(rows: Sequence[MetricsRow], path: Path) -> Path:
    """Append rows to the results CSV, writing the header for a new file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if new_file:
            writer.writerow(RESULTS_HEADER)
        for row in rows:
            writer.writerow(row.as_csv_row())
    return path


def read_results(path: Path) -> list[MetricsRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [
            MetricsRow(
                method=r["method"], scenario_class=r["scenario_class"], episodes=int(r["episodes"]),
                psr=float(r["psr"]), angs=float(r["angs"]), pl=float(r["pl"]), aot=float(r["aot"]),
            )
            for r in csv.DictReader(f)
        ]
