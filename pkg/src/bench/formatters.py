"""Parking Planner — Report Formatters.

Markdown renderings of benchmark results: the method comparison table and
the per-scenario breakdown (gear shifts and path length, or ``fail``).
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

from src.bench.metrics import MetricsRow
from src.sim.episode import EpisodeRecord

# ── Column headers ───────────────────────────────────────
_RESULTS_COLUMNS = ("Method", "Scenarios", "Episodes", "PSR (%)", "ANGS", "PL (m)", "AOT (s)")
_FAIL = "fail"


def _num(value: float, digits: int = 2) -> str:
    """Fixed-point number, or ``-`` for NaN."""
    if math.isnan(value):
        return "-"
    return f"{value:.{digits}f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines)


def format_results_table(rows: Sequence[MetricsRow]) -> str:
    """Comparison table, one line per (method, scenario class)."""
    body = [
        [
            r.method, r.scenario_class, str(r.episodes),
            _num(r.psr), _num(r.angs), _num(r.pl), _num(r.aot),
        ]
        for r in rows
    ]
    return "# Parking benchmark\n\n" + _table(_RESULTS_COLUMNS, body) + "\n"


def _cell(record: EpisodeRecord | None) -> str:
    if record is None or not record.success:
        return _FAIL
    return f"{record.gear_shifts} / {record.path_length:.2f}"


def format_per_scenario(records: Mapping[str, Sequence[EpisodeRecord]]) -> str:
    """Per-scenario table: ``shifts / length (m)`` for each method, or ``fail``.

    Args:
        records: Episode records keyed by method name.
    """
    methods = list(records)
    by_method = {m: {r.scenario_id: r for r in recs} for m, recs in records.items()}
    scenario_ids = sorted({sid for recs in by_method.values() for sid in recs})
    body = [[sid] + [_cell(by_method[m].get(sid)) for m in methods] for sid in scenario_ids]
    header = ["Scenario"] + [f"{m} (shifts / m)" for m in methods]
    return "# Per-scenario comparison\n\n" + _table(header, body) + "\n"


def write_report(text: str, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
