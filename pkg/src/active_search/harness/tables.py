"""Aggregate tables: budget waypoints and the empirical adaptivity ratio."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .experiment import ExperimentRecord, cumulative_at, terminal_counts


def budget_waypoint_table(
    runs: Mapping[str, list[ExperimentRecord]],
    waypoints: Sequence[int],
) -> dict[str, dict[int, float]]:
    """Mean cumulative targets at each waypoint, per run.  Waypoints past a
    run's budget are left out of its row."""
    table: dict[str, dict[int, float]] = {}
    for name, records in runs.items():
        budget = max(r.query for r in records)
        row = {}
        for w in waypoints:
            if w <= budget:
                vals = list(cumulative_at(records, w).values())
                row[w] = float(np.mean(vals))
        table[name] = row
    return table


def format_waypoint_table(table: dict[str, dict[int, float]], waypoints: Sequence[int]) -> str:
    width = max([len("policy")] + [len(n) for n in table])
    lines = ["policy".ljust(width) + "".join(f"{w:>10d}" for w in waypoints)]
    for name, row in table.items():
        cells = "".join(f"{row[w]:>10.1f}" if w in row else " " * 10 for w in waypoints)
        lines.append(name.ljust(width) + cells)
    return "\n".join(lines)


def adaptivity_ratio_table(
    runs: Mapping[str, Mapping[int, list[ExperimentRecord]]],
) -> list[tuple[int, float]]:
    """``runs[policy][b]`` holds records for batch size b.

    For each b the terminal target counts are averaged over replications and
    policies; the ratio is that average at b = 1 divided by the one at b.
    """
    sizes = sorted({b for per_b in runs.values() for b in per_b})
    if 1 not in sizes:
        raise ValueError("a b = 1 baseline is required")
    means = {}
    for b in sizes:
        vals = [np.mean(list(terminal_counts(per_b[b]).values())) for per_b in runs.values() if b in per_b]
        means[b] = float(np.mean(vals))
    return [(b, means[1] / means[b]) for b in sizes]
