"""Profiled-latency cost model and the hard run-time guarantee.

The latency table maps (input side, batch size) to milliseconds; absent
cells mean the combination cannot run within profiled limits.  The
guarantee procedure keeps all high-priority composite images under the
budget by (in order) dropping low-priority composites, shrinking the
remaining HP composites to the largest affordable side, and finally
falling back to processing the full frame at a budget-feasible size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .cazone import HP, LP
from .packing import CompositeImage


class InfeasibleBudget(Exception):
    """Even the smallest profiled size at batch 1 exceeds the budget."""


@dataclass
class LatencyTable:
    sizes: list[int]
    batches: list[int]
    entries: dict[tuple[int, int], float]

    @classmethod
    def from_csv(cls, path) -> "LatencyTable":
        """First row: header of input sides; first column: batch sizes.

        Blank cells are unsupported combinations.
        """
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        sizes = [int(s) for s in rows[0][1:]]
        batches = []
        entries = {}
        for row in rows[1:]:
            if not row or not row[0].strip():
                continue
            batch = int(row[0])
            batches.append(batch)
            for size, cell in zip(sizes, row[1:]):
                cell = cell.strip()
                if cell:
                    entries[(size, batch)] = float(cell)
        return cls(sizes=sorted(sizes), batches=sorted(batches), entries=entries)

    def validate(self) -> list[str]:
        """Monotonicity violations: latency must not decrease with size or batch."""
        problems = []
        for batch in self.batches:
            prev = None
            for size in self.sizes:
                ms = self.entries.get((size, batch))
                if ms is None:
                    continue
                if prev is not None and ms < prev:
                    problems.append(f"batch {batch}: latency drops at size {size}")
                prev = ms
        for size in self.sizes:
            prev = None
            for batch in self.batches:
                ms = self.entries.get((size, batch))
                if ms is None:
                    continue
                if prev is not None and ms < prev:
                    problems.append(f"size {size}: latency drops at batch {batch}")
                prev = ms
        return problems


def lookup(table: LatencyTable, size: int, batch: int) -> float | None:
    """Latency for the smallest profiled size >= `size`, or None if unsupported."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    for s in table.sizes:
        if s >= size:
            return table.entries.get((s, batch))
    return None


def rounded_size(table: LatencyTable, size: int) -> int | None:
    for s in table.sizes:
        if s >= size:
            return s
    return None


@dataclass
class Budget:
    threshold_ms: float = 140.0

    def __post_init__(self):
        if self.threshold_ms <= 0:
            raise ValueError("threshold must be > 0")


@dataclass
class SchedulePlan:
    kept: list[CompositeImage] = field(default_factory=list)
    dropped_lp: list[CompositeImage] = field(default_factory=list)
    final_size: int = 0
    predicted_ms: float = 0.0
    fallback_full_frame: bool = False


def _coverage(composites: list[CompositeImage], frame: tuple[int, int]) -> float:
    """Fraction of frame area covered by the union of all CAZone boxes."""
    w, h = frame
    if w * h == 0:
        return 0.0
    mask = np.zeros((h, w), dtype=bool)
    for comp in composites:
        for pl in comp.placements:
            b = pl.zone.box
            mask[b.y_min : b.y_max, b.x_min : b.x_max] = True
    return float(mask.sum()) / (w * h)


def _fallback_plan(table: LatencyTable, budget: Budget) -> SchedulePlan:
    affordable = [
        s
        for s in table.sizes
        if (ms := table.entries.get((s, 1))) is not None and ms <= budget.threshold_ms
    ]
    size = max(affordable)
    return SchedulePlan(
        kept=[],
        dropped_lp=[],
        final_size=size,
        predicted_ms=table.entries[(size, 1)],
        fallback_full_frame=True,
    )


def guarantee(
    composites: list[CompositeImage],
    table: LatencyTable,
    budget: Budget,
    frame: tuple[int, int],
    coverage_threshold: float = 0.8,
) -> SchedulePlan:
    """Produce a plan whose simulated cost never exceeds the budget.

    Order of measures: run everything if affordable; otherwise drop LP
    composites one at a time (fewest CAZones first) re-checking after each;
    then shrink the HP batch to the largest profiled size that fits; as a
    last resort (or when CAZones already cover most of the frame) process
    the full frame at a budget-feasible size.  HP composites are never
    dropped.
    """
    smallest = table.sizes[0]
    ms = table.entries.get((smallest, 1))
    if ms is None or ms > budget.threshold_ms:
        raise InfeasibleBudget(
            f"smallest profiled size {smallest} at batch 1 exceeds {budget.threshold_ms} ms"
        )

    if not composites:
        return SchedulePlan()

    if _coverage(composites, frame) > coverage_threshold:
        return _fallback_plan(table, budget)

    side = composites[0].side

    def affordable(size: int, n: int) -> float | None:
        ms = lookup(table, size, n)
        if ms is not None and ms <= budget.threshold_ms:
            return ms
        return None

    kept = list(composites)
    dropped: list[CompositeImage] = []
    while kept and affordable(side, len(kept)) is None:
        lp = [(len(c.placements), i) for i, c in enumerate(kept) if c.priority == LP]
        if not lp:
            break
        _, i = min(lp)
        dropped.append(kept.pop(i))

    ms = affordable(side, len(kept)) if kept else None
    if not kept:
        # everything was LP and unaffordable together; nothing left to run
        return SchedulePlan(kept=[], dropped_lp=dropped)
    if ms is not None:
        return SchedulePlan(
            kept=kept,
            dropped_lp=dropped,
            final_size=rounded_size(table, side) or side,
            predicted_ms=ms,
        )

    # only HP remain and they still overrun: shrink to the largest profiled
    # size below the canvas that meets the budget at this batch size
    n_hp = len(kept)
    for size in sorted((s for s in table.sizes if s < side), reverse=True):
        ms = affordable(size, n_hp)
        if ms is not None:
            return SchedulePlan(
                kept=kept, dropped_lp=dropped, final_size=size, predicted_ms=ms
            )

    return _fallback_plan(table, budget)


def simulate_cost(plan: SchedulePlan, table: LatencyTable) -> float:
    """Milliseconds the plan would take on the profiled GPU."""
    if plan.fallback_full_frame:
        return table.entries[(plan.final_size, 1)]
    if not plan.kept:
        return 0.0
    ms = lookup(table, plan.final_size, len(plan.kept))
    if ms is None:
        raise ValueError("plan references an unsupported table cell")
    return ms
