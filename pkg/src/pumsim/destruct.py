"""Bank-content destruction plans and baselines.

The many-row strategy greedily covers each subarray with row groups (largest
uncovered coverage first, lowest anchor on ties) and overwrites every group
with one bulk write: a charge-sharing triple opens the group, one WRITE
command replaces all of it.  Baselines: clone a seed row to every other row
one group-of-two copy at a time, or drive every row to half charge
individually.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bank import Geometry
from .decoder import DecoderLayout, RowGroup, compose_address, decode_address
from .engine import (
    Command,
    CommandDurations,
    TimingParams,
    stretch_for_power,
    trace_latency,
)


@dataclass(frozen=True)
class WriteStep:
    row: int


@dataclass(frozen=True)
class BulkWriteStep:
    group: RowGroup


@dataclass(frozen=True)
class CloneStep:
    src: int
    dst: int


@dataclass(frozen=True)
class FracStep:
    row: int


PlanStep = WriteStep | BulkWriteStep | CloneStep | FracStep


@dataclass
class DestructionPlan:
    strategy: str
    layout: DecoderLayout
    geometry: Geometry
    steps: list[PlanStep] = field(default_factory=list)

    @property
    def step_count(self) -> int:
        return len(self.steps)

    def covered_rows(self) -> set[int]:
        covered: set[int] = set()
        for step in self.steps:
            if isinstance(step, WriteStep):
                covered.add(step.row)
            elif isinstance(step, BulkWriteStep):
                covered.update(step.group.rows)
            elif isinstance(step, CloneStep):
                covered.update((step.src, step.dst))
            else:
                covered.add(step.row)
        return covered

    def to_trace(self, pattern_bits: np.ndarray,
                 timing: TimingParams | None = None) -> list[Command]:
        """Expand the plan into an executable command trace.

        The result is stretched to respect the rolling activation budget.
        """
        timing = timing or TimingParams()
        gap = timing.t_violation / 2.0
        bits = np.asarray(pattern_bits, dtype=np.uint8)
        commands: list[Command] = []
        t = 0.0
        for step in self.steps:
            if isinstance(step, WriteStep):
                commands += [
                    Command(t, "ACT", row=step.row),
                    Command(t + timing.t_rp, "WRITE", data=bits),
                    Command(t + timing.t_ras + timing.t_rp, "PRE"),
                ]
            elif isinstance(step, BulkWriteStep):
                t_apa = t + 2 * gap
                commands += [
                    Command(t, "ACT", row=step.group.r_first),
                    Command(t + gap, "PRE"),
                    Command(t_apa, "ACT", row=step.group.r_second),
                    Command(t_apa + timing.t_rp, "WRITE", data=bits),
                    Command(t_apa + timing.t_ras + timing.t_rp, "PRE"),
                ]
            elif isinstance(step, CloneStep):
                commands += [
                    Command(t, "ACT", row=step.src),
                    Command(t + timing.t_ras, "PRE"),
                    Command(t + timing.t_ras + gap, "ACT", row=step.dst),
                    Command(t + 2 * timing.t_ras + gap, "PRE"),
                ]
            else:
                commands += [
                    Command(t, "ACT", row=step.row),
                    Command(t + gap, "PRE"),
                ]
            t = commands[-1].time + timing.t_rp
        return stretch_for_power(commands, timing)

    def modeled_time(self, timing: TimingParams | None = None,
                     durations: CommandDurations | None = None) -> float:
        nb = 8  # data content does not affect latency
        trace = self.to_trace(np.zeros(nb, dtype=np.uint8), timing)
        return trace_latency(trace, durations)


def _group_catalog(layout: DecoderLayout, subarray: int,
                   max_n: int) -> list[RowGroup]:
    """All distinct row groups of size 2..max_n in one subarray.

    A group picks one or two select values per predecoder group; its
    canonical anchors take the componentwise minima and maxima, which differ
    in exactly the doubled predecoder groups.
    """
    per_group: list[list[tuple[int, ...]]] = []
    for width in layout.group_widths:
        values = range(1 << width)
        subsets = [(v,) for v in values]
        subsets += [pair for pair in itertools.combinations(values, 2)]
        per_group.append(subsets)
    catalog = []
    for combo in itertools.product(*per_group):
        size = 1
        for subset in combo:
            size *= len(subset)
        if size < 2 or size > max_n:
            continue
        r_first = compose_address(subarray, tuple(s[0] for s in combo), layout)
        r_second = compose_address(subarray, tuple(s[-1] for s in combo), layout)
        rows = sorted(
            compose_address(subarray, sel, layout)
            for sel in itertools.product(*combo)
        )
        catalog.append(RowGroup(rows=tuple(rows), r_first=r_first,
                                r_second=r_second, subarray=subarray))
    catalog.sort(key=lambda g: (g.r_first, g.r_second))
    return catalog


def _greedy_cover(layout: DecoderLayout, subarray: int,
                  max_n: int) -> list[RowGroup]:
    """Greedy set cover of one subarray by row groups."""
    catalog = _group_catalog(layout, subarray, max_n)
    size = layout.subarray_size
    base = subarray * size
    # Pad row index lists to equal length for vectorized coverage counting.
    width = max(g.n for g in catalog)
    index = np.zeros((len(catalog), width), dtype=np.int64)
    for i, g in enumerate(catalog):
        rows = np.array(g.rows, dtype=np.int64) - base
        index[i, : len(rows)] = rows
        index[i, len(rows):] = rows[0]  # padding repeats a member row
    sizes = np.array([g.n for g in catalog])

    uncovered = np.ones(size, dtype=bool)
    chosen: list[RowGroup] = []
    while uncovered.any():
        coverage = uncovered[index].sum(axis=1)
        # Padding repeats a member, never inflating coverage past the size.
        coverage = np.minimum(coverage, sizes)
        best = int(np.argmax(coverage))
        if coverage[best] == 0:
            raise RuntimeError("greedy cover stalled")
        group = catalog[best]
        chosen.append(group)
        uncovered[np.array(group.rows) - base] = False
    return chosen


def plan_multirow(layout: DecoderLayout | None = None,
                  geometry: Geometry | None = None,
                  max_n: int = 32) -> DestructionPlan:
    """Bulk-write destruction plan using groups up to max_n rows."""
    layout = layout or DecoderLayout()
    geometry = geometry or Geometry(subarray_size=layout.subarray_size)
    _check_geometry(layout, geometry)
    if max_n < 2 or max_n & (max_n - 1):
        raise ValueError(f"max_n must be a power of two >= 2, got {max_n}")
    plan = DestructionPlan("multirow", layout, geometry)
    for subarray in range(geometry.n_subarrays):
        for group in _greedy_cover(layout, subarray, max_n):
            plan.steps.append(BulkWriteStep(group))
    return plan


def plan_rowclone(layout: DecoderLayout | None = None,
                  geometry: Geometry | None = None) -> DestructionPlan:
    """Seed one row per subarray, then copy it out one row at a time.

    Each copy pairs the target with an already-covered row differing in a
    single predecoder group (a two-row group run in copy mode).
    """
    layout = layout or DecoderLayout()
    geometry = geometry or Geometry(subarray_size=layout.subarray_size)
    _check_geometry(layout, geometry)
    plan = DestructionPlan("rowclone", layout, geometry)
    offsets = layout.group_offsets()
    for subarray in range(geometry.n_subarrays):
        base = subarray * layout.subarray_size
        plan.steps.append(WriteStep(base))
        for r in range(base + 1, base + layout.subarray_size):
            selects = decode_address(r, layout).selects
            group_idx = next(i for i, s in enumerate(selects) if s != 0)
            src = r & ~(
                (((1 << layout.group_widths[group_idx]) - 1) << offsets[group_idx])
            )
            plan.steps.append(CloneStep(src, r))
    return plan


def plan_frac(layout: DecoderLayout | None = None,
              geometry: Geometry | None = None) -> DestructionPlan:
    """Drive every row to half charge, one truncated pair per row."""
    layout = layout or DecoderLayout()
    geometry = geometry or Geometry(subarray_size=layout.subarray_size)
    _check_geometry(layout, geometry)
    plan = DestructionPlan("frac", layout, geometry)
    for row in range(geometry.total_rows):
        plan.steps.append(FracStep(row))
    return plan


def _check_geometry(layout: DecoderLayout, geometry: Geometry) -> None:
    if geometry.subarray_size != layout.subarray_size:
        raise ValueError(
            f"geometry subarray size {geometry.subarray_size} does not match "
            f"decoder layout ({layout.subarray_size} rows)"
        )


@dataclass(frozen=True)
class PlanComparison:
    strategy: str
    step_count: int
    modeled_time_ns: float
    speedup_vs: dict[str, float]


def compare(plans: Sequence[DestructionPlan],
            timing: TimingParams | None = None,
            durations: CommandDurations | None = None) -> list[PlanComparison]:
    """Step counts, modeled times and pairwise speedups for a set of plans."""
    times = {p.strategy: p.modeled_time(timing, durations) for p in plans}
    out = []
    for plan in plans:
        speedups = {
            other: times[other] / times[plan.strategy]
            for other in times
            if other != plan.strategy
        }
        out.append(
            PlanComparison(
                strategy=plan.strategy,
                step_count=plan.step_count,
                modeled_time_ns=times[plan.strategy],
                speedup_vs=speedups,
            )
        )
    return out
