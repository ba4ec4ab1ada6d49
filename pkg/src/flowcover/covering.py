"""Geometric covering instances: rectangles, prefix groups, rays, demands.

Every segment of job j becomes an axis-parallel rectangle: the segment's
x-interval at unit height in row j (y in [j, j+1)).  A rectangle carries a
cost and a capacity equal to the job's processing time.  Within one group
(one job, one cell) a valid selection must take a left prefix of the
rectangles.

For every integer interval [s, t] with 0 <= s <= t <= T there is a downward
ray at x = t + 1/2 starting just below row j(I), where j(I) is the earliest
released job with r_j >= s.  Its demand is

    d([s, t]) = sum of p_j over jobs with s <= r_j <= t,  minus (t - s),

the amount of work released in the window that cannot have finished by t.  A
selection is feasible when every ray's demand is covered by the total
capacity of selected rectangles the ray passes through.  Rays are never
materialized: demands and crossing sets are computed from sorted release
times and a per-unit crossing index.

Costs are pluggable.  The default charges weight * segment length, the
weighted duration the job stays alive across that segment; unit costs and
arbitrary callables are also supported.  The exact cost function of the full
scheduling reduction is out of scope, so end-to-end flow-time optimality is
not claimed for any built-in model; the solver is exact for whatever costs
the instance carries.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .grid import Grid, GridCell, Interval, build_segments, cell_path
from .jobs import Job, JobInstance

CostFn = Callable[[Job, int, int], int]


def weighted_length_cost(job: Job, x_begin: int, x_end: int) -> int:
    return job.weight * (x_end - x_begin)


def unit_cost(job: Job, x_begin: int, x_end: int) -> int:
    return 1


_COST_MODELS: dict[str, CostFn] = {
    "weighted_length": weighted_length_cost,
    "unit": unit_cost,
}


def resolve_cost_model(model: str | CostFn) -> CostFn:
    if callable(model):
        return model
    try:
        return _COST_MODELS[model]
    except KeyError:
        raise ValueError(
            f"unknown cost model {model!r}; built-ins: {sorted(_COST_MODELS)}"
        ) from None


@dataclass(frozen=True)
class Rectangle:
    """Segment [x_begin, x_end) of job ``job`` lifted to row [job, job+1)."""

    rid: int
    job: int
    cell: GridCell
    x_begin: int
    x_end: int
    cost: int
    capacity: int

    @property
    def x_interval(self) -> Interval:
        return (self.x_begin, self.x_end)

    def crosses(self, t: int) -> bool:
        """Whether the vertical line x = t + 1/2 passes through this rectangle."""
        return self.x_begin <= t < self.x_end


@dataclass(frozen=True)
class PrefixGroup:
    """Rectangles of one job in one cell, left to right; selections must take
    a (possibly empty) prefix of this order."""

    job: int
    cell: GridCell
    rectangles: tuple[Rectangle, ...]


@dataclass(frozen=True)
class Selection:
    """A chosen subset of rectangles, identified by rectangle ids."""

    chosen: frozenset[int]

    @staticmethod
    def of(ids: Iterable[int]) -> "Selection":
        return Selection(chosen=frozenset(ids))

    def sorted_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.chosen))


@dataclass(frozen=True)
class RayViolation:
    s: int
    t: int
    required: int
    covered: int


@dataclass(frozen=True)
class PrefixViolation:
    job: int
    cell_begin: int
    cell_end: int
    selected_positions: tuple[int, ...]


@dataclass(frozen=True)
class FeasibilityReport:
    prefix_violations: tuple[PrefixViolation, ...]
    demand_violations: tuple[RayViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.prefix_violations and not self.demand_violations


class CoveringInstance:
    """Rectangles, groups, and ray machinery built from jobs plus a grid."""

    def __init__(self, instance: JobInstance, grid: Grid, groups: Sequence[PrefixGroup]):
        self.instance = instance
        self.grid = grid
        self.groups = tuple(groups)
        self.horizon = 0
        if instance.jobs:
            self.horizon = max(j.release for j in instance.jobs) + sum(
                j.processing for j in instance.jobs
            )
        self.rectangles: tuple[Rectangle, ...] = tuple(
            r for g in self.groups for r in g.rectangles
        )
        assert [r.rid for r in self.rectangles] == list(range(len(self.rectangles)))
        self._group_by_key: dict[tuple[int, int, int], PrefixGroup] = {
            (g.job, g.cell.level, g.cell.begin): g for g in self.groups
        }
        self._releases = [j.release for j in instance.jobs]
        self._proc_prefix = [0]
        for j in instance.jobs:
            self._proc_prefix.append(self._proc_prefix[-1] + j.processing)
        # crossing[t - root.begin] lists rectangles through x = t + 1/2, by row
        width = grid.root.length
        crossing: list[list[Rectangle]] = [[] for _ in range(width)]
        for rect in self.rectangles:
            for t in range(rect.x_begin, rect.x_end):
                crossing[t - grid.root.begin].append(rect)
        self._crossing = [tuple(sorted(row, key=lambda r: r.job)) for row in crossing]

    # -- lookups ----------------------------------------------------------

    def group(self, job: int, cell: GridCell) -> PrefixGroup | None:
        return self._group_by_key.get((job, cell.level, cell.begin))

    def job_groups(self, job: int) -> list[PrefixGroup]:
        return [g for g in self.groups if g.job == job]

    def rects_crossing(self, t: int) -> tuple[Rectangle, ...]:
        """Rectangles whose x-interval contains t + 1/2, sorted by row."""
        idx = t - self.grid.root.begin
        if not 0 <= idx < len(self._crossing):
            return ()
        return self._crossing[idx]

    def anchor_job(self, s: int) -> int | None:
        """1-based id of the earliest released job with release >= s."""
        idx = bisect_left(self._releases, s)
        return idx + 1 if idx < len(self._releases) else None

    def release_of(self, job: int) -> int:
        """Release of ``job``; one past the horizon for the sentinel job n+1."""
        if job == self.instance.n + 1:
            return self.horizon + 1
        return self.instance.jobs[job - 1].release

    def demand(self, s: int, t: int) -> int:
        if not 0 <= s <= t <= self.horizon:
            raise ValueError(f"interval [{s}, {t}] outside 0..{self.horizon}")
        lo = bisect_left(self._releases, s)
        hi = bisect_right(self._releases, t)
        return self._proc_prefix[hi] - self._proc_prefix[lo] - (t - s)


def demand(instance: JobInstance, s: int, t: int) -> int:
    """d([s, t]) = total processing released within [s, t] minus (t - s)."""
    if not instance.jobs:
        horizon = 0
    else:
        horizon = max(j.release for j in instance.jobs) + sum(
            j.processing for j in instance.jobs
        )
    if not 0 <= s <= t <= horizon:
        raise ValueError(f"interval [{s}, {t}] outside 0..{horizon}")
    return sum(j.processing for j in instance.jobs if s <= j.release <= t) - (t - s)


def build_covering(
    instance: JobInstance, grid: Grid, cost_model: str | CostFn = "weighted_length"
) -> CoveringInstance:
    """One rectangle per segment of every job; groups ordered left to right.

    Requires pairwise distinct release times (run the release perturbation
    first) and every release inside the grid's root interval.
    """
    if not instance.has_distinct_releases():
        raise ValueError("release times must be pairwise distinct; perturb the instance first")
    cost_fn = resolve_cost_model(cost_model)
    groups: list[PrefixGroup] = []
    rid = 0
    for job in instance.jobs:
        for seg_group in build_segments(job, grid):
            if not seg_group.segments:
                continue
            rects = []
            for x_begin, x_end in seg_group.segments:
                rects.append(
                    Rectangle(
                        rid=rid,
                        job=job.id,
                        cell=seg_group.cell,
                        x_begin=x_begin,
                        x_end=x_end,
                        cost=cost_fn(job, x_begin, x_end),
                        capacity=job.processing,
                    )
                )
                rid += 1
            groups.append(PrefixGroup(job=job.id, cell=seg_group.cell, rectangles=tuple(rects)))
    return CoveringInstance(instance=instance, grid=grid, groups=groups)


def full_selection(cov: CoveringInstance) -> Selection:
    return Selection.of(r.rid for r in cov.rectangles)


def ray_rectangles(cov: CoveringInstance, s: int, t: int) -> tuple[Rectangle, ...]:
    """Rectangles the ray of [s, t] passes through: crossing t + 1/2 at rows
    at or below the anchor job.  Empty when no job is released at or after s."""
    if not 0 <= s <= t <= cov.horizon:
        raise ValueError(f"interval [{s}, {t}] outside 0..{cov.horizon}")
    anchor = cov.anchor_job(s)
    if anchor is None:
        return ()
    return tuple(r for r in cov.rects_crossing(t) if r.job >= anchor)


def selection_cost(cov: CoveringInstance, sel: Selection) -> int:
    total = 0
    for rid in sel.chosen:
        if not 0 <= rid < len(cov.rectangles):
            raise KeyError(f"unknown rectangle id {rid}")
        total += cov.rectangles[rid].cost
    return total


def check_feasible(cov: CoveringInstance, sel: Selection) -> FeasibilityReport:
    """Scan every prefix constraint and every interval [s, t] within the horizon.

    Violations are returned as data, not raised.
    """
    prefix_viols: list[PrefixViolation] = []
    for group in cov.groups:
        positions = tuple(
            i for i, r in enumerate(group.rectangles) if r.rid in sel.chosen
        )
        if positions != tuple(range(len(positions))):
            prefix_viols.append(
                PrefixViolation(
                    job=group.job,
                    cell_begin=group.cell.begin,
                    cell_end=group.cell.end,
                    selected_positions=positions,
                )
            )

    demand_viols: list[RayViolation] = []
    releases = [j.release for j in cov.instance.jobs]
    for t in range(0, cov.horizon + 1):
        crossing = cov.rects_crossing(t)
        rows = [r.job for r in crossing]
        suffix = [0] * (len(crossing) + 1)
        for i in range(len(crossing) - 1, -1, -1):
            cap = crossing[i].capacity if crossing[i].rid in sel.chosen else 0
            suffix[i] = suffix[i + 1] + cap
        for s in range(0, t + 1):
            need = cov.demand(s, t)
            if need <= 0:
                continue
            anchor = cov.anchor_job(s)
            assert anchor is not None, "positive demand implies a release in [s, t]"
            got = suffix[bisect_left(rows, anchor)]
            if got < need:
                demand_viols.append(RayViolation(s=s, t=t, required=need, covered=got))
    return FeasibilityReport(
        prefix_violations=tuple(prefix_viols), demand_violations=tuple(demand_viols)
    )


def covering_to_json(cov: CoveringInstance, selection: Selection | None = None) -> str:
    """Debug dump: groups with ordered rectangle records, optional selection."""
    payload: dict = {
        "T": cov.horizon,
        "K": cov.grid.K,
        "shift": cov.grid.shift,
        "leaf_len": cov.grid.leaf_len,
        "groups": [
            {
                "job": g.job,
                "cell_path": cell_path(cov.grid, g.cell),
                "rectangles": [
                    {
                        "id": r.rid,
                        "job": r.job,
                        "x_begin": r.x_begin,
                        "x_end": r.x_end,
                        "cost": r.cost,
                        "capacity": r.capacity,
                    }
                    for r in g.rectangles
                ],
            }
            for g in cov.groups
        ],
    }
    if selection is not None:
        payload["selection"] = list(selection.sorted_ids())
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
