"""Exact dynamic program for prefix-constrained rectangle/ray covering.

The solver walks states (job, cell, k, carry) top-down with memoization:

- ``job`` is a row index in 1..n+1; rows above it are already decided.
- ``cell`` and ``k`` select the area A = [x1, end(cell)) x [job, oo), where
  x1 is the start of the cell's k-th child (or the cell's (k-1)-th unit for
  leaf cells).  Only rectangles wholly inside A may still be chosen.
- ``carry`` maps each member of a fixed subdivision of A's x-span (the
  grandchild cells under children k..K, or unit intervals at the two deepest
  levels) to an extra demand.  A carried value remembers, for rays that
  start at rows above ``job`` but reach down into A, how much capacity they
  are still owed: the state must cover d([r_job, t]) plus the carry of the
  subdivision interval containing t.

A state where A holds no rectangle stores the empty selection: rays met
entirely inside such an area can have no positive demand, and no carried
obligation can reference them.  A state is *canonical* when the job's own
rectangles in the cell exactly span A's x-range; the solver then tries every
prefix of that group, checks the rays that no deeper row can still affect,
re-derives the carry for the next row (selected capacity pays the debt, the
job's own processing and the gap to the next release shift it), and recurses
with job+1.  Otherwise the area splits along the k-th child into two
independent states, or, at leaf level, k simply advances.

Costs, demands, and coordinates are integers throughout; ties between
equal-cost solutions go to the lexicographically smallest sorted tuple of
rectangle ids, so results are deterministic.  The root state covers the full
plane with zero carry, which is exactly the covering problem; its solution is
re-verified against the exhaustive interval scan before being returned.
"""

from __future__ import annotations

import sys
import time
from bisect import bisect_right
from dataclasses import dataclass

from .covering import CoveringInstance, Selection, check_feasible, selection_cost
from .grid import Grid, GridCell, Interval

CarryItems = tuple[tuple[Interval, int], ...]
StateKey = tuple[int, GridCell, int, CarryItems]


class DpError(RuntimeError):
    """Internal contract of the dynamic program broken."""


class EmptyAreaError(ValueError):
    """The requested (job, cell, k) has an empty area; no such state exists."""


@dataclass(frozen=True)
class Area:
    """Half-open region [x_begin, x_end) x [row, oo)."""

    x_begin: int
    x_end: int
    row: int


def area(job: int, cell: GridCell, k: int, grid: Grid) -> Area:
    """Area of state (job, cell, k); raises EmptyAreaError when undefined."""
    if not 1 <= k <= grid.K:
        raise ValueError(f"k must be in 1..{grid.K}, got {k}")
    if cell.is_leaf:
        if k > cell.length:
            raise EmptyAreaError(f"k={k} exceeds leaf length {cell.length}")
        x1 = cell.begin + k - 1
    else:
        x1 = cell.children[k - 1].begin
    return Area(x_begin=x1, x_end=cell.end, row=job)


def subcells(cell: GridCell, k: int, grid: Grid) -> tuple[Interval, ...]:
    """The carry subdivision for (cell, k); it tiles the area's x-span.

    Grandchild cells under children k..K for shallow cells, unit intervals
    at the two deepest levels.
    """
    if cell.is_leaf:
        if k > cell.length:
            return ()
        return tuple((x, x + 1) for x in range(cell.begin + k - 1, cell.end))
    tail = cell.children[k - 1 :]
    if tail[0].is_leaf:
        return tuple((x, x + 1) for x in range(tail[0].begin, cell.end))
    return tuple((gc.begin, gc.end) for child in tail for gc in child.children)


def is_canonical(job: int, cell: GridCell, k: int, cov: CoveringInstance) -> bool:
    """Whether the job's own rectangles in ``cell`` exactly span the area.

    Three conditions: the group is non-empty, lies inside the area, and its
    leftmost edge matches the area's left edge.  (Group spans always end at
    the cell's right edge, so the right edges then match too.)
    """
    group = cov.group(job, cell)
    if group is None or not group.rectangles:
        return False
    a = area(job, cell, k, cov.grid)
    first = group.rectangles[0]
    last = group.rectangles[-1]
    return first.x_begin == a.x_begin and last.x_end <= a.x_end


def carry_items(carry: dict[Interval, int]) -> CarryItems:
    """Canonical sparse form: sorted, zero entries dropped."""
    return tuple(sorted((iv, v) for iv, v in carry.items() if v > 0))


def next_carry(carry_value: int, processing: int, release_gap: int, paid_capacity: int) -> int:
    """Carried demand for the next row: the old debt plus the current job's
    processing, minus the release gap and whatever selected capacity paid."""
    return max(0, carry_value + processing - release_gap - paid_capacity)


@dataclass
class SolveStats:
    states: int = 0
    max_depth: int = 0
    wall_ms: float = 0.0
    triples: int = 0
    carry_vectors: int = 0
    max_carry: int = 0


@dataclass(frozen=True)
class DpResult:
    cost: int
    selection: Selection
    stats: SolveStats


class DpSolver:
    """Memoized recursion over covering states; see the module docstring."""

    def __init__(self, cov: CoveringInstance, validate: bool = True):
        self.cov = cov
        self.grid = cov.grid
        self.validate = validate
        self.memo: dict[StateKey, tuple[int, tuple[int, ...]] | None] = {}
        self._triples: set[tuple[int, int, int, int]] = set()
        self._carries: set[CarryItems] = set()
        self._max_carry = 0
        self._max_depth = 0
        n = cov.instance.n
        self._proc = [0] * (n + 1)
        self._proc_before = [0] * (n + 2)
        for j in cov.instance.jobs:
            self._proc[j.id] = j.processing
        for j in range(1, n + 2):
            self._proc_before[j] = self._proc_before[j - 1] + self._proc[j - 1]

    # -- public entry points ------------------------------------------------

    def solve(self) -> DpResult:
        started = time.perf_counter()
        depth_needed = (self.cov.instance.n + 2) * (self.grid.lmax + 1) * (self.grid.K + 2)
        if sys.getrecursionlimit() < depth_needed + 100:
            sys.setrecursionlimit(depth_needed + 1000)
        entry = self._cell(1, self.grid.root, 1, (), depth=0)
        if entry is None:
            raise DpError("root state must be feasible: the full selection covers all demands")
        cost, ids = entry
        selection = Selection.of(ids)
        if selection_cost(self.cov, selection) != cost:
            raise DpError("selection cost disagrees with the computed optimum")
        report = check_feasible(self.cov, selection)
        if not report.ok:
            raise DpError(f"solver returned an infeasible selection: {report}")
        stats = SolveStats(
            states=len(self.memo),
            max_depth=self._max_depth,
            wall_ms=(time.perf_counter() - started) * 1000.0,
            triples=len(self._triples),
            carry_vectors=len(self._carries),
            max_carry=self._max_carry,
        )
        return DpResult(cost=cost, selection=selection, stats=stats)

    def solve_cell(
        self, job: int, cell: GridCell, k: int, carry: dict[Interval, int] | CarryItems = ()
    ) -> tuple[int, tuple[int, ...]] | None:
        """Solve one state directly (used by tests); None means infeasible."""
        items = carry_items(dict(carry)) if not isinstance(carry, tuple) else carry
        return self._cell(job, cell, k, items, depth=0)

    # -- recursion ------------------------------------------------------------

    def _cell(
        self, job: int, cell: GridCell, k: int, carry: CarryItems, depth: int
    ) -> tuple[int, tuple[int, ...]] | None:
        key: StateKey = (job, cell, k, carry)
        if key in self.memo:
            return self.memo[key]
        self._max_depth = max(self._max_depth, depth)
        self._triples.add((job, cell.level, cell.begin, k))
        self._carries.add(carry)
        if carry:
            self._max_carry = max(self._max_carry, max(v for _, v in carry))

        a = area(job, cell, k, self.grid)
        if self.validate:
            self._assert_state_valid(job, cell, k, a, carry)

        if not self._area_has_rectangle(a):
            entry: tuple[int, tuple[int, ...]] | None = (0, ())
        elif is_canonical(job, cell, k, self.cov):
            entry = self._canonical(job, cell, k, dict(carry), a, depth)
        elif not cell.is_leaf:
            entry = self._split(job, cell, k, dict(carry), depth)
        else:
            entry = self._advance_leaf(job, cell, k, dict(carry), depth)

        self.memo[key] = entry
        return entry

    def _canonical(
        self,
        job: int,
        cell: GridCell,
        k: int,
        carry: dict[Interval, int],
        a: Area,
        depth: int,
    ) -> tuple[int, tuple[int, ...]] | None:
        group = self.cov.group(job, cell)
        assert group is not None
        subs = subcells(cell, k, self.grid)
        rect_by_sub = {(r.x_begin, r.x_end): r for r in group.rectangles}
        if self.validate:
            for sub in subs:
                if sub not in rect_by_sub:
                    raise DpError(f"canonical state lacks a rectangle over {sub}")

        # Rays ending at t are settled at this row when no deeper rectangle
        # crosses t: only the prefix choice can still cover them.  For those,
        # demand plus carry must be paid by the row's own rectangle at t, so
        # that rectangle must be selected and its capacity must suffice.
        r_job = self.cov.release_of(job)
        pos_of = {r.rid: i for i, r in enumerate(group.rectangles)}
        min_take = 0
        for t in range(a.x_begin, min(a.x_end, self.cov.horizon + 1)):
            if t < r_job:
                continue
            crossing = self.cov.rects_crossing(t)
            if any(r.job > job for r in crossing):
                continue
            own = next(r for r in crossing if r.job == job)
            need = self.cov.demand(r_job, t) + self._carry_at(carry, subs, t)
            if need <= 0:
                continue
            if need > own.capacity:
                return None  # no prefix can pay this ray
            min_take = max(min_take, pos_of[own.rid] + 1)

        gap = self.cov.release_of(job + 1) - r_job
        processing = self._proc[job]
        best: tuple[int, tuple[int, ...]] | None = None
        prefix_cost = sum(r.cost for r in group.rectangles[:min_take])
        chosen: set[int] = {r.rid for r in group.rectangles[:min_take]}
        for take in range(min_take, len(group.rectangles) + 1):
            if take > min_take:
                prefix_cost += group.rectangles[take - 1].cost
                chosen.add(group.rectangles[take - 1].rid)
            child_carry: dict[Interval, int] = {}
            for sub in subs:
                rect = rect_by_sub[sub]
                paid = rect.capacity if rect.rid in chosen else 0
                nxt = next_carry(carry.get(sub, 0), processing, gap, paid)
                if nxt > 0:
                    child_carry[sub] = nxt
            child = self._cell(job + 1, cell, k, carry_items(child_carry), depth + 1)
            if child is None:
                continue
            cand = (prefix_cost + child[0], tuple(sorted(chosen | set(child[1]))))
            if best is None or cand < best:
                best = cand
        return best

    def _split(
        self, job: int, cell: GridCell, k: int, carry: dict[Interval, int], depth: int
    ) -> tuple[int, tuple[int, ...]] | None:
        child_cell = cell.children[k - 1]
        parent_subs = subcells(cell, k, self.grid)
        child_subs = subcells(child_cell, 1, self.grid)
        begins = [sub[0] for sub in parent_subs]
        inherited: dict[Interval, int] = {}
        for sub in child_subs:
            idx = self._containing(begins, parent_subs, sub)
            v = carry.get(parent_subs[idx], 0)
            if v > 0:
                inherited[sub] = v
        left = self._cell(job, child_cell, 1, carry_items(inherited), depth + 1)
        if left is None or k == self.grid.K:
            return left
        rest = set(subcells(cell, k + 1, self.grid))
        kept = {sub: v for sub, v in carry.items() if sub in rest}
        right = self._cell(job, cell, k + 1, carry_items(kept), depth + 1)
        if right is None:
            return None
        return (left[0] + right[0], tuple(sorted(left[1] + right[1])))

    def _advance_leaf(
        self, job: int, cell: GridCell, k: int, carry: dict[Interval, int], depth: int
    ) -> tuple[int, tuple[int, ...]] | None:
        # A non-canonical leaf state holding a rectangle always has the job
        # released strictly right of the area's left edge, so k can advance.
        if k >= cell.length:
            raise DpError(f"cannot advance k={k} in leaf of length {cell.length}")
        rest = set(subcells(cell, k + 1, self.grid))
        kept = {sub: v for sub, v in carry.items() if sub in rest}
        return self._cell(job, cell, k + 1, carry_items(kept), depth + 1)

    # -- helpers -------------------------------------------------------------

    def _area_has_rectangle(self, a: Area) -> bool:
        return any(
            r.job >= a.row and r.x_begin >= a.x_begin and r.x_end <= a.x_end
            for r in self.cov.rectangles
        )

    @staticmethod
    def _containing(begins: list[int], subs: tuple[Interval, ...], target: Interval) -> int:
        idx = bisect_right(begins, target[0]) - 1
        if idx < 0 or not (subs[idx][0] <= target[0] and target[1] <= subs[idx][1]):
            raise DpError(f"{target} not inside any carry interval")
        return idx

    def _carry_at(self, carry: dict[Interval, int], subs: tuple[Interval, ...], t: int) -> int:
        for sub in subs:
            if sub[0] <= t < sub[1]:
                return carry.get(sub, 0)
        raise DpError(f"t={t} outside the carry subdivision")

    def _assert_state_valid(
        self, job: int, cell: GridCell, k: int, a: Area, carry: CarryItems
    ) -> None:
        subs = subcells(cell, k, self.grid)
        if subs and (subs[0][0] != a.x_begin or subs[-1][1] != a.x_end):
            raise DpError("carry subdivision must tile the area's x-span")
        allowed = set(subs)
        bound = self._proc_before[job]
        for iv, v in carry:
            if iv not in allowed:
                raise DpError(f"carry interval {iv} outside the subdivision of the state")
            if not 0 < v <= bound:
                raise DpError(f"carry value {v} outside 0..{bound}")
        # every group must lie wholly inside or wholly outside the area, and
        # inside groups must belong to the cell or one of its descendants
        for g in self.cov.groups:
            if g.job < job:
                continue
            lo = g.rectangles[0].x_begin
            hi = g.rectangles[-1].x_end
            if hi <= a.x_begin or lo >= a.x_end:
                continue
            if not (a.x_begin <= lo and hi <= a.x_end):
                raise DpError(
                    f"group (job={g.job}, cell=[{g.cell.begin},{g.cell.end})) straddles the area"
                )
            if not self.grid.is_descendant_or_self(g.cell, cell):
                raise DpError("group inside the area but not under the state's cell")


def solve(cov: CoveringInstance, validate: bool = True) -> DpResult:
    """Minimum-cost feasible selection for ``cov``; deterministic."""
    return DpSolver(cov, validate=validate).solve()
