"""Brute-force reference solvers used to certify the covering solver.

``brute_force_covering`` enumerates, per prefix group, every prefix length,
i.e. the complete space of prefix-valid selections.  Groups are fixed in the
order they appear in the covering instance (job by job, deepest cell first,
which is left to right); as soon as every group that can contribute to some
ray has been fixed, that ray's demand is checked and the branch pruned on
failure.  A running cost bound prunes branches that already cost more than
the best complete solution.  Both prunings are exact: the search still visits
every potentially optimal selection, so the result is a true minimum.

``verify_pair`` runs the whole reduction pipeline on one instance, solves it
both with the dynamic program and with this oracle, and reports whether the
costs agree and both solutions pass the independent feasibility scan.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random

from .covering import (
    CostFn,
    CoveringInstance,
    Selection,
    build_covering,
    check_feasible,
    full_selection,
)
from .dpsolver import solve as dp_solve
from .grid import build_grid, root_length
from .jobs import (
    JobInstance,
    instance_to_json,
    max_processing,
    perturb_release_times,
    total_horizon,
)


class OracleBudgetExceeded(RuntimeError):
    """The exhaustive search hit its node or time budget."""


def _env_budget_ms() -> int | None:
    raw = os.environ.get("FLOWCOVER_BUDGET_MS")
    if raw is None:
        return None
    return int(raw)


def _default_time_limit_ms() -> int:
    env = _env_budget_ms()
    return 600_000 if env is None else env


@dataclass(frozen=True)
class OracleBudget:
    """Limits for the exhaustive search.

    ``max_combinations`` caps the number of search nodes actually visited
    (the pruned tree, not the astronomically larger unpruned product of
    prefix choices).  ``time_limit_ms`` defaults to the FLOWCOVER_BUDGET_MS
    environment variable when set.
    """

    max_groups: int = 256
    max_combinations: int = 2_000_000
    time_limit_ms: int = field(default_factory=_default_time_limit_ms)

    def __post_init__(self) -> None:
        if self.max_groups <= 0 or self.max_combinations <= 0 or self.time_limit_ms < 0:
            raise ValueError("budget fields must be positive")


def brute_force_covering(
    cov: CoveringInstance, budget: OracleBudget | None = None
) -> tuple[int, Selection]:
    """Cheapest prefix-valid selection covering every ray demand.

    Ties are broken towards the lexicographically smallest sorted tuple of
    rectangle ids.  Raises OracleBudgetExceeded when the budget runs out.
    """
    budget = budget or OracleBudget()
    groups = cov.groups
    if len(groups) > budget.max_groups:
        raise OracleBudgetExceeded(f"{len(groups)} groups exceed cap {budget.max_groups}")

    # Per (job, t): which group covers t for that job, at which position.
    slot_of: dict[tuple[int, int], tuple[int, int, int]] = {}
    for gi, group in enumerate(groups):
        for pos, rect in enumerate(group.rectangles):
            for t in range(rect.x_begin, min(rect.x_end, cov.horizon + 1)):
                slot_of[(group.job, t)] = (gi, pos, rect.capacity)

    # Rays with positive demand, bucketed by the last group fixed among their
    # contributors; checking a ray any earlier could reject selections that a
    # later group would still fix.
    buckets: list[list[tuple[int, list[tuple[int, int, int]]]]] = [[] for _ in groups]
    releases = [j.release for j in cov.instance.jobs]
    for t in range(0, cov.horizon + 1):
        for s in range(0, t + 1):
            need = cov.demand(s, t)
            if need <= 0:
                continue
            contributors = [
                slot_of[(job_id, t)]
                for job_id, r in enumerate(releases, start=1)
                if s <= r <= t
            ]
            trigger = max(gi for gi, _, _ in contributors)
            buckets[trigger].append((need, contributors))

    prefix_costs: list[list[int]] = []
    for group in groups:
        acc = [0]
        for rect in group.rectangles:
            acc.append(acc[-1] + rect.cost)
        prefix_costs.append(acc)

    lengths = [0] * len(groups)
    best: tuple[int, tuple[int, ...]] | None = None
    nodes = 0
    started = time.perf_counter()

    def covered(need: int, contributors: list[tuple[int, int, int]]) -> bool:
        got = 0
        for gi, pos, cap in contributors:
            if lengths[gi] > pos:
                got += cap
                if got >= need:
                    return True
        return False

    def walk(gi: int, cost: int) -> None:
        nonlocal best, nodes
        nodes += 1
        if nodes > budget.max_combinations:
            raise OracleBudgetExceeded(f"visited more than {budget.max_combinations} nodes")
        if nodes % 4096 == 0 or budget.time_limit_ms == 0:
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            if elapsed_ms >= budget.time_limit_ms:
                raise OracleBudgetExceeded(f"time limit {budget.time_limit_ms} ms hit")
        if gi == len(groups):
            ids = tuple(
                sorted(
                    rect.rid
                    for g, group in enumerate(groups)
                    for rect in group.rectangles[: lengths[g]]
                )
            )
            cand = (cost, ids)
            if best is None or cand < best:
                best = cand
            return
        for take in range(len(groups[gi].rectangles) + 1):
            lengths[gi] = take
            branch_cost = cost + prefix_costs[gi][take]
            if best is not None and branch_cost > best[0]:
                continue
            if all(covered(need, cs) for need, cs in buckets[gi]):
                walk(gi + 1, branch_cost)
        lengths[gi] = 0

    walk(0, 0)
    assert best is not None, "the full selection is always feasible"
    return best[0], Selection.of(best[1])


@dataclass(frozen=True)
class VerifyReport:
    """Outcome of one paired solver-vs-oracle run; plain data, picklable."""

    seed: int
    K: int
    leaf_len: int
    epsilon: str
    shift: int
    n: int
    P: int
    T: int
    status: str  # ok | mismatch | dp_infeasible | oracle_infeasible | skipped_budget
    dp_cost: int | None = None
    oracle_cost: int | None = None
    dp_selection: tuple[int, ...] | None = None
    oracle_selection: tuple[int, ...] | None = None
    dp_states: int = 0
    dp_max_depth: int = 0
    dp_ms: float = 0.0
    oracle_ms: float | None = None
    instance_json: str | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def skipped(self) -> bool:
        return self.status == "skipped_budget"


def derive_shift(T: int, K: int, leaf_len: int, seed: int) -> int:
    """Seeded uniform draw from {0, ..., unshifted root length - 1}."""
    return Random(seed).randrange(root_length(T, K, leaf_len))


def reduction_grid(T: int, K: int, seed: int, leaf_len: int = 1):
    """Seeded-shift grid for the covering reduction.

    Sized over T + 1 so the root strictly contains [0, T]: every ray position
    t + 1/2 with t <= T then falls inside the span that each released job's
    rectangles tile, which the empty-ray property relies on.
    """
    span = T + 1
    shift = derive_shift(span, K, leaf_len, seed)
    return build_grid(span, K, shift=shift, leaf_len=leaf_len)


def verify_pair(
    instance: JobInstance,
    K: int,
    seed: int,
    epsilon: Fraction | int | str | None = None,
    leaf_len: int = 1,
    cost_model: str | CostFn = "weighted_length",
    budget: OracleBudget | None = None,
) -> VerifyReport:
    """Preprocess, reduce, and solve ``instance`` with both solvers.

    The release perturbation runs first (so duplicate release times are
    fine), the grid shift is drawn from ``seed``, and both solutions are
    re-checked with the exhaustive interval scan.  Any disagreement comes
    back as a failed report carrying the serialized instance so it can be
    replayed.
    """
    eps = Fraction(instance.epsilon if epsilon is None else epsilon)
    work = perturb_release_times(instance, eps)
    T = total_horizon(work) if work.jobs else 0
    P = max_processing(work) if work.jobs else 0
    grid = reduction_grid(T, K, seed, leaf_len)
    cov = build_covering(work, grid, cost_model=cost_model)

    base = dict(
        seed=seed,
        K=K,
        leaf_len=leaf_len,
        epsilon=str(eps),
        shift=grid.shift,
        n=work.n,
        P=P,
        T=T,
    )

    t0 = time.perf_counter()
    dp = dp_solve(cov)
    dp_ms = (time.perf_counter() - t0) * 1000.0
    base.update(
        dp_cost=dp.cost,
        dp_selection=dp.selection.sorted_ids(),
        dp_states=dp.stats.states,
        dp_max_depth=dp.stats.max_depth,
        dp_ms=dp_ms,
    )

    try:
        t1 = time.perf_counter()
        oracle_cost, oracle_sel = brute_force_covering(cov, budget)
        oracle_ms = (time.perf_counter() - t1) * 1000.0
    except OracleBudgetExceeded as exc:
        return VerifyReport(status="skipped_budget", detail=str(exc), **base)

    base.update(
        oracle_cost=oracle_cost,
        oracle_selection=oracle_sel.sorted_ids(),
        oracle_ms=oracle_ms,
    )

    if not check_feasible(cov, dp.selection).ok:
        return VerifyReport(
            status="dp_infeasible", instance_json=instance_to_json(instance), **base
        )
    if not check_feasible(cov, oracle_sel).ok:
        return VerifyReport(
            status="oracle_infeasible", instance_json=instance_to_json(instance), **base
        )
    if dp.cost != oracle_cost:
        return VerifyReport(
            status="mismatch",
            detail=f"dp_cost={dp.cost} oracle_cost={oracle_cost}",
            instance_json=instance_to_json(instance),
            **base,
        )
    # sanity: the trivially feasible selection can never beat the optimum
    assert oracle_cost <= sum(r.cost for r in cov.rectangles)
    assert check_feasible(cov, full_selection(cov)).ok
    return VerifyReport(status="ok", **base)
