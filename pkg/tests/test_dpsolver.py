from random import Random

import pytest

from flowcover.covering import build_covering, check_feasible, selection_cost
from flowcover.dpsolver import (
    DpError,
    DpSolver,
    EmptyAreaError,
    area,
    is_canonical,
    next_carry,
    solve,
    subcells,
)
from flowcover.grid import build_grid, cell_at, root_length
from flowcover.jobs import make_instance, perturb_release_times, total_horizon
from flowcover.oracle import brute_force_covering


def cov_for(triples, K=2, shift=0, leaf_len=1, T=None):
    inst = make_instance(triples)
    horizon = T if T is not None else total_horizon(inst)
    grid = build_grid(horizon, K, shift=shift, leaf_len=leaf_len)
    return build_covering(inst, grid)


def random_cov(rng, K, n_max=4, p_max=4):
    inst = make_instance(
        [
            (rng.randint(0, p_max), rng.randint(1, p_max), rng.randint(1, 4))
            for _ in range(rng.randint(1, n_max))
        ]
    )
    work = perturb_release_times(inst, 1)
    T = total_horizon(work)
    shift = rng.randrange(root_length(T + 1, K))
    grid = build_grid(T + 1, K, shift=shift)
    return build_covering(work, grid)


# -- area ---------------------------------------------------------------------


def test_area_internal_cell():
    grid = build_grid(T=8, K=2, leaf_len=2)
    a = area(3, grid.root, 2, grid)
    assert (a.x_begin, a.x_end, a.row) == (4, 8, 3)


def test_area_leaf_cell():
    grid = build_grid(T=8, K=2, leaf_len=2)
    leaf = cell_at(grid, grid.lmax, 4)  # [4, 6)
    a = area(1, leaf, 2, grid)
    assert (a.x_begin, a.x_end, a.row) == (5, 6, 1)


def test_area_empty_for_oversized_k():
    grid = build_grid(T=8, K=3, leaf_len=2)
    leaf = cell_at(grid, grid.lmax, 4)
    with pytest.raises(EmptyAreaError):
        area(1, leaf, 3, grid)


# -- subcells -------------------------------------------------------------------


def test_subcells_grandchildren():
    grid = build_grid(T=8, K=2, leaf_len=2)
    assert subcells(grid.root, 1, grid) == ((0, 2), (2, 4), (4, 6), (6, 8))
    assert subcells(grid.root, 2, grid) == ((4, 6), (6, 8))


def test_subcells_units_above_leaves():
    grid = build_grid(T=8, K=2, leaf_len=2)
    mid = cell_at(grid, 1, 0)  # [0, 4), children are leaves
    assert subcells(mid, 1, grid) == ((0, 1), (1, 2), (2, 3), (3, 4))
    assert subcells(mid, 2, grid) == ((2, 3), (3, 4))


def test_subcells_leaf_tiles_the_area_span():
    # the carry subdivision of a leaf state covers the whole area, first
    # unit included (see the decisions ledger for why this is load-bearing)
    grid = build_grid(T=8, K=2, leaf_len=2)
    leaf = cell_at(grid, grid.lmax, 4)  # [4, 6)
    assert subcells(leaf, 1, grid) == ((4, 5), (5, 6))
    assert subcells(leaf, 2, grid) == ((5, 6),)
    a = area(1, leaf, 1, grid)
    subs = subcells(leaf, 1, grid)
    assert subs[0][0] == a.x_begin and subs[-1][1] == a.x_end


def test_subcells_count_bounded_by_k_squared():
    for K in (2, 3):
        grid = build_grid(T=30, K=K)
        for level in grid.levels:
            for cell in level:
                assert len(subcells(cell, 1, grid)) <= K * K


# -- canonical test and carry bump ------------------------------------------------


def test_not_canonical_without_own_rectangles():
    cov = cov_for([(0, 2, 1), (1, 1, 1)])
    grid = cov.grid
    # job 2 has no rectangles in the cell [0, 2): its group there is empty
    mid = cell_at(grid, 1, 0)
    assert not is_canonical(2, mid, 2, cov)


def test_canonical_leaf_at_release():
    cov = cov_for([(1, 2, 1)], T=3)
    leaf = cell_at(cov.grid, cov.grid.lmax, 1)
    assert leaf.begin == 1
    assert is_canonical(1, leaf, 1, cov)


def test_canonical_states_span_both_edges():
    # whenever a state is canonical its group also ends at the area's end
    rng = Random(77)
    for _ in range(12):
        cov = random_cov(rng, K=2)
        solver = DpSolver(cov)
        solver.solve()
        seen = 0
        for job, cell, k, _carry in solver.memo:
            if is_canonical(job, cell, k, cov):
                group = cov.group(job, cell)
                a = area(job, cell, k, cov.grid)
                assert group.rectangles[-1].x_end == a.x_end
                seen += 1
        assert seen > 0


def test_next_carry_arithmetic():
    assert next_carry(2, 3, 1, 3) == 1
    assert next_carry(2, 3, 1, 0) == 4
    assert next_carry(0, 1, 5, 0) == 0


# -- solve ------------------------------------------------------------------------


def test_single_job_matches_oracle_from_root_state():
    cov = cov_for([(0, 4, 2)])
    oracle_cost, _ = brute_force_covering(cov)
    solver = DpSolver(cov)
    entry = solver.solve_cell(1, cov.grid.root, 1, {})
    assert entry is not None and entry[0] == oracle_cost
    assert solve(cov).cost == oracle_cost


def test_empty_instance_costs_zero():
    cov = build_covering(make_instance([]), build_grid(T=0, K=2))
    result = solve(cov)
    assert result.cost == 0 and result.selection.chosen == frozenset()


def test_leaf_boundary_carry_regression():
    # two jobs straddling a leaf boundary with p_1 exceeding the release gap;
    # a narrower leaf carry subdivision returns an infeasible cost-3 answer
    cov = cov_for([(0, 2, 1), (1, 1, 1)])
    oracle_cost, oracle_sel = brute_force_covering(cov)
    result = solve(cov)
    assert oracle_cost == result.cost == 4
    assert check_feasible(cov, result.selection).ok
    assert check_feasible(cov, oracle_sel).ok


def test_random_instances_match_oracle():
    rng = Random(4242)
    for trial in range(60):
        K = 2 if trial % 3 else 3
        cov = random_cov(rng, K=K, n_max=3, p_max=3)
        oracle_cost, _ = brute_force_covering(cov)
        result = solve(cov)
        assert result.cost == oracle_cost
        assert check_feasible(cov, result.selection).ok
        assert selection_cost(cov, result.selection) == result.cost


def test_solution_is_prefix_valid():
    rng = Random(88)
    for _ in range(10):
        cov = random_cov(rng, K=2)
        result = solve(cov)
        report = check_feasible(cov, result.selection)
        assert report.ok and not report.prefix_violations


def test_demand_telescoping_along_releases():
    rng = Random(99)
    for _ in range(15):
        cov = random_cov(rng, K=2)
        jobs = cov.instance.jobs
        for j, job in enumerate(jobs[:-1], start=1):
            nxt = jobs[j]
            for t in range(nxt.release, cov.horizon + 1):
                lhs = cov.demand(job.release, t)
                rhs = cov.demand(nxt.release, t) + job.processing - nxt.release + job.release
                assert lhs == rhs


def test_solve_deterministic():
    cov = cov_for([(0, 3, 2), (2, 2, 1), (4, 1, 3)])
    first = solve(cov)
    second = solve(cov)
    assert first.cost == second.cost
    assert first.selection == second.selection
    assert first.stats.states == second.stats.states


def test_stats_shape():
    rng = Random(321)
    cov = random_cov(rng, K=2)
    result = solve(cov)
    stats = result.stats
    assert stats.states <= stats.triples * stats.carry_vectors
    assert stats.max_carry <= sum(j.processing for j in cov.instance.jobs)
    assert stats.max_depth >= 1 and stats.wall_ms >= 0.0


def test_undefined_state_rejected():
    cov = cov_for([(0, 4, 1)])
    grid = cov.grid
    right = cell_at(grid, 1, 2)  # [2, 4): the root group straddles into it
    solver = DpSolver(cov)
    with pytest.raises(DpError, match="not under the state's cell"):
        solver.solve_cell(1, right, 1, {})


def test_carry_outside_subdivision_rejected():
    cov = cov_for([(0, 4, 1)])
    solver = DpSolver(cov)
    with pytest.raises(DpError, match="outside the subdivision"):
        solver.solve_cell(1, cov.grid.root, 1, {(17, 18): 1})
