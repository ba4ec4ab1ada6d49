from fractions import Fraction
from random import Random

import pytest

import flowcover.oracle as oracle_mod
from flowcover.covering import Selection, build_covering, check_feasible, selection_cost
from flowcover.grid import build_grid, root_length
from flowcover.jobs import make_instance, perturb_release_times, total_horizon
from flowcover.oracle import (
    OracleBudget,
    OracleBudgetExceeded,
    brute_force_covering,
    derive_shift,
    verify_pair,
)


def cov_for(triples, K=2, shift=0, leaf_len=1):
    inst = make_instance(triples)
    grid = build_grid(total_horizon(inst), K, shift=shift, leaf_len=leaf_len)
    return build_covering(inst, grid)


def random_cov(rng, K=2):
    inst = make_instance(
        [
            (rng.randint(0, 3), rng.randint(1, 3), rng.randint(1, 3))
            for _ in range(rng.randint(1, 3))
        ]
    )
    work = perturb_release_times(inst, 1)
    T = total_horizon(work)
    grid = build_grid(T + 1, K, shift=rng.randrange(root_length(T + 1, K)))
    return build_covering(work, grid)


def test_empty_instance_yields_empty_minimum():
    cov = build_covering(make_instance([]), build_grid(T=0, K=2))
    cost, sel = brute_force_covering(cov)
    assert cost == 0 and sel.chosen == frozenset()


def test_single_group_prefix_enumeration():
    # one job whose segments all land in the root leaf: one group of three
    # rectangles, four prefixes; the cheapest feasible one keeps two
    cov = cov_for([(0, 2, 1)], K=3, leaf_len=3)
    assert len(cov.groups) == 1 and len(cov.groups[0].rectangles) == 3
    cost, sel = brute_force_covering(cov)
    assert sel.sorted_ids() == (0, 1)
    assert cost == 2
    assert check_feasible(cov, sel).ok


def test_oracle_matches_feasibility_and_is_minimal():
    rng = Random(55)
    for _ in range(25):
        cov = random_cov(rng)
        cost, sel = brute_force_covering(cov)
        assert check_feasible(cov, sel).ok
        assert selection_cost(cov, sel) == cost
        # dropping the last element of any selected prefix must break
        # feasibility: all costs are positive, so a cheaper subset cannot
        # stay feasible below the reported optimum
        for group in cov.groups:
            chosen = [r.rid for r in group.rectangles if r.rid in sel.chosen]
            if not chosen:
                continue
            reduced = Selection.of(sel.chosen - {chosen[-1]})
            assert not check_feasible(cov, reduced).ok


def test_oracle_deterministic():
    cov = cov_for([(0, 3, 2), (2, 1, 1)])
    first = brute_force_covering(cov)
    second = brute_force_covering(cov)
    assert first[0] == second[0]
    assert first[1].sorted_ids() == second[1].sorted_ids()


def test_budget_node_cap():
    cov = cov_for([(0, 3, 1), (1, 2, 1)])
    with pytest.raises(OracleBudgetExceeded, match="nodes"):
        brute_force_covering(cov, OracleBudget(max_combinations=1))


def test_budget_time_cap_zero_trips_immediately():
    cov = cov_for([(0, 3, 1), (1, 2, 1)])
    with pytest.raises(OracleBudgetExceeded, match="time limit"):
        brute_force_covering(cov, OracleBudget(time_limit_ms=0))


def test_budget_group_cap():
    cov = cov_for([(0, 3, 1), (1, 2, 1)])
    with pytest.raises(OracleBudgetExceeded, match="groups"):
        brute_force_covering(cov, OracleBudget(max_groups=1))


def test_budget_env_default(monkeypatch):
    monkeypatch.setenv("FLOWCOVER_BUDGET_MS", "1234")
    assert OracleBudget().time_limit_ms == 1234
    monkeypatch.delenv("FLOWCOVER_BUDGET_MS")
    assert OracleBudget().time_limit_ms == 600_000


def test_derive_shift_seeded_and_in_range():
    assert derive_shift(10, 2, 1, seed=3) == derive_shift(10, 2, 1, seed=3)
    for seed in range(40):
        assert 0 <= derive_shift(10, 2, 1, seed) < root_length(10, 2)


# -- verify_pair -----------------------------------------------------------------


def test_verify_pair_single_unit_job():
    report = verify_pair(make_instance([(0, 1, 1)]), K=2, seed=1)
    assert report.ok
    assert report.dp_cost == report.oracle_cost


def test_verify_pair_small_instances_agree():
    rng = Random(2024)
    for seed in range(15):
        inst = make_instance(
            [
                (rng.randint(0, 3), rng.randint(1, 3), rng.randint(1, 3))
                for _ in range(3)
            ]
        )
        report = verify_pair(inst, K=2, seed=seed)
        assert report.ok, report
        assert report.dp_cost == report.oracle_cost
        assert report.n == 3 and report.T > 0


def test_verify_pair_accepts_duplicate_releases():
    report = verify_pair(make_instance([(2, 1, 1), (2, 2, 1)]), K=2, seed=5)
    assert report.ok


def test_verify_pair_epsilon_override():
    inst = make_instance([(0, 1, 1), (1, 1, 1)])
    report = verify_pair(inst, K=2, seed=0, epsilon=Fraction(1, 2))
    assert report.ok and report.epsilon == "1/2"
    assert report.P == 4  # processing scaled by n/eps = 4


def test_verify_pair_budget_skip():
    inst = make_instance([(0, 2, 1), (1, 1, 1)])
    report = verify_pair(inst, K=2, seed=0, budget=OracleBudget(max_combinations=1))
    assert report.skipped and report.status == "skipped_budget"
    assert report.oracle_cost is None
    assert report.dp_cost is not None  # the DP side still ran


def test_verify_pair_mismatch_report(monkeypatch):
    inst = make_instance([(0, 2, 1), (1, 1, 1)])

    def wrong_oracle(cov, budget=None):
        return 0, Selection.of([])

    monkeypatch.setattr(oracle_mod, "brute_force_covering", wrong_oracle)
    report = verify_pair(inst, K=2, seed=0)
    assert report.status in ("mismatch", "oracle_infeasible")
    assert report.instance_json is not None and '"jobs"' in report.instance_json
    assert report.dp_selection is not None and report.oracle_selection is not None
    assert not report.ok
