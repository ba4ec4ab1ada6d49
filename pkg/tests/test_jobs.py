import json
from fractions import Fraction
from random import Random

import pytest

from flowcover.jobs import (
    Job,
    JobInstance,
    Schedule,
    ScheduleViolation,
    SizeGuardExceeded,
    evaluate_schedule,
    exact_opt_tiny,
    instance_from_json,
    instance_to_json,
    make_instance,
    perturb_release_times,
    total_horizon,
)


def sched(mapping):
    return Schedule.from_mapping(mapping)


# -- evaluate_schedule -------------------------------------------------------


def test_evaluate_single_job_flow_equals_processing():
    inst = make_instance([(0, 2, 1)])
    assert evaluate_schedule(inst, sched({0: 1, 1: 1})) == 2


def test_evaluate_late_release_unit_job():
    inst = make_instance([(3, 1, 5)])
    assert evaluate_schedule(inst, sched({3: 1})) == 5


def test_evaluate_preemption_example_and_optimality():
    inst = make_instance([(0, 3, 1), (1, 1, 10)])
    schedule = sched({0: 1, 1: 2, 2: 1, 3: 1})
    assert evaluate_schedule(inst, schedule) == 14
    cost, best = exact_opt_tiny(inst)
    assert cost == 14
    assert evaluate_schedule(inst, best) == 14


def test_evaluate_rejects_early_start():
    inst = make_instance([(2, 1, 1)])
    with pytest.raises(ScheduleViolation) as err:
        evaluate_schedule(inst, sched({0: 1}))
    assert err.value.kind == "release"


def test_evaluate_rejects_wrong_processing_total():
    inst = make_instance([(0, 2, 1)])
    with pytest.raises(ScheduleViolation) as err:
        evaluate_schedule(inst, sched({0: 1}))
    assert err.value.kind == "processing_total"


def test_evaluate_rejects_unknown_job():
    inst = make_instance([(0, 1, 1)])
    with pytest.raises(ScheduleViolation) as err:
        evaluate_schedule(inst, sched({0: 1, 1: 7}))
    assert err.value.kind == "unknown_job"


# -- exact_opt_tiny ----------------------------------------------------------


def test_tiny_single_job():
    cost, schedule = exact_opt_tiny(make_instance([(0, 2, 1)]))
    assert cost == 2
    assert schedule.as_dict() == {0: 1, 1: 1}


def test_tiny_no_contention():
    cost, _ = exact_opt_tiny(make_instance([(0, 1, 1), (2, 1, 1)]))
    assert cost == 2


def test_tiny_guard():
    with pytest.raises(SizeGuardExceeded):
        exact_opt_tiny(make_instance([(0, 33, 1)]))
    with pytest.raises(SizeGuardExceeded):
        exact_opt_tiny(make_instance([(0, 1, 1)] * 6))


def test_tiny_cost_invariant_under_input_permutation():
    jobs = [(0, 2, 3), (0, 2, 3), (1, 1, 2)]
    a, _ = exact_opt_tiny(make_instance(jobs))
    b, _ = exact_opt_tiny(make_instance(list(reversed(jobs))))
    assert a == b


def test_tiny_schedules_validate_and_bound_below():
    # weighted flow is at least the weighted processing total
    rng = Random(7)
    for _ in range(30):
        n = rng.randint(1, 3)
        inst = make_instance(
            [(rng.randint(0, 3), rng.randint(1, 3), rng.randint(1, 3)) for _ in range(n)]
        )
        cost, schedule = exact_opt_tiny(inst)
        assert evaluate_schedule(inst, schedule) == cost
        assert cost >= sum(j.weight * j.processing for j in inst.jobs)


# -- perturb_release_times ---------------------------------------------------


def test_perturb_equal_releases():
    inst = make_instance([(3, 1, 1), (3, 2, 1)], epsilon=1)
    out = perturb_release_times(inst)
    assert [j.release for j in out.jobs] == [7, 8]
    assert [j.processing for j in out.jobs] == [2, 4]


def test_perturb_single_job():
    out = perturb_release_times(make_instance([(0, 1, 1)], epsilon=1))
    assert [(j.release, j.processing) for j in out.jobs] == [(1, 1)]


def test_perturb_half_epsilon():
    out = perturb_release_times(make_instance([(0, 1, 1), (0, 1, 1)]), epsilon=Fraction(1, 2))
    assert [j.release for j in out.jobs] == [1, 2]
    assert [j.processing for j in out.jobs] == [4, 4]


def test_perturb_rejects_fractional_scale():
    inst = make_instance([(0, 1, 1), (0, 1, 1)])
    with pytest.raises(ValueError, match="not an integer"):
        perturb_release_times(inst, Fraction(3, 2))


def test_perturb_releases_strictly_increase():
    rng = Random(11)
    for _ in range(50):
        n = rng.randint(1, 5)
        inst = make_instance(
            [(rng.randint(0, 4), rng.randint(1, 4), rng.randint(1, 4)) for _ in range(n)]
        )
        out = perturb_release_times(inst, 1)
        releases = [j.release for j in out.jobs]
        assert all(a < b for a, b in zip(releases, releases[1:]))
        assert out.has_distinct_releases()


def test_perturb_cost_bound_scaled_exactly():
    # optimum of the rescaled instance is at most (n/eps + n) times the original
    cases = [
        ([(0, 2, 1), (0, 2, 3)], 1),
        ([(0, 2, 1), (0, 2, 3)], Fraction(1, 2)),
        ([(1, 1, 2), (1, 2, 1), (2, 1, 3)], 1),
        ([(0, 1, 1), (0, 1, 1), (0, 1, 1)], Fraction(1, 2)),
    ]
    for triples, eps in cases:
        inst = make_instance(triples, epsilon=eps)
        base, _ = exact_opt_tiny(inst)
        scaled, _ = exact_opt_tiny(perturb_release_times(inst))
        scale = inst.n * Fraction(eps) ** -1
        bound = (scale + inst.n) * base
        assert scaled <= bound, (triples, eps, scaled, bound)


# -- total_horizon -----------------------------------------------------------


def test_horizon_examples():
    assert total_horizon(make_instance([(0, 3, 1), (1, 2, 1)])) == 6
    assert total_horizon(make_instance([(5, 1, 1)])) == 6
    assert total_horizon(make_instance([(0, 1, 1), (0, 1, 1)])) == 2


def test_horizon_empty_rejected():
    with pytest.raises(ValueError):
        total_horizon(JobInstance(jobs=()))


# -- model validation and serialization ---------------------------------------


def test_job_field_validation():
    with pytest.raises(ValueError):
        Job(id=1, release=-1, processing=1, weight=1)
    with pytest.raises(ValueError):
        Job(id=1, release=0, processing=0, weight=1)
    with pytest.raises(ValueError):
        Job(id=1, release=0, processing=1, weight=0)


def test_instance_requires_sorted_ids():
    with pytest.raises(ValueError):
        JobInstance(jobs=(Job(2, 0, 1, 1),))
    with pytest.raises(ValueError):
        JobInstance(jobs=(Job(1, 5, 1, 1), Job(2, 0, 1, 1)))


def test_json_round_trip_is_stable():
    inst = make_instance([(0, 3, 1), (2, 1, 4)], epsilon=Fraction(1, 2))
    text = instance_to_json(inst)
    again = instance_from_json(text)
    assert again == inst
    assert instance_to_json(again) == text
    assert json.loads(text)["epsilon"] == "1/2"
