import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lucluster.errors import InfeasibleError
from lucluster.flow import AssignmentProblem, feasible_at_threshold, optimal_assignment
from lucluster.model import Objective


def brute_force(d, lo, hi, objective):
    """Enumerate every client -> facility map; None when no map meets the bounds."""
    n, k = d.shape
    best = None
    for cols in itertools.product(range(k), repeat=n):
        loads = np.bincount(cols, minlength=k)
        if (loads < lo).any() or (loads > hi).any():
            continue
        ds = [int(d[j, c]) for j, c in enumerate(cols)]
        cost = max(ds, default=0) if objective is Objective.MAX else sum(ds)
        best = cost if best is None else min(best, cost)
    return best


def problem(d, lo, hi, objective=Objective.SUM):
    d = np.asarray(d, dtype=np.int64)
    return AssignmentProblem(tuple(range(d.shape[1])), tuple(lo), tuple(hi), d, objective)


@pytest.mark.parametrize("backend", ["scipy", "ssp"])
def test_forced_plan(backend):
    res = optimal_assignment(problem([[1], [3]], [2], [2]), backend)
    assert res.assign == (0, 0) and res.cost == 4


@pytest.mark.parametrize("backend", ["scipy", "ssp"])
def test_two_point_line(backend):
    d = [[1, 9], [9, 1]]
    assert optimal_assignment(problem(d, [1, 1], [1, 1]), backend).cost == 2
    res = optimal_assignment(problem(d, [1, 1], [1, 1], Objective.MAX), backend)
    assert res.cost == 1 and res.assign == (0, 1)


@pytest.mark.parametrize("backend", ["scipy", "ssp"])
def test_thresholds(backend):
    p = problem([[1, 9], [9, 1]], [1, 1], [1, 1])
    assert feasible_at_threshold(p, 1, backend)
    assert not feasible_at_threshold(p, 0, backend)
    assert feasible_at_threshold(p, 9, backend)


def test_threshold_below_every_distance():
    p = problem([[2, 3], [4, 5]], [1, 0], [2, 2])
    assert not feasible_at_threshold(p, 1)
    with pytest.raises(ValueError):
        feasible_at_threshold(p, -1)


@pytest.mark.parametrize("lo,hi", [([3], [3]), ([0, 0], [0, 1])])
def test_infeasible_bounds(lo, hi):
    d = np.zeros((2, len(lo)), dtype=np.int64)
    with pytest.raises(InfeasibleError):
        optimal_assignment(problem(d, lo, hi))


def test_lower_bound_forces_far_assignment():
    # both clients sit on facility 0, but facility 1 needs one of them
    res = optimal_assignment(problem([[0, 5], [0, 7]], [0, 1], [2, 2]))
    assert res.cost == 5 and res.assign == (1, 0)


def test_max_objective_breaks_bottleneck_ties_by_total():
    d = [[3, 3], [1, 3]]
    res = optimal_assignment(problem(d, [0, 0], [2, 2], Objective.MAX))
    assert res.cost == 3
    assert res.assign[1] == 0  # cheaper total among bottleneck-optimal plans


def test_empty_client_set():
    p = AssignmentProblem((0,), (0,), (1,), np.zeros((0, 1), dtype=np.int64))
    assert optimal_assignment(p).cost == 0


def random_problem(rng, objective):
    n = int(rng.integers(1, 7))
    k = int(rng.integers(1, 4))
    d = rng.integers(0, 20, size=(n, k))
    lo = rng.integers(0, 3, size=k)
    hi = lo + rng.integers(0, 4, size=k)
    hi = np.maximum(hi, 1)
    return problem(d, lo, hi, objective)


@pytest.mark.parametrize("objective", [Objective.SUM, Objective.MAX])
def test_backends_match_enumeration(objective):
    rng = np.random.default_rng(7)
    for _ in range(150):
        p = random_problem(rng, objective)
        expect = brute_force(p.dist_view, np.array(p.lower_eff), np.array(p.upper_eff), objective)
        for backend in ("scipy", "ssp"):
            if expect is None:
                with pytest.raises(InfeasibleError):
                    optimal_assignment(p, backend)
                continue
            res = optimal_assignment(p, backend)
            assert res.cost == expect
            loads = np.bincount(res.assign, minlength=len(p.open_set))
            assert (loads >= p.lower_eff).all() and (loads <= p.upper_eff).all()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_threshold_monotone(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, Objective.MAX)
    verdicts = [feasible_at_threshold(p, int(t)) for t in range(0, 21)]
    assert verdicts == sorted(verdicts)
    assert verdicts == [feasible_at_threshold(p, t, "ssp") for t in range(0, 21)]
