import numpy as np
import pytest

from lucluster.errors import InfeasibleError, SizeCapError
from lucluster.generate import GenSpec, generate
from lucluster.model import Instance, check_feasibility, evaluate_cost
from lucluster.subsolvers import (
    Side,
    derive_sub_instance,
    get_solver,
    solve_exact,
    solve_greedy_lower,
    solve_greedy_upper,
)

from conftest import line_instance


def test_lower_side_of_kmedian_drops_cardinality_and_costs():
    inst = line_instance([0, 1, 2], [0, 2], 1, 2, 1)
    sub = derive_sub_instance(inst, Side.LOWER)
    assert sub.k == sub.m == 2
    assert sub.upper == (3, 3) and sub.opening_cost == (0, 0)


def test_lower_side_of_kcenter_keeps_k():
    inst = line_instance([0, 1, 2], [0, 1, 2], 1, 2, 2, kind="LUkC")
    assert derive_sub_instance(inst, Side.LOWER).k == 2


def test_upper_side_only_drops_lower_bounds():
    inst = line_instance([0, 1, 2], [0, 2], 1, 2, 1, f=[4, 5], kind="LUkFL")
    sub = derive_sub_instance(inst, Side.UPPER)
    assert sub.lower == (0, 0)
    assert (sub.upper, sub.k, sub.opening_cost) == (inst.upper, inst.k, inst.opening_cost)
    assert np.array_equal(sub.dist, inst.dist)


def test_exact_colocated_pairs():
    inst = line_instance([0, 5], [0, 5], 1, 2, 2)
    res = solve_exact(derive_sub_instance(inst, Side.LOWER), Side.LOWER)
    assert res.solution.open == (0, 1) and evaluate_cost(inst, res.solution).total == 0


def test_exact_line_lower_side(four_line):
    res = solve_exact(derive_sub_instance(four_line, Side.LOWER), Side.LOWER)
    assert res.solution.open == (0, 1)
    assert evaluate_cost(four_line, res.solution).total == 2


def test_exact_upper_side_capacity_deficit(four_line):
    inst = four_line.replace(k=1)
    with pytest.raises(InfeasibleError):
        solve_exact(derive_sub_instance(inst, Side.UPPER), Side.UPPER)


def test_exact_size_cap():
    m = 21
    inst = Instance(np.zeros((m + 1, m + 1)), 1, (0,) * m, (0,) * m, (1,) * m, 1)
    with pytest.raises(SizeCapError):
        solve_exact(inst, Side.UPPER)


def test_greedy_lower_forced_and_infeasible():
    inst = line_instance([0, 1, 2], [1], 3, 3, 1)
    res = solve_greedy_lower(derive_sub_instance(inst, Side.LOWER))
    assert res.solution.assign == (0, 0, 0)
    inst = line_instance([0, 1], [0, 1], 3, 3, 2)
    with pytest.raises(InfeasibleError):
        solve_greedy_lower(derive_sub_instance(inst, Side.LOWER))


def test_greedy_lower_opens_one_facility_per_site():
    inst = line_instance([0, 1, 2, 100, 101, 102], [1, 2, 101, 99], 3, 6, 2)
    sub = derive_sub_instance(inst, Side.LOWER)
    greedy = solve_greedy_lower(sub).solution
    exact = solve_exact(sub, Side.LOWER).solution
    assert len(greedy.open) == 2
    sites = lambda sol: sorted(inst.cf[0, i] < 50 for i in sol.open)  # noqa: E731
    assert sites(greedy) == sites(exact) == [False, True]


def test_greedy_upper_unconstrained_is_nearest():
    inst = line_instance([0, 3, 7, 10], [1, 8], 0, 4, 2)
    res = solve_greedy_upper(derive_sub_instance(inst, Side.UPPER))
    assert res.solution.assign == (0, 0, 1, 1)
    inst = line_instance([0, 3, 7], [5], 0, 3, 1)
    assert solve_greedy_upper(derive_sub_instance(inst, Side.UPPER)).solution.assign == (0, 0, 0)


def test_greedy_upper_matches_exact_on_line():
    inst = line_instance([0, 1, 8, 9], [1, 9], 0, 2, 2)
    sub = derive_sub_instance(inst, Side.UPPER)
    g = evaluate_cost(sub, solve_greedy_upper(sub).solution).total
    e = evaluate_cost(sub, solve_exact(sub, Side.UPPER).solution).total
    assert g == e == 2


def test_greedy_upper_rejects_capacity_deficit(four_line):
    with pytest.raises(InfeasibleError):
        solve_greedy_upper(derive_sub_instance(four_line.replace(k=1, lower=(0, 0)), Side.UPPER))


def test_unknown_solver():
    with pytest.raises(ValueError):
        get_solver("lp")


@pytest.mark.parametrize("mode", ["uniform_l", "uniform_u", "both_uniform", "two_l_le_u"])
def test_sides_feasible_and_exact_not_worse(mode):
    for seed in range(12):
        kind = ["LUkM", "LUkFL", "LUFL", "LUkS"][seed % 4]
        inst = generate(GenSpec(seed=seed, n=12, m=6, bound_mode=mode, problem_kind=kind))
        for side in Side:
            sub = derive_sub_instance(inst, side)
            costs = []
            for name in ("exact", "greedy"):
                res = get_solver(name).solve(sub, side)
                assert res.side is side and res.declared_beta == 1
                rep = check_feasibility(sub, res.solution, res.declared_beta)
                assert rep.ok, (name, side, rep)
                if side is Side.UPPER:
                    assert len(res.solution.open) <= inst.k
                costs.append(evaluate_cost(sub, res.solution).total)
            assert costs[0] <= costs[1]
