"""Lower-bounded and upper-bounded subsolutions (AS_1 and AS_2).

The combine step only needs a :class:`SubSolution` and its certified
``declared_beta``.  Any object with a ``solve(instance, side)`` method can be
plugged in as a :class:`SubSolver`; two backends ship here:

* ``exact``  -- subset enumeration plus optimal bounded assignment.
* ``greedy`` -- farthest-first seeding (lower side) / capacity-aware greedy
  opening (upper side), each followed by an optimal assignment.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol

import numpy as np

from .errors import InfeasibleError, SizeCapError
from .flow import AssignmentProblem, optimal_assignment
from .model import Instance, Objective, ProblemKind, Solution, coarse_feasible

EXACT_MAX_FACILITIES = 20


class Side(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class SubSolution:
    solution: Solution
    declared_beta: Fraction
    side: Side
    solver: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "declared_beta", Fraction(self.declared_beta))
        object.__setattr__(self, "side", Side(self.side))
        if self.declared_beta < 1:
            raise ValueError("declared_beta must be >= 1")


class SubSolver(Protocol):
    name: str

    def solve(self, inst: Instance, side: Side) -> SubSolution: ...


def derive_sub_instance(inst: Instance, side: Side) -> Instance:
    """Drop one bound side from ``inst``.

    Lower side: upper bounds become the client count; sum objectives also drop
    the cardinality constraint (``k = m``), max objectives keep ``k``.
    Upper side: lower bounds become zero.
    """
    side = Side(side)
    if side is Side.UPPER:
        return inst.replace(lower=(0,) * inst.m)
    upper = tuple(max(inst.n, lo, 1) for lo in inst.lower)
    k = inst.m if inst.objective is Objective.SUM else inst.k
    f = (0,) * inst.m if inst.problem_kind is ProblemKind.LUkM else inst.opening_cost
    return inst.replace(upper=upper, k=k, opening_cost=f)


def _subset_cost(inst: Instance, S: tuple[int, ...], service: int) -> int:
    if inst.objective is Objective.MAX:
        return service
    return sum(inst.opening_cost[i] for i in S) + service


def _assign(inst: Instance, S: tuple[int, ...], lower: bool, upper: bool) -> tuple[int, Solution]:
    res = optimal_assignment(AssignmentProblem.from_instance(inst, S, lower=lower, upper=upper))
    return _subset_cost(inst, S, res.cost), Solution(open=S, assign=res.assign)


def enumerate_best(inst: Instance, *, lower: bool, upper: bool, max_facilities: int) -> Solution:
    """Minimum-cost solution over all open sets of size <= k.

    Ties go to the lexicographically smallest open set.  Subsets whose
    nearest-facility lower bound already exceeds the incumbent are skipped.
    """
    if inst.m > max_facilities:
        raise SizeCapError(f"exact enumeration capped at m <= {max_facilities}, got m = {inst.m}")
    n = inst.n
    if n == 0:
        return Solution(open=(), assign=())
    cf = inst.cf
    best: tuple[int, tuple[int, ...]] | None = None
    best_sol: Solution | None = None
    for size in range(1, min(inst.k, inst.m) + 1):
        for S in itertools.combinations(range(inst.m), size):
            if lower and sum(inst.lower[i] for i in S) > n:
                continue
            if upper and sum(inst.upper[i] for i in S) < n:
                continue
            nearest = cf[:, S].min(axis=1)
            bound = int(nearest.max()) if inst.objective is Objective.MAX else int(nearest.sum())
            bound = _subset_cost(inst, S, bound)
            if best is not None and bound > best[0]:
                continue
            try:
                cost, sol = _assign(inst, S, lower, upper)
            except InfeasibleError:
                continue
            if best is None or (cost, S) < best:
                best, best_sol = (cost, S), sol
    if best_sol is None:
        raise InfeasibleError("no open set admits a feasible assignment")
    return best_sol


def solve_exact(sub: Instance, side: Side) -> SubSolution:
    side = Side(side)
    sol = enumerate_best(
        sub,
        lower=side is Side.LOWER,
        upper=side is Side.UPPER,
        max_facilities=EXACT_MAX_FACILITIES,
    )
    return SubSolution(sol, Fraction(1), side, "exact")


def farthest_first_order(inst: Instance, candidates: list[int]) -> list[int]:
    """Gonzalez ordering of ``candidates``; seeded at the cheapest 1-median."""
    if not candidates:
        return []
    cf, ff = inst.cf, inst.ff
    seed_cost = [inst.opening_cost[i] + int(cf[:, i].sum()) for i in candidates]
    first = candidates[int(np.argmin(seed_cost))]
    order = [first]
    rest = [i for i in candidates if i != first]
    gap = {i: int(ff[first, i]) for i in rest}
    while rest:
        nxt = max(rest, key=lambda i: (gap[i], -i))
        order.append(nxt)
        rest.remove(nxt)
        for i in rest:
            gap[i] = min(gap[i], int(ff[nxt, i]))
    return order


def solve_greedy_lower(sub: Instance) -> SubSolution:
    """Farthest-first open sets, lower bounds only.

    Every prefix of the farthest-first order up to the largest admissible size
    is assigned optimally and the cheapest one is kept (ties: larger prefix).
    """
    n = sub.n
    if n == 0:
        return SubSolution(Solution((), ()), Fraction(1), Side.LOWER, "greedy")
    order = farthest_first_order(sub, [i for i in range(sub.m) if sub.lower[i] <= n])
    p = 0
    total = 0
    for i in order[: min(sub.k, len(order))]:
        if total + sub.lower[i] > n:
            break
        total += sub.lower[i]
        p += 1
    if p == 0:
        raise InfeasibleError(f"n = {n} is below every lower bound")
    best: tuple[int, Solution] | None = None
    for q in range(p, 0, -1):
        S = tuple(sorted(order[:q]))
        try:
            cost, sol = _assign(sub, S, lower=True, upper=False)
        except InfeasibleError:
            continue
        if best is None or cost < best[0]:
            best = (cost, sol)
    if best is None:
        raise InfeasibleError("no farthest-first prefix admits the lower bounds")
    return SubSolution(best[1], Fraction(1), Side.LOWER, "greedy")


def solve_greedy_upper(sub: Instance) -> SubSolution:
    """Open up to k facilities by cheapest per-client coverage, upper bounds only.

    Each round opens the facility minimising ``(f_i + sum of distances to its
    U_i nearest uncovered clients) / covered``, restricted to choices after
    which the remaining clients can still fit into the best remaining
    capacities.  Once every client is covered, further facilities (up to k)
    are opened while their nearest-distance saving exceeds their opening cost.
    """
    n, m, k = sub.n, sub.m, min(sub.k, sub.m)
    if n == 0:
        return SubSolution(Solution((), ()), Fraction(1), Side.UPPER, "greedy")
    if not coarse_feasible(n, [0] * m, sub.upper, k):
        raise InfeasibleError("the k largest capacities cannot hold every client")
    cf = sub.cf
    uncovered = np.ones(n, dtype=bool)
    chosen: list[int] = []
    while uncovered.any() and len(chosen) < k:
        left = int(uncovered.sum())
        slots = k - len(chosen) - 1
        best: tuple[Fraction, int, np.ndarray] | None = None
        for i in range(m):
            if i in chosen:
                continue
            take = min(sub.upper[i], left)
            others = sorted((sub.upper[r] for r in range(m) if r != i and r not in chosen), reverse=True)
            if left - take > sum(others[:slots]):
                continue
            idx = np.flatnonzero(uncovered)
            near = idx[np.argsort(cf[idx, i], kind="stable")[:take]]
            score = Fraction(sub.opening_cost[i] + int(cf[near, i].sum()), take)
            if best is None or score < best[0]:
                best = (score, i, near)
        if best is None:
            raise InfeasibleError("greedy opening ran out of admissible facilities")
        _, i, near = best
        chosen.append(i)
        uncovered[near] = False
    # improvement phase: keep opening while the nearest-distance saving beats f_i
    while len(chosen) < k:
        cur = cf[:, chosen].min(axis=1)
        gains = [
            (int(np.maximum(cur - cf[:, i], 0).sum()) - sub.opening_cost[i], -i)
            for i in range(m)
            if i not in chosen
        ]
        gain, neg_i = max(gains)
        if gain <= 0:
            break
        chosen.append(-neg_i)
    S = tuple(sorted(chosen))
    _, sol = _assign(sub, S, lower=False, upper=True)
    return SubSolution(sol, Fraction(1), Side.UPPER, "greedy")


class ExactSolver:
    name = "exact"

    def solve(self, inst: Instance, side: Side) -> SubSolution:
        return solve_exact(inst, side)


class GreedySolver:
    name = "greedy"

    def solve(self, inst: Instance, side: Side) -> SubSolution:
        if Side(side) is Side.LOWER:
            return solve_greedy_lower(inst)
        return solve_greedy_upper(inst)


SOLVERS: dict[str, type] = {"exact": ExactSolver, "greedy": GreedySolver}


def get_solver(name: str) -> SubSolver:
    try:
        return SOLVERS[name]()
    except KeyError:
        raise ValueError(f"unknown subsolver {name!r}; choose from {sorted(SOLVERS)}") from None
