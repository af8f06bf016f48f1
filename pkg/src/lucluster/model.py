"""Instance and solution data model, validation and cost evaluation.

Distances and opening costs are stored as integers in fixed-point units
(``scale`` units per unit length, default 10**6).  Every comparison made by the
solvers and the verifier is therefore exact.

Point layout of ``Instance.dist``: rows/columns ``0..n-1`` are clients, rows
``n..n+m-1`` are facilities.  Client ``j`` and facility ``i`` are addressed by
their dense indices; ``inst.cf[j, i]`` is the client-facility distance and
``inst.ff[a, b]`` the facility-facility distance.
"""

from __future__ import annotations

import dataclasses
import enum
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import StructuralError

DEFAULT_SCALE = 10**6


class Objective(str, enum.Enum):
    SUM = "sum"
    MAX = "max"


class ProblemKind(str, enum.Enum):
    LUkM = "LUkM"
    LUFL = "LUFL"
    LUkFL = "LUkFL"
    LUkC = "LUkC"
    LUkS = "LUkS"

    @property
    def objective(self) -> Objective:
        if self in (ProblemKind.LUkC, ProblemKind.LUkS):
            return Objective.MAX
        return Objective.SUM

    @property
    def zero_opening_cost(self) -> bool:
        return self in (ProblemKind.LUkM, ProblemKind.LUkC, ProblemKind.LUkS)


@dataclass(frozen=True, eq=False)
class Instance:
    """A lower- and upper-bounded clustering instance.

    ``dist`` is the full ``(n+m) x (n+m)`` point metric.  The constructor only
    checks shapes; semantic invariants (metric axioms, ``L <= U``, problem-kind
    rules) are reported by :func:`validate_instance`.
    """

    dist: np.ndarray
    n: int
    opening_cost: tuple[int, ...]
    lower: tuple[int, ...]
    upper: tuple[int, ...]
    k: int
    problem_kind: ProblemKind = ProblemKind.LUkM
    objective: Objective | None = None
    scale: int = DEFAULT_SCALE

    def __post_init__(self) -> None:
        kind = ProblemKind(self.problem_kind)
        object.__setattr__(self, "problem_kind", kind)
        if self.objective is None:
            object.__setattr__(self, "objective", kind.objective)
        else:
            object.__setattr__(self, "objective", Objective(self.objective))
        for name in ("opening_cost", "lower", "upper"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        m = len(self.lower)
        if len(self.upper) != m or len(self.opening_cost) != m:
            raise StructuralError("lower, upper and opening_cost must have one entry per facility")
        n = int(self.n)
        if n < 0:
            raise StructuralError("negative client count")
        object.__setattr__(self, "n", n)
        dist = np.array(self.dist, dtype=np.int64, copy=True)
        if dist.shape != (n + m, n + m):
            raise StructuralError(
                f"dist must be {(n + m, n + m)} for n={n}, m={m}; got {dist.shape}"
            )
        dist.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "scale", int(self.scale))

    @property
    def m(self) -> int:
        return len(self.lower)

    @cached_property
    def cf(self) -> np.ndarray:
        """Client x facility distances."""
        return self.dist[: self.n, self.n :]

    @cached_property
    def ff(self) -> np.ndarray:
        """Facility x facility distances."""
        return self.dist[self.n :, self.n :]

    def replace(self, **changes) -> "Instance":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Solution:
    """Open facilities plus a total client -> facility map."""

    open: tuple[int, ...]
    assign: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "open", tuple(sorted({int(i) for i in self.open})))
        object.__setattr__(self, "assign", tuple(int(i) for i in self.assign))

    @classmethod
    def from_assignment(cls, assign: Sequence[int], extra_open: Iterable[int] = ()) -> "Solution":
        return cls(open=tuple(set(assign) | set(extra_open)), assign=tuple(assign))

    @cached_property
    def loads(self) -> dict[int, int]:
        counts = Counter(self.assign)
        return {i: counts.get(i, 0) for i in self.open}

    def load(self, facility: int) -> int:
        return self.loads.get(facility, 0)

    def clients_of(self, facility: int) -> list[int]:
        return [j for j, i in enumerate(self.assign) if i == facility]


@dataclass(frozen=True)
class CostBreakdown:
    facility_cost: int
    service_sum: int
    service_max: int
    objective: Objective

    @property
    def total(self) -> int:
        if self.objective is Objective.MAX:
            return self.service_max
        return self.facility_cost + self.service_sum


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    uniform_lower: bool = False
    uniform_upper: bool = False
    max_lower_le_min_upper: bool = False
    two_lower_le_upper: bool = False
    feasible: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def basic_guarantees(self) -> bool:
        """Preconditions under which the (beta+1) guarantees hold."""
        return self.ok and (self.uniform_lower or self.uniform_upper) and self.max_lower_le_min_upper

    @property
    def relaxed_guarantees(self) -> bool:
        """Preconditions of the (beta+eps) variant."""
        return self.basic_guarantees and self.two_lower_le_upper


@dataclass
class FeasibilityReport:
    lower_violations: list[tuple[int, int, int]] = field(default_factory=list)
    upper_violations: list[tuple[int, int, Fraction]] = field(default_factory=list)
    open_count: int = 0
    k: int = 0

    @property
    def cardinality_ok(self) -> bool:
        return self.open_count <= self.k

    @property
    def ok(self) -> bool:
        return not self.lower_violations and not self.upper_violations and self.cardinality_ok


def coarse_feasible(n: int, lower: Sequence[int], upper: Sequence[int], k: int) -> bool:
    """Some p <= k facilities could jointly meet the bounds.

    Pairs the p smallest lower bounds with the p largest upper bounds, so the
    test is exact whenever one bound side is uniform.
    """
    if n == 0:
        return True
    lo = sorted(lower)
    hi = sorted(upper, reverse=True)
    for p in range(1, min(k, len(lo)) + 1):
        if sum(lo[:p]) <= n <= sum(hi[:p]):
            return True
    return False


def validate_instance(
    inst: Instance, *, check_triangle: bool = False, tolerance: int = 0
) -> ValidationReport:
    """List every violated instance invariant; never raises.

    The cubic triangle-inequality scan only runs when ``check_triangle`` is set.
    """
    rep = ValidationReport()
    v = rep.violations
    n, m = inst.n, inst.m
    d = inst.dist

    if m == 0:
        v.append("no facilities")
    if inst.k < 1:
        v.append(f"k must be positive, got {inst.k}")
    if (d < 0).any():
        a, b = map(int, np.argwhere(d < 0)[0])
        v.append(f"negative distance at ({a}, {b})")
    diag = np.diagonal(d)
    if (diag != 0).any():
        a = int(np.flatnonzero(diag)[0])
        v.append(f"nonzero self-distance at point {a}")
    asym = d != d.T
    if asym.any():
        a, b = map(int, np.argwhere(asym)[0])
        v.append(f"asymmetric distance: d({a},{b})={int(d[a, b])} != d({b},{a})={int(d[b, a])}")
    if check_triangle and not asym.any():
        bad = triangle_violation(d, tolerance)
        if bad is not None:
            a, b, c = bad
            v.append(f"triangle inequality violated: d({a},{c}) > d({a},{b}) + d({b},{c})")

    for i, (lo, hi) in enumerate(zip(inst.lower, inst.upper)):
        if lo < 0:
            v.append(f"facility {i}: negative lower bound {lo}")
        if hi < 1:
            v.append(f"facility {i}: upper bound must be positive, got {hi}")
        if lo > hi:
            v.append(f"facility {i}: lower bound {lo} exceeds upper bound {hi}")
    if any(f < 0 for f in inst.opening_cost):
        v.append("negative opening cost")

    kind = inst.problem_kind
    if kind.objective is not inst.objective:
        v.append(f"{kind.value} requires objective {kind.objective.value}")
    if kind.zero_opening_cost and any(inst.opening_cost):
        v.append(f"{kind.value} requires all opening costs to be zero")
    if kind is ProblemKind.LUFL and inst.k != m:
        v.append(f"LUFL requires k = m = {m}, got {inst.k}")
    if kind is ProblemKind.LUkC:
        if n != m:
            v.append(f"LUkC requires clients and facilities on the same points (n={n}, m={m})")
        elif n and (np.diagonal(inst.cf) != 0).any():
            j = int(np.flatnonzero(np.diagonal(inst.cf))[0])
            v.append(f"LUkC: facility {j} is not co-located with client {j}")

    if m:
        rep.uniform_lower = len(set(inst.lower)) == 1
        rep.uniform_upper = len(set(inst.upper)) == 1
        rep.max_lower_le_min_upper = max(inst.lower) <= min(inst.upper)
        rep.two_lower_le_upper = all(2 * lo <= hi for lo, hi in zip(inst.lower, inst.upper))
        rep.feasible = coarse_feasible(n, inst.lower, inst.upper, inst.k)
    return rep


def triangle_violation(d: np.ndarray, tolerance: int = 0) -> tuple[int, int, int] | None:
    """Return a witness ``(a, b, c)`` with ``d[a,c] > d[a,b] + d[b,c] + tolerance``."""
    for b in range(d.shape[0]):
        through = d[:, b][:, None] + d[b, :][None, :]
        bad = d > through + tolerance
        if bad.any():
            a, c = map(int, np.argwhere(bad)[0])
            return a, b, c
    return None


def _check_solution_shape(inst: Instance, sol: Solution) -> None:
    if len(sol.assign) != inst.n:
        raise StructuralError(f"assignment covers {len(sol.assign)} clients, instance has {inst.n}")
    for i in sol.open:
        if not 0 <= i < inst.m:
            raise StructuralError(f"unknown facility {i}")
    opened = set(sol.open)
    for j, i in enumerate(sol.assign):
        if i not in opened:
            raise StructuralError(f"client {j} assigned to facility {i}, which is not open")


def evaluate_cost(inst: Instance, sol: Solution) -> CostBreakdown:
    _check_solution_shape(inst, sol)
    fac = sum(inst.opening_cost[i] for i in sol.open)
    if inst.n:
        dists = inst.cf[np.arange(inst.n), np.asarray(sol.assign, dtype=np.int64)]
        s_sum, s_max = int(dists.sum()), int(dists.max())
    else:
        s_sum = s_max = 0
    return CostBreakdown(int(fac), s_sum, s_max, inst.objective)


def check_feasibility(inst: Instance, sol: Solution, ub_factor: Fraction | int = 1) -> FeasibilityReport:
    ub_factor = Fraction(ub_factor)
    if ub_factor < 1:
        raise ValueError("ub_factor must be >= 1")
    _check_solution_shape(inst, sol)
    rep = FeasibilityReport(open_count=len(sol.open), k=inst.k)
    for i in sol.open:
        load = sol.load(i)
        if load < inst.lower[i]:
            rep.lower_violations.append((i, load, inst.lower[i]))
        cap = ub_factor * inst.upper[i]
        if load > cap:
            rep.upper_violations.append((i, load, cap))
    return rep
