"""End-to-end solve: sub-instances, subsolutions, combine, verification."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .combine import CombineTrace, Variant, combine
from .errors import SizeCapError
from .model import Instance, Solution
from .subsolvers import Side, SubSolution, derive_sub_instance, get_solver
from .verify import GuaranteeReport, brute_force_opt, check_guarantees


@dataclass
class RunResult:
    as1: SubSolution
    as2: SubSolution
    solution: Solution
    trace: CombineTrace
    report: GuaranteeReport | None
    opt: Solution | None


def solve(
    inst: Instance,
    *,
    lower_solver: str = "greedy",
    upper_solver: str = "greedy",
    variant: Variant | str = Variant.BASIC,
    eps: Fraction | str | float | None = None,
    strict_beta: bool = False,
    oracle: bool = False,
    verify: bool = True,
) -> RunResult:
    """Run the framework once.

    ``oracle`` computes the brute-force optimum; beyond the oracle caps it is
    silently dropped (the report then skips the OPT comparisons).
    """
    as1 = get_solver(lower_solver).solve(derive_sub_instance(inst, Side.LOWER), Side.LOWER)
    as2 = get_solver(upper_solver).solve(derive_sub_instance(inst, Side.UPPER), Side.UPPER)
    sol, trace = combine(as1, as2, inst, variant, eps, strict_beta=strict_beta)
    opt = None
    if oracle:
        try:
            opt = brute_force_opt(inst)
        except SizeCapError:
            opt = None
    report = None
    if verify:
        exact = lower_solver == "exact" and upper_solver == "exact"
        report = check_guarantees(inst, as1, as2, sol, trace, opt=opt, exact=exact)
    return RunResult(as1, as2, sol, trace, report, opt)
