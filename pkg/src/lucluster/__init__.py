"""Clustering with lower and upper bounds on cluster sizes.

Combines a lower-bound-respecting subsolution and an upper-bound-respecting
subsolution into one solution that meets every lower bound, opens at most k
facilities and exceeds upper bounds by a bounded factor.
"""

from .combine import CombineTrace, Variant, combine
from .errors import (
    CombineInvariantError,
    ConfigError,
    GenerationError,
    InfeasibleError,
    LUClusterError,
    SizeCapError,
    StructuralError,
)
from .flow import AssignmentProblem, feasible_at_threshold, optimal_assignment
from .generate import GenSpec, adversarial_overflow, generate
from .model import (
    CostBreakdown,
    Instance,
    Objective,
    ProblemKind,
    Solution,
    check_feasibility,
    evaluate_cost,
    validate_instance,
)
from .pipeline import RunResult, solve
from .subsolvers import Side, SubSolution, derive_sub_instance, get_solver
from .verify import GuaranteeReport, brute_force_opt, check_guarantees

__version__ = "0.1.0"
