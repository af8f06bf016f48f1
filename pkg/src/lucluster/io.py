"""JSON (format 1) readers and writers for instances, solutions and reports."""

from __future__ import annotations

import json
import math
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import StructuralError
from .generate import euclidean_distances
from .model import DEFAULT_SCALE, Instance, Solution, evaluate_cost
from .subsolvers import Side, SubSolution

FORMAT = 1


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _check_format(d: dict[str, Any], kind: str) -> None:
    if d.get("format") != FORMAT:
        raise StructuralError(f"unsupported format {d.get('format')!r}; expected {FORMAT}")
    if d.get("kind", kind) != kind:
        raise StructuralError(f"expected a {kind} document, got {d.get('kind')!r}")


def _scale_up(value: Any, scale: int) -> int:
    # Decimal keeps "0.1" exact so the ceiling is not pushed up by float error
    return math.ceil(Decimal(str(value)) * scale)


def instance_to_json(inst: Instance) -> dict[str, Any]:
    return {
        "format": FORMAT,
        "kind": "instance",
        "n": inst.n,
        "m": inst.m,
        "k": inst.k,
        "scale": inst.scale,
        "problem_kind": inst.problem_kind.value,
        "objective": inst.objective.value,
        "lower": list(inst.lower),
        "upper": list(inst.upper),
        "opening_cost": list(inst.opening_cost),
        "scaled": True,
        "distances": inst.dist.tolist(),
    }


def instance_from_json(d: dict[str, Any]) -> Instance:
    """Build an instance from either ``points`` or ``distances``.

    With ``"scaled": true`` distances and opening costs are fixed-point
    integers.  Otherwise they are real values, multiplied by ``scale`` and
    rounded up.  ``points`` lists clients first, then facilities.
    """
    _check_format(d, "instance")
    scale = int(d.get("scale", DEFAULT_SCALE))
    scaled = bool(d.get("scaled", False))
    n = int(d["n"])
    if ("points" in d) == ("distances" in d):
        raise StructuralError("give exactly one of 'points' or 'distances'")
    if "points" in d:
        coords = np.asarray(d["points"], dtype=np.float64)
        if scaled:
            coords = coords / scale
        dist = euclidean_distances(coords, scale)
    elif scaled:
        dist = np.asarray(d["distances"], dtype=np.int64)
    else:
        dist = np.asarray([[_scale_up(x, scale) for x in row] for row in d["distances"]], dtype=np.int64)
    f = d.get("opening_cost", [0] * len(d["lower"]))
    f = [int(x) for x in f] if scaled else [_scale_up(x, scale) for x in f]
    return Instance(
        dist,
        n,
        tuple(f),
        tuple(d["lower"]),
        tuple(d["upper"]),
        int(d["k"]),
        d.get("problem_kind", "LUkM"),
        d.get("objective"),
        scale,
    )


def load_instance(path: str | Path) -> Instance:
    return instance_from_json(read_json(path))


def solution_to_json(sol: Solution, inst: Instance | None = None) -> dict[str, Any]:
    d: dict[str, Any] = {"format": FORMAT, "kind": "solution", "open": list(sol.open), "assign": list(sol.assign)}
    if inst is not None:
        c = evaluate_cost(inst, sol)
        d["cost"] = {"facility": c.facility_cost, "service_sum": c.service_sum, "service_max": c.service_max, "total": c.total}
        d["loads"] = {str(i): v for i, v in sol.loads.items()}
    return d


def solution_from_json(d: dict[str, Any]) -> Solution:
    _check_format(d, "subsolution" if d.get("kind") == "subsolution" else "solution")
    return Solution(open=tuple(d["open"]), assign=tuple(d["assign"]))


def subsolution_to_json(sub: SubSolution, inst: Instance | None = None) -> dict[str, Any]:
    d = solution_to_json(sub.solution, inst)
    d.update(kind="subsolution", declared_beta=str(sub.declared_beta), side=sub.side.value, solver=sub.solver)
    return d


def subsolution_from_json(d: dict[str, Any]) -> SubSolution:
    _check_format(d, "subsolution")
    sol = Solution(open=tuple(d["open"]), assign=tuple(d["assign"]))
    return SubSolution(sol, Fraction(d["declared_beta"]), Side(d["side"]), d.get("solver", ""))
