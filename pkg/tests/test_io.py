import numpy as np
import pytest

from lucluster import io
from lucluster.errors import StructuralError
from lucluster.generate import GenSpec, generate
from lucluster.pipeline import solve


def test_instance_roundtrip():
    inst = generate(GenSpec(seed=3, n=12, m=4, problem_kind="LUkFL"))
    back = io.instance_from_json(io.instance_to_json(inst))
    assert np.array_equal(back.dist, inst.dist)
    assert (back.lower, back.upper, back.opening_cost, back.k, back.problem_kind) == (
        inst.lower, inst.upper, inst.opening_cost, inst.k, inst.problem_kind)


def test_points_and_real_distances():
    d = {"format": 1, "n": 2, "k": 1, "lower": [0], "upper": [2], "scale": 10,
         "points": [[0, 0], [3, 4], [0, 0]]}
    inst = io.instance_from_json(d)
    assert inst.cf[1, 0] == 50
    d = {"format": 1, "n": 1, "k": 1, "lower": [0], "upper": [1], "scale": 10,
         "distances": [[0, 0.1], [0.1, 0]], "opening_cost": [0.25], "problem_kind": "LUkFL"}
    inst = io.instance_from_json(d)
    assert inst.cf[0, 0] == 1 and inst.opening_cost == (3,)


def test_bad_documents():
    with pytest.raises(StructuralError):
        io.instance_from_json({"format": 2, "n": 0, "k": 1, "lower": [], "upper": [], "distances": []})
    with pytest.raises(StructuralError):
        io.instance_from_json({"format": 1, "n": 1, "k": 1, "lower": [0], "upper": [1]})
    with pytest.raises(StructuralError):
        io.solution_from_json({"format": 1, "kind": "trace", "open": [], "assign": []})


def test_solution_roundtrips():
    inst = generate(GenSpec(seed=3, n=12, m=4))
    res = solve(inst)
    d = io.subsolution_to_json(res.as1, inst)
    back = io.subsolution_from_json(d)
    assert back.solution == res.as1.solution and back.side is res.as1.side
    assert io.solution_from_json(io.solution_to_json(res.solution, inst)) == res.solution
    assert io.dumps(d).endswith("\n")
