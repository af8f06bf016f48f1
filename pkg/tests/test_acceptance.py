"""Acceptance suite: seven criteria, one summary line each.

Tolerances are pinned here: every guarantee is checked with zero tolerance on
integer fixed-point values; the Type-IV rate must reach 90%; runtimes are
capped at 300 s (criteria 1 and 2) and 600 s (criterion 3).
"""

import itertools
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from lucluster import io
from lucluster.cli import main
from lucluster.combine import break_cycles, build_dependency_graph, build_star_forest
from lucluster.flow import AssignmentProblem, optimal_assignment
from lucluster.generate import GenSpec, adversarial_overflow, generate
from lucluster.model import Objective
from lucluster.pipeline import solve
from lucluster.verify import Status

from conftest import line_instance

BASIC_PER_MODE = 1000
RELAXED_SEEDS = 500
RELAXED_EPS = ("1/4", "1/2", "1")
ADVERSARIAL_COUNT = 50
ADVERSARIAL_EPS = "1/4"
TYPE_IV_RATE = 0.90
ORACLE_COUNT = 200
FLOW_SEEDS = 100
BASIC_TIME_LIMIT = 300.0
RELAXED_TIME_LIMIT = 300.0
ORACLE_TIME_LIMIT = 600.0

BASIC_PROPS = ("p1_lower_bounds", "p2_upper_bounds", "p3_cardinality", "p4_cardinality_preserved",
               "p5_reroute_cost", "p6_client_cost", "p7_aggregate_cost", "p9_almost_dag",
               "p10_settlement", "p11_max_cost")
RELAXED_PROPS = ("p1_lower_bounds", "p2_upper_bounds", "p3_cardinality", "p8_relaxed_cost",
                 "p9_almost_dag", "p10_settlement")
KINDS = ("LUkM", "LUkFL", "LUFL", "LUkC", "LUkS")
GEOMETRIES = ("euclidean", "line", "graph")

RESULTS: dict[int, str] = {}


def record(num, name, ok, detail):
    line = f"criterion {num} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS[num] = line
    print(line)
    return ok


def suite_spec(seed, mode, *, n_max=60, m_max=10, kinds=KINDS):
    rng = np.random.default_rng(seed)
    kind = kinds[int(rng.integers(len(kinds)))]
    geometry = GEOMETRIES[int(rng.integers(len(GEOMETRIES)))]
    m = int(rng.integers(1, m_max + 1))
    n = m if kind == "LUkC" else int(rng.integers(1, n_max + 1))
    return GenSpec(seed=seed, n=n, m=m, geometry=geometry, bound_mode=mode, problem_kind=kind)


def bad_props(report, names):
    return [(p.name, p.witnesses[:1]) for p in report.properties if p.name in names and p.status is not Status.PASS]


@pytest.fixture(scope="module")
def basic_suite():
    t0 = time.perf_counter()
    runs = []
    for mode in ("uniform_l", "uniform_u", "both_uniform"):
        for r in range(BASIC_PER_MODE):
            inst = generate(suite_spec(10_000 + r, mode))
            runs.append((mode, inst, solve(inst)))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def relaxed_suite():
    t0 = time.perf_counter()
    runs = []
    for eps in RELAXED_EPS:
        for r in range(RELAXED_SEEDS):
            inst = generate(suite_spec(20_000 + r, "two_l_le_u"))
            runs.append((eps, inst, solve(inst, variant="relaxed", eps=eps)))
    adversarial = []
    for r in range(ADVERSARIAL_COUNT):
        spec = GenSpec(seed=30_000 + r, n=1, m=1, bound_mode="two_l_le_u", upper_range=(4, 6 + 2 * (r % 4)))
        inst = adversarial_overflow(spec)
        adversarial.append((inst, solve(inst, variant="relaxed", eps=ADVERSARIAL_EPS)))
    return runs, adversarial, time.perf_counter() - t0


@pytest.fixture(scope="module")
def oracle_suite():
    t0 = time.perf_counter()
    runs = []
    modes = ("uniform_l", "uniform_u", "both_uniform")
    for r in range(ORACLE_COUNT):
        spec = suite_spec(40_000 + r, modes[r % 3], n_max=20, m_max=8)
        inst = generate(spec)
        runs.append((inst, solve(inst, lower_solver="exact", upper_solver="exact", oracle=True)))
    return runs, time.perf_counter() - t0


def test_criterion_1_basic_guarantees(basic_suite):
    runs, elapsed = basic_suite
    failures = Counter()
    for _mode, _inst, res in runs:
        for name, _ in bad_props(res.report, BASIC_PROPS):
            failures[name] += 1
    per_mode = Counter(mode for mode, _, _ in runs)
    # the suite must exercise the gated (hard) regime, not warnings
    failures["preconditions_unconfirmed"] += sum(not res.report.preconditions for _, _, res in runs)
    failures = +failures
    ok = not failures and min(per_mode.values()) >= BASIC_PER_MODE and elapsed <= BASIC_TIME_LIMIT
    assert record(1, "basic guarantee suite", ok,
                  f"{len(runs)} runs {dict(per_mode)}, violations={dict(failures)}, {elapsed:.1f}s")


def test_criterion_2_relaxed_guarantees(relaxed_suite):
    runs, adversarial, elapsed = relaxed_suite
    failures = Counter()
    for _eps, _inst, res in runs:
        for name, _ in bad_props(res.report, RELAXED_PROPS):
            failures[name] += 1
    failures["preconditions_unconfirmed"] += sum(not res.report.preconditions for _, _, res in runs)
    failures = +failures
    hits = 0
    for _inst, res in adversarial:
        for name, _ in bad_props(res.report, RELAXED_PROPS):
            failures["adversarial:" + name] += 1
        hits += res.trace.counts_by_type()["IV"] > 0
    rate = hits / len(adversarial)
    ok = not failures and rate >= TYPE_IV_RATE and elapsed <= RELAXED_TIME_LIMIT
    assert record(2, "relaxed guarantee suite", ok,
                  f"{len(runs)} random + {len(adversarial)} adversarial runs, violations={dict(failures)}, "
                  f"Type-IV rate={rate:.2f}, {elapsed:.1f}s")


def test_criterion_3_oracle_ratio(oracle_suite):
    runs, elapsed = oracle_suite
    bad = []
    worst = Fraction(0)
    counts = Counter()
    for inst, res in runs:
        rep = res.report
        c = rep.costs
        if inst.objective is Objective.SUM:
            counts["sum"] += 1
            if c["asI"] > 9 * c["opt"] or rep.get("nine_opt").status is not Status.PASS:
                bad.append((inst.problem_kind.value, c))
            if c["opt"]:
                worst = max(worst, Fraction(c["asI"], c["opt"]))
        else:
            counts["max"] += 1
            if rep.get("p11_max_cost").status is not Status.PASS:
                bad.append((inst.problem_kind.value, c))
        if rep.get("sandwich").status is not Status.PASS:
            bad.append(("sandwich", c))
    ok = not bad and len(runs) >= ORACLE_COUNT and elapsed <= ORACLE_TIME_LIMIT
    assert record(3, "oracle ratio", ok,
                  f"{len(runs)} runs {dict(counts)}, violations={len(bad)}, worst AS_I/OPT={float(worst):.3f}, "
                  f"{elapsed:.1f}s")


def test_criterion_4_reroute_bound(basic_suite, relaxed_suite, oracle_suite):
    results = [res for _, _, res in basic_suite[0]]
    results += [res for _, _, res in relaxed_suite[0]] + [res for _, res in relaxed_suite[1]]
    results += [res for _, res in oracle_suite[0]]
    names = ("p4_cardinality_preserved", "p5_reroute_cost")
    violations = sum(len(bad_props(res.report, names)) for res in results)
    cycles = sum(len(res.trace.cycles) for res in results)
    assert record(4, "reroute cost bound and cardinality preservation", violations == 0,
                  f"{len(results)} runs, {cycles} cycles broken, violations={violations}")


def test_criterion_5_three_star_cycle():
    inst = line_instance([0, 100, 100, 100, 200, 200], [0, 100, 200, 1, 101, 201], 0, 6, 6)
    sf = build_star_forest([0, 1, 2], [3, 4, 5], inst)
    g = build_dependency_graph(sf, (0, 1, 1, 1, 2, 2), (4, 5, 5, 5, 3, 3))
    before = {e: w for e, w in g.weights.items() if e[0] != e[1]}
    g2, log = break_cycles(g)
    after = {e: w for e, w in g2.weights.items() if e[0] != e[1]}
    ok = (
        before == {(0, 1): 1, (1, 2): 3, (2, 0): 2}
        and len(log) == 1
        and log[0].kappa == 1
        and (0, 1) not in after
        and sorted(after.values()) == [1, 2]
    )
    assert record(5, "three-star cycle golden case", ok,
                  f"weights {sorted(before.values())} -> kappa={log[0].kappa}, surviving {sorted(after.values())}")


def _enumerate(d, lo, hi, objective):
    n, k = d.shape
    best = None
    for cols in itertools.product(range(k), repeat=n):
        loads = np.bincount(cols, minlength=k)
        if (loads < lo).any() or (loads > hi).any():
            continue
        ds = [int(d[j, c]) for j, c in enumerate(cols)]
        cost = max(ds) if objective is Objective.MAX else sum(ds)
        best = cost if best is None else min(best, cost)
    return best


def test_criterion_6_flow_cross_validation():
    mismatches = 0
    checked = 0
    for seed in range(FLOW_SEEDS):
        rng = np.random.default_rng(seed)
        for n in range(1, 7):
            for k in range(1, 4):
                d = rng.integers(0, 30, size=(n, k))
                lo = rng.integers(0, 3, size=k)
                hi = np.maximum(lo + rng.integers(0, 4, size=k), 1)
                for objective in Objective:
                    prob = AssignmentProblem(tuple(range(k)), tuple(lo), tuple(hi), d, objective)
                    expect = _enumerate(d, lo, hi, objective)
                    for backend in ("scipy", "ssp"):
                        checked += 1
                        try:
                            got = optimal_assignment(prob, backend).cost
                        except Exception:
                            got = None
                        mismatches += got != expect
    assert record(6, "flow engine cross-validation", mismatches == 0,
                  f"{checked} solves vs exhaustive enumeration, mismatches={mismatches}")


def test_criterion_7_determinism(tmp_path, capsys, four_line):
    line = tmp_path / "line.json"
    io.write_json(line, io.instance_to_json(four_line))
    configs = [
        ["--instance", str(line), "--lower-solver", "exact", "--upper-solver", "exact", "--oracle"],
        ["--gen-spec", '{"seed": 5, "n": 40, "m": 8, "geometry": "graph", "bound_mode": "uniform_u"}'],
        ["--gen-spec", '{"seed": 6, "n": 30, "m": 6, "bound_mode": "two_l_le_u"}',
         "--variant", "relaxed", "--eps", "1/2", "--strict-beta"],
        ["--gen-spec", '{"seed": 7, "n": 1, "m": 1, "bound_mode": "two_l_le_u"}', "--adversarial",
         "--variant", "relaxed", "--eps", "1/4"],
    ]
    differing = []
    for i, cfg in enumerate(configs):
        dirs = []
        for rep in ("a", "b"):
            code = main(["run", *cfg, "--out", str(tmp_path / f"{rep}{i}")])
            dirs.append(tmp_path / f"{rep}{i}" / capsys.readouterr().out.splitlines()[0].split("/")[-1])
            assert code == 0
        for name in ("solution.json", "trace.json", "report.json"):
            if dirs[0].joinpath(name).read_bytes() != dirs[1].joinpath(name).read_bytes():
                differing.append((i, name))
    assert record(7, "run determinism", not differing,
                  f"{len(configs)} configs x 3 artifacts, differing={differing}")
