"""Command-line entry point: ``lucluster {run,gen,verify,bench}``.

Exit codes: 0 all hard guarantees hold, 1 a guarantee failed, 2 usage error,
3 configuration or malformed input, 4 infeasible instance, 5 size cap
exceeded, 6 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import io
from .combine import Variant
from .errors import (
    CombineInvariantError,
    ConfigError,
    GenerationError,
    InfeasibleError,
    SizeCapError,
    StructuralError,
)
from .generate import GenSpec, adversarial_overflow, generate
from .model import Instance, Objective, evaluate_cost
from .pipeline import RunResult, solve
from .subsolvers import SOLVERS
from .verify import GuaranteeReport, check_guarantees

log = logging.getLogger("lucluster")

EXIT_OK, EXIT_GUARANTEE, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIZE, EXIT_INTERNAL = 0, 1, 3, 4, 5, 6

BENCH_COLUMNS = (
    "seed", "n", "m", "bound_mode", "variant", "eps", "beta_declared", "beta_empirical",
    "max_load_ratio", "cost_as1", "cost_as2", "cost_asI", "cost_opt", "ratio_vs_bound",
)
GRID_KEYS = ("n", "m", "geometry", "bound_mode", "problem_kind", "k", "variant", "eps")


# --------------------------------------------------------------------------- config


def _load_gen_spec(text: str, seed: int | None) -> GenSpec:
    p = Path(text)
    d = io.read_json(p) if p.exists() else json.loads(text)
    if seed is not None:
        d["seed"] = seed
    return GenSpec.from_json(d)


def _instance_from_args(args: argparse.Namespace) -> tuple[Instance, dict[str, Any] | None]:
    if bool(args.instance) == bool(args.gen_spec):
        raise ConfigError("give exactly one of --instance or --gen-spec")
    if args.instance:
        return io.load_instance(args.instance), None
    spec = _load_gen_spec(args.gen_spec, args.seed)
    inst = adversarial_overflow(spec) if args.adversarial else generate(spec)
    return inst, {**spec.to_json(), "adversarial": bool(args.adversarial)}


def _eps(text: str | None) -> Fraction | None:
    if text is None:
        return None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad eps {text!r}") from None


def build_config(args: argparse.Namespace, inst: Instance, gen: dict[str, Any] | None) -> dict[str, Any]:
    for name in (args.lower_solver, args.upper_solver):
        if name not in SOLVERS:
            raise ConfigError(f"unknown subsolver {name!r}")
    variant = Variant(args.variant)
    eps = _eps(args.eps)
    if variant is Variant.RELAXED and (eps is None or eps <= 0):
        raise ConfigError("--variant relaxed needs --eps > 0")
    inst_hash = hashlib.sha256(io.dumps(io.instance_to_json(inst)).encode()).hexdigest()
    return {
        "format": 1,
        "kind": "config",
        "instance_sha256": inst_hash,
        "gen_spec": gen,
        "lower_solver": args.lower_solver,
        "upper_solver": args.upper_solver,
        "variant": variant.value,
        "eps": None if eps is None else str(eps),
        "strict_beta": bool(args.strict_beta),
        "oracle": bool(args.oracle),
    }


def config_hash(config: dict[str, Any]) -> str:
    return hashlib.sha256(io.dumps(config).encode()).hexdigest()[:16]


# --------------------------------------------------------------------------- run


def _run(inst: Instance, config: dict[str, Any]) -> RunResult:
    return solve(
        inst,
        lower_solver=config["lower_solver"],
        upper_solver=config["upper_solver"],
        variant=config["variant"],
        eps=config["eps"],
        strict_beta=config["strict_beta"],
        oracle=config["oracle"],
    )


def summary_text(inst: Instance, res: RunResult) -> str:
    rep = res.report
    assert rep is not None
    c = rep.costs
    lines = [
        f"instance: n={inst.n} m={inst.m} k={inst.k} kind={inst.problem_kind.value} scale={inst.scale}",
        f"variant: {rep.variant}  beta={rep.beta}  eps={rep.eps}  beta_empirical(AS_2)={rep.beta_empirical}",
        f"cost AS_1={c['as1']}  AS_2={c['as2']}  AS_I={c['asI']}  OPT={'-' if c['opt'] is None else c['opt']}",
    ]
    if c["opt"]:
        lines.append(f"AS_I / OPT = {Fraction(c['asI'], c['opt'])} (~{c['asI'] / c['opt']:.4f})")
    lines.append(f"max load ratio = {rep.max_load_ratio} (~{float(rep.max_load_ratio):.4f})")
    lines.append(f"types: {res.trace.counts_by_type()}")
    lines.append(f"preconditions confirmed: {rep.preconditions}")
    lines.append("")
    width = max(len(p.name) for p in rep.properties)
    for p in rep.properties:
        lines.append(f"  {p.name:<{width}}  {p.status.value:<4}  {p.detail}")
    lines.append("")
    lines.append("RESULT: " + ("ok" if rep.ok else "GUARANTEE FAILURE"))
    return "\n".join(lines) + "\n"


def write_run(out: Path, inst: Instance, config: dict[str, Any], res: RunResult) -> Path:
    run_dir = out / config_hash(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    assert res.report is not None
    io.write_json(run_dir / "config.json", config)
    io.write_json(run_dir / "instance.json", io.instance_to_json(inst))
    io.write_json(run_dir / "as1.json", io.subsolution_to_json(res.as1, inst))
    io.write_json(run_dir / "as2.json", io.subsolution_to_json(res.as2, inst))
    io.write_json(run_dir / "solution.json", io.solution_to_json(res.solution, inst))
    io.write_json(run_dir / "trace.json", res.trace.to_json())
    io.write_json(run_dir / "report.json", res.report.to_json())
    if res.opt is not None:
        io.write_json(run_dir / "opt.json", io.solution_to_json(res.opt, inst))
    (run_dir / "summary.txt").write_text(summary_text(inst, res), encoding="utf-8")
    return run_dir


def cmd_run(args: argparse.Namespace) -> int:
    inst, gen = _instance_from_args(args)
    config = build_config(args, inst, gen)
    res = _run(inst, config)
    run_dir = write_run(Path(args.out), inst, config, res)
    print(run_dir)
    sys.stdout.write((run_dir / "summary.txt").read_text())
    return EXIT_OK if res.report and res.report.ok else EXIT_GUARANTEE


def cmd_gen(args: argparse.Namespace) -> int:
    spec = _load_gen_spec(args.gen_spec, args.seed)
    inst = adversarial_overflow(spec) if args.adversarial else generate(spec)
    text = io.dumps(io.instance_to_json(inst))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def verify_run_dir(run_dir: Path) -> tuple[GuaranteeReport, bool]:
    """Recompute the report of a stored run; also say whether it matches byte for byte."""
    config = io.read_json(run_dir / "config.json")
    inst = io.load_instance(run_dir / "instance.json")
    as1 = io.subsolution_from_json(io.read_json(run_dir / "as1.json"))
    as2 = io.subsolution_from_json(io.read_json(run_dir / "as2.json"))
    sol = io.solution_from_json(io.read_json(run_dir / "solution.json"))
    trace = io.read_json(run_dir / "trace.json")
    opt_path = run_dir / "opt.json"
    opt = io.solution_from_json(io.read_json(opt_path)) if opt_path.exists() else None
    exact = config["lower_solver"] == "exact" and config["upper_solver"] == "exact"
    rep = check_guarantees(inst, as1, as2, sol, trace, opt=opt, exact=exact)
    stored = (run_dir / "report.json").read_text(encoding="utf-8")
    return rep, io.dumps(rep.to_json()) == stored


def cmd_verify(args: argparse.Namespace) -> int:
    rep, same = verify_run_dir(Path(args.run_dir))
    for p in rep.properties:
        print(f"{p.name:<28} {p.status.value}")
    print("report matches stored artifact" if same else "report DIFFERS from stored artifact")
    return EXIT_OK if rep.ok and same else EXIT_GUARANTEE


# --------------------------------------------------------------------------- bench


def _parse_grid(items: Sequence[str]) -> dict[str, list[Any]]:
    grid: dict[str, list[Any]] = {}
    for item in items:
        key, _, values = item.partition("=")
        if key not in GRID_KEYS or not values:
            raise ConfigError(f"bad --grid entry {item!r}; keys: {', '.join(GRID_KEYS)}")
        vals: list[Any] = values.split(",")
        if key in ("n", "m", "k"):
            vals = [int(v) for v in vals]
        grid[key] = vals
    return grid


def guaranteed_bound(inst: Instance, res: RunResult) -> Fraction:
    """Cost bound implied by the guarantees for this run (used for ratio_vs_bound)."""
    c1 = evaluate_cost(inst, res.as1.solution)
    c2 = evaluate_cost(inst, res.as2.solution)
    if inst.objective is Objective.MAX:
        return Fraction(2 * c1.service_max + 7 * c2.service_max)
    s = Fraction(2 * c1.service_sum + 7 * c2.service_sum)
    eps = res.trace.eps
    if eps is not None:
        s *= 1 + 1 / eps
    return s + c1.facility_cost + c2.facility_cost


def bench_row(job: tuple[dict[str, Any], dict[str, Any], bool]) -> dict[str, Any]:
    spec_d, run_d, adversarial = job
    spec = GenSpec.from_json(spec_d)
    inst = adversarial_overflow(spec) if adversarial else generate(spec)
    res = solve(inst, **run_d)
    rep = res.report
    assert rep is not None
    bound = guaranteed_bound(inst, res)
    ratio = "" if bound == 0 else f"{float(Fraction(rep.costs['asI']) / bound):.6f}"
    return {
        "seed": spec.seed,
        "n": inst.n,
        "m": inst.m,
        "bound_mode": spec.bound_mode,
        "variant": rep.variant,
        "eps": "" if rep.eps is None else str(rep.eps),
        "beta_declared": str(res.as2.declared_beta),
        "beta_empirical": str(rep.beta_empirical),
        "max_load_ratio": f"{float(rep.max_load_ratio):.6f}",
        "cost_as1": rep.costs["as1"],
        "cost_as2": rep.costs["as2"],
        "cost_asI": rep.costs["asI"],
        "cost_opt": "" if rep.costs["opt"] is None else rep.costs["opt"],
        "ratio_vs_bound": ratio,
    }


def cmd_bench(args: argparse.Namespace) -> int:
    base = _load_gen_spec(args.gen_spec, args.seed).to_json()
    grid = _parse_grid(args.grid or [])
    keys = sorted(grid)
    jobs = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, combo))
        variant = point.pop("variant", args.variant)
        eps = point.pop("eps", args.eps)
        if Variant(variant) is Variant.RELAXED and _eps(eps) is None:
            raise ConfigError("relaxed bench points need eps")
        run_d = dict(
            lower_solver=args.lower_solver,
            upper_solver=args.upper_solver,
            variant=variant,
            eps=None if Variant(variant) is Variant.BASIC else eps,
            strict_beta=args.strict_beta,
            oracle=args.oracle,
        )
        for r in range(args.seeds):
            jobs.append(({**base, **point, "seed": base["seed"] + r}, run_d, args.adversarial))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(bench_row, jobs))
    else:
        rows = [bench_row(j) for j in jobs]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def _add_instance_args(p: argparse.ArgumentParser, *, instance: bool = True) -> None:
    if instance:
        p.add_argument("--instance", help="instance JSON file")
    p.add_argument("--gen-spec", help="generator spec: JSON file or inline JSON")
    p.add_argument("--seed", type=int, help="override the generator seed")
    p.add_argument("--adversarial", action="store_true", help="use the overflow construction")


def _add_solve_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lower-solver", default="greedy", help="subsolver for AS_1 (exact, greedy)")
    p.add_argument("--upper-solver", default="greedy", help="subsolver for AS_2 (exact, greedy)")
    p.add_argument("--variant", default="basic", choices=[v.value for v in Variant])
    p.add_argument("--eps", help="relaxation parameter, e.g. 0.5 or 1/4")
    p.add_argument("--strict-beta", action="store_true", help="raise beta to AS_2's measured load ratio")
    p.add_argument("--oracle", action="store_true", help="compute the brute-force optimum when within caps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lucluster", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve one instance and verify the guarantees")
    _add_instance_args(p)
    _add_solve_args(p)
    p.add_argument("--out", default="runs", help="parent directory of run directories")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="write a generated instance")
    _add_instance_args(p, instance=False)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="re-check a stored run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="sweep a grid of generated instances, emit CSV")
    _add_instance_args(p, instance=False)
    _add_solve_args(p)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2", help="grid axis (repeatable)")
    p.add_argument("--seeds", type=int, default=10, help="seeds per grid point")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if getattr(args, "gen_spec", None) is None and args.command in ("gen", "bench"):
        print("error: --gen-spec is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, StructuralError, GenerationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeCapError as exc:
        print(f"size cap: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except CombineInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
