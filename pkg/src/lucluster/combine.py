"""Merge a lower-bounded and an upper-bounded solution into one LU solution.

Pipeline: star forest -> dependency graph -> cycle breaking -> topological
order -> per-star processing (basic or relaxed processor).

Node conventions: stars are keyed by their center (a facility of AS_1); members
are facilities of AS_2 given by their physical index.  A facility open in both
solutions appears in its own star as the duplicate node ``i_c`` (same index as
the center, distance 0, always ordered last).

Tie-breaking is deterministic throughout: lowest facility index for eta and
for topological readiness, lowest client index for every "any k clients"
choice, and bag contents in sweep order then client index.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .errors import CombineInvariantError, ConfigError, StructuralError
from .model import Instance, Solution, validate_instance
from .subsolvers import Side, SubSolution


class Variant(str, enum.Enum):
    BASIC = "basic"
    RELAXED = "relaxed"


class AssignmentType(str, enum.Enum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    IV = "IV"


# --------------------------------------------------------------------------- star forest


@dataclass(frozen=True)
class StarForest:
    F1: tuple[int, ...]
    F2: tuple[int, ...]
    eta: dict[int, int]
    stars: dict[int, tuple[int, ...]]
    duplicates: frozenset[int]

    @property
    def centers(self) -> tuple[int, ...]:
        return tuple(sorted(self.stars))


def build_star_forest(F1: Sequence[int], F2: Sequence[int], inst: Instance) -> StarForest:
    """Group AS_2 facilities around their nearest AS_1 facility.

    Members of each star are listed in processing order: decreasing distance
    to the center, ties by lower index, the duplicate ``i_c`` last.
    """
    F1 = tuple(sorted(set(F1)))
    F2 = tuple(sorted(set(F2)))
    if F2 and not F1:
        raise StructuralError("cannot build stars: AS_1 opens no facility")
    ff = inst.ff
    in_f1 = set(F1)
    eta: dict[int, int] = {}
    for x in F2:
        if x in in_f1:
            eta[x] = x
        else:
            eta[x] = min(F1, key=lambda i: (int(ff[x, i]), i))
    groups: dict[int, list[int]] = {}
    for x in F2:
        groups.setdefault(eta[x], []).append(x)
    dup = frozenset(x for x in F2 if x in in_f1)
    stars = {
        c: tuple(sorted(ms, key=lambda y: (-int(ff[y, c]), y in dup, y)))
        for c, ms in sorted(groups.items())
    }
    return StarForest(F1, F2, eta, stars, dup)


# --------------------------------------------------------------------------- dependency graph


@dataclass(frozen=True)
class DependencyGraph:
    """Weighted digraph on star centers.

    ``weights[(a, b)]`` counts clients assigned to ``a`` by ``sigma_hat`` and
    served in AS_2 by a member of star ``b``.  Only positive weights are stored.
    """

    nodes: tuple[int, ...]
    weights: dict[tuple[int, int], int]
    sigma_hat: tuple[int, ...]
    target: tuple[int, ...]

    def successors(self, a: int, *, self_loops: bool = False) -> list[int]:
        return sorted(b for (x, b) in self.weights if x == a and (self_loops or b != a))

    def edges(self) -> list[tuple[int, int, int]]:
        return [(a, b, w) for (a, b), w in sorted(self.weights.items())]


def _count_weights(nodes: Sequence[int], sigma: Sequence[int], target: Sequence[int]) -> dict[tuple[int, int], int]:
    node_set = set(nodes)
    w: dict[tuple[int, int], int] = {}
    for a, b in zip(sigma, target):
        if a in node_set:
            w[(a, b)] = w.get((a, b), 0) + 1
    return w


def build_dependency_graph(sf: StarForest, sigma1: Sequence[int], sigma2: Sequence[int]) -> DependencyGraph:
    try:
        target = tuple(sf.eta[i] for i in sigma2)
    except KeyError as exc:
        raise StructuralError(f"sigma2 uses facility {exc.args[0]} outside AS_2") from None
    nodes = sf.centers
    sigma1 = tuple(sigma1)
    return DependencyGraph(nodes, _count_weights(nodes, sigma1, target), sigma1, target)


def find_cycle(g: DependencyGraph) -> list[int] | None:
    """Some directed cycle of length >= 2 (iterative DFS), or None."""
    succ = {v: g.successors(v) for v in g.nodes}
    color = dict.fromkeys(g.nodes, 0)
    for root in g.nodes:
        if color[root]:
            continue
        color[root] = 1
        path = [root]
        stack = [iter(succ[root])]
        while stack:
            for w in stack[-1]:
                if color[w] == 1:
                    return path[path.index(w):]
                if color[w] == 0:
                    color[w] = 1
                    path.append(w)
                    stack.append(iter(succ[w]))
                    break
            else:
                color[path.pop()] = 2
                stack.pop()
    return None


def is_almost_dag(g: DependencyGraph) -> bool:
    return find_cycle(g) is None


@dataclass(frozen=True)
class CycleBreak:
    cycle: tuple[int, ...]
    kappa: int
    moves: tuple[tuple[int, int, int], ...]  # (client, from_center, to_center)


def break_cycles(g: DependencyGraph) -> tuple[DependencyGraph, list[CycleBreak]]:
    """Reroute clients along cycles until only self-loops remain.

    Each round rotates the found cycle so its minimum-weight edge comes first,
    moves ``kappa`` = that weight many clients along every edge, and thereby
    deletes at least one edge.  Per-center cardinalities never change.
    """
    sigma = list(g.sigma_hat)
    target = g.target
    weights = dict(g.weights)
    log: list[CycleBreak] = []
    current = g
    while True:
        cyc = find_cycle(current)
        if cyc is None:
            return current, log
        L = len(cyc)
        edges = [(cyc[r], cyc[(r + 1) % L]) for r in range(L)]
        start = min(range(L), key=lambda r: (weights[edges[r]], r))
        cyc = cyc[start:] + cyc[:start]
        edges = edges[start:] + edges[:start]
        kappa = weights[edges[0]]
        moves = []
        for a, b in edges:
            pool = [j for j, (s, t) in enumerate(zip(sigma, target)) if s == a and t == b]
            if len(pool) < kappa:
                raise CombineInvariantError(f"edge ({a},{b}) carries fewer than kappa={kappa} clients")
            for j in pool[:kappa]:
                sigma[j] = b
                moves.append((j, a, b))
            weights[(a, b)] -= kappa
            if weights[(a, b)] < 0:
                raise CombineInvariantError("edge weight went negative")
            if weights[(a, b)] == 0:
                del weights[(a, b)]
            weights[(b, b)] = weights.get((b, b), 0) + kappa
        log.append(CycleBreak(tuple(cyc), kappa, tuple(moves)))
        current = DependencyGraph(g.nodes, dict(weights), tuple(sigma), target)


def topological_order(g: DependencyGraph) -> list[int]:
    """Kahn's algorithm ignoring self-loops; lowest center first among ready nodes."""
    indeg = dict.fromkeys(g.nodes, 0)
    for (a, b) in g.weights:
        if a != b:
            indeg[b] += 1
    ready = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for b in g.successors(v):
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(ready, b)
    if len(order) != len(g.nodes):
        raise CombineInvariantError("dependency graph still has a cycle after break_cycles")
    return order


# --------------------------------------------------------------------------- star processing


@dataclass(frozen=True)
class ClientRecord:
    client: int
    facility: int
    type: AssignmentType
    star: int
    reserved: bool = False


@dataclass
class StarEvent:
    star: int
    members: tuple[int, ...]
    n_sizes: dict[int, int]
    reserved: tuple[int, ...]
    claim_ok: bool
    opened: list[tuple[int, str, int]] = field(default_factory=list)
    branch: str = ""
    prev: int | None = None
    prev_count: int = 0
    final_size: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "star": self.star,
            "members": list(self.members),
            "n_sizes": {str(k): v for k, v in self.n_sizes.items()},
            "reserved": list(self.reserved),
            "claim_ok": self.claim_ok,
            "opened": [{"facility": f, "type": t, "clients": c} for f, t, c in self.opened],
            "branch": self.branch,
            "prev": self.prev,
            "prev_count": self.prev_count,
            "final_size": self.final_size,
        }


@dataclass
class CombineState:
    """Mutable bookkeeping of one combine run (single-threaded)."""

    sigma_hat: tuple[int, ...]
    sigma2: tuple[int, ...]
    unsettled: set[int]
    records: dict[int, ClientRecord] = field(default_factory=dict)
    opened: list[int] = field(default_factory=list)
    events: list[StarEvent] = field(default_factory=list)

    @classmethod
    def initial(cls, sigma_hat: Sequence[int], sigma2: Sequence[int]) -> "CombineState":
        return cls(tuple(sigma_hat), tuple(sigma2), set(range(len(sigma2))))

    @property
    def settled(self) -> set[int]:
        return set(self.records)

    def open(self, facility: int) -> None:
        if facility in self.opened:
            raise CombineInvariantError(f"facility {facility} opened twice")
        self.opened.append(facility)

    def settle(self, clients: Sequence[int], facility: int, kind: AssignmentType, star: int, reserved: set[int]) -> None:
        for j in clients:
            if j not in self.unsettled:
                raise CombineInvariantError(f"client {j} settled twice")
            self.unsettled.discard(j)
            self.records[j] = ClientRecord(j, facility, kind, star, j in reserved)


@dataclass(frozen=True)
class Star:
    center: int
    members: tuple[int, ...]


def _prepare(star: Star, state: CombineState, inst: Instance) -> tuple[dict[int, list[int]], list[int], StarEvent]:
    """Unsettled member sets N and the reserve Res(i) (shared by both processors)."""
    i = star.center
    members = star.members
    if not members:
        raise CombineInvariantError(f"star {i} has no members")
    N = {y: [] for y in members}
    for j in sorted(state.unsettled):
        y = state.sigma2[j]
        if y in N:
            N[y].append(j)
    own = [j for j, c in enumerate(state.sigma_hat) if c == i]
    claim_ok = all(j in state.unsettled for j in own)
    last = members[-1]
    reserved: list[int] = []
    need = inst.lower[i] - len(N[last])
    if need > 0:
        excluded = set(N[last])
        pool = [j for j in own if j not in excluded and j in state.unsettled]
        if len(pool) < need:
            raise CombineInvariantError(
                f"star {i}: need {need} reserve clients, only {len(pool)} available"
            )
        reserved = pool[:need]
        drop = set(reserved)
        for y in members:
            N[y] = [j for j in N[y] if j not in drop]
    event = StarEvent(i, members, {y: len(N[y]) for y in members}, tuple(reserved), claim_ok)
    return N, reserved, event


def process_star(star: Star, state: CombineState, inst: Instance, beta: Fraction) -> CombineState:
    """Basic processor: upper bounds may grow to (beta + 1) U."""
    i, members = star.center, star.members
    N, reserved, ev = _prepare(star, state, inst)
    res_set = set(reserved)
    bag: list[int] = []
    for y in members[:-1]:
        bag.extend(N[y])
        if len(bag) >= inst.lower[y]:
            state.open(y)
            state.settle(bag, y, AssignmentType.I, i, res_set)
            ev.opened.append((y, "I", len(bag)))
            bag = []
    last = members[-1]
    final = bag + N[last] + reserved
    ev.final_size = len(final)
    if len(final) > (beta + 1) * inst.upper[i]:
        t, kind = last, AssignmentType.III
    else:
        t, kind = i, AssignmentType.II
    state.open(t)
    state.settle(final, t, kind, i, res_set)
    ev.opened.append((t, kind.value, len(final)))
    ev.branch = kind.value
    state.events.append(ev)
    return state


def process_star_relaxed(star: Star, state: CombineState, inst: Instance, beta: Fraction, eps: Fraction) -> CombineState:
    """Relaxed processor for 2L <= U: caps become (beta + eps) U.

    Opened sweep members take at most floor(beta * U) clients from the front of
    the bag; overflow is carried forward.  If neither terminal flush fits, the
    last unopened member ``Prev`` receives exactly its lower bound (Type-IV)
    and the remaining clients go to the last member.
    """
    i, members = star.center, star.members
    N, reserved, ev = _prepare(star, state, inst)
    res_set = set(reserved)
    bag: list[int] = []
    prev: int | None = None
    prev_count = 0
    for y in members[:-1]:
        bag.extend(N[y])
        if len(bag) >= inst.lower[y]:
            take = math.floor(beta * inst.upper[y])
            state.open(y)
            state.settle(bag[:take], y, AssignmentType.I, i, res_set)
            ev.opened.append((y, "I", len(bag[:take])))
            bag = bag[take:]
        else:
            prev, prev_count = y, len(bag)
    ev.prev, ev.prev_count = prev, prev_count
    last = members[-1]
    final = bag + N[last] + reserved
    ev.final_size = len(final)
    cap = beta + eps
    if len(final) <= cap * inst.upper[i]:
        state.open(i)
        state.settle(final, i, AssignmentType.II, i, res_set)
        ev.opened.append((i, "II", len(final)))
        ev.branch = "II"
    elif len(final) <= cap * inst.upper[last]:
        state.open(last)
        state.settle(final, last, AssignmentType.III, i, res_set)
        ev.opened.append((last, "III", len(final)))
        ev.branch = "III"
    else:
        if prev is None:
            raise CombineInvariantError(f"star {i}: two-facility branch reached without Prev")
        quota = sorted(final)[: inst.lower[prev]]
        chosen = set(quota)
        rest = [j for j in final if j not in chosen]
        state.open(prev)
        state.open(last)
        state.settle(quota, prev, AssignmentType.IV, i, res_set)
        state.settle(rest, last, AssignmentType.III, i, res_set)
        ev.opened.append((prev, "IV", len(quota)))
        ev.opened.append((last, "III", len(rest)))
        ev.branch = "IV"
    state.events.append(ev)
    return state


# --------------------------------------------------------------------------- driver


@dataclass(frozen=True)
class CombineTrace:
    variant: Variant
    beta: Fraction
    eps: Fraction | None
    forest: StarForest
    initial_graph: DependencyGraph
    graph: DependencyGraph
    cycles: tuple[CycleBreak, ...]
    order: tuple[int, ...]
    records: tuple[ClientRecord, ...]
    events: tuple[StarEvent, ...]

    @property
    def sigma_hat(self) -> tuple[int, ...]:
        return self.graph.sigma_hat

    def counts_by_type(self) -> dict[str, int]:
        out = {t.value: 0 for t in AssignmentType}
        for r in self.records:
            out[r.type.value] += 1
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "format": 1,
            "kind": "trace",
            "variant": self.variant.value,
            "beta": str(self.beta),
            "eps": None if self.eps is None else str(self.eps),
            "F1": list(self.forest.F1),
            "F2": list(self.forest.F2),
            "eta": {str(k): v for k, v in sorted(self.forest.eta.items())},
            "stars": {str(c): list(ms) for c, ms in sorted(self.forest.stars.items())},
            "duplicates": sorted(self.forest.duplicates),
            "initial_edges": [list(e) for e in self.initial_graph.edges()],
            "edges": [list(e) for e in self.graph.edges()],
            "cycles": [
                {"cycle": list(c.cycle), "kappa": c.kappa, "moves": [list(mv) for mv in c.moves]}
                for c in self.cycles
            ],
            "sigma_hat": list(self.graph.sigma_hat),
            "order": list(self.order),
            "clients": [
                {"client": r.client, "facility": r.facility, "type": r.type.value, "star": r.star, "reserved": r.reserved}
                for r in self.records
            ],
            "star_events": [e.to_json() for e in self.events],
        }


def effective_beta(inst: Instance, as2: SubSolution, strict: bool = False) -> Fraction:
    """Declared beta of AS_2, raised to its measured load ratio in strict mode."""
    beta = as2.declared_beta
    if strict:
        beta = max(beta, empirical_beta(inst, as2.solution))
    return beta


def empirical_beta(inst: Instance, sol: Solution) -> Fraction:
    ratios = [Fraction(sol.load(i), inst.upper[i]) for i in sol.open]
    return max(ratios, default=Fraction(0))


def combine(
    as1: SubSolution,
    as2: SubSolution,
    inst: Instance,
    variant: Variant | str = Variant.BASIC,
    eps: Fraction | float | str | None = None,
    *,
    strict_beta: bool = False,
) -> tuple[Solution, CombineTrace]:
    variant = Variant(variant)
    if as1.side is not Side.LOWER or as2.side is not Side.UPPER:
        raise ConfigError("combine expects (lower-side AS_1, upper-side AS_2)")
    beta = effective_beta(inst, as2, strict_beta)
    eps_f: Fraction | None = None
    if variant is Variant.RELAXED:
        if eps is None:
            raise ConfigError("the relaxed variant needs eps")
        eps_f = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
        if eps_f <= 0:
            raise ConfigError("eps must be positive")
        if beta + eps_f < 1:
            raise ConfigError("beta + eps must be at least 1")
        rep = validate_instance(inst)
        if not rep.relaxed_guarantees:
            raise ConfigError("relaxed variant requires 2L <= U for every facility and one uniform bound side")

    sol1, sol2 = as1.solution, as2.solution
    if len(sol1.assign) != inst.n or len(sol2.assign) != inst.n:
        raise StructuralError("subsolutions must assign every client")
    forest = build_star_forest(sol1.open, sol2.open, inst)
    g0 = build_dependency_graph(forest, sol1.assign, sol2.assign)
    g, cycles = break_cycles(g0)
    order = topological_order(g)

    state = CombineState.initial(g.sigma_hat, sol2.assign)
    for c in order:
        star = Star(c, forest.stars[c])
        if variant is Variant.BASIC:
            process_star(star, state, inst, beta)
        else:
            process_star_relaxed(star, state, inst, beta, eps_f)
    if state.unsettled:
        raise CombineInvariantError(f"{len(state.unsettled)} clients left unsettled")

    records = tuple(state.records[j] for j in range(inst.n))
    sol = Solution(open=tuple(state.opened), assign=tuple(r.facility for r in records))
    trace = CombineTrace(variant, beta, eps_f, forest, g0, g, tuple(cycles), tuple(order), records, tuple(state.events))
    return sol, trace
