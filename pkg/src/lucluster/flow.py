"""Optimal assignment of clients to a fixed open set under load bounds.

Two interchangeable backends:

``"scipy"``
    SumService is solved as a rectangular assignment problem over facility
    *slots* (``lower_eff`` mandatory slots carrying a large bonus, the rest
    optional) with :func:`scipy.optimize.linear_sum_assignment`.  Threshold
    feasibility uses :func:`scipy.sparse.csgraph.maximum_flow`.

``"ssp"``
    A pure-Python min-cost flow (successive shortest paths with Dijkstra and
    node potentials) and Edmonds-Karp max flow on the bipartite network::

        s -> client j          cap 1
        client j -> fac a      cap 1, cost d(j, a)
        fac a -> T             cap lower_eff[a]                (mandatory)
        fac a -> t'            cap upper_eff[a] - lower_eff[a] (optional)
        t' -> T                cap n - sum(lower_eff)

    Capacities into ``T`` sum to ``n``, so a flow of value ``n`` saturates
    every mandatory arc and is exactly a bounded assignment.

Both backends return identical costs; the chosen assignment may differ when
several plans are optimal.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .errors import InfeasibleError, StructuralError
from .model import Instance, Objective

BACKENDS = ("scipy", "ssp")


@dataclass(frozen=True, eq=False)
class AssignmentProblem:
    open_set: tuple[int, ...]
    lower_eff: tuple[int, ...]
    upper_eff: tuple[int, ...]
    dist_view: np.ndarray
    objective: Objective = Objective.SUM

    def __post_init__(self) -> None:
        object.__setattr__(self, "open_set", tuple(int(i) for i in self.open_set))
        object.__setattr__(self, "lower_eff", tuple(int(v) for v in self.lower_eff))
        object.__setattr__(self, "upper_eff", tuple(int(v) for v in self.upper_eff))
        dv = np.asarray(self.dist_view, dtype=np.int64)
        if dv.ndim == 1 and dv.size == 0:
            dv = dv.reshape(0, len(self.open_set))
        object.__setattr__(self, "dist_view", dv)
        object.__setattr__(self, "objective", Objective(self.objective))
        k = len(self.open_set)
        if len(self.lower_eff) != k or len(self.upper_eff) != k or dv.shape[1:] != (k,):
            raise StructuralError("open_set, bounds and dist_view columns must align")

    @classmethod
    def from_instance(
        cls, inst: Instance, open_set: Sequence[int], *, lower: bool = True, upper: bool = True
    ) -> "AssignmentProblem":
        """Restrict ``inst`` to ``open_set``; dropped bounds become 0 / n."""
        S = tuple(sorted(open_set))
        lo = tuple(inst.lower[i] if lower else 0 for i in S)
        hi = tuple(inst.upper[i] if upper else inst.n for i in S)
        return cls(S, lo, hi, inst.cf[:, list(S)], inst.objective)

    @property
    def n(self) -> int:
        return self.dist_view.shape[0]

    def caps(self) -> list[int] | None:
        """Effective per-facility capacities, or None when bounds admit no plan."""
        n = self.n
        total_lower = sum(self.lower_eff)
        if total_lower > n:
            return None
        caps = [min(hi, n - (total_lower - lo)) for lo, hi in zip(self.lower_eff, self.upper_eff)]
        if any(c < lo for c, lo in zip(caps, self.lower_eff)) or sum(caps) < n:
            return None
        return caps


@dataclass(frozen=True)
class Assignment:
    assign: tuple[int, ...]
    cost: int


def optimal_assignment(prob: AssignmentProblem, backend: str = "scipy") -> Assignment:
    """Cheapest bounded assignment (sum of distances, or bottleneck for MaxService)."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    n = prob.n
    if n == 0:
        return Assignment((), 0)
    if not prob.open_set:
        raise StructuralError("empty open set with clients to serve")
    caps = prob.caps()
    if caps is None:
        raise InfeasibleError(
            f"bounds admit no plan: sum(lower)={sum(prob.lower_eff)}, n={n}, sum(upper)={sum(prob.upper_eff)}"
        )
    if prob.objective is Objective.SUM:
        cols = _min_cost(prob, caps, None, backend)
        assert cols is not None
        d = prob.dist_view
        return Assignment(tuple(prob.open_set[c] for c in cols), int(sum(int(d[j, c]) for j, c in enumerate(cols))))

    thresholds = np.unique(prob.dist_view)
    if not feasible_at_threshold(prob, int(thresholds[-1]), backend):
        raise InfeasibleError("no threshold admits a bounded assignment")
    lo, hi = 0, len(thresholds) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible_at_threshold(prob, int(thresholds[mid]), backend):
            hi = mid
        else:
            lo = mid + 1
    t = int(thresholds[lo])
    # among bottleneck-optimal plans take the cheapest in total distance
    cols = _min_cost(prob, caps, t, backend)
    if cols is None:
        raise AssertionError("threshold reported feasible but no plan found")
    return Assignment(tuple(prob.open_set[c] for c in cols), t)


def feasible_at_threshold(prob: AssignmentProblem, t: int, backend: str = "scipy") -> bool:
    """Whether a bounded assignment exists using only edges with ``dist <= t``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    n = prob.n
    if n == 0:
        return True
    caps = prob.caps()
    if caps is None or not prob.open_set:
        return False
    allowed = prob.dist_view <= t
    if backend == "ssp":
        return _SSPNetwork(prob, caps, allowed).max_flow() == n
    if backend != "scipy":
        raise ValueError(f"unknown backend {backend!r}")
    return _scipy_max_flow(prob, caps, allowed) == n


# --------------------------------------------------------------------------- scipy


def _scipy_max_flow(prob: AssignmentProblem, caps: list[int], allowed: np.ndarray) -> int:
    n, k = allowed.shape
    s, tp, T = n + k, n + k + 1, n + k + 2
    jj, aa = np.nonzero(allowed)
    rows = [np.full(n, s), jj, np.arange(n, n + k), np.arange(n, n + k), [tp]]
    cols = [np.arange(n), n + aa, np.full(k, T), np.full(k, tp), [T]]
    lower = np.asarray(prob.lower_eff)
    data = [
        np.ones(n),
        np.ones(len(jj)),
        lower,
        np.asarray(caps) - lower,
        [n - lower.sum()],
    ]
    g = csr_matrix(
        (np.concatenate(data).astype(np.int32), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n + k + 3, n + k + 3),
    )
    return int(maximum_flow(g, s, T).flow_value)


def _scipy_min_cost(prob: AssignmentProblem, caps: list[int], t: int | None) -> list[int] | None:
    d = prob.dist_view
    n = prob.n
    slot_fac: list[int] = []
    mandatory: list[bool] = []
    for a, (lo, cap) in enumerate(zip(prob.lower_eff, caps)):
        slot_fac += [a] * cap
        mandatory += [True] * lo + [False] * (cap - lo)
    slot_fac_arr = np.asarray(slot_fac, dtype=np.int64)
    cost = d[:, slot_fac_arr].astype(np.float64)
    # bonus larger than any achievable spread in service cost
    bonus = float(n * (int(d.max()) + 1) + 1)
    cost[:, np.asarray(mandatory, dtype=bool)] -= bonus
    if t is not None:
        cost[d[:, slot_fac_arr] > t] = np.inf
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        return None
    out = [0] * n
    for r, c in zip(rows, cols):
        out[int(r)] = int(slot_fac_arr[c])
    loads = np.bincount(out, minlength=len(caps))
    if any(loads[a] < lo for a, lo in enumerate(prob.lower_eff)):
        return None
    return out


def _min_cost(prob: AssignmentProblem, caps: list[int], t: int | None, backend: str) -> list[int] | None:
    if backend == "ssp":
        allowed = np.ones(prob.dist_view.shape, dtype=bool) if t is None else prob.dist_view <= t
        return _SSPNetwork(prob, caps, allowed).min_cost_assignment()
    return _scipy_min_cost(prob, caps, t)


# --------------------------------------------------------------------------- pure python


class _SSPNetwork:
    """Residual network for one solve; arcs stored in parallel lists."""

    def __init__(self, prob: AssignmentProblem, caps: list[int], allowed: np.ndarray) -> None:
        n, k = allowed.shape
        self.n, self.k = n, k
        self.s, self.tp, self.T = n + k, n + k + 1, n + k + 2
        self.size = n + k + 3
        self.head: list[list[int]] = [[] for _ in range(self.size)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []
        d = prob.dist_view
        for j in range(n):
            self._arc(self.s, j, 1, 0)
        for j in range(n):
            for a in range(k):
                if allowed[j, a]:
                    self._arc(j, n + a, 1, int(d[j, a]))
        total_lower = sum(prob.lower_eff)
        for a in range(k):
            self._arc(n + a, self.T, prob.lower_eff[a], 0)
            self._arc(n + a, self.tp, caps[a] - prob.lower_eff[a], 0)
        self._arc(self.tp, self.T, n - total_lower, 0)

    def _arc(self, u: int, v: int, cap: int, cost: int) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.cost.append(cost)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)
        self.cost.append(-cost)

    def min_cost_assignment(self) -> list[int] | None:
        size, s, T = self.size, self.s, self.T
        to, cap, cost, head = self.to, self.cap, self.cost, self.head
        pot = [0] * size
        flow = 0
        inf = float("inf")
        while flow < self.n:
            dist = [inf] * size
            parent = [-1] * size
            dist[s] = 0
            heap = [(0, s)]
            while heap:
                du, u = heapq.heappop(heap)
                if du > dist[u]:
                    continue
                pu = pot[u]
                for e in head[u]:
                    if cap[e] <= 0:
                        continue
                    v = to[e]
                    nd = du + cost[e] + pu - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        parent[v] = e
                        heapq.heappush(heap, (nd, v))
            if dist[T] == inf:
                return None
            for v in range(size):
                if dist[v] < inf:
                    pot[v] += dist[v]
            v = T
            while v != s:
                e = parent[v]
                cap[e] -= 1
                cap[e ^ 1] += 1
                v = to[e ^ 1]
            flow += 1
        out = [0] * self.n
        for j in range(self.n):
            for e in head[j]:
                v = to[e]
                if self.n <= v < self.n + self.k and e % 2 == 0 and cap[e] == 0:
                    out[j] = v - self.n
        return out

    def max_flow(self) -> int:
        to, cap, head = self.to, self.cap, self.head
        s, T = self.s, self.T
        flow = 0
        while True:
            parent = [-1] * self.size
            parent[s] = -2
            q = deque([s])
            while q and parent[T] == -1:
                u = q.popleft()
                for e in head[u]:
                    v = to[e]
                    if cap[e] > 0 and parent[v] == -1:
                        parent[v] = e
                        q.append(v)
            if parent[T] == -1:
                return flow
            push = None
            v = T
            while v != s:
                e = parent[v]
                push = cap[e] if push is None else min(push, cap[e])
                v = to[e ^ 1]
            v = T
            while v != s:
                e = parent[v]
                cap[e] -= push
                cap[e ^ 1] += push
                v = to[e ^ 1]
            flow += push
