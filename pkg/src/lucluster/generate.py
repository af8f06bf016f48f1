"""Seeded instance generators.

Every generator is a pure function of its :class:`GenSpec`; the numpy PCG64
stream is the only source of randomness.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import GenerationError
from .model import DEFAULT_SCALE, Instance, ProblemKind, coarse_feasible, validate_instance

GEOMETRIES = ("euclidean", "line", "graph")
BOUND_MODES = ("uniform_l", "uniform_u", "both_uniform", "two_l_le_u")
MAX_RETRIES = 100


@dataclass(frozen=True)
class GenSpec:
    seed: int
    n: int
    m: int
    geometry: str = "euclidean"
    bound_mode: str = "both_uniform"
    lower_range: tuple[int, int] = (1, 4)
    upper_range: tuple[int, int] = (4, 12)
    k: int | None = None
    cost_range: tuple[float, float] = (0.0, 20.0)
    problem_kind: str = "LUkM"
    scale: int = DEFAULT_SCALE
    extent: float = 100.0

    def __post_init__(self) -> None:
        for name in ("lower_range", "upper_range", "cost_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.geometry not in GEOMETRIES:
            raise GenerationError(f"unknown geometry {self.geometry!r}")
        if self.bound_mode not in BOUND_MODES:
            raise GenerationError(f"unknown bound_mode {self.bound_mode!r}")
        ProblemKind(self.problem_kind)
        if self.n < 1 or self.m < 1:
            raise GenerationError("n and m must be at least 1")

    def to_json(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for name in ("lower_range", "upper_range", "cost_range"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "GenSpec":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise GenerationError(f"unknown GenSpec fields: {sorted(unknown)}")
        return cls(**d)


def ceil_sqrt(sq: np.ndarray) -> np.ndarray:
    """Exact elementwise ceil(sqrt(x)) for nonnegative int64 input."""
    sq = np.asarray(sq, dtype=np.int64)
    r = np.sqrt(sq.astype(np.float64)).astype(np.int64)
    # float sqrt is off by at most one near 2**53; fix both directions
    for _ in range(2):
        r = np.where(r * r > sq, r - 1, r)
    for _ in range(2):
        r = np.where(r * r < sq, r + 1, r)
    return r


def euclidean_distances(coords: np.ndarray, scale: int) -> np.ndarray:
    """Fixed-point metric from real coordinates.

    Coordinates are rounded to the integer grid first, then each distance is
    the exact ceiling of the Euclidean norm.  Rounding up keeps the triangle
    inequality intact.
    """
    pts = np.rint(np.asarray(coords, dtype=np.float64) * scale).astype(np.int64)
    if pts.ndim == 1:
        pts = pts[:, None]
    diff = pts[:, None, :] - pts[None, :, :]
    return ceil_sqrt((diff * diff).sum(axis=2))


def _cluster_points(rng: np.random.Generator, count: int, dim: int, extent: float) -> np.ndarray:
    n_clusters = int(rng.integers(1, max(2, count // 4) + 1))
    centers = rng.uniform(0.0, extent, size=(n_clusters, dim))
    which = rng.integers(0, n_clusters, size=count)
    spread = extent / (4 * math.sqrt(n_clusters))
    pts = centers[which] + rng.normal(0.0, spread, size=(count, dim))
    return np.clip(pts, 0.0, extent)


def _graph_metric(rng: np.random.Generator, count: int, extent: float, scale: int) -> np.ndarray:
    rows, cols, w = [], [], []
    for v in range(1, count):
        rows.append(v)
        cols.append(int(rng.integers(0, v)))
        w.append(int(rng.integers(1, int(extent) + 1)))
    for _ in range(count):
        a, b = (int(x) for x in rng.integers(0, count, size=2))
        if a != b:
            rows.append(a)
            cols.append(b)
            w.append(int(rng.integers(1, int(extent) + 1)))
    if count == 1:
        return np.zeros((1, 1), dtype=np.int64)
    g = csr_matrix((np.asarray(w, dtype=np.float64) * scale, (rows, cols)), shape=(count, count))
    d = shortest_path(g, method="D", directed=False)
    return np.rint(d).astype(np.int64)


def _points_metric(spec: GenSpec, rng: np.random.Generator, n: int, m: int, colocated: bool) -> np.ndarray:
    count = n if colocated else n + m
    if spec.geometry == "graph":
        base = _graph_metric(rng, count, spec.extent, spec.scale)
    else:
        dim = 2 if spec.geometry == "euclidean" else 1
        base = euclidean_distances(_cluster_points(rng, count, dim, spec.extent), spec.scale)
    if colocated:
        idx = np.concatenate([np.arange(n), np.arange(n)])
        return base[np.ix_(idx, idx)]
    return base


def _draw_bounds(spec: GenSpec, rng: np.random.Generator, m: int) -> tuple[list[int], list[int]]:
    l_lo, l_hi = spec.lower_range
    u_lo, u_hi = spec.upper_range
    if l_lo < 0 or u_lo < 1 or l_lo > l_hi or u_lo > u_hi:
        raise GenerationError(f"bad bound ranges {spec.lower_range}, {spec.upper_range}")

    def draw(lo: int, hi: int, size: int | None = None):
        if size is None:
            return int(rng.integers(lo, hi + 1))
        return [int(x) for x in rng.integers(lo, hi + 1, size=size)]

    mode = spec.bound_mode
    if mode == "both_uniform":
        U = draw(u_lo, u_hi)
        L = draw(l_lo, max(l_lo, min(l_hi, U)))
        return [min(L, U)] * m, [U] * m
    if mode == "uniform_l":
        L = draw(l_lo, l_hi)
        return [L] * m, draw(max(u_lo, L, 1), max(u_hi, L, 1), m)
    if mode == "uniform_u":
        U = draw(u_lo, u_hi)
        return [min(x, U) for x in draw(l_lo, l_hi, m)], [U] * m
    # two_l_le_u: one uniform side chosen by the stream, 2L <= U everywhere
    if rng.integers(0, 2):
        U = max(draw(u_lo, u_hi), 2)
        return [min(x, U // 2) for x in draw(l_lo, l_hi, m)], [U] * m
    L = draw(l_lo, l_hi)
    return [L] * m, draw(max(u_lo, 2 * L, 1), max(u_hi, 2 * L, 1), m)


def _draw_k(spec: GenSpec, rng: np.random.Generator, kind: ProblemKind, m: int) -> int:
    if kind is ProblemKind.LUFL:
        return m
    if spec.k is not None:
        return min(int(spec.k), m)
    return int(rng.integers(1, m + 1))


def generate(spec: GenSpec) -> Instance:
    """Random LU-feasible instance; identical specs give identical instances."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    kind = ProblemKind(spec.problem_kind)
    n = spec.n
    m = n if kind is ProblemKind.LUkC else spec.m
    dist = _points_metric(spec, rng, n, m, colocated=kind is ProblemKind.LUkC)
    if kind.zero_opening_cost:
        f = [0] * m
    else:
        lo, hi = spec.cost_range
        f = [int(x) for x in np.rint(rng.uniform(lo, hi, size=m) * spec.scale)]
    k = _draw_k(spec, rng, kind, m)

    lower, upper = _draw_bounds(spec, rng, m)
    for _ in range(MAX_RETRIES):
        if coarse_feasible(n, lower, upper, k):
            break
        # rescale: shrink lower bounds that exceed n, otherwise grow capacities
        if min(lower) > n:
            lower = [lo // 2 for lo in lower]
        else:
            upper = [math.ceil(u * 5 / 4) for u in upper]
    else:
        raise GenerationError(f"no feasible bounds after {MAX_RETRIES} rescaling rounds")
    if spec.bound_mode == "two_l_le_u":
        lower = [min(lo, u // 2) for lo, u in zip(lower, upper)]

    inst = Instance(dist, n, tuple(f), tuple(lower), tuple(upper), k, kind, scale=spec.scale)
    rep = validate_instance(inst)
    if not rep.ok or not rep.feasible:
        raise GenerationError(f"generated instance invalid: {rep.violations or 'infeasible'}")
    return inst


def adversarial_overflow(spec: GenSpec, masses_scale: float = 1.0) -> Instance:
    """Three-facility instance that overflows one star's terminal bag.

    Facility layout: a free center ``c`` plus two costly facilities ``y2``
    (near) and ``y1`` (far).  Client clusters of sizes ``U``, ``U`` and
    ``L - 1`` sit on ``c``, ``y2`` and ``y1``; with ``L = U / 2`` and ``k = 3``
    the upper-bounded solution must open all three while the lower-bounded one
    opens ``c`` alone.  The relaxed processor then carries ``L - 1`` clients
    into the terminal bag, which exceeds ``(1 + eps) U`` whenever
    ``eps < (L - 1) / U``.  ``masses_scale`` shrinks every cluster.
    """
    if spec.bound_mode != "two_l_le_u":
        raise GenerationError("adversarial_overflow needs bound_mode two_l_le_u")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    U = max(6, spec.upper_range[1] - spec.upper_range[1] % 2)
    L = U // 2
    sizes = [max(1, math.floor(s * masses_scale)) for s in (U, U, L - 1)]
    e = spec.extent
    sites = np.array([[0.0, 0.0], [0.0, 0.6 * e], [0.3 * e, 0.0]])  # c, y1, y2
    jitter = e / 100
    clients = np.concatenate(
        [sites[a] + rng.uniform(-jitter, jitter, size=(cnt, 2)) for a, cnt in zip((0, 2, 1), sizes)]
    )
    coords = np.concatenate([clients, sites])
    dist = euclidean_distances(coords, spec.scale)
    n = len(clients)
    alone = int(dist[:n, n].sum())
    f = (0, alone + spec.scale, alone + spec.scale)
    inst = Instance(dist, n, f, (L,) * 3, (U,) * 3, 3, ProblemKind.LUkFL, scale=spec.scale)
    rep = validate_instance(inst)
    if not rep.ok or not rep.feasible:
        raise GenerationError(f"adversarial instance invalid: {rep.violations or 'infeasible'}")
    return inst
