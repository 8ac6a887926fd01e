"""Grid graphs, per-edge invariants and the homology-augmented A* search.

A vertex of the augmented graph is a grid vertex paired with the signature
of the path that reached it. Two augmented vertices are the same when the
grid vertex matches and the signatures agree to within ``eps_key`` in the
max norm; signatures are bucketed by ``round(c / eps_key)`` and a lookup
also probes the neighbouring buckets.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .invariant import phi_matrix
from .mesh import Chain, SkeletonSet
from .quadrature import QuadConfig, QuadStats, SingularProximityError

DEFAULT_BUDGET = 5_000_000


class PlanningError(RuntimeError):
    pass


class NoPathError(PlanningError):
    pass


class SearchBudgetExceeded(PlanningError):
    def __init__(self, message: str, partial: list | None = None):
        super().__init__(message)
        self.partial = partial or []


# --- obstacle regions --------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - np.asarray(self.center), axis=-1) < self.radius


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=-1)


@dataclass(frozen=True)
class Tube:
    """Points closer than ``radius`` to a polyline."""

    points: tuple[tuple[float, ...], ...]
    radius: float
    closed: bool = True

    def contains(self, pts: np.ndarray) -> np.ndarray:
        P = np.asarray(self.points, float)
        A = P if self.closed else P[:-1]
        B = np.roll(P, -1, axis=0) if self.closed else P[1:]
        best = np.full(pts.shape[0], np.inf)
        for a, b in zip(A, B):
            d = b - a
            t = np.clip((pts - a) @ d / (d @ d), 0.0, 1.0)
            best = np.minimum(best, np.linalg.norm(pts - (a + t[:, None] * d), axis=1))
        return best < self.radius


def region_union(regions: Sequence) -> Callable[[np.ndarray], np.ndarray]:
    def blocked(pts: np.ndarray) -> np.ndarray:
        out = np.zeros(pts.shape[0], bool)
        for reg in regions:
            out |= reg.contains(pts)
        return out

    return blocked


# --- grid graph --------------------------------------------------------------


@dataclass
class GridGraph:
    """Cell-centred grid graph with all 3^D - 1 neighbour offsets.

    Directed edges come in opposite pairs; ``uedge[e]`` is the undirected
    edge id of directed edge ``e`` and ``direction[e]`` is +1 when it runs
    from the lower to the higher vertex id.
    """

    lower: np.ndarray
    upper: np.ndarray
    resolution: tuple[int, ...]
    spacing: np.ndarray
    coords: np.ndarray  # (V, D)
    cell_index: np.ndarray  # (V, D) integer cell coordinates
    id_grid: np.ndarray  # resolution-shaped, -1 where blocked
    indptr: np.ndarray
    nbr: np.ndarray
    weight: np.ndarray
    uedge: np.ndarray
    direction: np.ndarray
    segments: np.ndarray  # (E_u, 2) vertex ids, lower id first

    @property
    def D(self) -> int:
        return len(self.resolution)

    @property
    def n_vertices(self) -> int:
        return self.coords.shape[0]

    def neighbors(self, v: int):
        s, e = self.indptr[v], self.indptr[v + 1]
        return self.nbr[s:e], self.weight[s:e], np.arange(s, e)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def vertex_at(self, point: Sequence[float]) -> int:
        """Id of the vertex whose cell contains ``point``; -1 if blocked."""
        p = np.asarray(point, float)
        idx = np.floor((p - self.lower) / self.spacing).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.resolution)):
            raise PlanningError(f"point {p.tolist()} outside the grid bounds")
        return int(self.id_grid[tuple(idx)])

    def segment_chain(self) -> Chain:
        return Chain(self.coords, self.segments, np.ones(len(self.segments), np.int64))

    def edge_between(self, u: int, v: int) -> int:
        nb, _, eids = self.neighbors(u)
        hit = np.nonzero(nb == v)[0]
        if not len(hit):
            raise PlanningError(f"no edge {u} -> {v}")
        return int(eids[hit[0]])


def build_grid_graph(
    lower: Sequence[float],
    upper: Sequence[float],
    resolution: Sequence[int],
    blocked: Callable[[np.ndarray], np.ndarray] | None = None,
    start: Sequence[float] | None = None,
    goal: Sequence[float] | None = None,
) -> GridGraph:
    """Uniform grid over the box with one vertex per free cell centre.

    An edge is kept when both endpoints and its midpoint are free.
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    res = tuple(int(r) for r in resolution)
    D = len(res)
    if lower.shape != (D,) or upper.shape != (D,):
        raise PlanningError("bounds and resolution disagree on dimension")
    if any(r < 2 for r in res):
        raise PlanningError("resolution must be >= 2 on every axis")
    h = (upper - lower) / np.asarray(res)
    cells = np.stack(np.meshgrid(*[np.arange(r) for r in res], indexing="ij"), -1).reshape(-1, D)
    centers = lower + (cells + 0.5) * h
    free = ~blocked(centers) if blocked is not None else np.ones(len(cells), bool)
    id_grid = np.full(res, -1, dtype=np.int64)
    ids = np.cumsum(free) - 1
    id_grid.reshape(-1)[free] = ids[free]
    coords, cell_index = centers[free], cells[free]
    offsets = [o for o in itertools.product((-1, 0, 1), repeat=D) if any(o)]
    src, dst, wts = [], [], []
    resv = np.asarray(res)
    for o in offsets:
        o = np.asarray(o)
        nc = cell_index + o
        ok = np.all((nc >= 0) & (nc < resv), axis=1)
        tgt = np.full(len(cell_index), -1, dtype=np.int64)
        tgt[ok] = id_grid[tuple(nc[ok].T)]
        ok &= tgt >= 0
        if blocked is not None and np.any(ok):
            mids = 0.5 * (coords[ok] + coords[tgt[ok]])
            mid_ok = ~blocked(mids)
            sel = np.nonzero(ok)[0]
            ok[sel[~mid_ok]] = False
        s = np.nonzero(ok)[0]
        src.append(s)
        dst.append(tgt[ok])
        wts.append(np.full(len(s), float(np.linalg.norm(o * h))))
    src = np.concatenate(src) if src else np.zeros(0, np.int64)
    dst = np.concatenate(dst) if dst else np.zeros(0, np.int64)
    wts = np.concatenate(wts) if wts else np.zeros(0)
    order = np.lexsort((dst, src))
    src, dst, wts = src[order], dst[order], wts[order]
    indptr = np.zeros(len(coords) + 1, np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    pairs, uedge = np.unique(np.stack([lo, hi], 1), axis=0, return_inverse=True)
    direction = np.where(src < dst, 1, -1).astype(np.int64)
    g = GridGraph(lower, upper, res, h, coords, cell_index, id_grid, indptr, dst, wts,
                  uedge.reshape(-1), direction, pairs.reshape(-1, 2))
    for name, p in (("start", start), ("goal", goal)):
        if p is not None and g.vertex_at(p) < 0:
            raise PlanningError(f"{name} {list(p)} lies in a blocked cell")
    return g


# --- edge invariants ---------------------------------------------------------


@dataclass
class EdgeSignatureCache:
    """Per-undirected-edge signature; a reversed edge reads the exact negation."""

    values: np.ndarray  # (E_u, m)
    graph: GridGraph
    stats: QuadStats = field(default_factory=QuadStats)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def directed(self) -> np.ndarray:
        """(E_directed, m) signatures in CSR edge order."""
        return self.values[self.graph.uedge] * self.graph.direction[:, None]

    def edge(self, u: int, v: int) -> np.ndarray:
        e = self.graph.edge_between(u, v)
        return self.values[self.graph.uedge[e]] * self.graph.direction[e]

    def path_signature(self, path: Sequence[int]) -> np.ndarray:
        c = np.zeros(self.m)
        for u, v in zip(path[:-1], path[1:]):
            c = c + self.edge(u, v)
        return c


def edge_signatures(
    g: GridGraph,
    skeletons: SkeletonSet,
    cfg: QuadConfig = QuadConfig(),
    threads: int | None = None,
) -> EdgeSignatureCache:
    stats = QuadStats()
    if len(skeletons) == 0 or len(g.segments) == 0:
        return EdgeSignatureCache(np.zeros((len(g.segments), len(skeletons))), g, stats)
    try:
        vals = phi_matrix(g.segment_chain(), skeletons, cfg, threads, stats)
    except SingularProximityError as exc:
        if exc.index is not None:
            u, v = g.segments[exc.index]
            raise SingularProximityError(
                f"edge {exc.index} ({g.coords[u].tolist()} -> {g.coords[v].tolist()}) passes too close "
                f"to skeleton {exc.entity!r}; refine the grid or enlarge the blocked region",
                exc.distance, f"edge {exc.index}", exc.index,
            ) from exc
        raise
    return EdgeSignatureCache(vals, g, stats)


# --- augmented search ---------------------------------------------------------


@dataclass(frozen=True)
class EnumerateK:
    k: int


@dataclass(frozen=True)
class TargetClass:
    signature: tuple[float, ...]


@dataclass
class ClassResult:
    signature: np.ndarray
    path: list[int]
    cost: float
    rank: int
    residue: np.ndarray | None = None

    def coordinates(self, g: GridGraph) -> np.ndarray:
        return g.coords[self.path]


@dataclass
class SearchStats:
    expansions: int = 0
    states: int = 0


class _StateTable:
    """Augmented vertices keyed by (grid vertex, signature bucket)."""

    def __init__(self, eps_key: float):
        self.eps = eps_key
        self.index: dict[tuple, list[int]] = {}
        self.vertex: list[int] = []
        self.c: list[tuple[float, ...]] = []
        self.key: list[tuple[float, ...]] = []
        self.g: list[float] = []
        self.parent: list[int] = []
        self.closed: list[bool] = []

    def _bucket(self, key):
        return tuple(int(round(x / self.eps)) for x in key)

    def find(self, v: int, key) -> int:
        b = self._bucket(key)
        for cand in (b, *self._neighbours(b)):
            for s in self.index.get((v, cand), ()):
                if max((abs(a - b2) for a, b2 in zip(self.key[s], key)), default=0.0) < self.eps:
                    return s
        return -1

    @staticmethod
    def _neighbours(b):
        for off in itertools.product((-1, 0, 1), repeat=len(b)):
            if any(off):
                yield tuple(x + o for x, o in zip(b, off))

    def add(self, v: int, c, key, g: float, parent: int) -> int:
        sid = len(self.vertex)
        self.vertex.append(v)
        self.c.append(c)
        self.key.append(key)
        self.g.append(g)
        self.parent.append(parent)
        self.closed.append(False)
        self.index.setdefault((v, self._bucket(key)), []).append(sid)
        return sid

    def path(self, sid: int) -> list[int]:
        out = []
        while sid >= 0:
            out.append(self.vertex[sid])
            sid = self.parent[sid]
        return out[::-1]


def _astar(
    g: GridGraph,
    edge_sig: np.ndarray,
    start: int,
    heuristic: np.ndarray,
    accept: Callable[[int, int, _StateTable], bool],
    canon: Callable[[tuple], tuple] = lambda c: c,
    weights: np.ndarray | None = None,
    expandable: np.ndarray | None = None,
    eps_key: float = 0.5,
    budget: int = DEFAULT_BUDGET,
    stats: SearchStats | None = None,
):
    """A* over the implicit augmented graph.

    ``accept(sid, rank_so_far, table)`` is called for each closed state and
    returns True to stop. Ties on f are broken by the canonical signature
    (lexicographic) and then by vertex id. States whose vertex is not
    ``expandable`` are closed but never expanded.
    """
    stats = stats if stats is not None else SearchStats()
    m = edge_sig.shape[1]
    esig = [tuple(row) for row in edge_sig.tolist()]
    wts = (weights if weights is not None else g.weight).tolist()
    nbr = g.nbr.tolist()
    indptr = g.indptr.tolist()
    h = heuristic.tolist()
    exp_ok = expandable.tolist() if expandable is not None else None
    table = _StateTable(eps_key)
    c0 = (0.0,) * m
    k0 = canon(c0)
    s0 = table.add(start, c0, k0, 0.0, -1)
    heap = [(h[start], k0, start, s0)]
    while heap:
        f, _, v, sid = heapq.heappop(heap)
        if table.closed[sid] or f > table.g[sid] + h[v]:
            continue
        table.closed[sid] = True
        if accept(sid, stats, table):
            return table
        if exp_ok is not None and not exp_ok[v]:
            continue
        stats.expansions += 1
        if stats.expansions > budget:
            raise SearchBudgetExceeded(f"expansion budget {budget} exhausted")
        gv, cv = table.g[sid], table.c[sid]
        for e in range(indptr[v], indptr[v + 1]):
            u = nbr[e]
            es = esig[e]
            cu = tuple(a + b for a, b in zip(cv, es))
            ku = canon(cu)
            gu = gv + wts[e]
            t = table.find(u, ku)
            if t < 0:
                t = table.add(u, cu, ku, gu, sid)
                stats.states += 1
            elif table.closed[t] or gu >= table.g[t]:
                continue
            else:
                table.g[t], table.c[t], table.key[t], table.parent[t] = gu, cu, ku, sid
            heapq.heappush(heap, (gu + h[u], ku, u, t))
    return table


def euclidean_heuristic(g: GridGraph, goal: int) -> np.ndarray:
    return np.linalg.norm(g.coords - g.coords[goal], axis=1)


def augmented_search(
    g: GridGraph,
    cache: EdgeSignatureCache,
    v_s: int,
    v_g: int,
    mode: EnumerateK | TargetClass,
    eps_key: float = 0.5,
    budget: int = DEFAULT_BUDGET,
    stats: SearchStats | None = None,
) -> list[ClassResult]:
    """Least-cost paths from ``v_s`` to ``v_g`` in distinct homology classes.

    ``EnumerateK(k)`` returns the first k goal classes in nondecreasing cost;
    ``TargetClass(c)`` returns the single cheapest path whose signature is
    within ``eps_key`` of ``c``. An empty list means the goal is unreachable.
    """
    _check_vertices(g, v_s, v_g)
    return _run_search(g, cache.directed(), v_s, v_g, mode, euclidean_heuristic(g, v_g),
                       eps_key=eps_key, budget=budget, stats=stats)


def _check_vertices(g: GridGraph, *vertices) -> None:
    for v in vertices:
        if v is not None and not 0 <= v < g.n_vertices:
            raise PlanningError(f"vertex {v} not in graph")


def _run_search(g, edge_sig, v_s, v_g, mode, heuristic, canon=None, weights=None,
                expandable=None, goal_test=None, finish=None, eps_key=0.5, budget=DEFAULT_BUDGET,
                stats=None, target_match=None, residues=False):
    _check_vertices(g, v_s, v_g)
    if isinstance(mode, EnumerateK) and mode.k < 1:
        raise PlanningError("k must be >= 1")
    canon = canon or (lambda c: c)
    goal_test = goal_test or (lambda v: v == v_g)
    finish = finish or (lambda table, sid: (table.path(sid), table.g[sid], table.c[sid], table.key[sid]))
    found: list[ClassResult] = []
    seen: list[tuple] = []

    def matches(a, b):
        return max((abs(x - y) for x, y in zip(a, b)), default=0.0) < eps_key

    def accept(sid, _stats, table):
        if not goal_test(table.vertex[sid]):
            return False
        path, cost, c, key = finish(table, sid)
        if any(matches(key, k) for k in seen):
            return False
        seen.append(key)
        if isinstance(mode, TargetClass):
            ok = target_match(c, key) if target_match else matches(c, mode.signature)
            if not ok:
                return False
        found.append(ClassResult(np.array(c), path, cost, len(found) + 1,
                                 np.array(key) if residues else None))
        return isinstance(mode, TargetClass) or len(found) >= mode.k

    try:
        _astar(g, edge_sig, v_s, heuristic, accept, canon, weights, expandable, eps_key, budget, stats)
    except SearchBudgetExceeded as exc:
        exc.partial = found
        raise
    if isinstance(mode, TargetClass) and not found:
        raise NoPathError("target class unreachable")
    return found


def next_class_candidates(known: Sequence[Sequence[float]], radius: int, eps_key: float = 0.5) -> list[np.ndarray]:
    """Known signatures plus every integer offset with |zeta|_inf <= radius."""
    if not len(known):
        raise ValueError("need at least one known signature")
    out: list[np.ndarray] = []
    m = len(known[0])
    for c in known:
        for z in itertools.product(range(-radius, radius + 1), repeat=m):
            cand = np.asarray(c, float) + np.asarray(z, float)
            if not any(np.max(np.abs(cand - o), initial=0.0) < eps_key for o in out):
                out.append(cand)
    return out


def path_cost(g: GridGraph, path: Sequence[int], weights: np.ndarray | None = None) -> float:
    w = weights if weights is not None else g.weight
    total = 0.0
    for u, v in zip(path[:-1], path[1:]):
        total += float(w[g.edge_between(u, v)])
    return total


def mean_edge_weight(g: GridGraph) -> float:
    return float(np.mean(g.weight)) if len(g.weight) else 1.0

