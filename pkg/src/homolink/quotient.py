"""Homology classes relative to a collapsed subspace L.

Signatures of cycles lying in L form an integer lattice Q; two trajectories
ending in L are in the same relative class when their signatures differ by
an element of Q. Search keys are canonical residues modulo Q.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .invariant import phi_vector
from .mesh import SkeletonSet, sample_polyline_loop
from .planner import (
    DEFAULT_BUDGET,
    ClassResult,
    EdgeSignatureCache,
    EnumerateK,
    GridGraph,
    PlanningError,
    SearchStats,
    _check_vertices,
    _run_search,
    euclidean_heuristic,
    mean_edge_weight,
)
from .quadrature import QuadConfig

_TIE = 1e-9


def hermite_basis(vectors: Sequence[Sequence[int]]) -> np.ndarray:
    """Row Hermite normal form of the integer span of ``vectors`` (zero rows dropped)."""
    rows = [list(map(int, v)) for v in vectors if any(int(x) for x in v)]
    if not rows:
        return np.zeros((0, len(vectors[0]) if len(vectors) else 0), dtype=np.int64)
    m = len(rows[0])
    basis: list[list[int]] = []
    col = 0
    while rows and col < m:
        nz = [r for r in rows if r[col] != 0]
        rows = [r for r in rows if r[col] == 0]
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            pivot = nz[0]
            rest = []
            for r in nz[1:]:
                q = r[col] // pivot[col]
                r = [a - q * b for a, b in zip(r, pivot)]
                (rest if r[col] != 0 else rows).append(r)
            nz = [pivot] + rest
        if nz:
            pivot = nz[0]
            if pivot[col] < 0:
                pivot = [-a for a in pivot]
            basis.append(pivot)
        rows = [r for r in rows if any(r)]
        col += 1
    for i, b in enumerate(basis):
        c = next(j for j, x in enumerate(b) if x)
        for prev in range(i):
            q = basis[prev][c] // b[c]
            basis[prev] = [a - q * x for a, x in zip(basis[prev], b)]
    return np.array(basis, dtype=np.int64)


def _rank(rows: list[list[Fraction]]) -> int:
    rows = [r[:] for r in rows]
    rank, ncol = 0, len(rows[0]) if rows else 0
    for c in range(ncol):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class QLattice:
    """Integer lattice spanned by the rows of ``basis`` in Z^m."""

    basis: np.ndarray
    m: int
    eps_q: float = 0.05

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=np.int64).reshape(-1, self.m)
        if len(B) and _rank([[Fraction(int(x)) for x in row] for row in B]) != len(B):
            raise ValueError("Q basis vectors must be linearly independent")
        object.__setattr__(self, "basis", B)

    @classmethod
    def trivial(cls, m: int, eps_q: float = 0.05) -> QLattice:
        return cls(np.zeros((0, m), np.int64), m, eps_q)

    @classmethod
    def from_signatures(cls, sigs: Sequence[Sequence[float]], m: int, eps_int: float = 0.05,
                        eps_q: float = 0.05) -> QLattice:
        """Lattice generated by cycle signatures, which must be near-integral."""
        ints = []
        for s in sigs:
            s = np.asarray(s, float)
            r = np.rint(s)
            if np.max(np.abs(s - r), initial=0.0) >= eps_int:
                raise ValueError(f"generator signature {s.tolist()} is not integral within {eps_int}")
            ints.append(r.astype(np.int64))
        return cls(hermite_basis(ints) if ints else np.zeros((0, m), np.int64), m, eps_q)

    def coefficients(self, v) -> np.ndarray:
        """Least-squares coordinates of ``v`` on the basis."""
        B = self.basis.astype(float)
        if not len(B):
            return np.zeros(0)
        return np.linalg.solve(B @ B.T, B @ np.asarray(v, float))

    def reduce(self, v) -> np.ndarray:
        """Canonical residue: subtract the rounded projection.

        Coordinates are rounded half-down (a margin keeps exact halves from
        flipping), so residue coordinates lie in (-1/2, 1/2] and every
        element of a coset reduces to the same vector.
        """
        v = np.asarray(v, float)
        if not len(self.basis):
            return v.copy()
        a = self.coefficients(v)
        r = np.floor(a + 0.5 - _TIE)
        if not np.any(r):
            return v.copy()
        return v - r @ self.basis

    def contains(self, v) -> bool:
        return q_membership(v, self)


def q_membership(v, q: QLattice) -> bool:
    """True iff ``v`` is within eps_Q of an integer combination of the basis.

    ``v`` is rounded to the nearest integer vector, then solved against the
    basis exactly in rationals; the coefficients must be integral.
    """
    v = np.asarray(v, float)
    r = np.rint(v)
    if np.max(np.abs(v - r), initial=0.0) >= q.eps_q:
        return False
    target = [Fraction(int(x)) for x in r]
    if not len(q.basis):
        return not any(target)
    nb = len(q.basis)
    # augmented system  sum_i a_i B_i = target, columns are coordinates
    rows = [[Fraction(int(q.basis[i][j])) for i in range(nb)] + [target[j]] for j in range(q.m)]
    rank = 0
    for c in range(nb):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        rows[rank] = [x / pr[c] for x in pr]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    if any(rows[i][-1] != 0 for i in range(rank, len(rows))):
        return False
    return all(rows[i][-1].denominator == 1 for i in range(rank))


# --- subspace L ---------------------------------------------------------------


@dataclass
class SubspaceSpec:
    """Vertices of the collapsed region L and optional generator loops."""

    mask: np.ndarray  # (V,) bool over graph vertices
    generators: list[np.ndarray] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.mask))


def l_edge_mask(g: GridGraph, L: np.ndarray) -> np.ndarray:
    src = np.repeat(np.arange(g.n_vertices), np.diff(g.indptr))
    return L[src] & L[g.nbr]


def boundary_of(g: GridGraph, L: np.ndarray) -> np.ndarray:
    src = np.repeat(np.arange(g.n_vertices), np.diff(g.indptr))
    touches = np.zeros(g.n_vertices, bool)
    np.logical_or.at(touches, src, ~L[g.nbr])
    return L & touches


def lattice_from_loops(loops: Sequence, skeletons: SkeletonSet, cfg: QuadConfig = QuadConfig(),
                       eps_int: float = 0.05, eps_q: float = 0.05) -> QLattice:
    sigs = [phi_vector(sample_polyline_loop(p, closed=True), skeletons, cfg).values for p in loops]
    return QLattice.from_signatures(sigs, len(skeletons), eps_int, eps_q)


def lattice_from_subgraph(g: GridGraph, cache: EdgeSignatureCache, L: np.ndarray,
                          eps_int: float = 0.05, eps_q: float = 0.05) -> QLattice:
    """Q from the fundamental cycles of a spanning forest of the L-subgraph."""
    m = cache.m
    if m == 0:
        return QLattice.trivial(0, eps_q)
    esig = cache.directed()
    inL = l_edge_mask(g, L)
    pot = np.full((g.n_vertices, m), np.nan)
    for root in np.nonzero(L)[0]:
        if not np.isnan(pot[root, 0]):
            continue
        pot[root] = 0.0
        stack = [int(root)]
        while stack:
            u = stack.pop()
            for e in range(g.indptr[u], g.indptr[u + 1]):
                v = int(g.nbr[e])
                if inL[e] and np.isnan(pot[v, 0]):
                    pot[v] = pot[u] + esig[e]
                    stack.append(v)
    src = np.repeat(np.arange(g.n_vertices), np.diff(g.indptr))
    sel = inL & (src < g.nbr)
    cyc = pot[src[sel]] + esig[sel] - pot[g.nbr[sel]]
    r = np.rint(cyc)
    if len(cyc) and np.max(np.abs(cyc - r)) >= eps_int:
        raise PlanningError("L-subgraph cycle signature is not integral; check skeleton clearance")
    distinct = np.unique(r.astype(np.int64), axis=0) if len(r) else np.zeros((0, m), np.int64)
    return QLattice(hermite_basis(distinct) if len(distinct) else np.zeros((0, m), np.int64), m, eps_q)


# --- searches -------------------------------------------------------------------


def _weights_with_collapse(g: GridGraph, L: np.ndarray, eps_w: float | None) -> np.ndarray:
    w = g.weight.copy()
    if np.any(L):
        eps_w = 1e-6 * mean_edge_weight(g) if eps_w is None else eps_w
        w[l_edge_mask(g, L)] = eps_w
    return w


def _quotient_heuristic(g: GridGraph, goal: int, L: np.ndarray) -> np.ndarray:
    h = euclidean_heuristic(g, goal)
    if np.any(L):
        d, _ = cKDTree(g.coords[L]).query(g.coords)
        h = np.minimum(h, d)
    return h


def quotient_augmented_search(
    g: GridGraph,
    cache: EdgeSignatureCache,
    q: QLattice,
    v_s: int,
    v_goal: int,
    k: int,
    L: np.ndarray | None = None,
    eps_key: float = 0.5,
    eps_w: float | None = None,
    budget: int = DEFAULT_BUDGET,
    stats: SearchStats | None = None,
) -> list[ClassResult]:
    """First ``k`` classes of trajectories modulo Q, in cost order.

    Edges inside L cost ``eps_w`` (default 1e-6 of the mean edge weight).
    Each result carries its canonical residue in ``residue``.
    """
    _check_vertices(g, v_s, v_goal)
    L = np.zeros(g.n_vertices, bool) if L is None else np.asarray(L, bool)
    if np.any(L) and not L[v_goal]:
        raise PlanningError("goal vertex must lie in L")
    weights = _weights_with_collapse(g, L, eps_w)

    def canon(c):
        return tuple(q.reduce(c).tolist()) if len(q.basis) else c

    return _run_search(g, cache.directed(), v_s, v_goal, EnumerateK(k), _quotient_heuristic(g, v_goal, L),
                       canon=canon, weights=weights if np.any(L) else None, eps_key=eps_key,
                       budget=budget, stats=stats, residues=True)


@dataclass
class LTree:
    """Shortest-path tree inside L rooted at the goal, with path signatures p(v)."""

    p: np.ndarray  # (V, m); nan outside the reachable part of L
    parent: np.ndarray
    cost: np.ndarray

    def path_to_goal(self, v: int) -> list[int]:
        out = [v]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out


def l_tree(g: GridGraph, cache: EdgeSignatureCache, L: np.ndarray, goal: int, eps_w: float) -> LTree:
    """Dijkstra inside L from the goal."""
    m = cache.m
    esig = cache.directed()
    inL = l_edge_mask(g, L)
    dist = np.full(g.n_vertices, np.inf)
    parent = np.full(g.n_vertices, -1, np.int64)
    p = np.full((g.n_vertices, m), np.nan)
    dist[goal] = 0.0
    p[goal] = 0.0
    heap = [(0.0, goal)]
    done = np.zeros(g.n_vertices, bool)
    w = np.where(inL, eps_w, g.weight)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(g.indptr[u], g.indptr[u + 1]):
            v = int(g.nbr[e])
            if inL[e] and d + w[e] < dist[v]:
                dist[v] = d + w[e]
                parent[v] = u
                p[v] = p[u] + esig[e]
                heapq.heappush(heap, (dist[v], v))
    return LTree(p, parent, dist)


def connected_quotient_search(
    g: GridGraph,
    cache: EdgeSignatureCache,
    q: QLattice,
    v_s: int,
    v_goal: int,
    k: int,
    L: np.ndarray,
    eps_key: float = 0.5,
    eps_w: float | None = None,
    budget: int = DEFAULT_BUDGET,
    stats: SearchStats | None = None,
) -> list[ClassResult]:
    """Quotient classes whose trajectories leave the outside of L only once.

    Phase 1 runs Dijkstra inside L from the goal, recording the signature
    p(v) of each tree path. Phase 2 runs Dijkstra from the start over the
    vertices outside L, stopping at the vertices of L that touch the
    outside; a boundary state (v, c) gets the class of c - p(v) modulo Q.
    Reported costs are the outside-L cost (L is collapsed to zero cost).
    """
    _check_vertices(g, v_s, v_goal)
    L = np.asarray(L, bool)
    if not L[v_goal]:
        raise PlanningError("goal vertex must lie in L")
    if L[v_s]:
        raise PlanningError("start vertex must lie outside L")
    dL = boundary_of(g, L)
    if not np.any(dL):
        raise PlanningError("boundary of L is empty")
    eps_w = 1e-6 * mean_edge_weight(g) if eps_w is None else eps_w
    tree = l_tree(g, cache, L, v_goal, eps_w)
    reach = dL & np.isfinite(tree.cost)
    if not np.any(reach):
        raise PlanningError("L boundary unreachable from the goal inside L")

    def canon(c):
        return tuple(q.reduce(c).tolist()) if len(q.basis) else c

    def finish(table, sid):
        v = table.vertex[sid]
        c = tuple(np.asarray(table.c[sid]) - tree.p[v])
        path = table.path(sid) + tree.path_to_goal(v)[1:]
        return path, table.g[sid], c, canon(c)

    expandable = ~L
    return _run_search(g, cache.directed(), v_s, None, EnumerateK(k), np.zeros(g.n_vertices),
                       canon=canon, expandable=expandable, goal_test=lambda v: bool(reach[v]),
                       finish=finish, eps_key=eps_key, budget=budget, stats=stats, residues=True)


def outside_components(path: Sequence[int], L: np.ndarray) -> int:
    """Number of maximal runs of ``path`` vertices lying outside L."""
    out = ~np.asarray(L, bool)[np.asarray(path, np.int64)]
    return int(np.sum(out & ~np.concatenate([[False], out[:-1]])))
