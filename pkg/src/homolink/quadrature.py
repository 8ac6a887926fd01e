"""Gauss rules on reference simplices and the adaptive simplex-pair integrator.

The integrator evaluates, for every pair (a, b) of simplices drawn from two
families, the vector moment

    V(a, b) = int_ref(a) int_ref(b) (x - x') / |x - x'|^D  du dv

over the reference parameter domains, splitting the larger simplex of a
pair by longest-edge bisection while it is large compared with the distance
between the pair. Callers contract ``V`` with the constant Jacobian data of
each pair; contributions are summed per originating simplex of the first
family in a fixed order, so results do not depend on the thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import os

import numba
import numpy as np
from scipy.special import roots_jacobi

from .mesh import simplex_distance

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

MAX_DEPTH_LIMIT = 12
BLOCK_PAIRS = 1 << 19


class SingularProximityError(RuntimeError):
    """An integration point came within ``eps_sing`` of the kernel singularity."""

    def __init__(
        self, message: str, distance: float = float("nan"), entity: str | None = None, index: int | None = None
    ):
        super().__init__(message)
        self.distance = distance
        self.entity = entity
        self.index = index


@dataclass(frozen=True)
class QuadConfig:
    order: int = 4
    max_depth: int = 12
    split_ratio: float = 0.5
    eps_sing: float = 1e-6

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("quadrature order must be >= 1")
        if not 0 < self.split_ratio <= 1:
            raise ValueError("split_ratio must lie in (0, 1]")
        if not 0 <= self.max_depth <= MAX_DEPTH_LIMIT:
            raise ValueError(f"max_depth must lie in 0..{MAX_DEPTH_LIMIT}")


@dataclass
class QuadStats:
    pairs: int = 0
    splits: int = 0
    max_depth: int = 0

    def merge(self, other: QuadStats) -> None:
        self.pairs += other.pairs
        self.splits += other.splits
        self.max_depth = max(self.max_depth, other.max_depth)


@lru_cache(maxsize=None)
def simplex_rule(k: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed (Duffy) tensor Gauss rule on the unit k-simplex.

    Collapsed coordinate j carries the Jacobian factor (1 - t_j)^(k-1-j),
    absorbed exactly by a Gauss-Jacobi rule, so polynomials of total degree
    <= 2 * order - 1 integrate exactly. Returns reference coordinates (Q, k)
    and weights (Q,) summing to 1/k!.
    """
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    axes = []
    for j in range(k):
        alpha = k - 1 - j
        x, w = roots_jacobi(order, alpha, 0.0)
        axes.append((0.5 * (x + 1.0), w / 2.0 ** (alpha + 1)))
    T = np.stack([g.reshape(-1) for g in np.meshgrid(*[a[0] for a in axes], indexing="ij")], -1)
    W = np.ones(T.shape[0])
    for wg in np.meshgrid(*[a[1] for a in axes], indexing="ij"):
        W *= wg.reshape(-1)
    U = np.empty_like(T)
    rem = np.ones(T.shape[0])
    for j in range(k):
        U[:, j] = T[:, j] * rem
        rem = rem * (1.0 - T[:, j])
    U.flags.writeable = False
    W.flags.writeable = False
    return U, W


def _map_nodes(verts: np.ndarray, U: np.ndarray) -> np.ndarray:
    # verts (S, k+1, D), U (Q, k) -> (S, Q, D)
    base = verts[:, :1, :]
    if U.shape[1] == 0:
        return np.repeat(base, U.shape[0], axis=1)
    J = verts[:, 1:, :] - base  # (S, k, D)
    return base + np.einsum("qk,skd->sqd", U, J)


@numba.njit(parallel=True, cache=True, fastmath=False)
def _moments(XA, XB, wA, wB, ia, ib, D):
    P = ia.shape[0]
    QA = XA.shape[1]
    QB = XB.shape[1]
    V = np.zeros((P, D))
    rmin = np.empty(P)
    half = D // 2
    odd = D % 2 == 1
    for p in numba.prange(P):
        a = ia[p]
        b = ib[p]
        best = np.inf
        for qa in range(QA):
            for qb in range(QB):
                r2 = 0.0
                for d in range(D):
                    s = XA[a, qa, d] - XB[b, qb, d]
                    r2 += s * s
                den = 1.0
                for _ in range(half):
                    den *= r2
                if odd:
                    den *= math.sqrt(r2)
                if r2 < best:
                    best = r2
                c = wA[qa] * wB[qb] / den
                for d in range(D):
                    V[p, d] += c * (XA[a, qa, d] - XB[b, qb, d])
        rmin[p] = math.sqrt(best)
    return V, rmin


class _Pool:
    """Growable family of simplices with cached geometry."""

    def __init__(self, verts: np.ndarray, origin: np.ndarray, U: np.ndarray, minors_fn):
        self.U = U
        self.minors_fn = minors_fn
        self.verts = verts
        self.origin = origin
        self._geometry(verts)
        self.nodes = _map_nodes(verts, U)
        self.minors = minors_fn(verts)

    def _geometry(self, verts):
        self.centroid = verts.mean(axis=1)
        k1 = verts.shape[1]
        diam = np.zeros(verts.shape[0])
        for i in range(k1):
            for j in range(i + 1, k1):
                diam = np.maximum(diam, np.linalg.norm(verts[:, i] - verts[:, j], axis=1))
        self.diam = diam
        self.radius = np.linalg.norm(verts - self.centroid[:, None], axis=2).max(axis=1)

    def bisect(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Append both halves of each simplex in ``idx``; return their pool ids."""
        v = self.verts[idx]
        k1 = v.shape[1]
        best = np.full(len(idx), -1.0)
        bi = np.zeros(len(idx), np.int64)
        bj = np.zeros(len(idx), np.int64)
        for i in range(k1):
            for j in range(i + 1, k1):
                L = np.linalg.norm(v[:, i] - v[:, j], axis=1)
                upd = L > best
                best = np.where(upd, L, best)
                bi = np.where(upd, i, bi)
                bj = np.where(upd, j, bj)
        rows = np.arange(len(idx))
        mid = 0.5 * (v[rows, bi] + v[rows, bj])
        c1 = v.copy()
        c1[rows, bj] = mid
        c2 = v.copy()
        c2[rows, bi] = mid
        new = np.concatenate([c1, c2])
        start = self.verts.shape[0]
        self.verts = np.concatenate([self.verts, new])
        self.origin = np.concatenate([self.origin, self.origin[idx], self.origin[idx]])
        cen, dia, rad = self.centroid, self.diam, self.radius
        self._geometry(new)
        self.centroid = np.concatenate([cen, self.centroid])
        self.diam = np.concatenate([dia, self.diam])
        self.radius = np.concatenate([rad, self.radius])
        self.nodes = np.concatenate([self.nodes, _map_nodes(new, self.U)])
        self.minors = np.concatenate([self.minors, self.minors_fn(new)])
        n = len(idx)
        return np.arange(start, start + n), np.arange(start + n, start + 2 * n)


def integrate_pairs(
    A: np.ndarray,
    B: np.ndarray,
    contract: Callable,
    width: int,
    cfg: QuadConfig,
    minors_A: Callable,
    minors_B: Callable,
    threads: int | None = None,
    stats: QuadStats | None = None,
) -> np.ndarray:
    """Adaptive quadrature over all pairs of simplices ``A[i] x B[j]``.

    ``A`` is (SA, n+1, D) and ``B`` is (SB, m+1, D). For every evaluated pair
    ``contract(V, minorsA, minorsB, ib_origin)`` returns a (P, width) array;
    the result is the (SA, width) sum of those rows per A simplex. Raises
    :class:`SingularProximityError` if a node pair is closer than eps_sing.
    """
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    SA, SB, D = A.shape[0], B.shape[0], A.shape[2]
    out = np.zeros((SA, width))
    if SA == 0 or SB == 0:
        return out
    UA, wA = simplex_rule(A.shape[1] - 1, cfg.order)
    UB, wB = simplex_rule(B.shape[1] - 1, cfg.order)
    stats = stats if stats is not None else QuadStats()
    rows_per_block = max(1, BLOCK_PAIRS // SB)
    for a0 in range(0, SA, rows_per_block):
        a1 = min(SA, a0 + rows_per_block)
        poolA = _Pool(A[a0:a1], np.arange(a0, a1), UA, minors_A)
        poolB = _Pool(B, np.arange(SB), UB, minors_B)
        ia = np.repeat(np.arange(a1 - a0), SB)
        ib = np.tile(np.arange(SB), a1 - a0)
        depth = 0
        while len(ia):
            dist = np.linalg.norm(poolA.centroid[ia] - poolB.centroid[ib], axis=1)
            dA, dB = poolA.diam[ia], poolB.diam[ib]
            near = np.maximum(dA, dB) > cfg.split_ratio * dist
            if depth >= cfg.max_depth:
                # out of refinement: nodes may straddle a true contact, so test the simplices
                for a, b in zip(ia[near], ib[near]):
                    r = simplex_distance(poolA.verts[a], poolB.verts[b])
                    if r <= cfg.eps_sing:
                        o = int(poolA.origin[a])
                        raise SingularProximityError(
                            f"simplex {o} touches skeleton simplex {int(poolB.origin[b])} (distance {r:.3g})",
                            distance=r, entity=f"simplex {o}", index=o,
                        )
                near[:] = False
            far = ~near
            if np.any(far):
                fa, fb = ia[far], ib[far]
                V, rmin = _moments(poolA.nodes, poolB.nodes, wA, wB, fa, fb, D)
                bad = rmin <= cfg.eps_sing
                if np.any(bad):
                    k = int(np.argmax(bad))
                    raise SingularProximityError(
                        f"integration node within {rmin[k]:.3g} of the skeleton "
                        f"(simplex {int(poolA.origin[fa[k]])} vs skeleton simplex {int(poolB.origin[fb[k]])})",
                        distance=float(rmin[k]),
                        entity=f"simplex {int(poolA.origin[fa[k]])}",
                        index=int(poolA.origin[fa[k]]),
                    )
                vals = contract(V, poolA.minors[fa], poolB.minors[fb], poolB.origin[fb])
                target = poolA.origin[fa]
                for c in range(width):
                    out[:, c] += np.bincount(target, weights=vals[:, c], minlength=SA)
                stats.pairs += len(fa)
                stats.max_depth = max(stats.max_depth, depth)
            if not np.any(near):
                break
            na, nb = ia[near], ib[near]
            split_a = poolA.diam[na] >= poolB.diam[nb]
            new_a, new_b = [], []
            if np.any(split_a):
                ua, inv = np.unique(na[split_a], return_inverse=True)
                c1, c2 = poolA.bisect(ua)
                bb = nb[split_a]
                new_a += [c1[inv], c2[inv]]
                new_b += [bb, bb]
                stats.splits += len(ua)
            if np.any(~split_a):
                ub, inv = np.unique(nb[~split_a], return_inverse=True)
                c1, c2 = poolB.bisect(ub)
                aa = na[~split_a]
                new_a += [aa, aa]
                new_b += [c1[inv], c2[inv]]
                stats.splits += len(ub)
            ia = np.concatenate(new_a)
            ib = np.concatenate(new_b)
            depth += 1
    return out
