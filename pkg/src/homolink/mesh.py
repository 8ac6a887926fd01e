"""Embedded simplicial chains, their boundary, and parametric samplers.

A :class:`Chain` stores its simplices as integer rows into a shared vertex
array, so meshes built by the samplers reuse vertex points and facets cancel
exactly under :func:`boundary`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

EPS_DEGEN = 1e-12
EPS_SING = 1e-6


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Simplex:
    """Oriented linear simplex; orientation is the vertex order."""

    vertices: np.ndarray  # (k+1, D)

    @property
    def dim(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def D(self) -> int:
        return self.vertices.shape[1]

    def jacobian(self) -> np.ndarray:
        """Columns ``v_i - v_0``; shape (D, k)."""
        return (self.vertices[1:] - self.vertices[0]).T


def _gram_volume(J: np.ndarray) -> np.ndarray:
    # J: (S, D, k) -> k-dimensional parallelotope volume
    k = J.shape[-1]
    if k == 0:
        return np.ones(J.shape[0])
    G = np.einsum("sdi,sdj->sij", J, J)
    return np.sqrt(np.clip(np.linalg.det(G), 0.0, None))


@dataclass(frozen=True)
class Chain:
    """Integer combination of oriented k-simplices in R^D.

    ``points`` is a (V, D) array, ``cells`` a (S, k+1) index array and
    ``coeffs`` the nonzero integer weight of each simplex.
    """

    points: np.ndarray
    cells: np.ndarray
    coeffs: np.ndarray
    dim: int = field(default=-1)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float) + 0.0  # drop -0.0
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise MeshError("points must be a (V, D) array")
        if not np.all(np.isfinite(pts)):
            raise MeshError("non-finite vertex coordinates")
        cells = np.asarray(self.cells, dtype=np.int64)
        if cells.ndim != 2:
            cells = cells.reshape(-1, max(self.dim, 0) + 1)
        coeffs = np.asarray(self.coeffs, dtype=np.int64).reshape(-1)
        if coeffs.shape[0] != cells.shape[0]:
            raise MeshError("one coefficient per simplex required")
        if np.any(coeffs == 0):
            raise MeshError("chain coefficients must be nonzero")
        dim = cells.shape[1] - 1
        if self.dim >= 0 and self.dim != dim:
            raise MeshError(f"cells have dimension {dim}, expected {self.dim}")
        if cells.size and (cells.min() < 0 or cells.max() >= pts.shape[0]):
            raise MeshError("cell index out of range")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "dim", dim)
        if dim >= 1 and len(cells):
            verts = pts[cells]
            diam = _diameters(verts)
            vol = _gram_volume(np.swapaxes(verts[:, 1:] - verts[:, :1], 1, 2))
            bad = vol <= EPS_DEGEN * diam**dim
            if np.any(bad):
                raise MeshError(f"{int(bad.sum())} degenerate simplices (first: #{int(np.argmax(bad))})")
        pts.flags.writeable = False
        cells.flags.writeable = False
        coeffs.flags.writeable = False

    @property
    def D(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.cells.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def simplex_vertices(self) -> np.ndarray:
        """(S, k+1, D) array of simplex vertex coordinates."""
        return self.points[self.cells]

    def simplices(self) -> Iterator[tuple[Simplex, int]]:
        for cell, c in zip(self.cells, self.coeffs):
            yield Simplex(self.points[cell]), int(c)

    def __neg__(self) -> Chain:
        return Chain(self.points, self.cells, -self.coeffs)

    def __add__(self, other: Chain) -> Chain:
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        if other.D != self.D or other.dim != self.dim:
            raise MeshError("cannot add chains of different dimension")
        pts = np.vstack([self.points, other.points])
        cells = np.vstack([self.cells, other.cells + len(self.points)])
        return Chain(pts, cells, np.concatenate([self.coeffs, other.coeffs]))

    def __sub__(self, other: Chain) -> Chain:
        return self + (-other)

    def scaled(self, factor: int) -> Chain:
        return Chain(self.points, self.cells, self.coeffs * int(factor))

    def translated(self, shift: Sequence[float]) -> Chain:
        return Chain(self.points + np.asarray(shift, float), self.cells, self.coeffs)

    @classmethod
    def empty(cls, D: int, dim: int) -> Chain:
        return cls(np.zeros((0, D)), np.zeros((0, dim + 1), np.int64), np.zeros(0, np.int64))


def _diameters(verts: np.ndarray) -> np.ndarray:
    k1 = verts.shape[1]
    d = np.zeros(verts.shape[0])
    for i, j in combinations(range(k1), 2):
        d = np.maximum(d, np.linalg.norm(verts[:, i] - verts[:, j], axis=1))
    return d


def _perm_sign(seq) -> int:
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


def boundary(c: Chain) -> Chain:
    """Simplicial boundary with facets identified by exact vertex coordinates."""
    if c.dim < 1:
        raise MeshError("boundary needs a chain of dimension >= 1")
    keys = [row.tobytes() for row in c.points]
    acc: dict[tuple[bytes, ...], int] = {}
    first: dict[tuple[bytes, ...], tuple[int, ...]] = {}
    for cell, coeff in zip(c.cells.tolist(), c.coeffs.tolist()):
        for i in range(len(cell)):
            facet = cell[:i] + cell[i + 1:]
            fk = [keys[v] for v in facet]
            order = sorted(range(len(facet)), key=lambda t: fk[t])
            canon = tuple(fk[t] for t in order)
            s = (-1) ** i * _perm_sign(order)
            acc[canon] = acc.get(canon, 0) + s * coeff
            if canon not in first:
                first[canon] = tuple(facet[t] for t in order)
    live = [k for k, v in acc.items() if v != 0]
    if not live:
        return Chain.empty(c.D, c.dim - 1)
    used = sorted({v for k in live for v in first[k]})
    remap = {v: i for i, v in enumerate(used)}
    cells = np.array([[remap[v] for v in first[k]] for k in live], dtype=np.int64)
    return Chain(c.points[used], cells, np.array([acc[k] for k in live], dtype=np.int64))


def is_cycle(c: Chain) -> bool:
    return c.dim == 0 or boundary(c).is_empty


def _embed(local: np.ndarray, D: int, axes: Sequence[int], center) -> np.ndarray:
    pts = np.zeros((local.shape[0], D))
    for j, ax in enumerate(axes):
        pts[:, ax] = local[:, j]
    if center is not None:
        pts += np.asarray(center, float)
    return pts


def sample_sphere(
    radius: float,
    res: tuple[int, int] = (16, 32),
    D: int = 5,
    axes: Sequence[int] = (0, 1, 2),
    center: Sequence[float] | None = None,
    reverse: bool = False,
) -> Chain:
    """Triangulated 2-sphere in the coordinate 3-plane spanned by ``axes``.

    Parametrised by latitude theta in [-pi/2, pi/2] and longitude phi,
    ``(cos t cos p, cos t sin p, sin t)``; orientation follows the (theta, phi)
    parameter order. Poles are triangle fans, so the mesh has
    ``2 * n_theta * n_phi - 2 * n_phi`` triangles.
    """
    n_t, n_p = res
    if radius <= 0:
        raise MeshError("sphere radius must be positive")
    if n_t < 3 or n_p < 3:
        raise MeshError("sphere resolution must be at least 3x3")
    if D < 3 or len(axes) != 3 or len(set(axes)) != 3 or max(axes) >= D:
        raise MeshError("sphere needs D >= 3 and three distinct axes")
    theta = -np.pi / 2 + np.pi * np.arange(1, n_t) / n_t
    phi = 2 * np.pi * np.arange(n_p) / n_p
    T, P = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), np.sin(T)], -1).reshape(-1, 3)
    local = radius * np.vstack([[0.0, 0.0, -1.0], ring, [0.0, 0.0, 1.0]])
    south, north = 0, local.shape[0] - 1

    def vid(i, j):  # ring i in 0..n_t-2
        return 1 + i * n_p + (j % n_p)

    tris = []
    for j in range(n_p):
        tris.append((south, vid(0, j), vid(0, j + 1)))
    for i in range(n_t - 2):
        for j in range(n_p):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    for j in range(n_p):
        tris.append((vid(n_t - 2, j), north, vid(n_t - 2, j + 1)))
    cells = np.array(tris, dtype=np.int64)
    if reverse:
        cells = cells[:, [0, 2, 1]]
    return Chain(_embed(local, D, axes, center), cells, np.ones(len(cells), np.int64))


def sample_torus(
    r: float,
    R_T: float,
    res: tuple[int, int] = (24, 24),
    D: int = 5,
    axes: Sequence[int] = (2, 3, 4),
    center: Sequence[float] | None = None,
    reverse: bool = False,
) -> Chain:
    """Triangulated 2-torus ``((R_T + r cos f) cos t, (R_T + r cos f) sin t, r sin f)``.

    The three local coordinates go to ``axes``. With ``center=None`` the torus
    is shifted by ``-(R_T + r)`` along ``axes[0]`` so that it passes through
    the origin (the placement used in the 5-D torus scenario). Each parameter
    quad is split along its (i, j)-(i+1, j+1) diagonal.
    """
    n_t, n_f = res
    if not R_T > r > 0:
        raise MeshError("torus needs R_T > r > 0")
    if n_t < 3 or n_f < 3:
        raise MeshError("torus resolution must be at least 3x3")
    if len(axes) != 3 or len(set(axes)) != 3 or max(axes) >= D:
        raise MeshError("torus needs three distinct axes below D")
    t = 2 * np.pi * np.arange(n_t) / n_t
    f = 2 * np.pi * np.arange(n_f) / n_f
    T, F = np.meshgrid(t, f, indexing="ij")
    rad = R_T + r * np.cos(F)
    local = np.stack([rad * np.cos(T), rad * np.sin(T), r * np.sin(F)], -1).reshape(-1, 3)
    if center is None:
        center = np.zeros(D)
        center[axes[0]] = -(R_T + r)

    def vid(i, j):
        return (i % n_t) * n_f + (j % n_f)

    tris = []
    for i in range(n_t):
        for j in range(n_f):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    cells = np.array(tris, dtype=np.int64)
    if reverse:
        cells = cells[:, [0, 2, 1]]
    return Chain(_embed(local, D, axes, center), cells, np.ones(len(cells), np.int64))


def sample_polyline_loop(points, closed: bool = True) -> Chain:
    """1-chain of oriented segments through ``points`` (wrapping if closed)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise MeshError("polyline needs at least two points")
    n = len(pts)
    if closed and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
        n -= 1
    nxt = np.roll(pts, -1, axis=0)
    steps = range(n) if closed else range(n - 1)
    for i in steps:
        if np.array_equal(pts[i], nxt[i]):
            raise MeshError(f"duplicate consecutive points at index {i}")
    if closed and n < 3:
        raise MeshError("closed polyline needs at least three distinct points")
    cells = [(i, (i + 1) % n) for i in steps]
    return Chain(pts, np.array(cells, dtype=np.int64), np.ones(len(cells), np.int64))


def sample_circle(
    radius: float,
    n: int = 64,
    D: int = 3,
    axes: Sequence[int] = (0, 1),
    center: Sequence[float] | None = None,
    reverse: bool = False,
) -> Chain:
    """Regular n-gon approximating a circle, counter-clockwise in the (axes) plane."""
    a = 2 * np.pi * np.arange(n) / n
    if reverse:
        a = -a
    local = radius * np.stack([np.cos(a), np.sin(a)], -1)
    return sample_polyline_loop(_embed(local, D, axes, center), closed=True)


def point_chain(p: Sequence[float], coeff: int = 1) -> Chain:
    """0-chain holding a single weighted point."""
    p = np.asarray(p, dtype=float).reshape(1, -1)
    return Chain(p, np.zeros((1, 1), np.int64), np.array([coeff]))


@dataclass(frozen=True)
class SkeletonSet:
    skeletons: tuple[Chain, ...]
    labels: tuple[str, ...]

    def __init__(self, skeletons: Sequence[Chain], labels: Sequence[str] | None = None):
        skeletons = tuple(skeletons)
        if labels is None:
            labels = tuple(f"S{i + 1}" for i in range(len(skeletons)))
        if len(labels) != len(skeletons):
            raise MeshError("one label per skeleton required")
        object.__setattr__(self, "skeletons", skeletons)
        object.__setattr__(self, "labels", tuple(labels))

    def __len__(self) -> int:
        return len(self.skeletons)

    def __iter__(self):
        return iter(zip(self.labels, self.skeletons))


@dataclass
class Violation:
    label: str
    kind: str  # "dimension" | "not a cycle" | "not disjoint" | "ambient"
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"{v.label}: {v.kind}: {v.message}" for v in self.violations)


def _faces(n: int) -> list[tuple[int, ...]]:
    return [f for k in range(1, n + 1) for f in combinations(range(n), k)]


def simplex_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Exact distance between two simplices given as vertex arrays.

    Every pair of faces is tried: the closest points of their affine hulls
    count when both have nonnegative barycentric coordinates. Vertex pairs
    always qualify, so the minimum is well defined.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    best = float(np.min(np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)))
    for fa in _faces(len(a)):
        for fb in _faces(len(b)):
            if len(fa) == 1 and len(fb) == 1:
                continue
            p0, q0 = a[fa[0]], b[fb[0]]
            M = np.hstack([(a[list(fa[1:])] - p0).T, -(b[list(fb[1:])] - q0).T])
            coef = np.linalg.lstsq(M, q0 - p0, rcond=None)[0]
            s, t = coef[: len(fa) - 1], coef[len(fa) - 1:]
            tol = -1e-12
            if np.any(s < tol) or np.any(t < tol) or s.sum() > 1 - tol or t.sum() > 1 - tol:
                continue
            best = min(best, float(np.linalg.norm(p0 + M[:, : len(s)] @ s - q0 + M[:, len(s):] @ t)))
    return best


def chain_distance(c1: Chain, c2: Chain, cutoff: float = np.inf) -> float:
    """Minimum distance between the supports of two chains.

    Simplex pairs are pruned with bounding balls; only pairs that can come
    closer than ``cutoff`` (and the current best) are solved exactly.
    """
    if c1.is_empty or c2.is_empty:
        return np.inf
    v1, v2 = c1.simplex_vertices(), c2.simplex_vertices()
    cen1, cen2 = v1.mean(axis=1), v2.mean(axis=1)
    rad1 = np.linalg.norm(v1 - cen1[:, None], axis=2).max(axis=1)
    rad2 = np.linalg.norm(v2 - cen2[:, None], axis=2).max(axis=1)
    best = np.inf
    for i in range(len(v1)):
        dc = np.linalg.norm(cen2 - cen1[i], axis=1)
        lower = dc - rad1[i] - rad2
        upper = dc + rad1[i] + rad2
        best = min(best, float(upper.min()))
        for j in np.nonzero(lower < min(best, cutoff))[0]:
            best = min(best, simplex_distance(v1[i], v2[j]))
    return best


def validate_skeleton_set(s: SkeletonSet, D: int, N: int, eps_sing: float = EPS_SING) -> ValidationReport:
    """Check dimensions, closedness and pairwise disjointness; never raises."""
    report = ValidationReport()
    if N < 2 or N > D:
        report.violations.append(Violation("*", "dimension", f"need 2 <= N <= D, got D={D}, N={N}"))
    for label, chain in s:
        if chain.D != D:
            report.violations.append(Violation(label, "ambient", f"lives in R^{chain.D}, scene is R^{D}"))
            continue
        if chain.dim != D - N:
            report.violations.append(
                Violation(label, "dimension", f"dimension {chain.dim}, expected D-N={D - N}")
            )
        if chain.is_empty:
            report.violations.append(Violation(label, "not a cycle", "empty chain"))
        elif chain.dim >= 1 and not is_cycle(chain):
            nb = len(boundary(chain))
            report.violations.append(Violation(label, "not a cycle", f"boundary has {nb} simplices"))
    items = [(lab, c) for lab, c in s if c.D == D]
    for (la, ca), (lb, cb) in combinations(items, 2):
        d = chain_distance(ca, cb, cutoff=eps_sing * 2)
        if d <= eps_sing:
            report.violations.append(
                Violation(f"{la}/{lb}", "not disjoint", f"distance {d:.3g} <= eps_sing={eps_sing:g}")
            )
    return report


def format_mesh(c: Chain) -> str:
    """Serialise to the plain-text mesh format.

    Header ``D k m`` (ambient dimension, simplex dimension, vertex count),
    then ``m`` coordinate lines, then one line per simplex holding ``k+1``
    vertex indices followed by its integer coefficient.
    """
    lines = [f"{c.D} {c.dim} {len(c.points)}"]
    lines += [" ".join(format(x, ".17g") for x in row) for row in c.points.tolist()]
    lines += [" ".join(map(str, cell)) + f" {coef}" for cell, coef in zip(c.cells.tolist(), c.coeffs.tolist())]
    return "\n".join(lines) + "\n"


def parse_mesh(text: str) -> Chain:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 3:
        raise MeshError("mesh header must be 'D k m'")
    D, k, m = (int(t) for t in rows[0])
    if len(rows) < 1 + m:
        raise MeshError(f"expected {m} vertex lines")
    pts = np.array([[float(t) for t in r] for r in rows[1 : 1 + m]]).reshape(m, D)
    cells, coeffs = [], []
    for n, r in enumerate(rows[1 + m :], start=2 + m):
        if len(r) != k + 2:
            raise MeshError(f"simplex line {n}: expected {k + 2} fields, got {len(r)}")
        cells.append([int(t) for t in r[:-1]])
        coeffs.append(int(r[-1]))
    return Chain(pts, np.array(cells, dtype=np.int64).reshape(-1, k + 1), np.array(coeffs, dtype=np.int64))


def read_mesh(path) -> Chain:
    with open(path, encoding="utf-8") as fh:
        return parse_mesh(fh.read())


def write_mesh(c: Chain, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_mesh(c))

