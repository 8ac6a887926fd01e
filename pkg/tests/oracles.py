"""Independent reference computations used by the test-suite.

Nothing here imports the package's numerical kernels; each oracle is a
direct, slow evaluation of the quantity it stands in for.
"""

from __future__ import annotations

import heapq
import math
from itertools import combinations, permutations

import numpy as np


# --- combinatorics ------------------------------------------------------------


def inversions(seq) -> int:
    return sum(1 for i, j in combinations(range(len(seq)), 2) if seq[i] > seq[j])


def brute_partitions(a, w):
    """Every split of ``a`` into a left part of size w and the rest, both
    kept in their original order, signed by the parity of the position
    sequence (left positions first), counted as transpositions."""
    out = []
    n = len(a)
    for left_pos in combinations(range(n), w):
        right_pos = [i for i in range(n) if i not in left_pos]
        sign = permutation_sign(list(left_pos) + right_pos)
        out.append((tuple(a[i] for i in left_pos), tuple(a[i] for i in right_pos), sign))
    return out


def permutation_sign(p) -> int:
    """Sign by counting transpositions in a selection sort."""
    p = list(p)
    s = 1
    for i in range(len(p)):
        j = p.index(min(p[i:]), i)
        if j != i:
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


# --- kernels --------------------------------------------------------------------


def sphere_area(D: int) -> float:
    # recursion A_{n} = 2 pi / (n-1) * A_{n-2} on the sphere in R^n
    if D == 1:
        return 2.0
    if D == 2:
        return 2 * math.pi
    return 2 * math.pi / (D - 2) * sphere_area(D - 2)


def determinant_kernel(sigma, tau, t, u) -> float:
    """(-1)^(D-N) det[s | J_tau | J_sigma] / (A |s|^D) at reference coords (t, u)."""
    sigma, tau = np.asarray(sigma, float), np.asarray(tau, float)
    D = sigma.shape[1]
    N = sigma.shape[0]
    Js = (sigma[1:] - sigma[0]).T
    Jt = (tau[1:] - tau[0]).T
    s = sigma[0] + Js @ np.asarray(t, float) - tau[0] - Jt @ np.asarray(u, float)
    M = np.column_stack([s, Jt, Js])
    return (-1) ** (D - N) * np.linalg.det(M) / (sphere_area(D) * np.linalg.norm(s) ** D)


# --- linking by intersection counting ---------------------------------------------


def _segment_triangle(p, q, a, b, c):
    """Signed crossing of segment p->q with oriented triangle abc, or 0."""
    n = np.cross(b - a, c - a)
    dp, dq = np.dot(p - a, n), np.dot(q - a, n)
    if dp * dq > 0 or dp == dq:
        return 0
    t = dp / (dp - dq)
    x = p + t * (q - p)
    for u, v in ((a, b), (b, c), (c, a)):
        if np.dot(np.cross(v - u, x - u), n) < 0:
            return 0
    return 1 if dq > dp else -1


def intersection_linking(loop_a: np.ndarray, loop_b: np.ndarray, apex=None) -> int:
    """Signed count of crossings of ``loop_b`` through a cone disk spanning ``loop_a``.

    The default apex sits slightly off the centroid so that symmetric
    configurations do not pass through it.
    """
    A = np.asarray(loop_a, float)
    B = np.asarray(loop_b, float)
    if apex is None:
        size = np.ptp(A, axis=0).max()
        apex = A.mean(axis=0) + 1e-2 * size * np.array([0.31830989, -0.2236068, 0.14142136])
    total = 0
    for i in range(len(A)):
        a, b = A[i], A[(i + 1) % len(A)]
        for j in range(len(B)):
            total += _segment_triangle(B[j], B[(j + 1) % len(B)], apex, a, b)
    return total


# --- magnetostatics -------------------------------------------------------------


def loop_axis_field(R: float, z: float) -> float:
    """B_z on the axis of a unit-current circular loop of radius R."""
    return R * R / (2 * (R * R + z * z) ** 1.5)


def polygon_axis_field(R: float, n: int, z: float) -> float:
    """B_z on the axis of a regular n-gon inscribed in radius R (exact)."""
    # each side sits at distance d = R cos(pi/n) from the axis, half-length h
    d = R * math.cos(math.pi / n)
    h = R * math.sin(math.pi / n)
    rho = math.hypot(d, z)
    # field of a finite segment at perpendicular distance rho, component along z
    seg = h / (2 * math.pi * rho * math.sqrt(rho * rho + h * h))
    return n * seg * d / rho


# --- winding-angle product graph ---------------------------------------------------


def turning_angle(p, q, s) -> float:
    """Angle swept around s moving straight from p to q, in turns."""
    a = np.asarray(p, float) - s
    b = np.asarray(q, float) - s
    return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]) / (2 * math.pi)


def product_graph_classes(coords, adjacency, sources, start, goal, bound=3):
    """Least cost of each winding class at ``goal`` by Dijkstra on (vertex, windings).

    With theta_i(v) the polar angle of v about source i, the winding of any
    path to v is (theta_i(v) - theta_i(start)) / 2pi + n_i for an integer
    n_i, so states are (vertex, integer vector n). Edges update n exactly
    from atan2 turning angles. States with any |n_i| > bound are dropped.
    Returns {signature tuple: least cost} for the goal.
    """
    src = [np.asarray(s, float) for s in sources]

    def theta(v):
        return [math.atan2(coords[v][1] - s[1], coords[v][0] - s[0]) / (2 * math.pi) for s in src]

    th = [theta(v) for v in range(len(coords))]
    zero = (0,) * len(src)
    dist = {(start, zero): 0.0}
    heap = [(0.0, start, zero)]
    best = {}
    while heap:
        d, v, n = heapq.heappop(heap)
        if dist[(v, n)] < d:
            continue
        if v == goal:
            sig = tuple(th[goal][i] - th[start][i] + n[i] for i in range(len(src)))
            best.setdefault(sig, d)
        for w, cost in adjacency[v]:
            nn = tuple(
                n[i] + round(turning_angle(coords[v], coords[w], src[i]) - (th[w][i] - th[v][i]))
                for i in range(len(src))
            )
            if max(map(abs, nn), default=0) > bound:
                continue
            nd = d + cost
            if nd < dist.get((w, nn), math.inf):
                dist[(w, nn)] = nd
                heapq.heappush(heap, (nd, w, nn))
    return best
