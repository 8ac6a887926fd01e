"""Linking-type homology invariants of (N-1)-cycles around (D-N)-skeletons.

For a skeleton cycle S in R^D and a candidate chain w of dimension N-1, the
invariant is the double integral over w x S of the pulled-back generator of
H^{D-1}(R^D - 0),

    (-1)^(D-N) sum_k sum_rho (-1)^(k+1) sgn(rho) G_k(x - x')
                 dx'_{rho_l} ^ dx_{rho_r},

with rho running over ordered two-partitions of {1..D} - {k} whose left part
has D-N elements. On a pair of linear simplices every wedge factor is a
constant Jacobian minor, so only G_k varies over the quadrature nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .combinatorics import OrderedPartition, form_partitions
from .mesh import Chain, MeshError, SkeletonSet
from .quadrature import QuadConfig, QuadStats, SingularProximityError, integrate_pairs

DEFAULT_QUAD = QuadConfig()


def unit_sphere_volume(D: int) -> float:
    """(D-1)-volume of the unit sphere in R^D."""
    if D < 1:
        raise ValueError("D must be >= 1")
    return D * math.pi ** (D / 2) / math.gamma(D / 2 + 1)


def g_k(s: Sequence[float], k: int, eps_sing: float = DEFAULT_QUAD.eps_sing) -> float:
    """Coefficient G_k(s) = s_k / (A_{D-1} |s|^D), with 1-based ``k``."""
    s = np.asarray(s, dtype=float)
    D = s.shape[0]
    r = float(np.linalg.norm(s))
    if r <= eps_sing:
        raise SingularProximityError(f"|s| = {r:.3g} within eps_sing", distance=r)
    return float(s[k - 1]) / (unit_sphere_volume(D) * r**D)


@lru_cache(maxsize=None)
def row_subsets(D: int, k: int) -> tuple[tuple[int, ...], ...]:
    """0-based row index sets of size k, lexicographic."""
    return tuple(combinations(range(D), k))


@lru_cache(maxsize=None)
def coupling_tensor(D: int, N: int) -> np.ndarray:
    """C[k, l, r] = (-1)^(k+1) sgn(rho) for rho = (l, r) in part^(D-N)(N^D_{-k}).

    ``l`` indexes :func:`row_subsets` (D, D-N) and ``r`` indexes
    ``row_subsets(D, N-1)``; ``k`` is 0-based here.
    """
    m, n = D - N, N - 1
    left = {s: i for i, s in enumerate(row_subsets(D, m))}
    right = {s: i for i, s in enumerate(row_subsets(D, n))}
    C = np.zeros((D, len(left), len(right)))
    for k, rho in form_partitions(D, m):
        l = tuple(i - 1 for i in rho.left)
        r = tuple(i - 1 for i in rho.right)
        C[k - 1, left[l], right[r]] += (-1) ** (k + 1) * rho.sign
    C.flags.writeable = False
    return C


def simplex_minors(verts: np.ndarray) -> np.ndarray:
    """Jacobian minors of each simplex over every row subset; (S, C(D, k))."""
    S, k1, D = verts.shape
    k = k1 - 1
    if k == 0:
        return np.ones((S, 1))
    J = np.swapaxes(verts[:, 1:, :] - verts[:, :1, :], 1, 2)  # (S, D, k)
    subsets = row_subsets(D, k)
    out = np.empty((S, len(subsets)))
    for i, rows in enumerate(subsets):
        out[:, i] = np.linalg.det(J[:, list(rows), :]) if k > 1 else J[:, rows[0], 0]
    return out


def pair_integrand(sigma: np.ndarray, tau: np.ndarray, t: Sequence[float], u: Sequence[float]) -> float:
    """Pulled-back kernel on sigma x tau at reference coordinates (t, u).

    ``sigma`` is an (N-1)-simplex of the candidate chain and ``tau`` a
    (D-N)-simplex of the skeleton, both given as (k+1, D) vertex arrays.
    The partition sum is evaluated term by term.
    """
    sigma = np.asarray(sigma, float)
    tau = np.asarray(tau, float)
    D = sigma.shape[1]
    n, m = sigma.shape[0] - 1, tau.shape[0] - 1
    N = n + 1
    if m != D - N:
        raise MeshError(f"simplex dimensions {n}, {m} do not fit D={D}")
    Jx = (sigma[1:] - sigma[0]).T
    Jp = (tau[1:] - tau[0]).T
    x = sigma[0] + Jx @ np.asarray(t, float).reshape(n)
    xp = tau[0] + Jp @ np.asarray(u, float).reshape(m)
    s = x - xp
    total = 0.0
    for k, rho in form_partitions(D, m):
        dl = np.linalg.det(Jp[[i - 1 for i in rho.left], :]) if m else 1.0
        dr = np.linalg.det(Jx[[i - 1 for i in rho.right], :]) if n else 1.0
        total += (-1) ** (k + 1) * rho.sign * g_k(s, k) * dl * dr
    return (-1) ** (D - N) * total


def _dims(omega_dim: int, skeleton: Chain) -> tuple[int, int]:
    D = skeleton.D
    N = D - skeleton.dim
    if N < 2:
        raise MeshError(f"skeleton of dimension {skeleton.dim} in R^{D} gives N={N} < 2")
    if omega_dim != N - 1:
        raise MeshError(f"candidate has dimension {omega_dim}, expected N-1={N - 1}")
    return D, N


def phi_per_simplex(
    omega: Chain,
    skeleton: Chain,
    cfg: QuadConfig = DEFAULT_QUAD,
    threads: int | None = None,
    stats: QuadStats | None = None,
) -> np.ndarray:
    """Contribution of each simplex of ``omega`` (coefficients included)."""
    if omega.D != skeleton.D:
        raise MeshError("candidate and skeleton live in different ambient spaces")
    D, N = _dims(omega.dim, skeleton)
    C = coupling_tensor(D, N)
    coefB = skeleton.coeffs.astype(float)
    scale = (-1) ** (D - N) / unit_sphere_volume(D)

    def contract(V, MA, MB, ob):
        T = np.einsum("pl,klr->pkr", MB * coefB[ob][:, None], C)
        return (scale * np.einsum("pk,pkr,pr->p", V, T, MA))[:, None]

    out = integrate_pairs(
        omega.simplex_vertices(),
        skeleton.simplex_vertices(),
        contract,
        1,
        cfg,
        simplex_minors,
        simplex_minors,
        threads=threads,
        stats=stats,
    )
    return out[:, 0] * omega.coeffs


def _ordered_sum(x: np.ndarray) -> float:
    return float(np.sum(x))  # numpy pairwise summation, fixed order


def phi_S(
    omega: Chain,
    skeleton: Chain,
    cfg: QuadConfig = DEFAULT_QUAD,
    threads: int | None = None,
    stats: QuadStats | None = None,
) -> float:
    """Invariant of ``omega`` with respect to a single skeleton cycle.

    For a closed ``omega`` this is the linking number with the skeleton
    (an integer up to quadrature error). The sign follows the orientations
    produced by the samplers.
    """
    return _ordered_sum(phi_per_simplex(omega, skeleton, cfg, threads, stats))


@dataclass(frozen=True)
class Signature:
    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite signature entries")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    def rounded(self) -> np.ndarray:
        return np.rint(self.values).astype(np.int64)

    def integrality_error(self) -> float:
        return float(np.max(np.abs(self.values - np.rint(self.values)), initial=0.0))

    def is_integral(self, eps_int: float = 0.05) -> bool:
        return self.integrality_error() < eps_int

    def __sub__(self, other: Signature) -> Signature:
        return Signature(self.values - other.values, self.labels)

    def __add__(self, other: Signature) -> Signature:
        return Signature(self.values + other.values, self.labels)


def phi_matrix(
    omega: Chain,
    skeletons: SkeletonSet,
    cfg: QuadConfig = DEFAULT_QUAD,
    threads: int | None = None,
    stats: QuadStats | None = None,
) -> np.ndarray:
    """(S_omega, m) per-simplex contributions against every skeleton."""
    cols = []
    for label, sk in skeletons:
        try:
            cols.append(phi_per_simplex(omega, sk, cfg, threads, stats))
        except SingularProximityError as exc:
            raise SingularProximityError(f"skeleton {label!r}: {exc}", exc.distance, label, exc.index) from exc
        except MeshError as exc:
            raise MeshError(f"skeleton {label!r}: {exc}") from exc
    if not cols:
        return np.zeros((len(omega), 0))
    return np.stack(cols, axis=1)


def phi_vector(
    omega: Chain,
    skeletons: SkeletonSet,
    cfg: QuadConfig = DEFAULT_QUAD,
    threads: int | None = None,
    stats: QuadStats | None = None,
) -> Signature:
    """The m-vector invariant, one entry per skeleton component."""
    M = phi_matrix(omega, skeletons, cfg, threads, stats)
    return Signature(np.array([_ordered_sum(M[:, j]) for j in range(M.shape[1])]), skeletons.labels)


class FormField:
    """The (N-1)-form psi_S induced by one skeleton, evaluable pointwise.

    Coefficients are reported on the basis dx_R for R in
    ``row_subsets(D, N-1)`` (0-based, lexicographic).
    """

    def __init__(self, skeleton: Chain, N: int | None = None, quad: QuadConfig = DEFAULT_QUAD):
        D = skeleton.D
        if N is None:
            N = D - skeleton.dim
        if N < 2 or D - N != skeleton.dim:
            raise MeshError(f"skeleton dimension {skeleton.dim} incompatible with D={D}, N={N}")
        self.skeleton = skeleton
        self.D, self.N = D, N
        self.quad = quad
        self.basis = row_subsets(D, N - 1)

    def _moment_matrix(self, points) -> np.ndarray:
        """M[p, k, l] = sum over skeleton of coef * minor_l * int (x - x')/|x - x'|^D."""
        pts = np.atleast_2d(np.asarray(points, float))
        D = self.D
        L = len(row_subsets(D, D - self.N))
        coefB = self.skeleton.coeffs.astype(float)

        def contract(V, MA, MB, ob):
            return np.einsum("pk,pl->pkl", V, MB * coefB[ob][:, None]).reshape(len(V), D * L)

        out = integrate_pairs(
            pts[:, None, :],
            self.skeleton.simplex_vertices(),
            contract,
            D * L,
            self.quad,
            simplex_minors,
            simplex_minors,
        )
        return out.reshape(len(pts), D, L) / unit_sphere_volume(D)

    def u(self, x, k: int, rho: OrderedPartition) -> float:
        """U^k_rho(x; S) for 1-based ``k``."""
        m = self.D - self.N
        if len(rho.left) != m:
            raise ValueError("partition left side must have D-N entries")
        lidx = row_subsets(self.D, m).index(tuple(i - 1 for i in rho.left))
        M = self._moment_matrix(x)[0]
        return (-1) ** (k + 1) * rho.sign * float(M[k - 1, lidx])

    def coefficients(self, points) -> np.ndarray:
        """psi_S coefficients at each point; (P, C(D, N-1))."""
        M = self._moment_matrix(points)
        C = coupling_tensor(self.D, self.N)
        return (-1) ** (self.D - self.N) * np.einsum("pkl,klr->pr", M, C)

    def __call__(self, x, vectors) -> float:
        """Evaluate psi_S(x) on N-1 tangent vectors (columns of ``vectors``)."""
        V = np.asarray(vectors, float).reshape(self.D, self.N - 1)
        coef = self.coefficients(x)[0]
        minors = [np.linalg.det(V[list(R), :]) if R else 1.0 for R in self.basis]
        return float(coef @ np.array(minors))


def u_k_rho(x, k: int, rho: OrderedPartition, skeleton: Chain, quad: QuadConfig = DEFAULT_QUAD) -> float:
    return FormField(skeleton, quad=quad).u(x, k, rho)
