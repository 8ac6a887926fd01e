"""Closed-form kernels for D <= 3: residue 1-form, Biot-Savart, Gauss flux.

These serve as fast paths and as oracles for the general engine. The
Biot-Savart field integrates over the wire with the same adaptive node set
the general engine uses, so the two agree to rounding error.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .mesh import Chain, MeshError
from .quadrature import QuadConfig, SingularProximityError, integrate_pairs, simplex_rule

_DEFAULT = QuadConfig()


class ClosedFormKind(enum.Enum):
    RESIDUE = (2, 2)
    BIOT_SAVART = (3, 2)
    GAUSS_FLUX = (3, 3)

    @classmethod
    def for_scene(cls, D: int, N: int) -> ClosedFormKind:
        for kind in cls:
            if kind.value == (D, N):
                return kind
        raise ValueError(f"no closed form for D={D}, N={N}")


def _check_apart(r: float, eps: float) -> None:
    if r <= eps:
        raise SingularProximityError(f"point within {r:.3g} of the source", distance=r)


def residue_form(x, s, eps_sing: float = _DEFAULT.eps_sing) -> np.ndarray:
    """Coefficients of (dx1, dx2) in (1/2pi) Im(dz / (z - s))."""
    d = np.asarray(x, float) - np.asarray(s, float)
    r2 = float(d @ d)
    _check_apart(math.sqrt(r2), eps_sing)
    return np.array([-d[1], d[0]]) / (2 * math.pi * r2)


def gauss_flux_form(x, s, eps_sing: float = _DEFAULT.eps_sing) -> np.ndarray:
    """Coefficients on (dx2^dx3, dx3^dx1, dx1^dx2) of the unit point-charge field."""
    d = np.asarray(x, float) - np.asarray(s, float)
    r = float(np.linalg.norm(d))
    _check_apart(r, eps_sing)
    return d / (4 * math.pi * r**3)


def biot_savart_field(x, wire: Chain, quad: QuadConfig = _DEFAULT) -> np.ndarray:
    """B(x) = (1/4pi) int_wire dl' x (x - x') / |x - x'|^3 at one or many points."""
    if wire.D != 3 or wire.dim != 1:
        raise MeshError("Biot-Savart needs a 1-chain in R^3")
    pts = np.atleast_2d(np.asarray(x, float))
    coef = wire.coeffs.astype(float)

    def contract(V, MA, MB, ob):
        return np.cross(MB * coef[ob][:, None], V)

    def tangents(verts):
        return verts[:, 1, :] - verts[:, 0, :]

    def nothing(verts):
        return np.ones((len(verts), 1))

    B = integrate_pairs(pts[:, None, :], wire.simplex_vertices(), contract, 3, quad, nothing, tangents)
    B /= 4 * math.pi
    return B[0] if np.ndim(x) == 1 else B


def segment_field_exact(x, a, b) -> np.ndarray:
    """Exact field of a straight unit-current segment a -> b (textbook formula)."""
    x, a, b = (np.asarray(v, float) for v in (x, a, b))
    L = b - a
    r1, r2 = x - a, x - b
    c = np.cross(L, r1)
    c2 = float(c @ c)
    if c2 == 0.0:
        return np.zeros(3)
    return c / (4 * math.pi * c2) * float(L @ (r1 / np.linalg.norm(r1) - r2 / np.linalg.norm(r2)))


def integrate_one_form(loop: Chain, coef_fn, order: int = 6) -> float:
    """Line integral of a pointwise 1-form over a polygonal 1-chain."""
    U, W = simplex_rule(1, order)
    v = loop.simplex_vertices()
    J = v[:, 1] - v[:, 0]
    total = 0.0
    for (a, d), c in zip(zip(v[:, 0], J), loop.coeffs):
        for u, w in zip(U[:, 0], W):
            total += c * w * float(coef_fn(a + u * d) @ d)
    return total


def winding_integral(loop: Chain, s, order: int = 6) -> float:
    return integrate_one_form(loop, lambda p: residue_form(p, s), order)


def ampere_integral(loop: Chain, wire: Chain, order: int = 6, quad: QuadConfig = _DEFAULT) -> float:
    """Circulation of the Biot-Savart field of ``wire`` around ``loop``."""
    U, W = simplex_rule(1, order)
    v = loop.simplex_vertices()
    J = v[:, 1] - v[:, 0]
    pts = (v[:, None, 0, :] + U[None, :, :1] * J[:, None, :]).reshape(-1, 3)
    B = biot_savart_field(pts, wire, quad).reshape(len(v), len(W), 3)
    per = np.einsum("sqd,sd,q->s", B, J, W)
    return float(np.sum(per * loop.coeffs))


def flux_integral(surface: Chain, s, order: int = 4) -> float:
    """Flux of the point-charge field through an oriented triangulated surface."""
    if surface.D != 3 or surface.dim != 2:
        raise MeshError("flux needs a 2-chain in R^3")
    U, W = simplex_rule(2, order)
    v = surface.simplex_vertices()
    e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    normal = np.cross(e1, e2)
    pts = v[:, None, 0, :] + U[None, :, :1] * e1[:, None, :] + U[None, :, 1:2] * e2[:, None, :]
    d = pts - np.asarray(s, float)
    r = np.linalg.norm(d, axis=2)
    if r.min() <= _DEFAULT.eps_sing:
        raise SingularProximityError("surface passes through the charge", distance=float(r.min()))
    E = d / (4 * math.pi * r[..., None] ** 3)
    per = np.einsum("sqd,sd,q->s", E, normal, W)
    return float(np.sum(per * surface.coeffs))


def closed_form_coefficients(skeleton: Chain, points, quad: QuadConfig = _DEFAULT) -> np.ndarray:
    """Closed-form coefficients in the basis used by ``FormField``; (P, C(D, N-1)).

    Point skeletons (residue, Gauss) sum over the 0-chain with coefficients;
    a 1-chain in R^3 uses Biot-Savart.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    kind = ClosedFormKind.for_scene(skeleton.D, skeleton.D - skeleton.dim)
    if kind is ClosedFormKind.BIOT_SAVART:
        return biot_savart_field(pts, skeleton, quad)
    src = skeleton.points[skeleton.cells[:, 0]]
    out = np.zeros((len(pts), skeleton.D))
    for s, c in zip(src, skeleton.coeffs):
        if kind is ClosedFormKind.RESIDUE:
            out += c * np.array([residue_form(p, s, quad.eps_sing) for p in pts])
        else:
            E = np.array([gauss_flux_form(p, s, quad.eps_sing) for p in pts])
            # (dx2^dx3, dx3^dx1, dx1^dx2) -> (dx1^dx2, dx1^dx3, dx2^dx3)
            out += c * np.stack([E[:, 2], -E[:, 1], E[:, 0]], 1)
    return out
