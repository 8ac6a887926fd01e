import math
from itertools import product

import numpy as np
import pytest

from homolink.mesh import point_chain, sample_circle, sample_polyline_loop
from homolink.quadrature import QuadConfig, QuadStats, SingularProximityError, integrate_pairs, simplex_rule


def monomial_integral(powers) -> float:
    """Exact integral of prod u_i^a_i over the unit simplex."""
    return math.prod(math.factorial(a) for a in powers) / math.factorial(sum(powers) + len(powers))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("order", [1, 2, 4, 6])
def test_rule_weights_and_exactness(k, order):
    U, W = simplex_rule(k, order)
    assert U.shape == (order**k, k)
    assert W.sum() == pytest.approx(1 / math.factorial(k), rel=1e-14)
    assert np.all(U >= 0) and np.all(U.sum(axis=1) <= 1 + 1e-14)
    for powers in product(range(2 * order), repeat=k):
        if sum(powers) > 2 * order - 1:
            continue
        approx = float(W @ np.prod(U ** np.array(powers), axis=1))
        assert approx == pytest.approx(monomial_integral(powers), rel=1e-12, abs=1e-15)


def test_rule_for_points():
    U, W = simplex_rule(0, 4)
    assert U.shape == (1, 0) and W.tolist() == [1.0]


@pytest.mark.parametrize(
    "kwargs", [dict(order=0), dict(split_ratio=0.0), dict(split_ratio=1.5), dict(max_depth=13), dict(max_depth=-1)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        QuadConfig(**kwargs)


def _moment_contract(V, MA, MB, ob):
    # V is integrated in reference coordinates; the measure rides on the minors
    return V * MA * MB


def _ones(verts):
    return np.ones((len(verts), 1))


def _length(verts):
    return np.linalg.norm(verts[:, 1] - verts[:, 0], axis=1)[:, None]


def exact_segment_moment(x, a, b):
    """int_0^1 (x - y(t)) / |x - y(t)|^2 dt for y(t) = a + t (b - a), in closed form.

    With w(t) = x - y(t) as a complex number the integrand is 1 / conj(w),
    whose antiderivative is -conj(log w) / conj(b - a).
    """
    w0 = complex(*(x - a))
    w1 = complex(*(x - b))
    e = complex(*(b - a))
    swept = math.atan2((w0.conjugate() * w1).imag, (w0.conjugate() * w1).real)
    log_ratio = complex(math.log(abs(w1) / abs(w0)), swept)
    val = (-log_ratio / e).conjugate()
    return np.array([val.real, val.imag])


@pytest.mark.parametrize("dist", [2.0, 0.3, 0.02])
def test_adaptive_refinement_near_singularity(dist):
    x = np.array([[[0.5, dist]]])
    seg = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    stats = QuadStats()
    got = integrate_pairs(x, seg, _moment_contract, 2, QuadConfig(), _ones, _length, stats=stats)[0]
    ref = exact_segment_moment(x[0, 0], seg[0, 0], seg[0, 1])
    assert np.allclose(got, ref, rtol=1e-6, atol=1e-9)
    if dist < 0.5:
        assert stats.splits > 0 and stats.max_depth > 0


def test_singular_contact_is_reported():
    x = np.array([[[0.5, 0.0]]])
    seg = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    with pytest.raises(SingularProximityError) as info:
        integrate_pairs(x, seg, _moment_contract, 2, QuadConfig(), _ones, _ones)
    assert info.value.distance <= 1e-6
    assert info.value.index == 0


def test_blocks_and_threads_do_not_change_results(monkeypatch):
    import homolink.quadrature as q

    loop = sample_circle(1.0, 40, D=2).simplex_vertices()
    pts = np.random.default_rng(0).uniform(-2, 2, size=(30, 1, 2))
    pts = pts[np.abs(np.linalg.norm(pts[:, 0], axis=1) - 1) > 0.05]
    ref = integrate_pairs(pts, loop, _moment_contract, 2, QuadConfig(), _ones, _length)
    again = integrate_pairs(pts, loop, _moment_contract, 2, QuadConfig(), _ones, _length, threads=1)
    assert np.array_equal(ref, again)
    monkeypatch.setattr(q, "BLOCK_PAIRS", 64)
    blocked = integrate_pairs(pts, loop, _moment_contract, 2, QuadConfig(), _ones, _length)
    assert np.allclose(blocked, ref, rtol=1e-13, atol=1e-15)


def test_empty_inputs():
    out = integrate_pairs(np.zeros((0, 1, 2)), np.zeros((3, 2, 2)), _moment_contract, 2, QuadConfig(), _ones, _ones)
    assert out.shape == (0, 2)


def test_zero_depth_still_integrates_far_pairs():
    x = np.array([[[0.5, 5.0]]])
    seg = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    got = integrate_pairs(x, seg, _moment_contract, 2, QuadConfig(max_depth=0), _ones, _length)[0]
    assert np.allclose(got, exact_segment_moment(x[0, 0], seg[0, 0], seg[0, 1]), rtol=1e-8)
