import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homolink.mesh import SkeletonSet, point_chain
from homolink.planner import (
    Ball,
    EnumerateK,
    PlanningError,
    augmented_search,
    build_grid_graph,
    edge_signatures,
    region_union,
)
from homolink.quadrature import QuadConfig
from homolink.quotient import (
    QLattice,
    boundary_of,
    connected_quotient_search,
    hermite_basis,
    l_edge_mask,
    l_tree,
    lattice_from_loops,
    lattice_from_subgraph,
    outside_components,
    q_membership,
    quotient_augmented_search,
)

OBSTACLES = [(17.3, 26.1), (33.1, 24.2)]


@pytest.fixture(scope="module")
def collar():
    g = build_grid_graph([0, 0], [50, 50], [50, 50], region_union([Ball(o, 4.0) for o in OBSTACLES]),
                         [24.5, 8.5], [25.5, 48.5])
    skel = SkeletonSet([point_chain(o) for o in OBSTACLES])
    cache = edge_signatures(g, skel)
    inner = np.all((g.coords > 6) & (g.coords < 44), axis=1)
    return g, skel, cache, ~inner


def test_hermite_basis():
    B = hermite_basis([[2, 4], [3, 6], [0, 0]])
    assert B.tolist() == [[1, 2]]
    B = hermite_basis([[4, 1], [2, 3]])
    assert B.tolist() == [[2, 3], [0, 5]]
    assert hermite_basis([[0, 0]]).shape == (0, 2)
    assert hermite_basis([[-1, 0], [0, -2]]).tolist() == [[1, 0], [0, 2]]


def test_lattice_rejects_dependent_rows():
    with pytest.raises(ValueError):
        QLattice(np.array([[1, 2], [2, 4]]), 2)


def test_from_signatures_checks_integrality():
    q = QLattice.from_signatures([[1.01, 0.99], [0.0, 2.0]], 2)
    assert q.basis.tolist() == [[1, 1], [0, 2]]
    with pytest.raises(ValueError):
        QLattice.from_signatures([[0.5, 0.0]], 2)


def test_membership():
    q = QLattice(np.array([[1, 1]]), 2)
    assert q_membership([3.02, 2.99], q)
    assert not q_membership([1.0, 0.0], q)
    assert not q_membership([1.2, 1.2], q)
    assert q.contains([-2, -2])
    trivial = QLattice.trivial(2)
    assert trivial.contains([0.01, -0.01]) and not trivial.contains([1, 0])
    q2 = QLattice(np.array([[2, 0], [0, 3]]), 2)
    assert q2.contains([4, -3]) and not q2.contains([1, 3])


lattices = st.sampled_from([[[1, 1]], [[1, 0]], [[2, 1], [0, 3]], [[1, 2, 0], [0, 1, -1]], [[3, 0, 0]]])


@settings(max_examples=200)
@given(lattices, st.data())
def test_reduce_is_canonical_and_idempotent(rows, data):
    B = np.array(rows)
    q = QLattice(hermite_basis(rows), B.shape[1])
    v = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=B.shape[1], max_size=B.shape[1])))
    z = np.array(data.draw(st.lists(st.integers(-4, 4), min_size=len(B), max_size=len(B))))
    r = q.reduce(v)
    assert np.allclose(q.reduce(r), r, atol=1e-9)
    assert np.allclose(q.reduce(v + z @ B), r, atol=1e-8)
    assert q.contains(np.rint(v - r)) or not np.allclose(v - r, np.rint(v - r))


def test_l_masks(collar):
    g, _, _, L = collar
    assert L[g.vertex_at([25.5, 48.5])] and not L[g.vertex_at([24.5, 8.5])]
    dL = boundary_of(g, L)
    assert np.all(L[dL])
    assert 0 < dL.sum() < L.sum()
    em = l_edge_mask(g, L)
    src = np.repeat(np.arange(g.n_vertices), np.diff(g.indptr))
    assert np.array_equal(em, L[src] & L[g.nbr])


def test_left_and_right_windings_differ_by_q(collar):
    g, skel, cache, L = collar
    q_auto = lattice_from_subgraph(g, cache, L)
    square = [[3, 3], [47, 3], [47, 47], [3, 47]]
    q_loops = lattice_from_loops([square], skel)
    assert q_auto.basis.tolist() == q_loops.basis.tolist() == [[1, 1]]
    found = augmented_search(g, cache, g.vertex_at([24.5, 8.5]), g.vertex_at([25.5, 48.5]), EnumerateK(3))
    left, right = found[1].signature, found[2].signature
    assert q_membership(left - right, q_auto)
    assert np.allclose(q_auto.reduce(left), q_auto.reduce(right), atol=1e-9)


def test_quotient_enumeration_gives_distinct_residues(collar):
    g, skel, cache, L = collar
    q = lattice_from_subgraph(g, cache, L)
    vs, vg = g.vertex_at([24.5, 8.5]), g.vertex_at([25.5, 48.5])
    found = quotient_augmented_search(g, cache, q, vs, vg, 5, L)
    assert len(found) == 5
    res = [r.residue for r in found]
    for i in range(5):
        for j in range(i):
            assert np.max(np.abs(res[i] - res[j])) > 0.5
            assert not q_membership(found[i].signature - found[j].signature, q)
    costs = [r.cost for r in found]
    assert costs == sorted(costs)


def test_connected_variant_leaves_the_outside_once(collar):
    g, skel, cache, L = collar
    q = lattice_from_subgraph(g, cache, L)
    vs, vg = g.vertex_at([24.5, 8.5]), g.vertex_at([25.5, 48.5])
    plain = quotient_augmented_search(g, cache, q, vs, vg, 5, L)
    conn = connected_quotient_search(g, cache, q, vs, vg, 5, L)
    assert len(conn) == 5
    assert all(outside_components(r.path, L) == 1 for r in conn)
    assert any(outside_components(r.path, L) > 1 for r in plain)
    for r in conn:
        assert r.path[0] == vs and r.path[-1] == vg
        assert np.allclose(cache.path_signature(r.path), r.signature, atol=1e-8)
    plain_res = sorted(tuple(np.round(r.residue, 6)) for r in plain)
    conn_res = sorted(tuple(np.round(r.residue, 6)) for r in conn)
    assert plain_res == conn_res


def test_trivial_q_equals_plain_search(collar):
    g, _, cache, _ = collar
    vs, vg = g.vertex_at([24.5, 8.5]), g.vertex_at([25.5, 48.5])
    plain = augmented_search(g, cache, vs, vg, EnumerateK(6))
    quot = quotient_augmented_search(g, cache, QLattice.trivial(2), vs, vg, 6)
    assert [r.path for r in plain] == [r.path for r in quot]
    assert [r.cost for r in plain] == [r.cost for r in quot]


def test_l_tree_signatures(collar):
    g, _, cache, L = collar
    vg = g.vertex_at([25.5, 48.5])
    tree = l_tree(g, cache, L, vg, 1e-6)
    for v in np.nonzero(L)[0][::97]:
        path = tree.path_to_goal(int(v))
        assert path[-1] == vg
        # p(v) is the signature of the tree path from the goal out to v
        assert np.allclose(tree.p[v], -cache.path_signature(path), atol=1e-9)


def test_quotient_argument_checks(collar):
    g, _, cache, L = collar
    q = QLattice.trivial(2)
    inside_goal = g.vertex_at([24.5, 8.5])
    with pytest.raises(PlanningError, match="goal"):
        quotient_augmented_search(g, cache, q, g.vertex_at([25.5, 48.5]), inside_goal, 2, L)
    with pytest.raises(PlanningError, match="start"):
        connected_quotient_search(g, cache, q, g.vertex_at([25.5, 48.5]), g.vertex_at([1.5, 48.5]), 2, L)
    with pytest.raises(PlanningError):
        quotient_augmented_search(g, cache, q, -1, 0, 2)


def test_outside_components():
    L = np.array([True, False, False, True, False, True])
    assert outside_components([0, 1, 2, 3, 4, 5], L) == 2
    assert outside_components([0, 3, 5], L) == 0
    assert outside_components([1], L) == 1


def test_loops_lattice_uses_quadrature_config():
    skel = SkeletonSet([point_chain([0.0, 0.0])])
    q = lattice_from_loops([[[-1, -1], [1, -1], [1, 1], [-1, 1]]], skel, QuadConfig(order=2))
    assert q.basis.tolist() == [[1]]
