import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homolink.mesh import (
    Chain,
    MeshError,
    SkeletonSet,
    Simplex,
    boundary,
    chain_distance,
    format_mesh,
    is_cycle,
    parse_mesh,
    point_chain,
    read_mesh,
    sample_circle,
    sample_polyline_loop,
    sample_sphere,
    sample_torus,
    simplex_distance,
    validate_skeleton_set,
    write_mesh,
)


def enclosed_volume(surface: Chain) -> float:
    v = surface.simplex_vertices()
    return float(np.linalg.det(v).sum() / 6)


def test_sphere_counts_and_radius():
    s = sample_sphere(1.5, (16, 32), D=5, center=[0, 0, 0, 0, 2.0])
    assert len(s) == 2 * 16 * 32 - 2 * 32
    assert s.dim == 2 and s.D == 5
    r = np.linalg.norm(s.points[:, :3], axis=1)
    assert np.allclose(r, 1.5)
    assert np.allclose(s.points[:, 3], 0.0) and np.allclose(s.points[:, 4], 2.0)


def test_sphere_orientation_follows_parameter_order():
    s = sample_sphere(1.0, (16, 32), D=3)
    vol = enclosed_volume(s)
    # (theta, phi) order gives the inward normal
    assert vol < 0 and abs(vol + 4 / 3 * np.pi) < 0.1
    assert enclosed_volume(sample_sphere(1.0, (16, 32), D=3, reverse=True)) == pytest.approx(-vol)


def test_torus_counts_placement_and_orientation():
    t = sample_torus(0.8, 1.6, (24, 24), D=5)
    assert len(t) == 2 * 24 * 24
    assert np.allclose(t.points[:, :2], 0.0)
    # default placement passes through the origin
    assert np.min(np.linalg.norm(t.points, axis=1)) < 1e-12
    t3 = sample_torus(0.8, 1.6, (24, 24), D=3, axes=(0, 1, 2), center=[0, 0, 0])
    assert 0.95 * 2 * np.pi**2 * 0.64 * 1.6 < enclosed_volume(t3) < 2 * np.pi**2 * 0.64 * 1.6


@pytest.mark.parametrize(
    "chain",
    [
        sample_sphere(1.0, (5, 7), D=3),
        sample_torus(0.5, 1.5, (6, 5), D=4, axes=(1, 2, 3)),
        sample_circle(2.0, 9, D=2),
        sample_polyline_loop([[0, 0, 0], [1, 0, 0], [0, 1, 1]]),
    ],
)
def test_samplers_produce_cycles(chain):
    assert is_cycle(chain)
    assert boundary(chain).is_empty


def test_boundary_of_triangle_and_segment():
    tri = Chain([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [1])
    b = boundary(tri)
    assert len(b) == 3 and set(b.coeffs.tolist()) <= {1, -1}
    assert boundary(b).is_empty
    seg = sample_polyline_loop([[0, 0], [2, 0]], closed=False)
    b = boundary(seg)
    assert sorted(zip(b.points[b.cells[:, 0]].tolist(), b.coeffs.tolist())) == [([0.0, 0.0], -1), ([2.0, 0.0], 1)]


def test_boundary_of_open_disk_is_its_rim():
    s = sample_sphere(1.0, (6, 8), D=3)
    cap = Chain(s.points, s.cells[:8], s.coeffs[:8])  # the south fan
    rim = boundary(cap)
    assert len(rim) == 8
    assert is_cycle(rim)


def test_chain_algebra():
    c = sample_circle(1.0, 8, D=2)
    assert len(c + c) == 16
    assert boundary((c + c).scaled(3)).is_empty
    assert np.array_equal((-c).coeffs, -c.coeffs)
    assert (c - c).coeffs.tolist() == [1] * 8 + [-1] * 8
    assert c + Chain.empty(2, 1) is c
    with pytest.raises(MeshError):
        c + point_chain([0, 0])
    moved = c.translated([1, 2])
    assert np.allclose(moved.points - c.points, [1, 2])


def test_chain_arrays_are_frozen():
    c = sample_circle(1.0, 8, D=2)
    with pytest.raises(ValueError):
        c.points[0, 0] = 5.0


@pytest.mark.parametrize(
    "args,match",
    [
        (([[0, 0], [1, 0]], [[0, 1]], [0]), "nonzero"),
        (([[0, 0], [1, 0]], [[0, 1]], [1, 1]), "one coefficient"),
        (([[0, 0], [1, 0]], [[0, 2]], [1]), "out of range"),
        (([[0, 0], [0, 0]], [[0, 1]], [1]), "degenerate"),
        (([[0, 0], [1, 1], [2, 2]], [[0, 1, 2]], [1]), "degenerate"),
        (([[0, np.nan], [1, 0]], [[0, 1]], [1]), "non-finite"),
    ],
)
def test_invalid_chains(args, match):
    with pytest.raises(MeshError, match=match):
        Chain(*args)


def test_simplex_jacobian():
    s = Simplex(np.array([[1.0, 1, 0], [2, 1, 0], [1, 3, 0]]))
    assert np.array_equal(s.jacobian(), [[1, 0], [0, 2], [0, 0]])


def test_mesh_text_round_trip(tmp_path):
    t = sample_torus(0.8, 1.6, (5, 4), D=5)
    c = t + (-t.translated([0.1, 0, 0, 0, 1 / 3]))
    back = parse_mesh(format_mesh(c))
    assert np.array_equal(back.points, c.points)
    assert np.array_equal(back.cells, c.cells) and np.array_equal(back.coeffs, c.coeffs)
    write_mesh(c, tmp_path / "m.txt")
    assert format_mesh(read_mesh(tmp_path / "m.txt")) == format_mesh(c)
    assert format_mesh(c).splitlines()[0] == f"5 2 {len(c.points)}"


@pytest.mark.parametrize(
    "text,match",
    [
        ("", "header"),
        ("2 1\n", "header"),
        ("2 1 2\n0 0\n", "vertex lines"),
        ("2 1 2\n0 0\n1 0\n0 1\n", "expected 3 fields"),
    ],
)
def test_mesh_parse_errors(text, match):
    with pytest.raises(MeshError, match=match):
        parse_mesh(text)


def test_validate_reports_each_kind():
    ok = SkeletonSet([sample_circle(1.0, 16, D=3)], ["ring"])
    assert validate_skeleton_set(ok, 3, 2).ok
    open_curve = sample_polyline_loop([[0, 0, 0], [1, 0, 0], [1, 1, 0]], closed=False)
    rep = validate_skeleton_set(SkeletonSet([open_curve], ["arc"]), 3, 2)
    assert [v.kind for v in rep.violations] == ["not a cycle"]
    rep = validate_skeleton_set(SkeletonSet([sample_circle(1.0, 8, D=3)]), 3, 3)
    assert [v.kind for v in rep.violations] == ["dimension"]
    rep = validate_skeleton_set(SkeletonSet([sample_circle(1.0, 8, D=2)]), 3, 2)
    assert [v.kind for v in rep.violations] == ["ambient"]
    a = sample_circle(1.0, 8, D=3)
    b = sample_circle(1.0, 8, D=3, center=[1.0, 0, 0])
    rep = validate_skeleton_set(SkeletonSet([a, b], ["a", "b"]), 3, 2)
    assert [v.kind for v in rep.violations] == ["not disjoint"]
    assert "a/b" in str(rep)


def test_simplex_distance_simple_cases():
    seg = np.array([[0.0, 0, 0], [1, 0, 0]])
    other = np.array([[0.5, 1, -1], [0.5, 1, 1]])
    assert simplex_distance(seg, other) == pytest.approx(1.0)
    tri = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert simplex_distance(tri, np.array([[0.2, 0.2, 0.7]])) == pytest.approx(0.7)
    assert simplex_distance(tri, np.array([[2.0, 2, 0]])) == pytest.approx(np.sqrt(4.5))


@settings(max_examples=200)
@given(
    st.lists(st.tuples(*[st.floats(-3, 3)] * 2), min_size=2, max_size=2),
    st.lists(st.tuples(*[st.floats(-3, 3)] * 2), min_size=2, max_size=2),
)
def test_segment_distance_matches_dense_sampling(a, b):
    a, b = np.array(a), np.array(b)
    if np.linalg.norm(a[0] - a[1]) < 1e-3 or np.linalg.norm(b[0] - b[1]) < 1e-3:
        return
    t = np.linspace(0, 1, 401)
    pa = a[0] + t[:, None] * (a[1] - a[0])
    pb = b[0] + t[:, None] * (b[1] - b[0])
    dense = np.min(np.linalg.norm(pa[:, None] - pb[None], axis=2))
    d = simplex_distance(a, b)
    assert d <= dense + 1e-9
    assert d >= dense - 0.01 * max(np.ptp(pa, 0).max(), np.ptp(pb, 0).max()) - 1e-9


def test_chain_distance():
    a = sample_circle(1.0, 32, D=3)
    b = sample_circle(1.0, 32, D=3, center=[0, 0, 2.0])
    assert chain_distance(a, b) == pytest.approx(2.0)
    assert chain_distance(a, point_chain([0, 0, 0])) == pytest.approx(np.cos(np.pi / 32))
    assert chain_distance(a, Chain.empty(3, 1)) == np.inf
