import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homolink.combinatorics import (
    OrderedPartition,
    form_partitions,
    index_set_without,
    inversion_sign,
    partitions,
)
from oracles import brute_partitions, inversions, permutation_sign

# part^3([1, 3, 6, 9, 5]), frozen from brute_partitions
SPLITS_13695 = [
    ((1, 3, 6), (9, 5), 1),
    ((1, 3, 9), (6, 5), -1),
    ((1, 3, 5), (6, 9), 1),
    ((1, 6, 9), (3, 5), 1),
    ((1, 6, 5), (3, 9), -1),
    ((1, 9, 5), (3, 6), 1),
    ((3, 6, 9), (1, 5), -1),
    ((3, 6, 5), (1, 9), 1),
    ((3, 9, 5), (1, 6), -1),
    ((6, 9, 5), (1, 3), 1),
]


def test_three_of_five_example():
    got = [(p.left, p.right, p.sign) for p in partitions([1, 3, 6, 9, 5], 3)]
    assert got == SPLITS_13695
    assert brute_partitions([1, 3, 6, 9, 5], 3) == SPLITS_13695


@pytest.mark.parametrize("n", range(0, 9))
def test_counts_are_binomial(n):
    a = list(range(10, 10 + n))
    for w in range(n + 1):
        assert len(partitions(a, w)) == math.comb(n, w)


@pytest.mark.parametrize("n", range(1, 7))
def test_matches_brute_force(n):
    a = [7 * i % 11 for i in range(1, n + 1)]
    for w in range(n + 1):
        got = [(p.left, p.right, p.sign) for p in partitions(a, w)]
        assert got == brute_partitions(a, w)


def test_extreme_widths():
    (p,) = partitions([4, 2], 0)
    assert p == OrderedPartition((), (4, 2), 1)
    (p,) = partitions([4, 2], 2)
    assert p == OrderedPartition((4, 2), (), 1)


@pytest.mark.parametrize("w", [-1, 4])
def test_width_out_of_range(w):
    with pytest.raises(ValueError):
        partitions([1, 2, 3], w)


def test_index_set_without():
    assert index_set_without(5, 1) == [2, 3, 4, 5]
    assert index_set_without(5, 3) == [1, 2, 4, 5]
    with pytest.raises(ValueError):
        index_set_without(3, 0)


@pytest.mark.parametrize("D,w", [(2, 0), (3, 1), (3, 0), (4, 2), (5, 2), (5, 3)])
def test_form_partitions_size(D, w):
    terms = form_partitions(D, w)
    assert len(terms) == D * math.comb(D - 1, w)
    for k, rho in terms:
        assert k not in rho.left + rho.right
        assert sorted(rho.left + rho.right) == index_set_without(D, k)


@settings(max_examples=200)
@given(st.permutations(list(range(7))))
def test_inversion_sign_matches_transposition_count(p):
    assert inversion_sign(p) == permutation_sign(p)
    assert inversion_sign(p) == (-1) ** inversions(p)


@settings(max_examples=200)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=7, unique=True), st.data())
def test_sign_is_parity_of_rearrangement(a, data):
    w = data.draw(st.integers(0, len(a)))
    for p in partitions(a, w):
        # sign of the permutation taking a to left + right
        target = list(p.left + p.right)
        assert p.sign == permutation_sign([a.index(x) for x in target])
