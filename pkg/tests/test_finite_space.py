from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lusincap.errors import InvalidArgument
from lusincap.finite_space import (
    Interval,
    SetDescriptor,
    build_interval_grid,
    closed_neighborhood,
    complement,
    delta_shrink,
    full_mask,
    indices_of,
    mask_from_bool,
    mask_from_indices,
    mask_to_bool,
    open_neighborhood,
    realize_descriptor,
    space_from_distances,
    space_from_points,
)

from ._helpers import brute_within

G11 = build_interval_grid(11, 0, 1)


def pts(space, mask):
    return [space.coords[i] for i in indices_of(mask)]


def at(*xs):
    return mask_from_indices(G11.nearest_index(x) for x in xs)


# --- construction ----------------------------------------------------------------


def test_grid_11():
    assert G11.n == 11
    assert G11.step == Fr(1, 10)
    assert list(G11.coords) == [Fr(i, 10) for i in range(11)]


def test_grid_2():
    G = build_interval_grid(2, 0, 1)
    assert list(G.coords) == [0, 1]
    assert G.dist(0, 1) == 1


def test_grid_101():
    G = build_interval_grid(101, 0, 1)
    assert G.step == Fr(1, 100)
    assert G.dist(0, 100) == 1


@pytest.mark.parametrize("res", [0, 1, -3])
def test_grid_resolution_too_small(res):
    with pytest.raises(InvalidArgument):
        build_interval_grid(res, 0, 1)


def test_grid_needs_a_below_b():
    with pytest.raises(InvalidArgument):
        build_interval_grid(5, 1, 1)


def test_float_delta_rejected():
    with pytest.raises(InvalidArgument):
        closed_neighborhood(G11, 1, 0.1)


def test_distance_matrix_validation():
    space_from_distances([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    with pytest.raises(InvalidArgument):
        space_from_distances([[0, 1, 3], [1, 0, 1], [3, 1, 0]])  # triangle
    with pytest.raises(InvalidArgument):
        space_from_distances([[0, 1], [2, 0]])  # asymmetric
    with pytest.raises(InvalidArgument):
        space_from_distances([[1, 1], [1, 0]])  # nonzero diagonal


def test_grid_distance_is_index_gap_times_step():
    G = build_interval_grid(7, Fr(1, 3), 2)
    for i in range(7):
        for j in range(7):
            assert G.dist(i, j) == abs(i - j) * G.step


# --- neighbourhoods: worked examples -------------------------------------------------


def test_open_neighborhood_excludes_spacing():
    assert open_neighborhood(G11, at(Fr(1, 2)), Fr(1, 10)) == at(Fr(1, 2))


def test_open_neighborhood_just_above_spacing():
    A = at(Fr(1, 2))
    expected = brute_within(G11, A, Fr(11, 100), strict=True)
    assert pts(G11, expected) == [Fr(2, 5), Fr(1, 2), Fr(3, 5)]
    assert open_neighborhood(G11, A, Fr(11, 100)) == expected


def test_empty_set_conventions():
    assert open_neighborhood(G11, 0, Fr(1, 2)) == 0
    assert closed_neighborhood(G11, 0, Fr(1, 2)) == 0


def test_closed_neighborhood_includes_spacing():
    A = at(Fr(1, 2))
    expected = brute_within(G11, A, Fr(1, 10), strict=False)
    assert pts(G11, expected) == [Fr(2, 5), Fr(1, 2), Fr(3, 5)]
    assert closed_neighborhood(G11, A, Fr(1, 10)) == expected


def test_closed_neighborhood_of_whole_space():
    for d in (Fr(0), Fr(1, 7), Fr(5)):
        assert closed_neighborhood(G11, G11.full, d) == G11.full


def test_closed_neighborhood_three_twentieths():
    assert pts(G11, closed_neighborhood(G11, at(0), Fr(3, 20))) == [0, Fr(1, 10)]


def test_delta_shrink_example():
    A = at(0, Fr(1, 10), Fr(1, 5))
    assert pts(G11, delta_shrink(G11, A, Fr(3, 20))) == [0, Fr(1, 10)]


def test_delta_shrink_whole_and_zero():
    assert delta_shrink(G11, G11.full, Fr(3)) == G11.full
    A = at(0, Fr(3, 10), Fr(4, 10))
    assert delta_shrink(G11, A, 0) == A


def test_open_neighborhood_needs_positive_delta():
    with pytest.raises(InvalidArgument):
        open_neighborhood(G11, 1, 0)


# --- invariants --------------------------------------------------------------------

deltas = st.fractions(min_value=Fr(1, 60), max_value=Fr(3, 2), max_denominator=60)


@st.composite
def space_and_masks(draw):
    if draw(st.booleans()):
        space = build_interval_grid(draw(st.integers(2, 12)), 0, 1)
    else:
        raw = draw(st.lists(st.fractions(0, 3, max_denominator=12), min_size=2, max_size=9,
                            unique=True))
        space = space_from_points(raw)
    A = draw(st.integers(0, full_mask(space.n)))
    B = draw(st.integers(0, full_mask(space.n)))
    return space, A, B


@settings(max_examples=200, deadline=None)
@given(space_and_masks(), deltas)
def test_neighborhoods_match_brute_force(sm, d):
    space, A, _ = sm
    assert open_neighborhood(space, A, d) == brute_within(space, A, d, strict=True)
    assert closed_neighborhood(space, A, d) == brute_within(space, A, d, strict=False)


@settings(max_examples=200, deadline=None)
@given(space_and_masks(), deltas)
def test_monotone_and_nested(sm, d):
    space, A, B = sm
    small, big = A & B, A | B
    for op in (open_neighborhood, closed_neighborhood):
        assert op(space, small, d) & ~op(space, big, d) == 0
    o, c = open_neighborhood(space, A, d), closed_neighborhood(space, A, d)
    assert o & ~c == 0
    if A:
        assert A & ~c == 0


@pytest.mark.parametrize("n", [1, 2, 5, 8, 12])
def test_shrink_duality_exhaustive(n):
    space = build_interval_grid(max(n, 2), 0, 1) if n > 1 else space_from_points([0])
    for d in (Fr(0), Fr(1, 23), space.step or Fr(1), Fr(3, 10), Fr(2)):
        for A in range(1 << space.n):
            assert delta_shrink(space, A, d) == complement(
                closed_neighborhood(space, complement(A, space.n), d), space.n)


@settings(max_examples=100, deadline=None)
@given(space_and_masks(), st.lists(st.integers(0, 2**12 - 1), min_size=1, max_size=6), deltas)
def test_closed_neighborhood_commutes_with_decreasing_intersection(sm, cuts, d):
    space = sm[0]
    chain = []
    cur = space.full
    for c in cuts:
        cur &= c & space.full
        chain.append(cur)
    inter = space.full
    rhs = space.full
    for A in chain:
        inter &= A
        rhs &= closed_neighborhood(space, A, d)
    assert closed_neighborhood(space, inter, d) == rhs


def test_complement_involution():
    for A in range(1 << 6):
        assert complement(complement(A, 6), 6) == A
        assert complement(A, 6) >> 6 == 0


@given(st.integers(0, 2**300 - 1), st.integers(300, 310))
def test_bool_roundtrip(mask, n):
    arr = mask_to_bool(mask, n)
    assert arr.shape == (n,)
    assert mask_from_bool(arr) == mask


def test_large_grid_neighborhood():
    G = build_interval_grid(4096, 0, 1)
    A = 1 << 2000
    got = closed_neighborhood(G, A, 3 * G.step)
    assert indices_of(got) == list(range(1997, 2004))


# --- descriptors -------------------------------------------------------------------


def test_realize_half_open():
    desc = SetDescriptor.interval(0, Fr(1, 2), lo_closed=False, hi_closed=True)
    assert pts(G11, realize_descriptor(G11, desc)) == [Fr(i, 10) for i in range(1, 6)]


def test_realize_open_without_grid_points():
    desc = SetDescriptor.interval(0, Fr(1, 20), False, False)
    assert realize_descriptor(G11, desc) == 0


def test_realize_whole_and_empty():
    assert realize_descriptor(G11, SetDescriptor.whole()) == G11.full
    assert realize_descriptor(G11, SetDescriptor.empty()) == 0


def test_realize_matches_direct_comparison_off_grid():
    space = space_from_points([0, Fr(1, 7), Fr(1, 3), Fr(1, 2), 1])
    desc = SetDescriptor.interval(Fr(1, 7), Fr(1, 2), False, True)
    assert pts(space, realize_descriptor(space, desc)) == [Fr(1, 3), Fr(1, 2)]


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 40), st.fractions(0, 1, max_denominator=50),
       st.fractions(0, 1, max_denominator=50), st.booleans(), st.booleans())
def test_grid_realization_matches_pointwise(res, a, b, lc, hc):
    lo, hi = min(a, b), max(a, b)
    G = build_interval_grid(res, 0, 1)
    iv = Interval(lo, hi, lc, hc)
    expect = mask_from_indices(i for i, x in enumerate(G.coords) if iv.contains(x))
    assert realize_descriptor(G, SetDescriptor("intervals", (iv,))) == expect


def test_descriptor_out_of_range():
    with pytest.raises(InvalidArgument):
        realize_descriptor(G11, SetDescriptor.interval(-1, Fr(1, 2)))


@pytest.mark.parametrize("bad", [
    ["(", 0, 1, 1, 2],
    ["<", 0, 1, 1, 2, "]"],
    ["(", 1, 1, 0, 1, "]"],
    ["(", 0, 0, 1, 2, "]"],
    {"intervals": []},
    "everything",
])
def test_malformed_descriptors(bad):
    with pytest.raises(InvalidArgument):
        SetDescriptor.from_json(bad)


def test_descriptor_json_roundtrip():
    for desc in (SetDescriptor.interval(0, Fr(1, 3), False, True), SetDescriptor.whole(),
                 SetDescriptor.empty(), SetDescriptor("mask", mask=0b1011)):
        assert SetDescriptor.from_json(desc.to_json()) == desc
    assert SetDescriptor.interval(0, Fr(1, 2), False, True).to_json() == {
        "intervals": [["(", 0, 1, 1, 2, "]"]]}
