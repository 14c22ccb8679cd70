import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from soficize.errors import DomainError, FolnerCapExceeded, StructuralError
from soficize.group import (
    GroupSpec, as_element, box, boundary_ratio, choose_folner_radius, elements_from_json,
    elements_to_json, inverse, multiply, symmetric_interval,
)


def brute_boundary(E, F):
    F = set(F)
    EF = {tuple(a + b for a, b in zip(e, f)) for e in E for f in F}
    return Fraction(len(EF ^ F), len(F))


def test_multiply_and_inverse():
    assert multiply((2, -1), (3, 5)) == (5, 4)
    assert inverse((2, -1)) == (-2, 1)
    assert GroupSpec(3).identity() == (0, 0, 0)
    with pytest.raises(StructuralError):
        multiply((1,), (1, 2))


def test_rank_zero_rejected():
    with pytest.raises(DomainError):
        GroupSpec(0)


def test_boundary_ratio_examples():
    E = symmetric_interval(1, 1)
    assert boundary_ratio(E, box(1, 5)) == Fraction(2, 11)
    E2 = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
    assert boundary_ratio(E2, box(2, 5)) == Fraction(44, 121)
    assert boundary_ratio(E, box(1, 10)) == Fraction(2, 21)


def test_boundary_ratio_is_exact_fraction():
    r = boundary_ratio(symmetric_interval(1, 3), box(1, 7))
    assert isinstance(r, Fraction)
    assert r == Fraction(6, 15)


def test_choose_folner_radius_matches_scan():
    E = symmetric_interval(1, 3)
    F = choose_folner_radius(GroupSpec(1), E, 0.05)
    # 6 / (2L + 1) <= 0.05 first holds at L = 60
    assert F.radius == 60
    assert brute_boundary(E, F) <= Fraction(1, 20)
    assert brute_boundary(E, box(1, 59)) > Fraction(1, 20)


def test_choose_folner_radius_contains_squares():
    # a huge bound is met at once; the box must still hold E*E
    F = choose_folner_radius(GroupSpec(2), symmetric_interval(2, 1), 10.0)
    assert F.radius == 2


def test_choose_folner_radius_cap():
    with pytest.raises(FolnerCapExceeded):
        choose_folner_radius(GroupSpec(1), symmetric_interval(1, 3), 1e-6, max_radius=100)


def test_box_lexicographic_index():
    F = box(2, 1)
    assert F.elements[0] == (-1, -1)
    assert F.elements[-1] == (1, 1)
    for i, g in enumerate(F):
        assert F.index(g) == i


def test_elements_json_round_trip():
    E = symmetric_interval(2, 1)
    assert elements_from_json(elements_to_json(E), 2) == sorted(E)


@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 4))
def test_boundary_ratio_matches_enumeration(rank, er, L):
    if rank == 3:
        L = min(L, 2)
    E = symmetric_interval(rank, er)
    F = box(rank, L)
    assert boundary_ratio(E, F) == brute_boundary(E, F.elements)


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=1, max_size=6),
       st.integers(0, 6))
def test_boundary_ratio_arbitrary_sets(E, L):
    F = box(2, L)
    assert boundary_ratio(E, F) == brute_boundary(E, F.elements)


@given(st.tuples(st.integers(-50, 50), st.integers(-50, 50)),
       st.tuples(st.integers(-50, 50), st.integers(-50, 50)),
       st.tuples(st.integers(-50, 50), st.integers(-50, 50)))
def test_group_axioms(a, b, c):
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
    assert multiply(a, b) == multiply(b, a)
    assert multiply(a, inverse(a)) == (0, 0)


def test_as_element_accepts_ints():
    assert as_element(3) == (3,)
    assert all(len(g) == 2 for g in itertools.islice(box(2, 2), 5))
