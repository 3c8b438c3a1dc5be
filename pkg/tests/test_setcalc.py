"""Set calculus: translation, L1 formula, boundaries, mean vectors."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folnerlab.errors import EmptySetError, PreconditionError
from folnerlab.groups import FinSet, get_group
from folnerlab.setcalc import (
    InvarianceCertificate,
    MeanVector,
    checkerboard_partition,
    congruence_partition,
    finite_part_partition,
    in_neighborhood,
    invariance,
    invariance_ratio,
    k_boundary,
    l1_distance,
    mean_vector,
    sym_diff_ratio,
    translate,
)

Z1 = get_group("z1")
Z2 = get_group("z2")


def zset(*xs):
    return FinSet(Z1, frozenset((x,) for x in xs))


def interval(a, b):
    return zset(*range(a, b))


def l1_elementwise(A, B):
    """Independent oracle: sum over elements of |mu_A(g) - mu_B(g)|."""
    fa = Fraction(1, len(A))
    fb = Fraction(1, len(B))
    total = Fraction(0)
    for g in A.elems | B.elems:
        total += abs((fa if g in A else 0) - (fb if g in B else 0))
    return total


small_zsets = st.frozensets(st.integers(-60, 60), min_size=1, max_size=50).map(
    lambda xs: zset(*xs)
)


def test_translate_examples():
    A = zset(0, 1, 2)
    assert translate((1,), A).elems == zset(1, 2, 3).elems
    assert translate(Z1.identity, A).elems == A.elems


def test_translate_preserves_size_heisenberg():
    h3 = get_group("heisenberg")
    A = h3.box(2)
    xA = translate((1, 0, 0), A)
    assert len(xA) == 16
    # elementwise oracle
    assert xA.elems == frozenset(h3.mul((1, 0, 0), a) for a in A)


def test_sym_diff_ratio_interval():
    for n in range(1, 101):
        A = interval(0, n)
        assert sym_diff_ratio((1,), A) == Fraction(2, n)


def test_sym_diff_ratio_trivial_cases():
    A = zset(0, 5, 9)
    assert sym_diff_ratio(Z1.identity, A) == 0
    assert sym_diff_ratio((100,), A) == 2  # disjoint translate
    with pytest.raises(EmptySetError):
        sym_diff_ratio((1,), FinSet(Z1))


def test_l1_distance_frozen_example():
    A = interval(0, 100)
    B = interval(95, 200)
    assert l1_distance(A, B) == Fraction(40, 21)
    assert l1_elementwise(A, B) == Fraction(40, 21)


def test_l1_equal_sets_is_zero():
    A = zset(3, 1, 4)
    assert l1_distance(A, A) == 0


@settings(max_examples=150, deadline=None)
@given(small_zsets, small_zsets)
def test_l1_matches_elementwise_oracle(A, B):
    assert l1_distance(A, B) == l1_elementwise(A, B)


@settings(max_examples=150, deadline=None)
@given(small_zsets, st.frozensets(st.integers(-60, 60), min_size=1, max_size=30))
def test_l1_subset_specialization(A, extra):
    B = FinSet(Z1, A.elems | frozenset((x,) for x in extra))
    assert l1_distance(A, B) == 2 * Fraction(len(B) - len(A), len(B))


@settings(max_examples=100, deadline=None)
@given(small_zsets, st.integers(-10, 10))
def test_l1_of_translate_equals_sym_diff_ratio(A, x):
    assert sym_diff_ratio((x,), A) == (
        l1_distance(A, translate((x,), A)) if x != 0 else Fraction(0)
    )


def test_k_boundary_interval():
    K = zset(0, 1)
    for n in range(2, 30):
        bd = k_boundary(K, interval(0, n))
        assert bd.elems == frozenset({(0,), (n,)})


def test_k_boundary_trivial():
    assert len(k_boundary(zset(0), zset(1, 2, 3))) == 0
    assert len(k_boundary(zset(0, 1), FinSet(Z1))) == 0
    with pytest.raises(EmptySetError):
        k_boundary(FinSet(Z1), zset(1))


def test_k_boundary_warns_without_identity():
    with pytest.warns(UserWarning, match="identity not in K"):
        k_boundary(zset(1, 2), zset(0, 1, 2, 3))


def test_invariance_class0_box():
    K = FinSet(Z2, frozenset({(1, 0), (-1, 0), (0, 1), (0, -1)}))
    for n in (4, 10, 25):
        A = Z2.box(n)
        cert = invariance(0, K, Fraction(1, 3), A)
        assert cert.ratio == Fraction(2, n)
        assert cert.verdict is (Fraction(2, n) < Fraction(1, 3))


def test_invariance_class2_identity_k():
    K = FinSet(Z2, frozenset({(0, 0)}))
    cert = invariance(2, K, Fraction(1, 2), Z2.box(3))
    assert cert.ratio == 0 and cert.verdict


def test_invariance_class_chain_on_random_boxes(rng):
    # with e in K: ratio1 <= ratio2 and ratio0 <= 2 * ratio1
    K = FinSet(Z2, frozenset({(0, 0), (1, 0), (0, 1)}))
    for _ in range(40):
        n = rng.randint(2, 20)
        dx, dy = rng.randint(-30, 30), rng.randint(-30, 30)
        A = translate((dx, dy), Z2.box(n))
        r0 = invariance_ratio(0, K, A)
        r1 = invariance_ratio(1, K, A)
        r2 = invariance_ratio(2, K, A)
        assert r1 <= r2
        assert r0 <= 2 * r1


def test_mean_vector_examples():
    P = congruence_partition(Z1, 2)
    assert mean_vector(interval(0, 4), P).values == (Fraction(1, 2), Fraction(1, 2))
    assert mean_vector(interval(0, 5), P).values == (Fraction(3, 5), Fraction(2, 5))
    evens = zset(0, 2, 4)
    assert mean_vector(evens, P).values == (Fraction(1), Fraction(0))


def test_mean_vector_sums_to_one(rng):
    P = congruence_partition(Z2, 3)
    for _ in range(25):
        elems = {(rng.randint(-20, 20), rng.randint(-20, 20)) for _ in range(rng.randint(1, 40))}
        vec = mean_vector(FinSet(Z2, frozenset(elems)), P)
        assert sum(vec.values) == 1


def test_in_neighborhood():
    v = MeanVector((Fraction(3, 5), Fraction(2, 5)))
    w = MeanVector((Fraction(2, 3), Fraction(1, 3)))
    assert v.linf(w) == Fraction(1, 15)
    assert in_neighborhood(v, w, Fraction(1, 10))
    assert in_neighborhood(v, v, Fraction(1, 100))
    assert not in_neighborhood(
        MeanVector((1, 0)), MeanVector((0, 1)), Fraction(1, 2)
    )
    with pytest.raises(PreconditionError):
        in_neighborhood(v, MeanVector((1,)), Fraction(1, 2))


def test_partition_well_formedness():
    congruence_partition(Z1, 3).check_well_formed(500)
    checkerboard_partition(Z2).check_well_formed(500)
    finite_part_partition(Z1, zset(0, 1, 2)).check_well_formed(500)


def test_checkerboard_enumerators_hit_right_parity():
    P = checkerboard_partition(Z2)
    for idx, part in enumerate(P.parts):
        gen = part.enumerator()
        for _ in range(30):
            g = next(gen)
            assert sum(g) % 2 == idx


def test_certificate_json_shape():
    K = FinSet(Z1, frozenset({(0,), (1,)}))
    cert = invariance(0, K, Fraction(1, 2), interval(0, 10))
    obj = cert.to_json()
    assert obj["class"] == 0
    assert obj["epsilon"] == "1/2"
    assert obj["ratio"] == "1/5"
    assert obj["verdict"] is True
