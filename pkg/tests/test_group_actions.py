import numpy as np
import pytest
from hypothesis import given, strategies as st

from expander_lab.errors import DomainError
from expander_lab.finite_projective import enumerate_space, primes_up_to
from expander_lab.group_actions import (
    GroupWord,
    Permutation,
    generator_permutations,
    inverse_matrix,
    is_transitive,
    mat_pow,
    orbits,
    permutation_of,
    product_permutation,
    sl2_lazy_set,
    sl2_symmetric_set,
    sl3_symmetric_set,
    verify_action_formulas,
)


@pytest.mark.parametrize("p", primes_up_to(31))
def test_action_formulas(p):
    assert verify_action_formulas(p).passed


def test_generator_sets():
    s3 = sl3_symmetric_set()
    assert len(s3) == 13
    assert s3.contains_identity and s3.symmetric
    assert sl2_symmetric_set().symmetric
    assert sl2_lazy_set().labels == ["I", "h", "k"]
    assert not sl2_lazy_set().symmetric


def test_k_has_order_four_and_relation():
    space = enumerate_space(7, 1)
    k = permutation_of("k", space)
    assert k @ k == Permutation.identity(len(space))  # -1 acts trivially
    # (hk)^3 = -1 in SL2, trivial on the projective line
    hk = permutation_of(GroupWord.of("h", "k"), space)
    assert hk @ hk @ hk == Permutation.identity(len(space))


def test_h_power_on_plane():
    p, q = 7, 3
    space = enumerate_space(p, 2)
    perm = permutation_of(GroupWord.of(("h", q)), space)
    for i, pt in enumerate(space.points):
        x1, x2, x3 = pt.coords
        assert perm(i) == space.index_of((x1, x2 + q * x1, x3))


@given(st.sampled_from(["h", "k", "h-", "k-"]), st.integers(-6, 6))
def test_mat_pow_inverse(label, e):
    from expander_lab.group_actions import generator_matrix

    m = generator_matrix(label, "SL2")
    prod = np.array(mat_pow(m, e)) @ np.array(mat_pow(m, -e))
    assert np.array_equal(prod, np.eye(2, dtype=int))
    assert np.array_equal(np.array(m) @ np.array(inverse_matrix(m)), np.eye(2, dtype=int))


@given(st.permutations(list(range(7))), st.permutations(list(range(7))))
def test_permutation_group_laws(a, b):
    pa, pb = Permutation(a), Permutation(b)
    assert (pa @ pb)(3) == pa(pb(3))
    assert pa @ pa.inverse() == Permutation.identity(7)
    assert sorted(i for c in pa.cycles() for i in c) == list(range(7))


def test_orbits_and_transitivity():
    for p in (3, 5, 7):
        perms = [g for _, g in generator_permutations(p, sl3_symmetric_set())]
        assert is_transitive(perms)
    a = Permutation([1, 0, 2, 3])
    b = Permutation([0, 1, 3, 2])
    assert [o.tolist() for o in orbits([a, b])] == [[0, 1], [2, 3]]


def test_product_permutation_row_major():
    a = Permutation([1, 2, 0])
    b = Permutation([1, 0])
    ab = product_permutation(a, b)
    for i in range(3):
        for j in range(2):
            assert ab(i * 2 + j) == a(i) * 2 + b(j)


def test_unknown_generator():
    with pytest.raises(DomainError):
        permutation_of("x", enumerate_space(5, 1))
