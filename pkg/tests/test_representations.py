from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from expander_lab.errors import ConsistencyError, DomainError, ResourceError
from expander_lab.finite_projective import primes_up_to
from expander_lab.group_actions import Permutation, generator_permutations, sl2_lazy_set, sl3_symmetric_set
from expander_lab.representations import (
    Operator,
    build_bundle,
    commutant_dimension,
    commutant_report,
    diagonal_perms,
    fixed_space,
    h_eigenspace_check,
    helmert_basis,
    meanzero_restriction,
    orbit_count,
    pair_fixed_space,
    perm_matrix,
    tensor,
)


def _perms(p, gens):
    return [g for _, g in generator_permutations(p, gens)]


def test_operator_exact_arithmetic():
    a = Operator([[1, 2], [3, 4]])
    half = a * Fraction(1, 2)
    assert half.exact
    assert half.fraction_entries() == [[Fraction(1, 2), 1], [Fraction(3, 2), 2]]
    assert (half + half).equals(a)
    assert (a - a).frobenius_sq() == 0
    assert (a @ Operator.identity(2)).equals(a)
    assert a.trace() == 5
    assert a.T.fraction_entries()[0] == [1, 3]
    assert a.rank() == 2


def test_operator_float_mode():
    a = Operator(np.array([[0.5, 0.25], [0.25, 1.0]]))
    assert not a.exact
    assert a.is_symmetric(1e-15)
    assert a.equals(a.to_float(), 1e-15)


def test_tensor_cap():
    a = Operator.identity(70)
    with pytest.raises(ResourceError):
        tensor(a, a)


@given(st.permutations(list(range(5))), st.permutations(list(range(4))))
def test_tensor_of_perm_matrices_is_product_perm(a, b):
    from expander_lab.group_actions import product_permutation

    pa, pb = Permutation(a), Permutation(b)
    assert tensor(perm_matrix(pa), perm_matrix(pb)).equals(perm_matrix(product_permutation(pa, pb)))


@pytest.mark.parametrize("p", primes_up_to(31))
def test_sl2_commutant_dimension_two(p):
    rep = commutant_report(_perms(p, sl2_lazy_set()))
    assert rep.linear_solve == rep.orbital_count == 2


@pytest.mark.parametrize("p", [3, 5, 7])
def test_sl3_commutant_dimension_two(p):
    assert commutant_dimension(_perms(p, sl3_symmetric_set())) == 2


def test_commutant_of_intransitive_action():
    # two fixed points and a 2-cycle: orbitals of {e, (23)} on 4 points
    perms = [Permutation([0, 1, 3, 2])]
    rep = commutant_report(perms)
    assert rep.linear_solve == rep.orbital_count == 10


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_h_eigenspace(p):
    chk = h_eigenspace_check(p)
    assert chk.passed and chk.contains_delta_inf


def test_bundle_invariants():
    for p, gens in ((5, sl2_lazy_set()), (3, sl3_symmetric_set())):
        assert build_bundle(p, gens).check_invariants() == []


def test_fixed_space_is_orbit_span():
    perms = [Permutation([1, 0, 2, 4, 3])]
    res = fixed_space(perms)
    assert res.dimension == orbit_count(perms) == 3
    for v in res.basis:
        assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_product_fixed_space_constant():
    res = fixed_space(diagonal_perms(_perms(13, sl2_lazy_set()), _perms(11, sl2_lazy_set())))
    assert res.dimension == 1
    v = res.basis[0]
    assert np.allclose(v, v[0])


@pytest.mark.parametrize("q,p", [(3, 5), (5, 3), (7, 13), (13, 2)])
def test_pair_fixed_space(q, p):
    assert pair_fixed_space(q, p).passed


def test_pair_fixed_space_rejects_equal():
    with pytest.raises(DomainError):
        pair_fixed_space(5, 5)


@pytest.mark.parametrize("n", [2, 5, 9])
def test_helmert_basis(n):
    h = np.asarray(helmert_basis(n), dtype=float)
    assert h.shape[0] == n - 1 or h.shape[1] == n - 1
    h = h if h.shape == (n, n - 1) else h.T
    assert np.allclose(h.T @ h, np.eye(n - 1))
    assert np.allclose(h.sum(axis=0), 0)


def test_meanzero_restriction_spectrum():
    b = build_bundle(7, sl2_lazy_set())
    ops = list(b.gen_ops.values())
    s = (ops[1] + ops[1].T + ops[2]) * Fraction(1, 3)
    full = np.sort(np.linalg.eigvalsh(s.values))
    rest = np.sort(np.linalg.eigvalsh(meanzero_restriction(b, s).values))
    # dropping the constant eigenvalue 1 leaves the rest
    assert np.allclose(np.sort(np.append(rest, 1.0)), full)


def test_meanzero_restriction_requires_commuting():
    b = build_bundle(5, sl2_lazy_set())
    d = Operator(np.diag(np.arange(b.n)))
    with pytest.raises(DomainError):
        meanzero_restriction(b, d)
