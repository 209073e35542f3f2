import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from expander_lab.errors import DomainError, ResourceError
from expander_lab.wassermann_lab import (
    PrimeChain,
    TensorOperator,
    dirichlet_chain,
    f_bound,
    gap_experiment,
    intertwiner_invariant_under_h_power,
    k1_dimension,
    kazhdan_record_from_perms,
    parse_chain,
    parse_standin,
    sl3_kazhdan_record,
    spectral_projection_trace,
    t_norm_formula,
    t_tilde_checks,
    tq_prime_bound,
    trace_identity,
    triple_disjointness,
    x_membership,
    x_set,
)
from expander_lab.group_actions import Permutation
from expander_lab.finite_projective import enumerate_space

CHAIN = (3, 7, 43)


def _sympy_least_prime_one_mod(m):
    k = 1
    while not sp.isprime(k * m + 1):
        k += 1
    return k * m + 1


def test_chain_against_sympy_oracle():
    primes = [3]
    for _ in range(3):
        primes.append(_sympy_least_prime_one_mod(math.prod(primes)))
    assert tuple(primes) == (3, 7, 43, 3613)
    assert dirichlet_chain(3).primes == CHAIN
    assert dirichlet_chain(4).primes == (3, 7, 43, 3613)


def test_chain_validity():
    assert PrimeChain(CHAIN).valid
    assert not PrimeChain((3, 5)).valid
    assert not PrimeChain((3, 7, 29)).valid
    with pytest.raises(DomainError):
        parse_chain("3,5")
    with pytest.raises(DomainError):
        dirichlet_chain(0)
    with pytest.raises(DomainError):
        dirichlet_chain(2, start=9)
    with pytest.raises(ResourceError):
        dirichlet_chain(4, search_cap=1000)


@pytest.mark.parametrize("p,size,n", [(3, 6, 13), (5, 15, 31), (7, 28, 57), (43, 946, 1893)])
def test_x_sets(p, size, n):
    xs = x_set(p)
    assert (xs.size, xs.n) == (size, n)
    assert Fraction(n, 3) < xs.size < Fraction(n, 2)
    assert xs.passed


def test_x_set_members_by_first_coordinate():
    p = 7
    space = enumerate_space(p, 2)
    mem = x_membership(p)
    expected = {space.index_of((1, a, b)) for a in range(0, p, 2) for b in range(p)}
    assert set(np.flatnonzero(mem)) == expected
    proj = x_set(p).projection()
    assert proj.exact and (proj @ proj).equals(proj)


@pytest.mark.parametrize("p,q", [(p, q) for p in CHAIN for q in CHAIN if p != q])
def test_disjointness_and_f_bound(p, q):
    assert triple_disjointness(p, q)
    r = f_bound(p, q)
    assert r.passed
    assert r.values <= {Fraction(0), Fraction(1, 3), Fraction(2, 3)}


def test_shift_reduces_mod_p():
    from expander_lab.wassermann_lab import _shifted_sets

    # 7 = 1 mod 3, so h^7 and h act alike on L_3
    for a, b in zip(_shifted_sets(3, 7), _shifted_sets(3, 1)):
        assert np.array_equal(a, b)


def test_f_max_one_iff_not_disjoint():
    # a shift by a multiple of p is trivial, so the three sets coincide
    assert not triple_disjointness(5, 10)
    assert f_bound(5, 10).maximum == 1
    for p, q in ((7, 3), (43, 7)):
        assert triple_disjointness(p, q) == (f_bound(p, q).maximum < 1)


def test_disjoint_rejects_equal_primes():
    with pytest.raises(DomainError):
        triple_disjointness(7, 7)
    with pytest.raises(DomainError):
        f_bound(3, 3)


@pytest.mark.parametrize("q,value", [(3, Fraction(6, 13)), (7, Fraction(28, 57))])
def test_t_norm(q, value):
    r = t_norm_formula(q)
    assert r.closed_form == value
    assert abs(float(value) - r.matrix_value) <= 1e-12
    assert r.passed and value < Fraction(25, 36)


def test_t_tilde_properties():
    assert all(t_tilde_checks(3).values())


@pytest.mark.parametrize("q,value", [(3, Fraction(6, 13)), (7, Fraction(28, 57))])
def test_trace_identity(q, value):
    assert trace_identity(q) == value > Fraction(1, 3)
    n = x_set(q).n
    # independent of the split lam*1 + mu*z with lam*n + mu = 1
    for lam in (Fraction(0), Fraction(1, 2 * n), Fraction(1, n)):
        assert trace_identity(q, lam) == value


def test_tq_prime_bound():
    r = tq_prime_bound(3, 7)
    assert r.value == Fraction(371, 741)
    assert r.passed
    assert tq_prime_bound(3, 43).passed
    assert intertwiner_invariant_under_h_power(3, 7)
    with pytest.raises(DomainError):
        tq_prime_bound(3, 3)


def test_gap_experiment_q3_trivial():
    res = gap_experiment(3)
    assert res.dimension == 169 and res.method == "dense"
    assert res.two_multiplicity == res.k1_dimension == 1
    assert res.gap_below_two >= 1e-4 * res.epsilon_emp
    assert res.min_eigenvalue >= -1
    assert res.passed
    v = res.two_vectors[:, 0]
    pattern = TensorOperator(3, parse_standin("trivial")).identity_pattern()
    assert abs(abs(v @ pattern) - 1) < 1e-10
    proj = spectral_projection_trace(3, "trivial", res)
    assert proj.rank == 1
    assert abs(proj.tau - 1 / 169) <= 1e-9
    assert proj.idempotence_error <= 1e-9


def test_gap_experiment_perm_standin():
    res = gap_experiment(3, "perm:5")
    assert res.dimension == 169 * 31 and res.method == "lanczos"
    assert res.two_multiplicity == res.k1_dimension == 1
    assert res.passed
    proj = spectral_projection_trace(3, "perm:5", res)
    assert proj.rank == 1 and proj.tau > 0


def test_gap_experiment_matvec_matches_dense():
    op = TensorOperator(3, parse_standin("perm:2"))
    v = np.random.default_rng(0).standard_normal(op.dim)
    assert np.allclose(op.r_dense() @ v, op.r_apply(v))
    assert np.allclose(op.r_dense(), op.r_dense().T)


def test_k1_dimension_matches_orbits():
    assert k1_dimension(3, parse_standin("trivial")) == 1
    assert k1_dimension(3, parse_standin("perm:2")) == 1


def test_standin_parsing():
    assert parse_standin("trivial").dim == 1
    assert parse_standin("perm:3").dim == 13
    for bad in ("perm:x", "perm:4", "universal"):
        with pytest.raises(DomainError):
            parse_standin(bad)


def test_dimension_cap():
    with pytest.raises(ResourceError):
        gap_experiment(7, "perm:7", dim_cap=10_000)


def test_kazhdan_records():
    r = sl3_kazhdan_record(3)
    assert r.top_multiplicity == r.orbitals == 2
    assert r.epsilon > 0 and r.passed
    deg = kazhdan_record_from_perms(0, [Permutation.identity(5)] * 3)
    assert deg.degenerate and not deg.passed


@given(st.sampled_from([3, 5, 7, 11, 13, 17, 19, 23, 29]), st.integers(1, 3))
def test_chain_invariant_property(start, length):
    chain = dirichlet_chain(length, start)
    assert chain.valid and chain.primes[0] == start
    for i, q in enumerate(chain.primes):
        for p in chain.primes[i + 1 :]:
            assert p % q == 1 and p > 2 * q


@given(st.sampled_from([3, 5, 7, 11, 13, 17, 19]))
def test_x_set_property(p):
    xs = x_set(p)
    assert xs.size == (p * p + p) // 2
    assert Fraction(xs.n, 3) < xs.size < Fraction(xs.n, 2)
