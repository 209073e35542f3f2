import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from expander_lab.errors import DomainError
from expander_lab.spectral import (
    MatVec,
    Spectrum,
    bottom_eigenvalue,
    classify_gap,
    dense_eigh,
    jacobi_eigh,
    operator_norm,
    spectral_projection,
    symmetric_spectrum,
    top_cluster,
    top_eigenpairs,
)


def path_adjacency(n):
    return np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 33])
def test_jacobi_path_graph_closed_form(n):
    vals, vecs = jacobi_eigh(path_adjacency(n))
    expected = np.sort([2 * math.cos(math.pi * k / (n + 1)) for k in range(1, n + 1)])
    assert np.max(np.abs(vals - expected)) < 1e-12
    assert np.allclose(vecs.T @ vecs, np.eye(n), atol=1e-12)


def test_jacobi_cycle_multiplicities():
    n = 12
    c = np.roll(np.eye(n), 1, axis=1)
    spec = symmetric_spectrum(c + c.T, method="jacobi")
    assert spec.multiplicity(2.0) == 1
    assert spec.multiplicity(-2.0) == 1
    assert spec.multiplicity(1.0) == 2
    assert spec.clusters()[0] == (pytest.approx(2.0), 1)


def test_two_by_two_closed_form():
    a, b, c = 0.3, -1.7, 2.2
    vals, _ = jacobi_eigh([[a, b], [b, c]])
    disc = math.sqrt(((a - c) / 2) ** 2 + b * b)
    assert vals == pytest.approx([(a + c) / 2 - disc, (a + c) / 2 + disc], abs=1e-14)


@given(arrays(np.float64, (6, 6), elements=st.floats(-3, 3)))
def test_jacobi_trace_and_frobenius_identities(x):
    m = (x + x.T) / 2
    vals, vecs = jacobi_eigh(m)
    scale = max(1.0, np.linalg.norm(m))
    assert abs(vals.sum() - np.trace(m)) <= 1e-11 * scale
    assert abs((vals**2).sum() - (m**2).sum()) <= 1e-10 * scale**2
    assert np.allclose(vecs @ np.diag(vals) @ vecs.T, m, atol=1e-10 * scale)


def test_jacobi_matches_lapack_random():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((101, 101))
    m = x + x.T
    assert np.allclose(dense_eigh(m, "jacobi")[0], dense_eigh(m, "lapack")[0], atol=1e-10)


def test_rejects_nonsymmetric():
    with pytest.raises(DomainError):
        jacobi_eigh([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        dense_eigh(np.eye(2), "qr")


def test_lanczos_matches_dense():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((300, 300))
    m = (x + x.T) / 2
    ref = np.linalg.eigvalsh(m)
    top = top_eigenpairs(m, 4)
    assert np.allclose(np.sort(top.eigenvalues), ref[-4:], atol=1e-7)
    assert abs(bottom_eigenvalue(m) - ref[0]) < 1e-7


def test_top_cluster_finds_degenerate_top():
    # block diagonal with a triple top eigenvalue 1
    d = np.diag(np.concatenate([np.ones(3), np.linspace(-0.9, 0.8, 60)]))
    q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((63, 63)))
    m = q @ d @ q.T
    m = (m + m.T) / 2
    spec = top_cluster(MatVec(63, lambda v: m @ v), 1.0)
    rep = classify_gap(spec, 1.0, 0.1)
    assert rep.top_multiplicity == 3
    assert rep.gap == pytest.approx(0.2, abs=1e-7)
    assert rep.passed


def test_spectral_projection():
    m = np.diag([2.0, 2.0, 1.0, 0.0])
    d = spectral_projection(m, 2.0, 0.5)
    assert np.allclose(d, np.diag([1, 1, 0, 0]))
    with pytest.raises(DomainError):
        spectral_projection(m, 3.0, 0.5)
    with pytest.raises(DomainError):
        spectral_projection(m, 2.0, 1.5)


def test_operator_norm_nonnormal():
    m = np.array([[1.0, 1.0], [0.0, 1.0]])
    sigma, _ = operator_norm(m)
    assert sigma == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)


def test_rotation_example_norm():
    # a rotation by 90 degrees has norm 1 but no real eigenvalues
    r = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert operator_norm(r)[0] == pytest.approx(1.0, abs=1e-12)
    assert operator_norm((np.eye(2) + r) / 2)[0] == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


def test_spectrum_clusters():
    spec = Spectrum(np.array([0.1, 1.0, 1.0 + 1e-12, 0.5]))
    assert spec.clusters() == [(pytest.approx(1.0), 2), (0.5, 1), (0.1, 1)]
    rep = classify_gap(spec, 1.0, 0.4)
    assert rep.top_multiplicity == 2 and rep.gap == pytest.approx(0.5)


@pytest.mark.parametrize("n", [2, 3, 4])
@given(data=st.data())
def test_jacobi_matches_radical_roots(n, data):
    import sympy as sp

    entries = data.draw(st.lists(st.integers(-9, 9), min_size=n * n, max_size=n * n))
    a = np.array(entries, dtype=np.int64).reshape(n, n)
    a = a + a.T
    x = sp.symbols("x")
    poly = sp.Matrix(a.tolist()).charpoly(x)
    # radical formulas (quadratic, Cardano, Ferrari) with multiplicities
    closed = []
    for r, mult in sp.roots(poly, x).items():
        closed += [float(sp.re(sp.N(r, 40)))] * mult
    assert len(closed) == n
    vals, _ = jacobi_eigh(a.astype(float))
    assert np.max(np.abs(np.sort(closed) - vals)) <= 1e-10 * max(1.0, np.abs(vals).max())
