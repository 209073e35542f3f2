"""Real symmetric eigensolvers and spectral bookkeeping.

The dense path is a cyclic Jacobi method with round-robin (parallel) pair
ordering, so each round applies n/2 disjoint rotations as a few vectorized
row and column updates. Matrices larger than ``JACOBI_MAX_DIM`` go to LAPACK
and anything larger than ``DENSE_MAX_DIM`` should use ``top_eigenpairs``,
a Lanczos iteration with full reorthogonalization and explicit deflation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from expander_lab.errors import DomainError, NumericalError

JACOBI_MAX_DIM = 256
DENSE_MAX_DIM = 2000
CLUSTER_TOL = 1e-9
SYMMETRY_TOL = 1e-12


class MatVec:
    """Symmetric operator known only through its action on vectors."""

    def __init__(self, dim: int, apply: Callable[[np.ndarray], np.ndarray]):
        self.dim = dim
        self.apply = apply

    def __call__(self, v):
        return self.apply(v)


def _as_array(m) -> np.ndarray:
    vals = getattr(m, "values", m)
    arr = np.asarray(vals, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _check_symmetric(a: np.ndarray):
    if a.size and np.max(np.abs(a - a.T)) >= SYMMETRY_TOL:
        raise DomainError("matrix is not symmetric")


# -- dense Jacobi ------------------------------------------------------------


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """n-1 rounds of disjoint pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        ps = np.array(players[:half])
        qs = np.array(players[half:][::-1])
        rounds.append((np.minimum(ps, qs), np.maximum(ps, qs)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(m, tol: float = 1e-13, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * ||m||_F``.
    """
    a = _as_array(m).copy()
    _check_symmetric(a)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    a = (a + a.T) / 2
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), np.eye(n)
    size = n + (n % 2)
    if size != n:
        # a decoupled zero row/column pads to even size
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(size)
    rounds = _round_robin(size)
    target = tol * scale

    def off(x):
        return float(np.linalg.norm(x - np.diag(np.diag(x))))

    for _ in range(max_sweeps):
        if off(a) <= target:
            break
        for ps, qs in rounds:
            apq = a[ps, qs]
            live = np.abs(apq) > 1e-300
            if not live.any():
                continue
            ps, qs, apq = ps[live], qs[live], apq[live]
            app, aqq = a[ps, ps], a[qs, qs]
            theta = (aqq - app) / (2 * apq)
            with np.errstate(over="ignore"):
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta**2 + 1))
            t[theta == 0] = 1.0
            c = 1 / np.sqrt(t**2 + 1)
            s = t * c
            # A <- J^T A J with J_pp = J_qq = c, J_pq = s, J_qp = -s
            cp, cq = a[:, ps].copy(), a[:, qs].copy()
            a[:, ps] = c * cp - s * cq
            a[:, qs] = s * cp + c * cq
            rp, rq = a[ps, :].copy(), a[qs, :].copy()
            a[ps, :] = c[:, None] * rp - s[:, None] * rq
            a[qs, :] = s[:, None] * rp + c[:, None] * rq
            a[ps, qs] = 0.0
            a[qs, ps] = 0.0
            vp, vq = v[:, ps].copy(), v[:, qs].copy()
            v[:, ps] = c * vp - s * vq
            v[:, qs] = s * vp + c * vq
    else:
        if off(a) > target:
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")
    # the padding index has a zero row, so it is never rotated
    vals = np.diag(a)[:n].copy()
    vecs = v[:n, :n]
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def dense_eigh(m, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    a = _as_array(m)
    _check_symmetric(a)
    if method == "auto":
        method = "jacobi" if a.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigh(a)
    if method == "lapack":
        return np.linalg.eigh((a + a.T) / 2)
    raise DomainError(f"unknown method {method!r}")


# -- spectra -----------------------------------------------------------------


@dataclass
class Spectrum:
    """Ascending eigenvalues; ``partial`` spectra hold only some of them."""

    eigenvalues: np.ndarray
    multiplicity_tol: float = CLUSTER_TOL
    vectors: np.ndarray | None = field(default=None, repr=False)
    dimension: int | None = None
    partial: bool = False

    def __post_init__(self):
        order = np.argsort(self.eigenvalues, kind="stable")
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)[order]
        if self.vectors is not None:
            self.vectors = self.vectors[:, order]
        if self.dimension is None:
            self.dimension = len(self.eigenvalues)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues), initial=0.0))

    def clusters(self) -> list[tuple[float, int]]:
        """(value, multiplicity) pairs in descending order."""
        tol = self.multiplicity_tol * max(self.norm, 1.0)
        out: list[list] = []
        for lam in self.eigenvalues[::-1]:
            if out and out[-1][0] - lam <= tol:
                out[-1][1] += 1
            else:
                out.append([float(lam), 1])
        return [(v, k) for v, k in out]

    def multiplicity(self, value: float) -> int:
        tol = self.multiplicity_tol * max(self.norm, 1.0)
        return int(np.sum(np.abs(self.eigenvalues - value) <= tol))


def symmetric_spectrum(m, tol: float = CLUSTER_TOL, method: str = "auto", vectors: bool = False) -> Spectrum:
    vals, vecs = dense_eigh(m, method)
    return Spectrum(vals, tol, vecs if vectors else None)


# -- Lanczos -----------------------------------------------------------------


def _matvec_of(m) -> tuple[int, Callable]:
    if isinstance(m, MatVec):
        return m.dim, m.apply
    a = _as_array(m)
    _check_symmetric(a)
    return a.shape[0], lambda x: a @ x


def _lanczos_top(apply, n, locked, start, steps, rng):
    """One Lanczos run on the complement of ``locked``; returns the top Ritz pair."""

    def project(x):
        if locked.shape[1]:
            x = x - locked @ (locked.T @ x)
        return x

    q = project(start)
    nq = np.linalg.norm(q)
    if nq < 1e-12:
        q = project(rng.standard_normal(n))
        nq = np.linalg.norm(q)
    q /= nq
    basis = np.zeros((n, steps))
    alphas, betas = [], []
    for j in range(steps):
        basis[:, j] = q
        w = project(apply(q))
        alpha = float(q @ w)
        alphas.append(alpha)
        w -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ w)
        w -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ w)
        w = project(w)
        beta = float(np.linalg.norm(w))
        if j == steps - 1 or beta < 1e-12 * max(1.0, abs(alpha)):
            break
        betas.append(beta)
        q = w / beta
    k = len(alphas)
    tri = np.diag(alphas) + np.diag(betas[: k - 1], 1) + np.diag(betas[: k - 1], -1)
    theta, s = np.linalg.eigh(tri)
    y = basis[:, :k] @ s[:, -1]
    y = project(y)
    y /= np.linalg.norm(y)
    return float(theta[-1]), y, float(np.max(np.abs(theta)))


def top_eigenpairs(
    m,
    k: int,
    *,
    tol: float = 1e-8,
    steps: int = 120,
    max_restarts: int = 200,
    seed: int = 0,
    locked: np.ndarray | None = None,
) -> Spectrum:
    """``k`` largest eigenpairs by deflated, restarted Lanczos.

    Each pair is accepted once ``||m v - lambda v|| <= tol * ||m||``; ``||m||``
    is estimated from the largest Ritz value seen.
    """
    n, apply = _matvec_of(m)
    if k < 1 or k > n:
        raise DomainError(f"k must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    steps = max(2, min(steps, n))
    found_vals: list[float] = []
    vecs = np.zeros((n, 0)) if locked is None else np.array(locked, dtype=np.float64)
    n_prelocked = vecs.shape[1]
    norm_est = 0.0
    for _ in range(k):
        start = rng.standard_normal(n)
        for _restart in range(max_restarts):
            theta, y, ritz_norm = _lanczos_top(apply, n, vecs, start, min(steps, n - vecs.shape[1]), rng)
            norm_est = max(norm_est, ritz_norm, abs(theta))
            resid = np.linalg.norm(apply(y) - theta * y)
            if resid <= tol * max(norm_est, 1e-300):
                break
            start = y
        else:
            raise NumericalError(f"Lanczos did not converge (residual {resid:.3e})")
        # final Gram-Schmidt against locked vectors before locking
        if vecs.shape[1]:
            y = y - vecs @ (vecs.T @ y)
            y /= np.linalg.norm(y)
        vecs = np.column_stack([vecs, y])
        found_vals.append(theta)
    return Spectrum(np.array(found_vals), CLUSTER_TOL, vecs[:, n_prelocked:], dimension=n, partial=True)


def bottom_eigenvalue(m, **kw) -> float:
    n, apply = _matvec_of(m)
    neg = MatVec(n, lambda x: -apply(x))
    return -float(top_eigenpairs(neg, 1, **kw).eigenvalues[-1])


def top_cluster(m, expected_top: float, *, tol: float = 1e-8, cluster_tol: float = CLUSTER_TOL, max_k: int = 64, **kw) -> Spectrum:
    """Largest eigenpairs until the first value clearly below ``expected_top``.

    The returned partial spectrum holds the whole top cluster plus the next
    eigenvalue, which is what multiplicity and gap reports need.
    """
    n, _ = _matvec_of(m)
    found = None
    locked = np.zeros((n, 0))
    vals: list[float] = []
    seed = kw.pop("seed", 0)
    while len(vals) < min(max_k, n):
        part = top_eigenpairs(m, 1, tol=tol, seed=seed + len(vals), locked=locked, **kw)
        lam = float(part.eigenvalues[0])
        vals.append(lam)
        locked = np.column_stack([locked, part.vectors[:, 0]])
        if lam < expected_top - cluster_tol * max(abs(expected_top), 1.0):
            found = True
            break
    if not found and len(vals) < n:
        raise NumericalError("top cluster larger than max_k")
    return Spectrum(np.array(vals), cluster_tol, locked, dimension=n, partial=True)


# -- projections, norms, gaps ---------------------------------------------------


def spectral_projection(m, lam: float, isolation: float, spectrum: Spectrum | None = None) -> np.ndarray:
    """Orthogonal projection onto the ``lam``-eigenspace of a symmetric matrix."""
    if spectrum is None or spectrum.vectors is None:
        spectrum = symmetric_spectrum(m, vectors=True)
    vals = spectrum.eigenvalues
    tol = spectrum.multiplicity_tol * max(spectrum.norm, 1.0)
    at = np.abs(vals - lam) <= tol
    near = (np.abs(vals - lam) < isolation) & ~at
    if not at.any():
        raise DomainError(f"{lam} is not an eigenvalue")
    if near.any():
        raise DomainError(
            f"eigenvalue {lam} is not isolated: {vals[near][:3].tolist()} within {isolation}"
        )
    v = spectrum.vectors[:, at]
    return v @ v.T


def operator_norm(m, tol: float = 1e-10, max_iter: int = 200_000, seed: int = 0) -> tuple[float, np.ndarray]:
    """Largest singular value and a right singular vector.

    Power iteration on ``m^T m``; stops when ``||G x - mu x|| <= tol * mu``
    for the Rayleigh quotient ``mu`` of the Gram matrix ``G``.
    """
    a = _as_array(m)
    n = a.shape[1]
    rng = np.random.default_rng(seed)
    x = np.ones(n) + 0.1 * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    for _ in range(max_iter):
        y = a.T @ (a @ x)
        mu = float(x @ y)
        if mu <= 0.0:
            return 0.0, x
        if np.linalg.norm(y - mu * x) <= tol * mu:
            return math.sqrt(mu), x
        x = y / np.linalg.norm(y)
    raise NumericalError("power iteration did not converge")


@dataclass
class GapReport:
    top_value: float
    top_multiplicity: int
    second_value: float | None
    gap: float
    threshold: float
    expected_top: float
    top_matches: bool

    @property
    def passed(self) -> bool:
        return self.top_matches and self.gap >= self.threshold


def classify_gap(spec: Spectrum, expected_top: float, threshold: float, top_tol: float = 1e-9) -> GapReport:
    if len(spec) == 0:
        raise DomainError("empty spectrum")
    clusters = spec.clusters()
    top, mult = clusters[0]
    if len(clusters) > 1:
        second = clusters[1][0]
        gap = top - second
    else:
        second, gap = None, 0.0
    return GapReport(top, mult, second, gap, threshold, expected_top, abs(top - expected_top) <= top_tol)
