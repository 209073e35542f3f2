"""Experiments on the SL(2,Z) permutation representations over P^1(F_p).

Per-prime spectral gaps of the averaging operator on the mean-zero subspace,
the norm-4 witness built from a balanced sign diagonal, and an explicit
modulus for the near-fixed-vector step of the uniform convexity argument.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from expander_lab.errors import DomainError
from expander_lab.finite_projective import check_prime
from expander_lab.group_actions import sl2_lazy_set, sl2_symmetric_set
from expander_lab.representations import Operator, build_bundle, meanzero_restriction, tensor
from expander_lab.spectral import classify_gap, dense_eigh, operator_norm, symmetric_spectrum


@dataclass(frozen=True)
class SignDiagonal:
    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int64)
        if not np.all(np.abs(s) == 1):
            raise DomainError("signs must be +/-1")
        if int(s.sum()) != 0:
            raise DomainError("signs are not balanced")
        object.__setattr__(self, "signs", s)

    @classmethod
    def balanced(cls, n: int) -> SignDiagonal:
        if n % 2:
            raise DomainError(f"no balanced sign vector of odd length {n}")
        return cls(np.array([1] * (n // 2) + [-1] * (n // 2)))

    def operator(self) -> Operator:
        return Operator(np.diag(self.signs))

    def chi_inner(self) -> Fraction:
        """<u chi, chi> for the normalized constant vector, exactly."""
        return Fraction(int(self.signs.sum()), len(self.signs))


def _odd_prime(q: int) -> int:
    check_prime(q)
    if q == 2:
        raise DomainError("q must be odd: |P^1(F_2)| = 3 admits no balanced signs")
    return q


def averaging_operator(ops: Sequence[Operator], require_symmetric: bool = True) -> Operator:
    """Arithmetic mean of equally sized operators (exact when all inputs are)."""
    if not ops:
        raise DomainError("empty operator list")
    total = ops[0]
    for op in ops[1:]:
        total = total + op
    mean = total * Fraction(1, len(ops)) if total.exact else total * (1.0 / len(ops))
    if require_symmetric and not mean.is_symmetric(0.0 if mean.exact else 1e-12):
        raise DomainError("averaging operator is not symmetric; the list is not closed under transpose")
    return mean


@dataclass
class SelbergGapRecord:
    p: int
    n: int
    second_eigenvalue: float
    gap: float
    top_multiplicity: int
    generators: str

    @property
    def passed(self) -> bool:
        return self.gap > 0 and self.top_multiplicity == 1

    def as_dict(self) -> dict:
        return asdict(self)


def sl2_gap_record(p: int, generators: str = "symmetric") -> SelbergGapRecord:
    """Gap of the averaging operator on P^1(F_p), mean-zero part.

    With the symmetric set {h, h^-1, k} this is 1 - (largest eigenvalue).
    The set {I, h, k} gives a non-normal average, so its gap is reported as
    1 - (operator norm of the mean-zero part) instead.
    """
    check_prime(p)
    if generators not in ("symmetric", "lazy"):
        raise DomainError(f"unknown generator choice {generators!r}")
    gens = sl2_symmetric_set() if generators == "symmetric" else sl2_lazy_set()
    b = build_bundle(p, gens)
    s = averaging_operator(list(b.gen_ops.values()), require_symmetric=generators == "symmetric")
    restricted = meanzero_restriction(b, s)
    if generators == "symmetric":
        full = classify_gap(symmetric_spectrum(s), 1.0, 0.0)
        top_mult = full.top_multiplicity if full.top_matches else 0
        second = float(symmetric_spectrum(restricted).eigenvalues[-1])
    else:
        norm_full, _ = operator_norm(s)
        top_mult = 1 if abs(norm_full - 1.0) <= 1e-9 else 0
        second, _ = operator_norm(restricted)
    return SelbergGapRecord(p, b.n, second, 1.0 - second, top_mult, generators)


def sl2_gap_survey(primes: Sequence[int], generators: str = "symmetric", threads: int = 1) -> list[SelbergGapRecord]:
    primes = sorted(set(primes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: sl2_gap_record(p, generators), primes))
    return [sl2_gap_record(p, generators) for p in primes]


# -- witness ------------------------------------------------------------------


def witness_operator(q: int, signs: SignDiagonal | None = None) -> np.ndarray:
    """conj(u) x u + sum over {I, h, k} of conj(pi(g)) x pi(g), on l2(L_q) x l2(L_q)."""
    _odd_prime(q)
    b = build_bundle(q, sl2_lazy_set())
    u = (signs or SignDiagonal.balanced(b.n)).operator()
    total = tensor(u, u)
    for op in b.gen_ops.values():
        total = total + tensor(op, op)
    return total.values


def witness_norm(q: int) -> float:
    return operator_norm(witness_operator(q))[0]


def chi_orthogonal_displacement(q: int, signs: Sequence[int] | None = None) -> float:
    """||chi_q - u chi_q|| for the sign diagonal ``u`` (balanced by default)."""
    _odd_prime(q)
    n = q + 1
    s = SignDiagonal.balanced(n).signs if signs is None else np.asarray(signs, dtype=np.int64)
    if s.size != n:
        raise DomainError("sign vector has the wrong length")
    sq = Fraction(int(((1 - s) ** 2).sum()), n)
    return math.sqrt(sq)


# -- near-fixed vectors ---------------------------------------------------------


def beta_bound(n: int, eps: float) -> float:
    """Explicit modulus 2*sqrt(2*n*eps) for the near-fixed-vector step."""
    return 2.0 * math.sqrt(2.0 * n * max(eps, 0.0))


@dataclass
class NearFixedResult:
    vector: np.ndarray
    defect: float
    bound: float
    sum_norm: float
    n: int
    epsilon: float

    @property
    def passed(self) -> bool:
        return self.defect <= self.bound


def near_fixed_vector(contractions: Sequence, epsilon: float, tol: float = 1e-12) -> NearFixedResult:
    """Unit vector almost fixed by every contraction when their sum is nearly maximal.

    With ``S = sum u_i`` and ``xi`` a top right singular vector, each
    ``<u_i xi, eta>`` exceeds ``1 - n*eps`` for ``eta = S xi/||S xi||``, hence
    ``||u_i xi - eta|| <= sqrt(2 n eps)`` and, via ``u_1 = 1``,
    ``||u_i xi - xi|| <= 2 sqrt(2 n eps)``.
    """
    mats = [np.asarray(getattr(u, "values", u), dtype=np.float64) for u in contractions]
    n = len(mats)
    if n == 0:
        raise DomainError("no contractions given")
    d = mats[0].shape[0]
    if not np.allclose(mats[0], np.eye(d), rtol=0, atol=tol):
        raise DomainError("the first operator must be the identity")
    for u in mats:
        if np.linalg.norm(u, 2) > 1 + 1e-12:
            raise DomainError("operator is not a contraction")
    total = sum(mats)
    # the top of the Gram spectrum is often nearly degenerate here, which
    # stalls power iteration; a full symmetric solve is cheap at these sizes
    vals, vecs = dense_eigh(total.T @ total)
    sigma, xi = math.sqrt(max(vals[-1], 0.0)), vecs[:, -1]
    if not sigma > n * (1 - epsilon):
        raise DomainError(f"||sum u_i|| = {sigma} does not exceed n(1-eps) = {n * (1 - epsilon)}")
    xi = xi / np.linalg.norm(xi)
    defect = max(float(np.linalg.norm(u @ xi - xi)) for u in mats)
    return NearFixedResult(xi, defect, beta_bound(n, epsilon), sigma, n, epsilon)


def random_contraction_family(rng: np.random.Generator, n: int, dim: int, spread: float = 0.3, shrink: float = 0.05):
    """Identity followed by ``n-1`` random near-identity contractions.

    Each is a rotation ``expm(A)`` with a small skew-symmetric ``A`` times a
    factor in ``[1 - shrink, 1]``.
    """
    from scipy.linalg import expm

    family = [np.eye(dim)]
    for _ in range(n - 1):
        a = rng.standard_normal((dim, dim)) * spread * rng.uniform()
        rot = expm((a - a.T) / 2)
        family.append(rot * rng.uniform(1 - shrink, 1.0))
    return family


@dataclass
class BetaSuiteResult:
    samples: int
    failures: int
    worst_ratio: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def beta_property_suite(samples: int = 1000, seed: int = 0, dim: int = 6, max_n: int = 5) -> BetaSuiteResult:
    """Random families with epsilon measured from ||sum u_i|| (plus slack)."""
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, max_n + 1))
        fam = random_contraction_family(rng, n, dim)
        norm = float(np.linalg.norm(sum(fam), 2))
        eps = (1 - norm / n) * (1 + 1e-6) + 1e-12
        res = near_fixed_vector(fam, eps)
        if not res.passed:
            failures += 1
        if res.bound > 0:
            worst = max(worst, res.defect / res.bound)
    return BetaSuiteResult(samples, failures, worst)
