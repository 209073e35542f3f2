"""Experiments on SL(3,Z) acting on projective planes over F_p.

Congruence prime chains, the half-density sets X_p and their shifts, the
Hilbert-Schmidt cut-down bounds, and the operators

    s_q = mean over the generators of conj(pi_q(g)) x pi_q(g) x u(g)
    t_q = conj(e_q) x e_q x 1 + conj(1 - e_q) x (1 - e_q) x 1
    r_q = s_q + t_q

for finite stand-ins ``u`` (trivial, or a permutation representation pi_r).
Tensor indices are row-major in (conjugate factor, factor, stand-in).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from expander_lab.errors import ConsistencyError, DomainError, ResourceError
from expander_lab.finite_projective import check_prime, enumerate_space, is_prime
from expander_lab.group_actions import (
    GroupWord,
    Permutation,
    generator_permutations,
    permutation_of,
    product_permutation,
    sl3_symmetric_set,
)
from expander_lab.representations import Operator, diagonal_perms, fixed_space, orbit_count
from expander_lab.spectral import (
    CLUSTER_TOL,
    DENSE_MAX_DIM,
    MatVec,
    Spectrum,
    bottom_eigenvalue,
    classify_gap,
    spectral_projection,
    symmetric_spectrum,
    top_cluster,
)

GAP_FACTOR = 1e-4
DIM_CAP = 250_000
SEARCH_CAP = 10**9


# -- prime chains -------------------------------------------------------------


@dataclass(frozen=True)
class PrimeChain:
    primes: tuple[int, ...]

    def violations(self) -> list[str]:
        out = []
        ps = self.primes
        if list(ps) != sorted(set(ps)):
            out.append("not strictly ascending")
        for p in ps:
            if p == 2 or not is_prime(p):
                out.append(f"{p} is not an odd prime")
        for i, q in enumerate(ps):
            for p in ps[i + 1 :]:
                if p % q != 1:
                    out.append(f"{p} != 1 mod {q}")
                if p <= 2 * q:
                    out.append(f"{p} <= 2*{q}")
        return out

    @property
    def valid(self) -> bool:
        return not self.violations()

    def pairs(self) -> list[tuple[int, int]]:
        """Ordered pairs of distinct members."""
        return [(p, q) for p in self.primes for q in self.primes if p != q]


def dirichlet_chain(length: int, start: int = 3, search_cap: int = SEARCH_CAP) -> PrimeChain:
    """Greedy chain: each next prime is the least prime = 1 mod the product so far."""
    if length < 1:
        raise DomainError("chain length must be at least 1")
    if start == 2 or not is_prime(start):
        raise DomainError(f"start {start} is not an odd prime")
    primes = [start]
    while len(primes) < length:
        modulus = math.prod(primes)
        # modulus is odd, so stepping by 2*modulus keeps candidates odd
        cand = 2 * modulus + 1
        while not is_prime(cand):
            cand += 2 * modulus
            if cand > search_cap:
                raise ResourceError(f"no prime = 1 mod {modulus} below {search_cap}")
        primes.append(cand)
    chain = PrimeChain(tuple(primes))
    if not chain.valid:
        raise ConsistencyError(f"generated chain is invalid: {chain.violations()}")
    return chain


def parse_chain(text: str) -> PrimeChain:
    try:
        primes = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise DomainError(f"bad chain {text!r}") from None
    chain = PrimeChain(primes)
    if not chain.valid:
        raise DomainError(f"invalid chain {primes}: {chain.violations()}")
    return chain


# -- the sets X_p ---------------------------------------------------------------


def _odd_prime(p: int) -> int:
    check_prime(p)
    if p == 2:
        raise DomainError("p must be odd")
    return p


def x_membership(p: int) -> np.ndarray:
    """Indicator of X_p: classes with a representative (1, a, b), a even in [0, p)."""
    space = enumerate_space(_odd_prime(p), 2)
    out = np.zeros(len(space), dtype=bool)
    for i, pt in enumerate(space.points):
        x1, x2, _ = pt.coords
        if x1:
            a = (x2 * pow(x1, -1, p)) % p
            out[i] = a % 2 == 0
    return out


@dataclass(frozen=True)
class CharacteristicSet:
    p: int
    n: int
    member_indices: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.member_indices)

    @property
    def lower(self) -> Fraction:
        return Fraction(self.n, 3)

    @property
    def upper(self) -> Fraction:
        return Fraction(self.n, 2)

    @property
    def passed(self) -> bool:
        return self.size == (self.p**2 + self.p) // 2 and self.lower < self.size < self.upper

    def indicator(self) -> np.ndarray:
        e = np.zeros(self.n, dtype=np.int64)
        e[list(self.member_indices)] = 1
        return e

    def projection(self) -> Operator:
        return Operator(np.diag(self.indicator()), basis_tag=f"L{self.p}")


def x_set(p: int) -> CharacteristicSet:
    mem = x_membership(p)
    return CharacteristicSet(p, mem.size, frozenset(np.flatnonzero(mem).tolist()))


def _h_power(p: int, e: int) -> Permutation:
    return permutation_of(GroupWord.of(("h", e)), enumerate_space(p, 2))


def _shifted_sets(p: int, q: int):
    if p == q:
        raise DomainError("p and q must be distinct")
    mem = x_membership(p)
    up, down = _h_power(p, q), _h_power(p, -q)
    plus = np.zeros_like(mem)
    minus = np.zeros_like(mem)
    # sigma(g) X = {sigma(g) x : x in X}
    plus[up.images[mem]] = True
    minus[down.images[mem]] = True
    return plus, mem, minus


def triple_disjointness(p: int, q: int) -> bool:
    """Whether sigma_p(h^q) X_p, X_p and sigma_p(h^-q) X_p have empty common intersection."""
    plus, mem, minus = _shifted_sets(p, q)
    return not np.any(plus & mem & minus)


@dataclass
class FBoundResult:
    p: int
    q: int
    maximum: Fraction
    values: frozenset

    @property
    def passed(self) -> bool:
        return self.maximum <= Fraction(2, 3)


def f_bound(p: int, q: int) -> FBoundResult:
    """Pointwise average of the three shifted indicators on L_p, exactly."""
    plus, mem, minus = _shifted_sets(p, q)
    counts = plus.astype(int) + mem.astype(int) + minus.astype(int)
    values = frozenset(Fraction(int(c), 3) for c in np.unique(counts))
    return FBoundResult(p, q, max(values), values)


# -- Hilbert-Schmidt counting bounds ----------------------------------------------


@dataclass
class TNormResult:
    q: int
    n: int
    x_size: int
    closed_form: Fraction
    matrix_value: float

    @property
    def agree(self) -> bool:
        return abs(float(self.closed_form) - self.matrix_value) <= 1e-12

    @property
    def passed(self) -> bool:
        return self.agree and self.closed_form < Fraction(25, 36)


def normalized_offdiagonal_commutant(n: int) -> tuple[Operator, Fraction]:
    """``J - 1`` (integer) and the squared normalization ``1/(n(n-1))``.

    ``(n(n-1))^{-1/2} (J - 1)`` is the unit-norm zero-diagonal element of
    the commutant of a 2-transitive permutation representation.
    """
    j_minus_i = np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)
    return Operator(j_minus_i), Fraction(1, n * (n - 1))


def t_norm_formula(q: int) -> TNormResult:
    xs = x_set(q)
    n, k = xs.n, xs.size
    closed = Fraction(k * (k - 1) + (n - k) * (n - k - 1), n * (n - 1))
    base, sq_norm = normalized_offdiagonal_commutant(n)
    t_tilde = base.values * math.sqrt(float(sq_norm))
    e = xs.indicator().astype(np.float64)
    cut = np.outer(e, e) * t_tilde + np.outer(1 - e, 1 - e) * t_tilde
    return TNormResult(q, n, k, closed, float((cut**2).sum()))


def t_tilde_checks(q: int) -> dict[str, bool]:
    """Exact properties of the normalized ``J - 1``: zero diagonal, commutation, unit norm."""
    from expander_lab.representations import build_bundle

    b = build_bundle(_odd_prime(q), sl3_symmetric_set())
    base, sq_norm = normalized_offdiagonal_commutant(b.n)
    return {
        "zero_diagonal": not np.any(np.diag(base.num)),
        "commutes": all(base.commutes_with(op) for op in b.gen_ops.values()),
        "unit_norm": base.frobenius_sq() * sq_norm == 1,
    }


def trace_identity(q: int, lam: Fraction | None = None) -> Fraction:
    """Tr(T*T e_q) for T*T = lam*1 + mu*z normalized by lam*n + mu = 1."""
    xs = x_set(q)
    n = xs.n
    lam = Fraction(1, n) if lam is None else Fraction(lam)
    mu = 1 - lam * n
    # Tr(1 e) = |X|, Tr(z e) = |X|/n
    return lam * xs.size + mu * Fraction(xs.size, n)


@dataclass
class TqPrimeResult:
    q: int
    p: int
    value: Fraction
    matrix_value: float
    bound: Fraction

    @property
    def passed(self) -> bool:
        return (
            abs(float(self.value) - self.matrix_value) <= 1e-12
            and self.value <= self.bound
            and self.value <= Fraction(8, 9)
        )


def tq_prime_bound(q: int, p: int) -> TqPrimeResult:
    """``||e_p T e_q + (1-e_p) T (1-e_q)||^2`` for the unit intertwiner T: l2(L_q) -> l2(L_p)."""
    if p == q:
        raise DomainError("p and q must be distinct")
    gens = sl3_symmetric_set()
    pq = [g for _, g in generator_permutations(_odd_prime(q), gens)]
    pp = [g for _, g in generator_permutations(_odd_prime(p), gens)]
    if orbit_count(diagonal_perms(pp, pq)) != 1:
        raise ConsistencyError(f"fixed space of pi_{p} x conj(pi_{q}) is not one-dimensional")
    xq, xp = x_set(q), x_set(p)
    nq, np_ = xq.n, xp.n
    value = Fraction(xp.size * xq.size + (np_ - xp.size) * (nq - xq.size), np_ * nq)
    t = np.full((np_, nq), 1.0 / math.sqrt(np_ * nq))
    ep, eq = xp.indicator().astype(float), xq.indicator().astype(float)
    cut = ep[:, None] * t * eq[None, :] + (1 - ep)[:, None] * t * (1 - eq)[None, :]
    bound = 1 - Fraction(xq.size, 3 * nq)
    return TqPrimeResult(q, p, value, float((cut**2).sum()), bound)


def intertwiner_invariant_under_h_power(q: int, p: int) -> bool:
    """The all-ones T satisfies pi_p(h^q) T pi_q(h^q)^* = T."""
    left, right = _h_power(p, q), _h_power(q, q)
    t = np.ones((len(left), len(right)), dtype=np.int64)
    moved = t[np.ix_(left.inverse().images, right.inverse().images)]
    return bool(np.array_equal(moved, t))


# -- stand-ins and tensor operators -------------------------------------------------


@dataclass(frozen=True)
class StandIn:
    """Finite substitute for the universal representation of SL(3,Z)."""

    description: str
    perms: tuple[Permutation, ...]

    @property
    def dim(self) -> int:
        return len(self.perms[0])

    @property
    def trivial(self) -> bool:
        return self.dim == 1


def parse_standin(spec: str) -> StandIn:
    gens = sl3_symmetric_set()
    if spec == "trivial":
        return StandIn("trivial", tuple(Permutation.identity(1) for _ in range(len(gens))))
    if spec.startswith("perm:"):
        try:
            r = int(spec[5:])
        except ValueError:
            raise DomainError(f"bad stand-in {spec!r}") from None
        check_prime(r)
        return StandIn(spec, tuple(g for _, g in generator_permutations(r, gens)))
    raise DomainError(f"unknown stand-in {spec!r}; use 'trivial' or 'perm:R'")


class TensorOperator:
    """``s``, ``t`` and ``r = s + t`` on l2(L_q) x l2(L_q) x stand-in space."""

    def __init__(self, q: int, standin: StandIn, dim_cap: int = DIM_CAP):
        _odd_prime(q)
        self.q = q
        self.standin = standin
        gens = sl3_symmetric_set()
        self.gen_perms = [g for _, g in generator_permutations(q, gens)]
        self.n = len(self.gen_perms[0])
        self.dim = self.n * self.n * standin.dim
        if self.dim > dim_cap:
            raise ResourceError(f"tensor dimension {self.dim} exceeds cap {dim_cap}")
        self.perms = [
            product_permutation(g, g, u) for g, u in zip(self.gen_perms, standin.perms)
        ]
        self._inv = [p.inverse().images for p in self.perms]
        e = x_set(q).indicator()
        same = (e[:, None] * e[None, :] + (1 - e)[:, None] * (1 - e)[None, :]).astype(np.float64)
        self.mask = np.repeat(same.ravel(), standin.dim)

    def s_apply(self, v: np.ndarray) -> np.ndarray:
        # (P v)[i] = v[P^-1 i]
        out = np.zeros_like(v)
        for inv in self._inv:
            out += v[inv]
        return out / len(self._inv)

    def r_apply(self, v: np.ndarray) -> np.ndarray:
        return self.s_apply(v) + self.mask * v

    def s_matvec(self) -> MatVec:
        return MatVec(self.dim, self.s_apply)

    def r_matvec(self) -> MatVec:
        return MatVec(self.dim, self.r_apply)

    def s_dense(self) -> np.ndarray:
        s = np.zeros((self.dim, self.dim))
        cols = np.arange(self.dim)
        for perm in self.perms:
            s[perm.images, cols] += 1.0
        return s / len(self.perms)

    def r_dense(self) -> np.ndarray:
        return self.s_dense() + np.diag(self.mask)

    def identity_pattern(self) -> np.ndarray:
        """vec(I)/sqrt(n) tensored with the normalized constant stand-in vector."""
        v = np.eye(self.n).ravel() / math.sqrt(self.n)
        return np.kron(v, np.full(self.standin.dim, 1 / math.sqrt(self.standin.dim)))


def k1_dimension(q: int, standin: StandIn) -> int:
    """dim of {S_xi : u(g) xi_x = xi_{sigma(g) x}}: the fixed space of pi_q x u."""
    gp = [g for _, g in generator_permutations(_odd_prime(q), sl3_symmetric_set())]
    perms = gp if standin.trivial else diagonal_perms(gp, standin.perms)
    exact = fixed_space(perms).dimension
    if exact != orbit_count(perms):
        raise ConsistencyError("fixed space and orbit count disagree")
    return exact


@dataclass
class GapExperimentResult:
    q: int
    stand_in: str
    dimension: int
    spectrum: Spectrum = field(repr=False)
    two_multiplicity: int
    k1_dimension: int
    gap_below_two: float
    epsilon_emp: float
    s_top_multiplicity: int
    min_eigenvalue: float
    method: str
    two_vectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def threshold(self) -> float:
        return GAP_FACTOR * self.epsilon_emp

    @property
    def slack(self) -> float:
        """Observed gap divided by the required one."""
        return self.gap_below_two / self.threshold if self.threshold > 0 else math.inf

    @property
    def passed(self) -> bool:
        return (
            self.two_multiplicity == self.k1_dimension
            and self.epsilon_emp > 0
            and self.gap_below_two >= self.threshold
            and self.min_eigenvalue >= -1 - 1e-9
        )


def _s_spectrum(op: TensorOperator, dense: bool) -> Spectrum:
    if dense:
        return symmetric_spectrum(op.s_dense())
    return top_cluster(op.s_matvec(), 1.0)


def gap_experiment(q: int, standin: str | StandIn = "trivial", dense_cap: int = DENSE_MAX_DIM, dim_cap: int = DIM_CAP) -> GapExperimentResult:
    si = parse_standin(standin) if isinstance(standin, str) else standin
    op = TensorOperator(q, si, dim_cap)
    dense = op.dim <= dense_cap
    s_gap = classify_gap(_s_spectrum(op, dense), 1.0, 0.0)
    eps = s_gap.gap if s_gap.top_matches else 0.0
    if dense:
        spec = symmetric_spectrum(op.r_dense(), vectors=True)
        lowest = float(spec.eigenvalues[0])
    else:
        spec = top_cluster(op.r_matvec(), 2.0)
        lowest = bottom_eigenvalue(op.r_matvec())
    r_gap = classify_gap(spec, 2.0, 0.0)
    two_mult = r_gap.top_multiplicity if r_gap.top_matches else 0
    two_vecs = None
    if spec.vectors is not None and two_mult:
        tol = CLUSTER_TOL * max(spec.norm, 1.0)
        two_vecs = spec.vectors[:, np.abs(spec.eigenvalues - 2.0) <= tol]
    return GapExperimentResult(
        q=q,
        stand_in=si.description,
        dimension=op.dim,
        spectrum=spec,
        two_multiplicity=two_mult,
        k1_dimension=k1_dimension(q, si),
        gap_below_two=r_gap.gap if two_mult else 0.0,
        epsilon_emp=eps,
        s_top_multiplicity=s_gap.top_multiplicity,
        min_eigenvalue=lowest,
        method="dense" if dense else "lanczos",
        two_vectors=two_vecs,
    )


@dataclass
class ProjectionTraceResult:
    q: int
    stand_in: str
    rank: int
    tau: float
    idempotence_error: float
    eigen_error: float

    @property
    def passed(self) -> bool:
        return self.tau > 0 and self.idempotence_error <= 1e-9


def spectral_projection_trace(q: int, standin: str | StandIn = "trivial", experiment: GapExperimentResult | None = None) -> ProjectionTraceResult:
    """Projection onto the eigenvalue-2 space of r_q and its normalized trace.

    The trace is taken on the conj(l2(L_q)) x l2(L_q) factor after tracing
    out the stand-in, then divided by the total dimension.
    """
    si = parse_standin(standin) if isinstance(standin, str) else standin
    res = experiment or gap_experiment(q, si)
    if not res.passed:
        raise DomainError("gap hypothesis failed; the projection is not isolated")
    op = TensorOperator(q, si)
    m = si.dim
    nn = op.n * op.n
    if res.method == "dense":
        r = op.r_dense()
        d = spectral_projection(r, 2.0, res.threshold, spectrum=res.spectrum)
        reduced = d.reshape(nn, m, nn, m).trace(axis1=1, axis2=3)
        idem = float(np.max(np.abs(d @ d - d)))
        eig = float(np.max(np.abs(r @ d - 2.0 * d)))
        rank = int(round(np.trace(d)))
    else:
        v = res.two_vectors
        gram = v.T @ v
        idem = float(np.max(np.abs(gram @ gram - gram)))
        eig = float(np.max(np.abs(np.column_stack([op.r_apply(c) for c in v.T]) - 2.0 * v)))
        reduced_trace = float((v**2).sum())
        rank = v.shape[1]
        return ProjectionTraceResult(q, si.description, rank, reduced_trace / op.dim, idem, eig)
    return ProjectionTraceResult(q, si.description, rank, float(np.trace(reduced)) / op.dim, idem, eig)


# -- Kazhdan-style survey --------------------------------------------------------------


@dataclass
class KazhdanRecord:
    q: int
    dimension: int
    top_multiplicity: int
    orbitals: int
    epsilon: float
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        return not self.degenerate and self.epsilon > 0 and self.top_multiplicity == self.orbitals == 2


def kazhdan_record_from_perms(q: int, perms: Sequence[Permutation], dense_cap: int = DENSE_MAX_DIM) -> KazhdanRecord:
    """Gap below 1 of the average of ``conj(P_g) x P_g`` over the given permutations."""
    n = len(perms[0])
    if all(np.array_equal(p.images, np.arange(n)) for p in perms):
        # every generator acts trivially: s = 1 and there is nothing to measure
        return KazhdanRecord(q, n * n, n * n, n * n, 0.0, degenerate=True)
    op_perms = [product_permutation(p, p) for p in perms]
    dim = n * n
    orbitals = orbit_count(op_perms)
    if dim <= dense_cap:
        s = np.zeros((dim, dim))
        cols = np.arange(dim)
        for p in op_perms:
            s[p.images, cols] += 1.0
        spec = symmetric_spectrum(s / len(op_perms))
    else:
        invs = [p.inverse().images for p in op_perms]
        spec = top_cluster(MatVec(dim, lambda v: sum(v[i] for i in invs) / len(invs)), 1.0)
    gap = classify_gap(spec, 1.0, 0.0)
    eps = gap.gap if gap.top_matches else 0.0
    return KazhdanRecord(q, dim, gap.top_multiplicity, orbitals, eps)


def sl3_kazhdan_record(q: int, dense_cap: int = DENSE_MAX_DIM) -> KazhdanRecord:
    perms = [g for _, g in generator_permutations(_odd_prime(q), sl3_symmetric_set())]
    return kazhdan_record_from_perms(q, perms, dense_cap)


def sl3_kazhdan_survey(primes: Sequence[int], threads: int = 1, dense_cap: int = DENSE_MAX_DIM) -> list[KazhdanRecord]:
    primes = sorted(set(primes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda q: sl3_kazhdan_record(q, dense_cap), primes))
    return [sl3_kazhdan_record(q, dense_cap) for q in primes]
