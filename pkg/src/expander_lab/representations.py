"""Permutation representations as exact or floating matrices.

Exact operators are stored as an integer array times a rational scale, which
keeps permutation matrices, the rank-one projection ``z = J/n`` and their
sums and products exact without per-entry ``Fraction`` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from expander_lab import _exact
from expander_lab.errors import ConsistencyError, DomainError, ResourceError
from expander_lab.finite_projective import ProjectiveSpace, enumerate_space
from expander_lab.group_actions import (
    GeneratorSet,
    Permutation,
    generator_permutations,
    orbits,
    product_permutation,
)

TENSOR_DIM_CAP = 4096
_INT64_SAFE = 2**62


def _normalize(num: np.ndarray, scale: Fraction):
    if scale == 0 or not num.any():
        return np.zeros(num.shape, dtype=np.int64), Fraction(1)
    g = int(np.gcd.reduce(np.abs(num).ravel().astype(object))) if num.dtype == object else int(
        np.gcd.reduce(np.abs(num).ravel())
    )
    if g > 1:
        num = num // g
        scale *= g
    if scale < 0:
        num, scale = -num, -scale
    if num.dtype == object and int(np.abs(num).max()) < _INT64_SAFE:
        num = num.astype(np.int64)
    return num, scale


class Operator:
    """Square matrix in exact (``num * scale``) or float64 mode."""

    __slots__ = ("num", "scale", "_float", "basis_tag")

    def __init__(self, entries, *, scale=None, exact=None, basis_tag: str = ""):
        arr = np.asarray(entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"operator must be square, got shape {arr.shape}")
        if exact is None:
            exact = arr.dtype.kind in "iub" or scale is not None
        self.basis_tag = basis_tag
        if exact:
            if arr.dtype.kind not in "iubO":
                raise DomainError("exact operators need integer entries (plus a rational scale)")
            num = arr.astype(np.int64) if arr.dtype.kind != "O" else arr
            self.num, self.scale = _normalize(num, Fraction(1 if scale is None else scale))
            self._float = None
        else:
            self.num, self.scale = None, None
            self._float = arr.astype(np.float64)

    # -- construction -------------------------------------------------------
    @classmethod
    def identity(cls, n: int, basis_tag: str = "") -> Operator:
        return cls(np.eye(n, dtype=np.int64), basis_tag=basis_tag)

    @classmethod
    def from_fractions(cls, rows, basis_tag: str = "") -> Operator:
        fr = [[Fraction(x) for x in row] for row in rows]
        den = math.lcm(*[x.denominator for row in fr for x in row]) if fr else 1
        num = np.array([[int(x * den) for x in row] for row in fr], dtype=object)
        return cls(num, scale=Fraction(1, den), basis_tag=basis_tag)

    # -- views --------------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.num is not None

    @property
    def dim(self) -> int:
        return (self.num if self.exact else self._float).shape[0]

    @property
    def values(self) -> np.ndarray:
        if self.exact:
            return self.num.astype(np.float64) * float(self.scale)
        return self._float

    def fraction_entries(self) -> list[list[Fraction]]:
        if not self.exact:
            raise DomainError("operator is not exact")
        return [[Fraction(int(v)) * self.scale for v in row] for row in self.num]

    def to_float(self) -> Operator:
        return Operator(self.values, exact=False, basis_tag=self.basis_tag)

    def __repr__(self):
        mode = f"exact, scale={self.scale}" if self.exact else "float"
        return f"Operator(dim={self.dim}, {mode}, basis_tag={self.basis_tag!r})"

    # -- arithmetic ---------------------------------------------------------
    @property
    def T(self) -> Operator:
        if self.exact:
            return Operator(self.num.T.copy(), scale=self.scale, basis_tag=self.basis_tag)
        return Operator(self._float.T.copy(), exact=False, basis_tag=self.basis_tag)

    def _check_dim(self, other: Operator):
        if self.dim != other.dim:
            raise DomainError(f"dimension mismatch {self.dim} vs {other.dim}")

    def __matmul__(self, other: Operator) -> Operator:
        self._check_dim(other)
        if self.exact and other.exact:
            a, b = self.num, other.num
            bound = int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0)) * self.dim
            if bound >= _INT64_SAFE:
                a, b = a.astype(object), b.astype(object)
            return Operator(a @ b, scale=self.scale * other.scale, basis_tag=self.basis_tag)
        return Operator(self.values @ other.values, exact=False, basis_tag=self.basis_tag)

    def __add__(self, other: Operator) -> Operator:
        self._check_dim(other)
        if self.exact and other.exact:
            s1, s2 = self.scale, other.scale
            den = math.lcm(s1.denominator, s2.denominator)
            c1 = int(s1 * den)
            c2 = int(s2 * den)
            a, b = self.num, other.num
            bound = (abs(c1) * int(np.abs(a).max(initial=0)) + abs(c2) * int(np.abs(b).max(initial=0)))
            if bound >= _INT64_SAFE:
                a, b = a.astype(object), b.astype(object)
            return Operator(c1 * a + c2 * b, scale=Fraction(1, den), basis_tag=self.basis_tag)
        return Operator(self.values + other.values, exact=False, basis_tag=self.basis_tag)

    def __neg__(self) -> Operator:
        return self * -1

    def __sub__(self, other: Operator) -> Operator:
        return self + (-other)

    def __mul__(self, c) -> Operator:
        if self.exact and isinstance(c, (int, Fraction)):
            return Operator(self.num, scale=self.scale * Fraction(c), basis_tag=self.basis_tag)
        return Operator(self.values * float(c), exact=False, basis_tag=self.basis_tag)

    __rmul__ = __mul__

    def equals(self, other: Operator, tol: float = 0.0) -> bool:
        if self.dim != other.dim:
            return False
        if self.exact and other.exact and tol == 0.0:
            return self.scale == other.scale and np.array_equal(self.num, other.num)
        return bool(np.max(np.abs(self.values - other.values), initial=0.0) <= tol)

    def commutes_with(self, other: Operator, tol: float = 0.0) -> bool:
        return (self @ other).equals(other @ self, tol)

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return self.equals(self.T, tol)

    def trace(self):
        if self.exact:
            return Fraction(int(np.trace(self.num))) * self.scale
        return float(np.trace(self._float))

    def frobenius_sq(self):
        if self.exact:
            return Fraction(int((self.num.astype(object) ** 2).sum())) * self.scale**2
        return float((self._float**2).sum())

    def rank(self) -> int:
        if self.exact:
            return _exact.rank(_exact.dense_rows(self.num.tolist()), self.dim)
        return int(np.linalg.matrix_rank(self._float))


# -- permutation representations ---------------------------------------------


def perm_matrix(perm: Permutation, basis_tag: str = "") -> Operator:
    """0/1 matrix with ``P delta_x = delta_{perm(x)}``."""
    n = len(perm)
    m = np.zeros((n, n), dtype=np.int64)
    m[perm.images, np.arange(n)] = 1
    return Operator(m, basis_tag=basis_tag)


def tensor(a: Operator, b: Operator, cap: int = TENSOR_DIM_CAP) -> Operator:
    """Kronecker product, row-major on the product index set."""
    n = a.dim * b.dim
    if n > cap:
        raise ResourceError(f"tensor dimension {n} exceeds cap {cap}")
    tag = f"{a.basis_tag}x{b.basis_tag}" if (a.basis_tag or b.basis_tag) else ""
    if a.exact and b.exact:
        return Operator(np.kron(a.num, b.num), scale=a.scale * b.scale, basis_tag=tag)
    return Operator(np.kron(a.values, b.values), exact=False, basis_tag=tag)


def conjugate(op: Operator) -> Operator:
    """Conjugate representation matrix: same real entries, tagged space."""
    tag = op.basis_tag
    if tag.startswith("conj(") and tag.endswith(")"):
        new = tag[5:-1]
    else:
        new = f"conj({tag})"
    out = op * 1
    out.basis_tag = new
    return out


@dataclass
class RepresentationBundle:
    space: ProjectiveSpace
    gens: GeneratorSet
    perms: dict[str, Permutation]
    gen_ops: dict[str, Operator]
    chi: np.ndarray
    z: Operator

    @property
    def n(self) -> int:
        return len(self.space)

    def check_invariants(self) -> list[str]:
        problems = []
        chi_exact = np.ones(self.n, dtype=np.int64)
        for lab, op in self.gen_ops.items():
            if not np.array_equal(op.num @ chi_exact, chi_exact):
                problems.append(f"{lab} does not fix chi")
            if not op.commutes_with(self.z):
                problems.append(f"{lab} does not commute with z")
        if not (self.z @ self.z).equals(self.z):
            problems.append("z is not idempotent")
        if not self.z.is_symmetric():
            problems.append("z is not symmetric")
        if self.z.rank() != 1:
            problems.append("z does not have rank 1")
        return problems


def build_bundle(p: int, gens: GeneratorSet) -> RepresentationBundle:
    dim = 1 if gens.group == "SL2" else 2
    space = enumerate_space(p, dim)
    n = len(space)
    tag = f"L{p}"
    perms = dict(generator_permutations(p, gens))
    ops = {lab: perm_matrix(q, tag) for lab, q in perms.items()}
    chi = np.full(n, 1.0 / math.sqrt(n))
    z = Operator(np.ones((n, n), dtype=np.int64), scale=Fraction(1, n), basis_tag=tag)
    return RepresentationBundle(space, gens, perms, ops, chi, z)


# -- fixed vectors and commutants --------------------------------------------


@dataclass
class FixedSpaceResult:
    dimension: int
    basis: list[np.ndarray]
    exact_basis: list[list[Fraction]] = field(repr=False)


def _as_perm(op) -> Permutation | None:
    if isinstance(op, Permutation):
        return op
    return None


def _fixed_rows(op, n: int):
    """Rows of ``(A - I) v = 0`` for a Permutation or an exact Operator."""
    perm = _as_perm(op)
    if perm is not None:
        # (Pv)[i] = v[perm^-1(i)]
        inv = perm.inverse().images
        for i in range(n):
            j = int(inv[i])
            if j != i:
                yield {j: 1, i: -1}
        return
    if not op.exact:
        raise DomainError("fixed_space needs exact operators")
    num, scale = op.num, op.scale
    for i in range(n):
        nz = np.nonzero(num[i])[0]
        row = {int(j): Fraction(int(num[i, j])) * scale for j in nz}
        row[i] = row.get(i, 0) - 1
        row = {j: v for j, v in row.items() if v}
        if row:
            yield row


def _orthonormal_floats(vectors: Sequence[Sequence[Fraction]]) -> list[np.ndarray]:
    out = []
    for w in _exact.gram_schmidt(vectors):
        v = np.array([float(x) for x in w])
        out.append(v / np.linalg.norm(v))
    return out


def fixed_space(gen_ops: Sequence) -> FixedSpaceResult:
    """Exact common fixed space of the given operators (or permutations)."""
    if not gen_ops:
        raise DomainError("no operators given")
    n = len(gen_ops[0]) if isinstance(gen_ops[0], Permutation) else gen_ops[0].dim
    ech = _exact.Echelon(n)
    for op in gen_ops:
        size = len(op) if isinstance(op, Permutation) else op.dim
        if size != n:
            raise DomainError("operators have different dimensions")
        for row in _fixed_rows(op, n):
            ech.add(row)
    kernel = ech.nullspace()
    ortho = _exact.gram_schmidt(kernel)
    return FixedSpaceResult(len(ortho), _orthonormal_floats(kernel), ortho)


def orbit_count(perms: Sequence[Permutation]) -> int:
    """Dimension of the fixed space of a permutation representation."""
    return len(orbits(perms))


def diagonal_perms(*families: Sequence[Permutation]) -> list[Permutation]:
    """Diagonal action of paired generators on a product set."""
    return [product_permutation(*gs) for gs in zip(*families)]


def _commutation_rows(op: Operator):
    """Rows of ``A T - T A = 0`` in the unknowns ``T[i, j]`` (index ``i*n + j``)."""
    n = op.dim
    num = op.num
    row_nz = [np.nonzero(num[i])[0] for i in range(n)]
    col_nz = [np.nonzero(num[:, j])[0] for j in range(n)]
    for i in range(n):
        for j in range(n):
            row: dict[int, int] = {}
            for k in row_nz[i]:
                key = int(k) * n + j
                row[key] = row.get(key, 0) + int(num[i, k])
            for k in col_nz[j]:
                key = i * n + int(k)
                row[key] = row.get(key, 0) - int(num[k, j])
            row = {c: v for c, v in row.items() if v}
            if row:
                yield row


@dataclass
class CommutantReport:
    linear_solve: int
    orbital_count: int

    @property
    def dimension(self) -> int:
        return self.linear_solve


def commutant_report(perms: Sequence[Permutation]) -> CommutantReport:
    n = len(perms[0])
    ech = _exact.Echelon(n * n)
    for q in perms:
        for row in _commutation_rows(perm_matrix(q)):
            ech.add(row)
    by_solve = n * n - ech.rank
    by_orbitals = orbit_count(diagonal_perms(perms, perms))
    return CommutantReport(by_solve, by_orbitals)


def commutant_dimension(perms: Sequence[Permutation]) -> int:
    rep = commutant_report(perms)
    if rep.linear_solve != rep.orbital_count:
        raise ConsistencyError(
            f"commutant dimension: linear solve gives {rep.linear_solve}, "
            f"orbitals give {rep.orbital_count}"
        )
    return rep.dimension


@dataclass
class EigenspaceCheck:
    p: int
    dimension: int
    matches: bool
    contains_delta_inf: bool

    @property
    def passed(self) -> bool:
        return self.dimension == 2 and self.matches


def h_eigenspace_check(p: int) -> EigenspaceCheck:
    """Exact kernel of ``pi_p(h) - 1`` compared with span{sum_t delta_[t], delta_[inf]}."""
    from expander_lab.group_actions import sl2_lazy_set

    b = build_bundle(p, sl2_lazy_set())
    n = b.n
    res = fixed_space([b.gen_ops["h"]])
    inf = b.space.index[(1, 0)]
    finite = [Fraction(int(i != inf)) for i in range(n)]
    delta_inf = [Fraction(int(i == inf)) for i in range(n)]
    expected = [finite, delta_inf]
    combined = _exact.rank(_exact.dense_rows(res.exact_basis + expected), n)
    in_kernel = _exact.rank(_exact.dense_rows(res.exact_basis + [delta_inf]), n) == res.dimension
    return EigenspaceCheck(p, res.dimension, combined == res.dimension == 2, in_kernel)


# -- mean-zero subspace -------------------------------------------------------


def helmert_basis(n: int, exact: bool = False):
    """Basis of the orthogonal complement of the constants.

    Exact mode returns the orthogonal integer vectors ``(1,..,1,-k,0,..)``;
    otherwise the normalized float columns as an ``n x (n-1)`` array.
    """
    vecs = []
    for k in range(1, n):
        v = [1] * k + [-k] + [0] * (n - k - 1)
        vecs.append(v)
    if exact:
        return vecs
    b = np.array(vecs, dtype=np.float64).T
    return b / np.linalg.norm(b, axis=0)


def meanzero_restriction(bundle: RepresentationBundle, op: Operator, tol: float = 1e-12) -> Operator:
    """Compress ``(1-z) op (1-z)`` to an orthonormal basis of the mean-zero subspace."""
    if op.dim != bundle.n:
        raise DomainError("operator does not act on this bundle's space")
    ok = op.commutes_with(bundle.z) if op.exact else op.commutes_with(bundle.z.to_float(), tol)
    if not ok:
        raise DomainError("operator does not commute with the projection onto constants")
    b = helmert_basis(bundle.n)
    return Operator(b.T @ op.values @ b, exact=False, basis_tag=f"{op.basis_tag}:meanzero")


# -- pairs of primes -----------------------------------------------------------


@dataclass
class PairFixedSpace:
    q: int
    p: int
    dimension: int
    orbit_count: int
    spanned_by_constants: bool

    @property
    def passed(self) -> bool:
        return self.dimension == self.orbit_count == 1 and self.spanned_by_constants


def pair_fixed_space(q: int, p: int, gens=None) -> PairFixedSpace:
    """Exact fixed space of conj(pi_q) x pi_p, compared with chi_q x chi_p."""
    from expander_lab.group_actions import sl2_lazy_set

    if p == q:
        raise DomainError("p and q must be distinct")
    gens = gens or sl2_lazy_set()
    fam_q = [g for _, g in generator_permutations(q, gens)]
    fam_p = [g for _, g in generator_permutations(p, gens)]
    perms = diagonal_perms(fam_q, fam_p)
    res = fixed_space(perms)
    n = len(perms[0])
    const = [[Fraction(1)] * n]
    spanned = res.dimension == 1 and _exact.rank(_exact.dense_rows(res.exact_basis + const), n) == 1
    return PairFixedSpace(q, p, res.dimension, orbit_count(perms), spanned)
