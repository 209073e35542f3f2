"""Generators and words of SL(2,Z) and SL(3,Z) and the permutations they induce
on projective spaces over F_p."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from expander_lab.errors import DomainError
from expander_lab.finite_projective import (
    ProjectiveSpace,
    apply_matrix,
    canonicalize,
    det,
    enumerate_space,
    mat_mul,
)

SL2 = "SL2"
SL3 = "SL3"
_SIZE = {SL2: 2, SL3: 3}


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _elementary(i, j, sign):
    m = _identity(3)
    m[i][j] = sign
    return m


def _sl3_table():
    table = {"I": _identity(3)}
    for i in range(3):
        for j in range(3):
            if i != j:
                # 1-based labels: e21+ is I + e_21
                table[f"e{i + 1}{j + 1}+"] = _elementary(i, j, 1)
                table[f"e{i + 1}{j + 1}-"] = _elementary(i, j, -1)
    table["h"] = table["e21+"]
    table["h-"] = table["e21-"]
    return table


_TABLES = {
    SL2: {
        "I": _identity(2),
        "h": [[1, 1], [0, 1]],
        "h-": [[1, -1], [0, 1]],
        "k": [[0, 1], [-1, 0]],
        "k-": [[0, -1], [1, 0]],
    },
    SL3: _sl3_table(),
}


def generator_matrix(label: str, group: str) -> list[list[int]]:
    try:
        table = _TABLES[group]
    except KeyError:
        raise DomainError(f"unknown group {group!r}") from None
    if label not in table:
        raise DomainError(f"unknown generator {label!r} for {group}")
    return [row[:] for row in table[label]]


def inverse_matrix(m):
    """Integer inverse of a determinant-one matrix (adjugate)."""
    n = len(m)
    if det(m) != 1:
        raise DomainError("inverse_matrix expects determinant 1")
    if n == 2:
        return [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
    cof = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != i]
            cols = [c for c in range(3) if c != j]
            minor = (
                m[rows[0]][cols[0]] * m[rows[1]][cols[1]]
                - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]
            )
            cof[i][j] = (-1) ** (i + j) * minor
    return [[cof[j][i] for j in range(3)] for i in range(3)]


def mat_pow(m, e: int, p: int | None = None):
    """``m**e`` by repeated squaring; reduces mod ``p`` when given."""
    if e < 0:
        m, e = inverse_matrix(m), -e
    result = _identity(len(m))
    base = [row[:] for row in m]
    while e:
        if e & 1:
            result = mat_mul(result, base, p)
        base = mat_mul(base, base, p)
        e >>= 1
    if p is not None:
        result = [[x % p for x in row] for row in result]
    return result


def _projectively_equal(a, b):
    return a == b or a == [[-x for x in row] for row in b]


@dataclass(frozen=True)
class GeneratorSet:
    group: str
    elements: tuple[tuple[str, tuple[tuple[int, ...], ...]], ...]

    @classmethod
    def from_labels(cls, labels: Iterable[str], group: str) -> GeneratorSet:
        elems = tuple(
            (lab, tuple(tuple(r) for r in generator_matrix(lab, group))) for lab in labels
        )
        return cls(group, elems)

    @property
    def labels(self) -> list[str]:
        return [lab for lab, _ in self.elements]

    def matrices(self) -> list[list[list[int]]]:
        return [[list(r) for r in m] for _, m in self.elements]

    @property
    def contains_identity(self) -> bool:
        n = _SIZE[self.group]
        return any([list(r) for r in m] == _identity(n) for _, m in self.elements)

    @property
    def symmetric(self) -> bool:
        mats = self.matrices()
        for m in mats:
            inv = inverse_matrix(m)
            if not any(_projectively_equal(inv, other) for other in mats):
                return False
        return True

    def __len__(self):
        return len(self.elements)


def sl2_lazy_set() -> GeneratorSet:
    """{I, h, k}: used where only norms matter."""
    return GeneratorSet.from_labels(["I", "h", "k"], SL2)


def sl2_symmetric_set() -> GeneratorSet:
    """{h, h^-1, k}; k is an involution projectively, so averaging is self-adjoint."""
    return GeneratorSet.from_labels(["h", "h-", "k"], SL2)


def sl3_symmetric_set() -> GeneratorSet:
    """I_3 together with the twelve elementary matrices I +/- e_ij."""
    labels = ["I"] + [
        f"e{i}{j}{s}" for i in range(1, 4) for j in range(1, 4) if i != j for s in "+-"
    ]
    return GeneratorSet.from_labels(labels, SL3)


@dataclass(frozen=True)
class GroupWord:
    """Product of generator powers, read left to right as a matrix product."""

    factors: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if any(e == 0 for _, e in self.factors):
            raise DomainError("word exponents must be nonzero")

    @classmethod
    def of(cls, *factors) -> GroupWord:
        parsed = []
        for f in factors:
            parsed.append((f, 1) if isinstance(f, str) else (f[0], int(f[1])))
        return cls(tuple(parsed))

    def __mul__(self, other: GroupWord) -> GroupWord:
        return GroupWord(self.factors + other.factors)

    def evaluate(self, group: str, p: int | None = None):
        m = _identity(_SIZE[group])
        for label, e in self.factors:
            m = mat_mul(m, mat_pow(generator_matrix(label, group), e, p), p)
        if p is not None:
            m = [[x % p for x in row] for row in m]
        return m


class Permutation:
    """Bijection of ``{0..n-1}``; ``images[i]`` is where ``i`` goes."""

    __slots__ = ("images",)

    def __init__(self, images):
        arr = np.asarray(images, dtype=np.int64)
        if arr.ndim != 1 or not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise DomainError("images do not form a bijection")
        arr.setflags(write=False)
        self.images = arr

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(np.arange(n))

    def __len__(self):
        return int(self.images.size)

    def __call__(self, i: int) -> int:
        return int(self.images[i])

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.images, other.images)

    def __hash__(self):
        return hash(self.images.tobytes())

    def __repr__(self):
        return f"Permutation({self.images.tolist()})"

    def compose(self, other: Permutation) -> Permutation:
        """``self o other``: apply ``other`` first."""
        return Permutation(self.images[other.images])

    __matmul__ = compose

    def inverse(self) -> Permutation:
        inv = np.empty_like(self.images)
        inv[self.images] = np.arange(self.images.size)
        return Permutation(inv)

    def cycles(self) -> list[tuple[int, ...]]:
        seen = np.zeros(len(self), dtype=bool)
        out = []
        for start in range(len(self)):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = int(self.images[i])
            out.append(tuple(cyc))
        return out


def permutation_of_matrix(m, space: ProjectiveSpace) -> Permutation:
    if len(m) != space.dim + 1:
        raise DomainError("matrix size does not match the projective space")
    p = space.p
    m = [[x % p for x in row] for row in m]
    images = [space.index[apply_matrix(m, pt).coords] for pt in space.points]
    return Permutation(images)


def permutation_of(word: GroupWord | str, space: ProjectiveSpace, group: str | None = None) -> Permutation:
    if isinstance(word, str):
        word = GroupWord.of(word)
    if group is None:
        group = SL2 if space.dim == 1 else SL3
    if _SIZE[group] != space.dim + 1:
        raise DomainError(f"{group} does not act on a projective space of dimension {space.dim}")
    return permutation_of_matrix(word.evaluate(group, space.p), space)


@lru_cache(maxsize=256)
def generator_permutations(p: int, gens: GeneratorSet) -> tuple[tuple[str, Permutation], ...]:
    space = enumerate_space(p, _SIZE[gens.group] - 1)
    return tuple((lab, permutation_of_matrix([list(r) for r in m], space)) for lab, m in gens.elements)


@dataclass
class ActionReport:
    p: int
    failures: list[str]
    checked: int

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_action_formulas(p: int) -> ActionReport:
    """Pointwise check of ``h: [t] -> [t+1]`` and ``k: [t] -> [-1/t]`` on P^1(F_p)."""
    space = enumerate_space(p, 1)
    sh = permutation_of("h", space)
    sk = permutation_of("k", space)
    inf = space.index[(1, 0)]
    failures = []

    def idx_t(t):
        return space.index[canonicalize((t, 1), p).coords]

    for t in range(p):
        if sh(idx_t(t)) != idx_t(t + 1):
            failures.append(f"h[{t}]")
        expected = inf if t == 0 else idx_t(-pow(t, -1, p))
        if sk(idx_t(t)) != expected:
            failures.append(f"k[{t}]")
    if sh(inf) != inf:
        failures.append("h[inf]")
    if sk(inf) != idx_t(0):
        failures.append("k[inf]")
    return ActionReport(p, failures, 2 * (p + 1))


def orbits(perms: Sequence[Permutation], n: int | None = None) -> list[np.ndarray]:
    """Orbits of the group generated by ``perms``, as sorted index arrays."""
    if n is None:
        n = len(perms[0])
    rows = np.concatenate([np.arange(n)] + [q.images for q in perms])
    cols = np.concatenate([np.arange(n)] * (len(perms) + 1))
    graph = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
    count, labels = connected_components(graph, directed=True, connection="weak")
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=count))[:-1]
    groups = np.split(order, splits)
    return sorted(groups, key=lambda g: int(g[0]))


def is_transitive(perms: Sequence[Permutation]) -> bool:
    return len(orbits(perms)) == 1


def product_permutation(*perms: Permutation) -> Permutation:
    """Diagonal action on the product set, row-major index ``(i0, i1, ...)``."""
    sizes = [len(q) for q in perms]
    grids = np.meshgrid(*[q.images for q in perms], indexing="ij")
    flat = np.ravel_multi_index([g.ravel() for g in grids], sizes)
    return Permutation(flat)
