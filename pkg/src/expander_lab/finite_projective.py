"""Arithmetic in F_p and canonical enumeration of the projective line and plane.

Points are stored in the canonical form whose last nonzero coordinate is 1,
so ``[t]`` is ``(t, 1)`` and ``[inf]`` is ``(1, 0)`` on the line.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from expander_lab.errors import DomainError

MAX_PRIME = 10_000


def is_prime(n: int) -> bool:
    """Trial division; fine for the sizes used here."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, int(n**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i, flag in enumerate(sieve) if flag]


def check_prime(p: int) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise DomainError(f"{p!r} is not a prime")
    if p > MAX_PRIME:
        raise DomainError(f"prime {p} exceeds the supported range (<= {MAX_PRIME})")
    return p


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise DomainError("mixed moduli")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldElement(self.value + self._coerce(other), self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._coerce(other), self.modulus)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self.value, self.modulus)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other), self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.modulus)

    def inverse(self) -> FieldElement:
        if self.value == 0:
            raise DomainError("zero has no inverse")
        return FieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def __int__(self):
        return self.value


@dataclass(frozen=True, order=True)
class ProjectivePoint:
    coords: tuple[int, ...]
    p: int = field(compare=False)

    @property
    def dim(self) -> int:
        return len(self.coords) - 1

    def elements(self) -> tuple[FieldElement, ...]:
        return tuple(FieldElement(c, self.p) for c in self.coords)

    def label(self) -> str:
        """``[t]`` / ``[inf]`` on the line, the coordinate tuple on the plane."""
        if self.dim == 1:
            return "[inf]" if self.coords == (1, 0) else f"[{self.coords[0]}]"
        return "(" + " ".join(map(str, self.coords)) + ")"


def canonicalize(v: Sequence[int], p: int) -> ProjectivePoint:
    """Return the representative of ``v`` whose last nonzero coordinate is 1."""
    if len(v) not in (2, 3):
        raise DomainError(f"expected 2 or 3 homogeneous coordinates, got {len(v)}")
    w = [int(c) % p for c in v]
    for c in reversed(w):
        if c:
            inv = pow(c, -1, p)
            return ProjectivePoint(tuple((x * inv) % p for x in w), p)
    raise DomainError("the zero vector is not a projective point")


@dataclass(frozen=True)
class ProjectiveSpace:
    p: int
    dim: int
    points: tuple[ProjectivePoint, ...]
    index: dict = field(repr=False, compare=False)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def index_of(self, v: Sequence[int]) -> int:
        return self.index[canonicalize(v, self.p).coords]

    def closed_form_size(self) -> int:
        return sum(self.p**i for i in range(self.dim + 1))


@lru_cache(maxsize=64)
def enumerate_space(p: int, dim: int) -> ProjectiveSpace:
    check_prime(p)
    if dim not in (1, 2):
        raise DomainError(f"dimension must be 1 or 2, got {dim}")
    coords = []
    for v in itertools.product(range(p), repeat=dim + 1):
        nz = [c for c in v if c]
        if nz and nz[-1] == 1:
            coords.append(v)
    # itertools.product already yields lexicographic order
    points = tuple(ProjectivePoint(c, p) for c in coords)
    index = {pt.coords: i for i, pt in enumerate(points)}
    return ProjectiveSpace(p, dim, points, index)


def det(m: Sequence[Sequence[int]]) -> int:
    n = len(m)
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )
    raise DomainError(f"unsupported matrix size {n}")


def mat_mul(a, b, p: int | None = None):
    n = len(a)
    out = [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    if p is not None:
        out = [[x % p for x in row] for row in out]
    return out


def _check_matrix(m, size: int, p: int):
    if len(m) != size or any(len(row) != size for row in m):
        raise DomainError(f"matrix is not {size}x{size}")
    if det(m) % p != 1 % p:
        raise DomainError(f"determinant {det(m)} is not 1 mod {p}")


def apply_matrix(m, pt: ProjectivePoint) -> ProjectivePoint:
    n = len(pt.coords)
    _check_matrix(m, n, pt.p)
    v = [sum(m[i][j] * pt.coords[j] for j in range(n)) for i in range(n)]
    return canonicalize(v, pt.p)
