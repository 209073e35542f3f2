"""Sparse exact elimination over Q.

Rows are dicts ``column -> Fraction``. The systems built by the lab (differences
of permutation matrices, commutation equations) have two nonzeros per row, so
sparse row echelon form stays small.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


class Echelon:
    """Incrementally built row echelon form keyed by leading column."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.pivots: dict[int, dict[int, Fraction]] = {}

    def add(self, row: dict) -> bool:
        """Reduce ``row`` against the pivots; keep it if independent."""
        row = {c: Fraction(v) for c, v in row.items() if v}
        while row:
            lead = min(row)
            piv = self.pivots.get(lead)
            if piv is None:
                inv = 1 / row[lead]
                self.pivots[lead] = {c: v * inv for c, v in row.items()}
                return True
            factor = row[lead]
            for c, v in piv.items():
                nv = row.get(c, 0) - factor * v
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
        return False

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def nullspace(self) -> list[list[Fraction]]:
        free = [c for c in range(self.ncols) if c not in self.pivots]
        order = sorted(self.pivots, reverse=True)
        basis = []
        for f in free:
            x = {f: Fraction(1)}
            for lead in order:
                s = sum((v * x.get(c, 0) for c, v in self.pivots[lead].items() if c != lead), Fraction(0))
                if s:
                    x[lead] = -s
            basis.append([x.get(c, Fraction(0)) for c in range(self.ncols)])
        return basis


def nullspace(rows: Iterable[dict], ncols: int) -> list[list[Fraction]]:
    ech = Echelon(ncols)
    for r in rows:
        ech.add(r)
    return ech.nullspace()


def rank(rows: Iterable[dict], ncols: int) -> int:
    ech = Echelon(ncols)
    for r in rows:
        ech.add(r)
    return ech.rank


def dense_rows(matrix) -> list[dict]:
    return [{j: v for j, v in enumerate(row) if v} for row in matrix]


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((a * b for a, b in zip(u, v) if a and b), Fraction(0))


def gram_schmidt(vectors: Sequence[Sequence]) -> list[list[Fraction]]:
    """Orthogonal (not normalized) basis of the span, exact over Q."""
    out: list[list[Fraction]] = []
    norms: list[Fraction] = []
    for v in vectors:
        w = [Fraction(x) for x in v]
        for u, nu in zip(out, norms):
            c = dot(w, u) / nu
            if c:
                w = [a - c * b for a, b in zip(w, u)]
        nw = dot(w, w)
        if nw:
            out.append(w)
            norms.append(nw)
    return out
