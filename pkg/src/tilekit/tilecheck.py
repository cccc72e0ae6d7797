"""Radix-expansion counting: is #(D + AD + ... + A^{k-1}D) = b^k?

A necessary condition for (A, D) to give a self-affine tile. In one
dimension the algebraic decision in ``phitree`` is the authority; this is
the independent cross-check.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, CardinalityMismatch

Vector = tuple[int, ...]
Matrix = tuple[tuple[int, ...], ...]

# rough per-entry cost of a stored expansion (key tuple, digit path, dict slot)
_BYTES_PER_ENTRY = 240


def budget_bytes() -> int:
    raw = os.environ.get("TILEKIT_BUDGET_MB", "512")
    try:
        mb = float(raw)
    except ValueError:
        mb = 512.0
    return int(mb * 1024 * 1024)


def _det(m: Matrix) -> int:
    # Bareiss elimination keeps everything integral
    a = [list(row) for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class DigitSystem:
    """An expansion matrix A (1x1 for a scalar base) and its digit vectors."""

    matrix: Matrix
    digits: tuple[Vector, ...]

    def __post_init__(self) -> None:
        s = len(self.matrix)
        if s == 0 or any(len(row) != s for row in self.matrix):
            raise ValueError("expansion matrix must be square and nonempty")
        if any(len(d) != s for d in self.digits):
            raise ValueError("digit vectors must match the matrix dimension")
        if len(set(self.digits)) != len(self.digits):
            raise ValueError("digits must be distinct")
        b = abs(_det(self.matrix))
        if b < 2:
            raise ValueError("|det A| must be at least 2")
        if len(self.digits) != b:
            raise CardinalityMismatch(f"{len(self.digits)} digits but |det A| = {b}")

    @classmethod
    def scalar(cls, b: int, digits: Sequence[int]) -> "DigitSystem":
        return cls(((int(b),),), tuple((int(d),) for d in digits))

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence[int]], digits: Sequence[Sequence[int]], *, check_expanding: bool = True) -> "DigitSystem":
        m = tuple(tuple(int(v) for v in row) for row in rows)
        sys = cls(m, tuple(tuple(int(v) for v in d) for d in digits))
        if check_expanding and not sys.is_expanding():
            raise ValueError("matrix has an eigenvalue of modulus <= 1")
        return sys

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    @property
    def b(self) -> int:
        return abs(_det(self.matrix))

    def is_expanding(self, tol: float = 1e-9) -> bool:
        eig = np.linalg.eigvals(np.array(self.matrix, dtype=float))
        return bool(np.all(np.abs(eig) > 1 + tol))

    def apply(self, v: Vector) -> Vector:
        return tuple(sum(r * x for r, x in zip(row, v)) for row in self.matrix)


def _check_budget(entries: int) -> None:
    if entries * _BYTES_PER_ENTRY > budget_bytes():
        raise BudgetExceeded(
            f"{entries} expansions exceed TILEKIT_BUDGET_MB={budget_bytes() // (1024 * 1024)}"
        )


def _level(sys: DigitSystem, k: int, stop_on_collision: bool):
    """Map each distinct sum in D_{A,k} to one digit path producing it.

    Sums are built as d_0 + A(rest), so a path lists digits from the
    lowest power up. Returns (table, first collision or None).
    """
    table: dict[Vector, tuple[int, ...]] = {(0,) * sys.dimension: ()}
    collision = None
    for _ in range(k):
        _check_budget(len(table) * len(sys.digits))
        nxt: dict[Vector, tuple[int, ...]] = {}
        for v, path in table.items():
            av = sys.apply(v)
            for i, d in enumerate(sys.digits):
                w = tuple(x + y for x, y in zip(av, d))
                old = nxt.get(w)
                if old is None:
                    nxt[w] = (i,) + path
                elif collision is None:
                    collision = (old, (i,) + path, w)
                    if stop_on_collision:
                        return nxt, collision
        table = nxt
    return table, collision


def digit_expansion_count(sys: DigitSystem, k: int) -> int:
    if k < 0:
        raise ValueError("k must be non-negative")
    return len(_level(sys, k, False)[0])


@dataclass(frozen=True)
class CountReport:
    passed: bool
    K: int
    counts: tuple[int, ...]
    failing_k: int | None = None
    collision: dict | None = None

    @property
    def verdict(self) -> str:
        return f"PASS({self.K})" if self.passed else f"FAIL(k={self.failing_k})"

    def __bool__(self) -> bool:
        return self.passed


def _describe(sys: DigitSystem, path: tuple[int, ...]) -> list:
    digits = [sys.digits[i] for i in path]
    return [d[0] for d in digits] if sys.dimension == 1 else [list(d) for d in digits]


def counting_check(sys: DigitSystem, K: int) -> CountReport:
    """PASS iff #D_{A,k} = b^k for k = 1..K.

    Failure is monotone in k, so the first collision ends the run; the
    report carries two digit strings (lowest power first) with equal sums.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    b = sys.b
    table: dict[Vector, tuple[int, ...]] = {(0,) * sys.dimension: ()}
    counts = []
    for k in range(1, K + 1):
        _check_budget(len(table) * len(sys.digits))
        nxt: dict[Vector, tuple[int, ...]] = {}
        clash = None
        for v, path in table.items():
            av = sys.apply(v)
            for i, d in enumerate(sys.digits):
                w = tuple(x + y for x, y in zip(av, d))
                old = nxt.get(w)
                if old is None:
                    nxt[w] = (i,) + path
                elif clash is None:
                    clash = (old, (i,) + path, w)
        counts.append(len(nxt))
        if len(nxt) != b**k:
            left, right, value = clash
            witness = {
                "left": _describe(sys, left),
                "right": _describe(sys, right),
                "value": value[0] if sys.dimension == 1 else list(value),
            }
            return CountReport(False, K, tuple(counts), k, witness)
        table = nxt
    return CountReport(True, K, tuple(counts))
