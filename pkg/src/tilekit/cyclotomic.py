"""Cyclotomic polynomials and the substitution rule for Phi_d(x^t)."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, prod

from sympy import factorint as _sympy_factorint

from .errors import IndexOne
from .polyring import IntPoly, exact_div


@lru_cache(maxsize=None)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(_sympy_factorint(n).items()))


def factorization(n: int) -> dict[int, int]:
    if n < 1:
        raise ValueError("factorization needs a positive integer")
    return dict(_factor(n))


def prime_factors(n: int) -> list[int]:
    return [p for p, _ in _factor(n)]


def radical(n: int) -> int:
    return prod(prime_factors(n))


def totient(n: int) -> int:
    out = 1
    for p, k in _factor(n):
        out *= (p - 1) * p ** (k - 1)
    return out


def prime_power_base(n: int) -> int | None:
    """p if n = p^a with a >= 1, else None."""
    f = _factor(n)
    return f[0][0] if len(f) == 1 else None


def is_prime(n: int) -> bool:
    return n > 1 and _factor(n) == ((n, 1),)


def divisors(n: int) -> list[int]:
    out = [1]
    for p, k in _factor(n):
        out = [d * p**i for d in out for i in range(k + 1)]
    return sorted(out)


def lcm_all(values) -> int:
    out = 1
    for v in values:
        out = out * v // gcd(out, v)
    return out


@dataclass(frozen=True)
class CycIndex:
    """A cyclotomic index d together with its prime factorization."""

    d: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("cyclotomic index must be >= 1")

    @property
    def factorization(self) -> dict[int, int]:
        return factorization(self.d)

    @property
    def phi(self) -> int:
        return totient(self.d)

    def __int__(self) -> int:
        return self.d


def _as_int(d: "CycIndex | int") -> int:
    d = int(d)
    if d < 1:
        raise ValueError("cyclotomic index must be >= 1")
    return d


_table: dict[int, IntPoly] = {1: IntPoly((-1, 1))}
_table_lock = threading.Lock()


def cyclotomic(d: "CycIndex | int") -> IntPoly:
    """The d-th cyclotomic polynomial, memoized."""
    d = _as_int(d)
    hit = _table.get(d)
    if hit is not None:
        return hit
    poly = _build(d)
    with _table_lock:
        return _table.setdefault(d, poly)


def _build(d: int) -> IntPoly:
    primes = prime_factors(d)
    rad = prod(primes)
    if rad != d:
        # Phi_d(x) = Phi_rad(x^(d/rad))
        return cyclotomic(rad).substitute_power(d // rad)
    if len(primes) == 1:
        return IntPoly([1] * d)
    # squarefree d = m*p with p not dividing m: Phi_d(x) = Phi_m(x^p) / Phi_m(x)
    p = primes[-1]
    m = d // p
    base = cyclotomic(m)
    q = exact_div(base.substitute_power(p), base)
    if q is None:  # pragma: no cover - algebraic identity
        raise ArithmeticError(f"Phi_{m}(x^{p}) not divisible by Phi_{m}")
    return q


def cyclo_at_one(d: "CycIndex | int", *, strict: bool = False) -> int:
    """Phi_d(1): p for a prime power p^a, 1 otherwise, 0 for d = 1.

    With ``strict`` the index 1 raises IndexOne instead of returning 0.
    """
    d = _as_int(d)
    if d == 1:
        if strict:
            raise IndexOne("Phi_1(1) = 0 lies outside the prime-power formula")
        return 0
    base = prime_power_base(d)
    return base if base is not None else 1


def expand_substitution(d: "CycIndex | int", t: int) -> list[int]:
    """Indices e with Phi_d(x^t) = prod Phi_e(x), sorted ascending."""
    d = _as_int(d)
    if t < 1:
        raise ValueError("substitution exponent must be positive")
    steps: list[int] = []
    for p, k in _factor(t) if t > 1 else ():
        steps.extend([p] * k)
    # primes already dividing d first: keeps the working set small
    steps.sort(key=lambda p: (d % p != 0, p))
    current = [d]
    for p in steps:
        nxt: list[int] = []
        for e in current:
            if e % p == 0:
                nxt.append(e * p)
            else:
                nxt.extend((e, e * p))
        current = nxt
    if len(set(current)) != len(current):  # pragma: no cover - cannot happen
        raise ArithmeticError("substitution produced a repeated factor")
    return sorted(current)


def substituted(d: int, t: int) -> IntPoly:
    """Phi_d(x^t) as an explicit polynomial."""
    return cyclotomic(d).substitute_power(t)
