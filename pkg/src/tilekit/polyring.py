"""Exact arithmetic on integer polynomials in one variable.

Polynomials are stored densely, low degree first, with Python ints as
coefficients. Products and divisions walk only the nonzero terms, so the
very sparse masks that show up in digit-set work (degree 10^5, a dozen terms)
stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Iterable, Mapping

from .errors import NonMonicDivisor, ZeroConstantTerm


def _trim(coeffs: list[int]) -> tuple[int, ...]:
    end = len(coeffs)
    while end and coeffs[end - 1] == 0:
        end -= 1
    return tuple(coeffs[:end])


class IntPoly:
    """Immutable polynomial with integer coefficients."""

    def __init__(self, coeffs: Iterable[int] = ()):
        self.coeffs: tuple[int, ...] = _trim([int(c) for c in coeffs])

    @classmethod
    def from_terms(cls, terms: Mapping[int, int]) -> "IntPoly":
        terms = {e: c for e, c in terms.items() if c}
        if not terms:
            return cls()
        if min(terms) < 0:
            raise ValueError("negative exponent")
        dense = [0] * (max(terms) + 1)
        for e, c in terms.items():
            dense[e] = c
        return cls(dense)

    @classmethod
    def monomial(cls, e: int, c: int = 1) -> "IntPoly":
        return cls.from_terms({e: c})

    @classmethod
    def constant(cls, c: int) -> "IntPoly":
        return cls((c,))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @cached_property
    def terms(self) -> dict[int, int]:
        return {e: c for e, c in enumerate(self.coeffs) if c}

    def __getitem__(self, e: int) -> int:
        return self.coeffs[e] if 0 <= e < len(self.coeffs) else 0

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = IntPoly.constant(other)
        if not isinstance(other, IntPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "IntPoly | int") -> "IntPoly":
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        for e, c in other.terms.items():
            a[e] += c
        return IntPoly(a)

    __radd__ = __add__

    def __neg__(self) -> "IntPoly":
        return IntPoly(-c for c in self.coeffs)

    def __sub__(self, other: "IntPoly | int") -> "IntPoly":
        return self + (-_coerce(other))

    def __rsub__(self, other: int) -> "IntPoly":
        return _coerce(other) - self

    def __mul__(self, other: "IntPoly | int") -> "IntPoly":
        return poly_mul(self, _coerce(other))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "IntPoly":
        out = IntPoly.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def substitute_power(self, t: int) -> "IntPoly":
        """Return p(x^t)."""
        if t < 1:
            raise ValueError("substitution exponent must be positive")
        return IntPoly.from_terms({e * t: c for e, c in self.terms.items()})

    def __repr__(self) -> str:
        return f"IntPoly({format_poly(self)})"


def _coerce(x: "IntPoly | int") -> IntPoly:
    return x if isinstance(x, IntPoly) else IntPoly.constant(x)


def format_poly(p: IntPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for e, c in sorted(p.terms.items()):
        mag = abs(c)
        if e == 0:
            body = str(mag)
        else:
            mono = "x" if e == 1 else f"x^{e}"
            body = mono if mag == 1 else f"{mag}*{mono}"
        sign = "-" if c < 0 else "+"
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


@dataclass(frozen=True)
class DigitSet:
    """Finite set of distinct non-negative integers, kept sorted."""

    elements: tuple[int, ...]

    def __post_init__(self) -> None:
        els = tuple(int(e) for e in self.elements)
        if any(e < 0 for e in els):
            raise ValueError("digit sets hold non-negative integers only")
        if any(a >= b for a, b in zip(els, els[1:])):
            if len(set(els)) != len(els):
                raise ValueError("digit set elements must be distinct")
            els = tuple(sorted(els))
        object.__setattr__(self, "elements", els)

    @classmethod
    def of(cls, items: Iterable[int]) -> "DigitSet":
        return cls(tuple(items))

    @classmethod
    def parse(cls, text: str) -> "DigitSet":
        text = text.strip().strip("{}")
        if not text:
            return cls(())
        return cls(tuple(int(tok) for tok in text.split(",") if tok.strip()))

    @property
    def cardinality(self) -> int:
        return len(self.elements)

    @property
    def content_gcd(self) -> int:
        g = 0
        for e in self.elements:
            g = gcd(g, e)
        return g

    @property
    def is_anchored(self) -> bool:
        return bool(self.elements) and self.elements[0] == 0 and self.content_gcd == 1

    @property
    def max(self) -> int:
        return self.elements[-1]

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: object) -> bool:
        return x in set(self.elements)

    def scaled(self, k: int) -> "DigitSet":
        return DigitSet(tuple(k * e for e in self.elements))

    def __str__(self) -> str:
        return ",".join(map(str, self.elements))


def mask_polynomial(d: DigitSet) -> IntPoly:
    return IntPoly.from_terms({a: 1 for a in d.elements})


def direct_sum(*parts: Iterable[int]) -> list[int] | None:
    """Sums a_1 + ... + a_k over all choices; None if two sums coincide."""
    sums = [0]
    for part in parts:
        sums = [s + a for s in sums for a in part]
    return sorted(sums) if len(set(sums)) == len(sums) else None


def poly_mul(a: IntPoly, b: IntPoly) -> IntPoly:
    if a.is_zero() or b.is_zero():
        return IntPoly()
    ta, tb = a.terms, b.terms
    if len(ta) > len(tb):
        ta, tb = tb, ta
    out = [0] * (a.degree + b.degree + 1)
    for ea, ca in ta.items():
        for eb, cb in tb.items():
            out[ea + eb] += ca * cb
    return IntPoly(out)


def poly_divrem(num: IntPoly, den: IntPoly) -> tuple[IntPoly, IntPoly]:
    if den.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    lead = den.coeffs[-1]
    if lead not in (1, -1):
        raise NonMonicDivisor(f"leading coefficient {lead} is not +-1")
    dd = den.degree
    rem = list(num.coeffs)
    if len(rem) <= dd:
        return IntPoly(), num
    lower = [(e, c) for e, c in den.terms.items() if e != dd]
    quot = [0] * (len(rem) - dd)
    for i in range(len(rem) - 1, dd - 1, -1):
        c = rem[i]
        if not c:
            continue
        q = c * lead  # lead is its own inverse
        shift = i - dd
        quot[shift] = q
        rem[i] = 0
        for e, ce in lower:
            rem[shift + e] -= q * ce
    return IntPoly(quot), IntPoly(rem[:dd])


def divides(den: IntPoly, num: IntPoly) -> bool:
    return poly_divrem(num, den)[1].is_zero()


def exact_div(num: IntPoly, den: IntPoly) -> IntPoly | None:
    q, r = poly_divrem(num, den)
    return q if r.is_zero() else None


def fold_terms(terms: Mapping[int, int], n: int) -> dict[int, int]:
    """Reduce exponents modulo n, i.e. the remainder mod x^n - 1, as a sparse map."""
    out: dict[int, int] = {}
    for e, c in terms.items():
        r = e % n
        out[r] = out.get(r, 0) + c
    return {e: c for e, c in out.items() if c}


def mod_cyclic(p: IntPoly, n: int, *, want_quotient: bool = True) -> tuple[IntPoly | None, IntPoly]:
    """Divide p by x^n - 1 through exponent folding.

    For p with non-negative coefficients both outputs are non-negative.
    The quotient is skipped when ``want_quotient`` is false.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rem = IntPoly.from_terms(fold_terms(p.terms, n))
    if not want_quotient:
        return None, rem
    quot: dict[int, int] = {}
    for e, c in p.terms.items():
        low, reps = e % n, e // n
        # x^e - x^low = x^low (x^n - 1)(1 + x^n + ... + x^{n(reps-1)})
        for k in range(reps):
            idx = low + k * n
            quot[idx] = quot.get(idx, 0) + c
    return IntPoly.from_terms(quot), rem


def exponent_gcd(p: IntPoly) -> int:
    if p.is_zero() or p[0] == 0:
        raise ZeroConstantTerm("exponent_gcd needs a nonzero constant term")
    g = 0
    for e in p.terms:
        if e:
            g = gcd(g, e)
    return g
