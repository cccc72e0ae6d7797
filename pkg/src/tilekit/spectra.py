"""Cyclotomic spectra of mask polynomials and the Coven-Meyerowitz conditions."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from itertools import combinations, product
from math import prod
from typing import Iterable, Mapping

from .cyclotomic import (
    cyclo_at_one,
    cyclotomic,
    factorization,
    prime_factors,
    prime_power_base,
    radical,
)
from .errors import CardinalityMismatch, ZeroPolynomial
from .polyring import DigitSet, IntPoly, exact_div, fold_terms

Terms = Mapping[int, int]


def _terms_of(obj: "IntPoly | DigitSet | Terms") -> Terms:
    if isinstance(obj, IntPoly):
        return obj.terms
    if isinstance(obj, DigitSet):
        return {a: 1 for a in obj.elements}
    return obj


def cyclotomic_divides(s: int, poly: "IntPoly | DigitSet | Terms") -> bool:
    """Exact test for Phi_s | poly.

    Folds poly mod x^s - 1 and splits exponents by residue mod t = s/rad(s).
    Since x^t - zeta_r is the minimal polynomial of zeta_s over Q(zeta_r),
    Phi_s divides iff Phi_r divides every residue-class slice.
    """
    terms = _terms_of(poly)
    if s == 1:
        return sum(terms.values()) == 0
    folded = fold_terms(terms, s)
    if not folded:
        return True
    r = radical(s)
    t = s // r
    slices: dict[int, dict[int, int]] = {}
    for e, c in folded.items():
        slices.setdefault(e % t, {})[e // t] = c
    if len(prime_factors(r)) == 1:
        # r prime: Phi_r | g with deg g < r iff all r coefficients agree
        for g in slices.values():
            if len(g) != r or len(set(g.values())) != 1:
                return False
        return True
    phi_r = None
    zeta = cmath.exp(2j * cmath.pi / r)
    for g in slices.values():
        if len(g) < 2:
            return False
        approx = sum(c * zeta**e for e, c in g.items())
        if abs(approx) > 1e-6 * max(1.0, sum(abs(c) for c in g.values())):
            return False
        if phi_r is None:
            phi_r = cyclotomic(r)
        if exact_div(IntPoly.from_terms(g), phi_r) is None:
            return False
    return True


@dataclass(frozen=True)
class Spectrum:
    full: tuple[int, ...]
    prime_power: tuple[int, ...]
    by_prime: dict[int, tuple[int, ...]] = field(default_factory=dict)

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "Spectrum":
        full = tuple(sorted(set(indices)))
        pp = tuple(s for s in full if prime_power_base(s) is not None)
        by_prime: dict[int, list[int]] = {}
        for s in pp:
            ((p, a),) = factorization(s).items()
            by_prime.setdefault(p, []).append(a)
        return cls(full, pp, {p: tuple(v) for p, v in sorted(by_prime.items())})

    def to_dict(self) -> dict:
        return {
            "full": list(self.full),
            "prime_power": list(self.prime_power),
            "by_prime": {str(p): list(v) for p, v in self.by_prime.items()},
        }


def spectrum_bound(degree: int) -> int:
    return 2 * degree * degree + 1


def _smooth_upto(primes: list[int], limit: int) -> list[int]:
    out = [1]
    for p in primes:
        grown = []
        for v in out:
            while v <= limit:
                grown.append(v)
                v *= p
        out = grown
    return sorted(v for v in out if v > 1)


def compute_spectrum(p: "IntPoly | DigitSet", *, primes: Iterable[int] | None = None) -> Spectrum:
    """All s > 1 with Phi_s | p.

    The scan runs to 2 deg^2 + 1, which is exhaustive because phi(s) >= sqrt(s/2).
    With ``primes`` only indices built from those primes are considered;
    the bound then tightens to deg * prod p/(p-1).
    """
    terms = _terms_of(p)
    if not terms:
        raise ZeroPolynomial("spectrum of the zero polynomial is undefined")
    deg = max(terms)
    if primes is None:
        candidates: Iterable[int] = range(2, spectrum_bound(deg) + 1)
    else:
        ps = sorted(set(primes))
        limit = deg
        for q in ps:
            limit = limit * q // (q - 1) + 1
        candidates = _smooth_upto(ps, limit)
    return Spectrum.from_indices(s for s in candidates if cyclotomic_divides(s, terms))


def _prime_power_divides(terms: Terms, p: int, k: int) -> bool:
    """Phi_{p^k} | P iff, after folding mod p^k, the p coefficients in each
    class mod p^(k-1) agree."""
    step = p ** (k - 1)
    s = step * p
    if all(c == 1 for c in terms.values()):
        res = {e % s for e in terms}
        if len(res) == len(terms):
            # 0/1 after folding: every fiber is either full or empty
            return all((r + step) % s in res for r in res)
    counts = [0] * s
    for e, c in terms.items():
        counts[e % s] += c
    return all(len(set(counts[r::step])) == 1 for r in range(step))


def prime_power_spectrum(a: "DigitSet | Terms") -> Spectrum:
    """Prime-power part of the spectrum of a polynomial with non-negative coefficients.

    Phi_{p^k}(1) = p, so p must divide P(1). Divisibility also needs two
    exponents in one class mod p^(k-1) that differ mod p^k, so p^(k-1) <= deg.
    """
    terms = _terms_of(a)
    if not terms:
        raise ZeroPolynomial("empty digit set")
    if any(c < 0 for c in terms.values()):
        raise ValueError("prime_power_spectrum needs non-negative coefficients")
    deg = max(terms)
    weight = sum(terms.values())
    found = []
    for p in prime_factors(weight) if weight > 1 else ():
        k = 1
        while p ** (k - 1) <= deg:
            if _prime_power_divides(terms, p, k):
                found.append(p**k)
            k += 1
    return Spectrum.from_indices(found)


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    detail: dict

    def __bool__(self) -> bool:
        return self.holds


def check_T1(a: DigitSet) -> ConditionReport:
    if not a.cardinality:
        raise ValueError("T1 needs a nonempty set")
    spec = prime_power_spectrum(a)
    factors = [(s, cyclo_at_one(s)) for s in spec.prime_power]
    value = prod(v for _, v in factors)
    return ConditionReport(
        value == a.cardinality,
        {"cardinality": a.cardinality, "factors": factors, "product": value},
    )


def check_T2(a: DigitSet, spectrum: Spectrum | None = None) -> ConditionReport:
    """Products of prime powers over pairwise-distinct primes must stay in the spectrum."""
    if not a.cardinality:
        raise ValueError("T2 needs a nonempty set")
    spec = spectrum or prime_power_spectrum(a)
    groups = [[p**k for k in exps] for p, exps in spec.by_prime.items()]
    checked = []
    failing = []
    for size in range(2, len(groups) + 1):
        for chosen in combinations(groups, size):
            for combo in product(*chosen):
                s = prod(combo)
                checked.append(s)
                if not cyclotomic_divides(s, a):
                    failing.append({"product": s, "factors": list(combo)})
    return ConditionReport(not failing, {"checked": sorted(checked), "failing": failing})


@dataclass(frozen=True)
class StructureReport:
    holds: bool
    per_prime: dict[int, dict]

    def __bool__(self) -> bool:
        return self.holds


def check_spectrum_structure(d: DigitSet, b: int) -> StructureReport:
    """Exponents a with Phi_{p^a} | P_D must form a complete residue system mod alpha."""
    if d.cardinality != b:
        raise CardinalityMismatch(f"#D = {d.cardinality} but b = {b}")
    spec = prime_power_spectrum(d)
    ok = True
    report = {}
    for p, alpha in factorization(b).items():
        exps = list(spec.by_prime.get(p, ()))
        residues = sorted(e % alpha for e in exps)
        good = residues == list(range(alpha))
        ok &= good
        report[p] = {"alpha": alpha, "exponents": exps, "residues": residues, "complete": good}
    return StructureReport(ok, report)
