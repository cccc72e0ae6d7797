import random
from functools import reduce

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from tilekit.cyclotomic import (
    CycIndex,
    cyclo_at_one,
    cyclotomic,
    divisors,
    expand_substitution,
    factorization,
    prime_power_base,
    substituted,
    totient,
)
from tilekit.errors import IndexOne
from tilekit.polyring import IntPoly

X = sympy.Symbol("x")


def sympy_cyclo(d: int) -> IntPoly:
    return IntPoly([int(c) for c in reversed(sympy.Poly(sympy.cyclotomic_poly(d, X), X).all_coeffs())])


def trial_factor(n: int) -> dict[int, int]:
    out, p = {}, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def test_cyclotomic_examples():
    assert cyclotomic(1) == IntPoly([-1, 1])
    assert cyclotomic(5) == IntPoly([1, 1, 1, 1, 1])
    assert cyclotomic(4) == IntPoly([1, 0, 1])
    assert cyclotomic(6) == IntPoly([1, -1, 1])
    assert cyclotomic(CycIndex(6)) == cyclotomic(6)


def test_cyclo_at_one_examples():
    assert cyclo_at_one(16) == 2
    assert cyclo_at_one(6) == 1
    assert cyclo_at_one(1) == 0
    with pytest.raises(IndexOne):
        cyclo_at_one(1, strict=True)


def test_expand_substitution_examples():
    assert expand_substitution(2, 2) == [4]
    assert expand_substitution(3, 2) == [3, 6]
    assert expand_substitution(2, 12) == [8, 24]
    assert expand_substitution(7, 1) == [7]


def test_bad_indices():
    with pytest.raises(ValueError):
        cyclotomic(0)
    with pytest.raises(ValueError):
        CycIndex(0)
    with pytest.raises(ValueError):
        expand_substitution(3, 0)


@pytest.mark.parametrize("d", range(1, 121))
def test_against_sympy(d):
    assert cyclotomic(d) == sympy_cyclo(d)


def test_product_identity_up_to_200():
    for n in range(1, 201):
        prod_ = reduce(lambda acc, d: acc * cyclotomic(d), divisors(n), IntPoly.constant(1))
        assert prod_ == IntPoly.monomial(n) - 1


def test_substitution_soundness_random():
    rng = random.Random(2024)
    for _ in range(200):
        d, t = rng.randint(1, 100), rng.randint(1, 60)
        found = expand_substitution(d, t)
        prod_ = reduce(lambda acc, e: acc * cyclotomic(e), found, IntPoly.constant(1))
        assert prod_ == substituted(d, t)
        assert sum(totient(e) for e in found) == t * totient(d)


def test_value_table_up_to_300():
    for d in range(1, 301):
        assert cyclo_at_one(d) == cyclotomic(d)(1)


@given(st.integers(2, 10**6))
def test_factorization_matches_trial_division(n):
    assert factorization(n) == trial_factor(n)
    assert totient(n) == sympy.totient(n)


@given(st.integers(2, 5000))
def test_prime_power_base(n):
    f = trial_factor(n)
    assert prime_power_base(n) == (next(iter(f)) if len(f) == 1 else None)


@given(st.integers(1, 300), st.integers(1, 40))
def test_substitution_degree_bookkeeping(d, t):
    assert sum(totient(e) for e in expand_substitution(d, t)) == t * totient(d)
