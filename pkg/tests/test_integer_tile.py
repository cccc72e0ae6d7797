import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import power_of_two_tiles, pq_corpus
from tilekit.cyclotomic import cyclotomic, expand_substitution, factorization
from tilekit.errors import (
    BadPeriod,
    IncompleteResidues,
    NotAnIntegerTile,
    NotPrimePowerCardinality,
    PreconditionViolated,
    UnequalClassSizes,
)
from tilekit.integer_tile import (
    TilingCertificate,
    cm_complement,
    de_bruijn_decompose,
    de_bruijn_holds,
    decompose_along_prime,
    find_complement,
    is_integer_tile,
    prime_power_chain,
)
from tilekit.polyring import DigitSet, IntPoly
from tilekit.spectra import check_T1, compute_spectrum, cyclotomic_divides, prime_power_spectrum


def tiles_mod(a: DigitSet, b: DigitSet, n: int) -> bool:
    hit = sorted((x + t) % n for x in a for t in b)
    return hit == list(range(n))


# examples --------------------------------------------------------------------


def test_find_complement_examples():
    assert find_complement(DigitSet.of([0, 1, 8, 9]), 16).explicit().elements == (0, 2, 4, 6)
    assert find_complement(DigitSet.of([0, 1, 4, 5]), 8).explicit().elements == (0, 2)
    assert find_complement(DigitSet.of([0, 2]), 4).explicit().elements == (0, 1)
    with pytest.raises(BadPeriod):
        find_complement(DigitSet.of([0, 2]), 3)
    with pytest.raises(BadPeriod):
        find_complement(DigitSet.of([0, 4]), 4)
    assert find_complement(DigitSet.of([0, 1, 3]), 6) is None


def test_is_integer_tile_examples():
    yes = is_integer_tile(DigitSet.of([0, 1, 8, 9]))
    assert yes.verdict == "YES" and yes.certificate.period == 16
    assert yes.certificate.explicit().elements == (0, 2, 4, 6)
    assert is_integer_tile(DigitSet.of([0, 1, 2, 4])).verdict == "NO"
    small = is_integer_tile(DigitSet.of([0, 1, 4, 5]))
    assert small.verdict == "YES" and small.certificate.period == 8
    assert small.certificate.explicit().elements == (0, 2)
    assert is_integer_tile(DigitSet.of([7])).verdict == "YES"


def test_shifted_and_scaled_sets():
    for a in ([3, 4, 11, 12], [0, 2, 16, 18], [5, 11, 29, 35]):
        dec = is_integer_tile(DigitSet.of(a))
        assert dec.verdict == "YES"
        assert tiles_mod(DigitSet.of(a), dec.certificate.explicit(), dec.certificate.period)


def test_decompose_examples():
    assert decompose_along_prime(DigitSet.of([0, 1, 8, 9]), 2) == [(0, DigitSet.of([0, 4])), (1, DigitSet.of([0, 4]))]
    assert decompose_along_prime(DigitSet.of([0, 1]), 2) == [(0, DigitSet.of([0])), (1, DigitSet.of([0]))]
    assert decompose_along_prime(DigitSet.of(range(6)), 3) == [(j, DigitSet.of([0, 1])) for j in range(3)]
    with pytest.raises(IncompleteResidues):
        decompose_along_prime(DigitSet.of([0, 2]), 2)
    with pytest.raises(UnequalClassSizes):
        decompose_along_prime(DigitSet.of([0, 1, 2]), 2)


def test_prime_power_chain_examples():
    c = prime_power_chain(DigitSet.of([0, 1, 8, 9]))
    assert c.exponents == (1, 4) and c.stages[1:] == (DigitSet.of([0, 1]), DigitSet.of([0, 1, 8, 9]))
    assert prime_power_chain(DigitSet.of([0, 1])).exponents == (1,)
    c = prime_power_chain(DigitSet.of([0, 1, 4, 5]))
    assert c.exponents == (1, 3) and c.stages[1] == DigitSet.of([0, 1])
    with pytest.raises(NotPrimePowerCardinality):
        prime_power_chain(DigitSet.of(range(6)))
    with pytest.raises(NotAnIntegerTile):
        prime_power_chain(DigitSet.of([0, 1, 2, 4]))


def test_de_bruijn_examples():
    assert de_bruijn_decompose(IntPoly.from_terms({0: 1, 3: 1}), 2, 3) == (IntPoly.constant(1), IntPoly())
    assert de_bruijn_decompose(IntPoly([1, 0, 1, 0, 1]), 2, 3) == (IntPoly(), IntPoly.constant(1))
    f = IntPoly([1, 1, 0, 2, 0, 1])
    P, Q = de_bruijn_decompose(f, 2, 3)
    assert de_bruijn_holds(f, 2, 3, P, Q)
    assert (P, Q) == (IntPoly.constant(1), IntPoly.monomial(1))
    with pytest.raises(PreconditionViolated):
        de_bruijn_decompose(IntPoly([1, 1]), 2, 3)


def test_cm_certificate_at_large_period():
    # period 2^20 · 3: verified through the divisor criterion, not enumeration
    a = DigitSet.of([0, 1, 2 ** 20 * 3 // 2 + 2, 2 ** 20 * 3 // 2 + 3])
    spec = prime_power_spectrum(a)
    cert = cm_complement(a, spec)
    assert cert.verify(a)
    assert not TilingCertificate(cert.period, factors=((1, 2),) + cert.factors[1:]).verify(a)


# properties ------------------------------------------------------------------


@settings(max_examples=150)
@given(st.sets(st.integers(0, 20), min_size=1, max_size=6))
def test_yes_certificates_enumerate(elems):
    a = DigitSet.of(sorted(elems))
    dec = is_integer_tile(a)
    if dec.verdict == "YES":
        cert = dec.certificate
        assert tiles_mod(a, cert.explicit(), cert.period)
        assert check_T1(a)
    elif dec.verdict == "NO":
        assert len(factorization(a.cardinality)) <= 2
        assert not (dec.t1 and dec.t2)


@pytest.mark.parametrize("size_exp,bound", [(2, 64), (3, 20)])
def test_power_of_two_generator_matches_brute_force(size_exp, bound):
    size = 2**size_exp
    brute = {
        (0,) + rest
        for rest in itertools.combinations(range(1, bound + 1), size - 1)
        if check_T1(DigitSet.of((0,) + rest))
    }
    assert power_of_two_tiles(size_exp, bound) == brute


@pytest.mark.parametrize("size_exp,bound", [(2, 64), (3, 32)])
def test_prime_power_chain_on_all_small_tiles(size_exp, bound):
    tiles = power_of_two_tiles(size_exp, bound)
    assert tiles
    for elems in tiles:
        a = DigitSet.of(elems)
        chain = prime_power_chain(a)
        assert chain.stages[0] == DigitSet.of([0]) and chain.stages[-1] == a
        for i in range(1, len(chain.exponents) + 1):
            mod = 2 ** chain.exponents[i - 1]
            assert chain.replay_residues(i) == {x % mod for x in chain.stages[i]}
            assert len(chain.stages[i]) == 2**i


def test_decomposition_spectrum_identity():
    checked = 0
    for p, q, a in pq_corpus():
        try:
            parts = decompose_along_prime(a, p)
        except (IncompleteResidues, UnequalClassSizes):
            continue
        expected = tuple(s for s in prime_power_spectrum(a).prime_power if s != p)
        for _, aj in parts:
            assert prime_power_spectrum(aj.scaled(p)).prime_power == expected
        checked += 1
    assert checked > 100


def test_mixed_index_divisibility():
    checked = 0
    for p, q, a in pq_corpus():
        full = compute_spectrum(a, primes=[p, q]).full
        mixed = [s for s in full if s % p == 0 and s % q == 0]
        try:
            parts = decompose_along_prime(a, p)
        except (IncompleteResidues, UnequalClassSizes):
            parts = None
        for s in mixed:
            lam, mu = factorization(s)[p], factorization(s)[q]
            if lam >= 2 and parts is not None:
                for _, aj in parts:
                    assert cyclotomic_divides(p ** (lam - 1) * q**mu, aj)
            if a.cardinality % q == 0 and a.cardinality // q == p ** factorization(a.cardinality)[p]:
                if not cyclotomic_divides(p**lam, a):
                    assert all(cyclotomic_divides(e, a) for e in expand_substitution(q**mu, p**lam))
            checked += 1
    assert checked > 300


@pytest.mark.parametrize("n,pp,qp", [(6, 2, 3), (12, 4, 3), (18, 2, 9), (36, 4, 9)])
def test_de_bruijn_generated(n, pp, qp):
    rng = random.Random(n)
    for _ in range(25):
        P = IntPoly([rng.choice((0, 0, 1, 2)) for _ in range(n // (pp if pp % 2 == 0 else pp) + 3)])
        Q = IntPoly([rng.choice((0, 0, 1)) for _ in range(n // 3 + 3)])
        f = P * cyclotomic(pp).substitute_power(qp) + Q * cyclotomic(qp).substitute_power(pp)
        if f.is_zero():
            f = cyclotomic(pp).substitute_power(qp)
        P2, Q2 = de_bruijn_decompose(f, pp, qp)
        assert de_bruijn_holds(f, pp, qp, P2, Q2)
