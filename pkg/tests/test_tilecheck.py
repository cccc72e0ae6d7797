import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilekit.errors import BudgetExceeded, CardinalityMismatch
from tilekit.tilecheck import DigitSystem, counting_check, digit_expansion_count


def brute_count(b: int, digits, k: int) -> int:
    return len({sum(d * b**i for i, d in enumerate(word)) for word in itertools.product(digits, repeat=k)})


def radix_value(b: int, word) -> int:
    return sum(d * b**i for i, d in enumerate(word))


def test_count_examples():
    assert digit_expansion_count(DigitSystem.scalar(4, [0, 1, 4, 5]), 2) == 12
    assert digit_expansion_count(DigitSystem.scalar(4, [0, 1, 8, 9]), 2) == 16
    two = DigitSystem.from_matrix([[2, 0], [0, 2]], [(0, 0), (1, 0), (0, 1), (1, 1)])
    assert digit_expansion_count(two, 2) == 16
    assert digit_expansion_count(two, 0) == 1


def test_counting_check_examples():
    assert counting_check(DigitSystem.scalar(4, [0, 1, 8, 9]), 4).verdict == "PASS(4)"
    assert counting_check(DigitSystem.scalar(2, [0, 1]), 8)
    rep = counting_check(DigitSystem.scalar(4, [0, 1, 4, 5]), 4)
    assert rep.verdict == "FAIL(k=2)" and rep.counts == (4, 12)
    w = rep.collision
    assert w["left"] != w["right"]
    assert radix_value(4, w["left"]) == radix_value(4, w["right"]) == w["value"]


def test_bad_systems():
    with pytest.raises(CardinalityMismatch):
        DigitSystem.scalar(4, [0, 1, 2])
    with pytest.raises(ValueError):
        DigitSystem.scalar(4, [0, 1, 1, 2])
    with pytest.raises(ValueError):
        DigitSystem.from_matrix([[1, 1], [0, 2]], [(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        counting_check(DigitSystem.scalar(2, [0, 1]), 0)


def test_budget_cap(monkeypatch):
    monkeypatch.setenv("TILEKIT_BUDGET_MB", "0.01")
    with pytest.raises(BudgetExceeded):
        counting_check(DigitSystem.scalar(4, [0, 1, 2, 3]), 8)


def test_matrix_collision_witness():
    sys_ = DigitSystem.from_matrix([[2, 0], [0, 2]], [(0, 0), (1, 0), (2, 0), (3, 0)])
    rep = counting_check(sys_, 4)
    assert not rep
    left, right = rep.collision["left"], rep.collision["right"]

    def value(word):
        acc = (0, 0)
        for d in reversed(word):
            acc = tuple(x + y for x, y in zip(sys_.apply(acc), d))
        return list(acc)

    assert value(left) == value(right) == rep.collision["value"]


@settings(max_examples=120)
@given(st.integers(2, 6), st.data())
def test_counts_match_brute_force(b, data):
    digits = sorted(data.draw(st.sets(st.integers(0, 4 * b), min_size=b, max_size=b)))
    k = data.draw(st.integers(1, 4))
    assert digit_expansion_count(DigitSystem.scalar(b, digits), k) == brute_count(b, digits, k)


@settings(max_examples=120)
@given(st.integers(2, 6), st.data())
def test_failure_is_monotone(b, data):
    digits = sorted(data.draw(st.sets(st.integers(0, 4 * b), min_size=b, max_size=b)))
    sys_ = DigitSystem.scalar(b, digits)
    counts = [digit_expansion_count(sys_, k) for k in range(1, 5)]
    failed = [c < b**k for k, c in enumerate(counts, start=1)]
    assert failed == sorted(failed)
    rep = counting_check(sys_, 4)
    if rep:
        assert not any(failed)
    else:
        assert failed.index(True) + 1 == rep.failing_k
        assert list(rep.counts) == counts[: rep.failing_k]
