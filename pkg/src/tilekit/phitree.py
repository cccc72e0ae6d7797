"""The base-b tree of cyclotomic polynomials and blockings inside it.

Nodes are the indices s > 1 whose prime factors all divide b. The children
of s are the indices of the cyclotomic factors of Phi_s(x^b), and the
parent of s is s / gcd(s, b). Indices grow strictly along every path,
which is what lets every search below stop at max(candidates).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import gcd
from typing import Iterable, Iterator

from .cyclotomic import cyclotomic, divisors, expand_substitution, prime_factors, totient
from .errors import CardinalityMismatch, ForeignPrime, NotAnchored, NotATreeNode
from .polyring import DigitSet, IntPoly, mask_polynomial
from .spectra import compute_spectrum


def is_tree_node(s: int, b: int) -> bool:
    if s < 2:
        return False
    rest = s
    for p in prime_factors(b):
        while rest % p == 0:
            rest //= p
    return rest == 1


def level(s: int, b: int) -> int:
    """Depth of s, i.e. the least k with s | b^k."""
    if not is_tree_node(s, b):
        raise NotATreeNode(f"{s} is not a node of the base-{b} tree")
    k, power = 1, b
    while power % s:
        k += 1
        power *= b
    return k


def parent(s: int, b: int) -> int | None:
    if not is_tree_node(s, b):
        raise NotATreeNode(f"{s} is not a node of the base-{b} tree")
    up = s // gcd(s, b)
    return up if up > 1 else None


def roots(b: int) -> list[int]:
    if b < 2:
        raise ValueError("base must be at least 2")
    return [d for d in divisors(b) if d > 1]


def children(d: int, b: int) -> list[int]:
    for p in prime_factors(d):
        if b % p:
            raise ForeignPrime(f"prime {p} of {d} does not divide {b}")
    if d < 2:
        raise NotATreeNode("index 1 is not in the tree")
    return expand_substitution(d, b)


@dataclass(frozen=True)
class PhiTreeNode:
    index: int
    base: int
    level: int
    parent: int | None

    @classmethod
    def at(cls, s: int, b: int) -> "PhiTreeNode":
        return cls(s, b, level(s, b), parent(s, b))


def walk(b: int, depth: int) -> Iterator[tuple[int, int]]:
    """Depth-first (level, index) pairs down to the given level."""
    stack = [(1, r) for r in reversed(roots(b))]
    while stack:
        lvl, s = stack.pop()
        yield lvl, s
        if lvl < depth:
            stack.extend((lvl + 1, c) for c in reversed(children(s, b)))


@dataclass(frozen=True)
class Blocking:
    nodes: tuple[int, ...]
    base: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(set(self.nodes))))

    @property
    def weight(self) -> int:
        return sum(totient(s) for s in self.nodes)


def _check_nodes(nodes: Iterable[int], b: int) -> set[int]:
    out = set()
    for s in nodes:
        if not is_tree_node(s, b):
            raise NotATreeNode(f"{s} is not a node of the base-{b} tree")
        out.add(s)
    return out


def is_blocking(nodes: Iterable[int], b: int) -> bool:
    chosen = _check_nodes(nodes, b)
    if not chosen:
        return False
    top = max(chosen)

    def ok(s: int, hit: bool) -> bool:
        if s in chosen:
            if hit:
                return False
            hit = True
        if s >= top:
            return hit
        return all(ok(c, hit) for c in children(s, b))

    return all(ok(r, False) for r in roots(b))


_Best = tuple[int, tuple[int, ...]]  # (total degree, sorted nodes)


def _best_cover(s: int, b: int, cands: set[int], top: int) -> _Best | None:
    options: list[_Best] = []
    if s in cands:
        options.append((totient(s), (s,)))
    if s < top:
        total, picked = 0, []
        for c in children(s, b):
            sub = _best_cover(c, b, cands, top)
            if sub is None:
                break
            total += sub[0]
            picked.extend(sub[1])
        else:
            options.append((total, tuple(sorted(picked))))
    return min(options) if options else None


def find_blocking(candidates: Iterable[int], b: int) -> Blocking | None:
    """Blocking inside candidates with least total degree, ties broken on the sorted node list."""
    cands = {s for s in candidates if is_tree_node(s, b)}
    if not cands:
        return None
    top = max(cands)
    total, picked = 0, []
    for r in roots(b):
        sub = _best_cover(r, b, cands, top)
        if sub is None:
            return None
        total += sub[0]
        picked.extend(sub[1])
    return Blocking(tuple(picked), b)


def uncovered_path(candidates: Iterable[int], b: int) -> list[int] | None:
    """A root path that avoids every candidate until it passes max(candidates)."""
    cands = {s for s in candidates if is_tree_node(s, b)}
    top = max(cands, default=0)

    def dig(s: int) -> list[int] | None:
        if s in cands:
            return None
        if s >= top:
            return [s]
        for c in children(s, b):
            if _best_cover(c, b, cands, top) is None:
                tail = dig(c)
                if tail is not None:
                    return [s] + tail
        return None

    for r in roots(b):
        if r not in cands and _best_cover(r, b, cands, top) is None:
            return dig(r)
    return None


def kernel_polynomial(blocking: Blocking | Iterable[int]) -> IntPoly:
    nodes = blocking.nodes if isinstance(blocking, Blocking) else tuple(blocking)
    return reduce(lambda acc, s: acc * cyclotomic(s), sorted(nodes), IntPoly.constant(1))


@dataclass(frozen=True)
class TileDecision:
    accepted: bool
    base: int
    candidates: tuple[int, ...]
    blocking: Blocking | None = None
    uncovered: tuple[int, ...] | None = None
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "ACCEPT" if self.accepted else "REJECT"

    def __bool__(self) -> bool:
        return self.accepted


def tree_spectrum(d: DigitSet, b: int) -> tuple[int, ...]:
    """Tree nodes s with Phi_s | P_D."""
    return compute_spectrum(d, primes=prime_factors(b)).full


def is_tile_digit_set(d: DigitSet, b: int) -> TileDecision:
    if d.cardinality != b:
        raise CardinalityMismatch(f"#D = {d.cardinality} but b = {b}")
    if not d.is_anchored:
        raise NotAnchored("digit set must contain 0 and have gcd 1")
    cands = tree_spectrum(d, b)
    found = find_blocking(cands, b)
    if found is not None:
        return TileDecision(True, b, cands, blocking=found)
    path = uncovered_path(cands, b)
    return TileDecision(False, b, cands, uncovered=tuple(path or ()))


def mask_divisible_by_blocking(d: DigitSet, blocking: Blocking) -> bool:
    from .polyring import divides

    return divides(kernel_polynomial(blocking), mask_polynomial(d))
