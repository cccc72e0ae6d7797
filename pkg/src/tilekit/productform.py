"""Product-forms, their modulated and layered variants, the K_I/K_II/K_III
kernels, and the classifier for bases p^a, pq and p^a q.

A chain is a list of layers. Layer 0 builds D^(i) from parts E_i whose sum
is a complete residue system mod b, with moduli n_i read off the kernel
K_1^(i). Each later layer re-decomposes the previous result as
G_0 ⊕ ... ⊕ G_l, scales G_i by b^(r_i) and reduces modulo n_i, now taken
from the previous layer's kernel. Per-element offsets (multiples of the
stage modulus) are the only free data, so every chain replays exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product
from math import gcd, prod
from typing import Iterable, Sequence

from .cyclotomic import (
    cyclo_at_one,
    divisors,
    expand_substitution,
    factorization,
    is_prime,
    lcm_all,
    prime_power_base,
)
from .errors import (
    CardinalityMismatch,
    ChainExtractionFailed,
    ChainFormatError,
    CollisionInSum,
    KernelDivisionFailed,
    LayerNotAFactorization,
    ModulusMismatch,
    NotAFactorization,
    OffsetCollision,
    ParameterOutOfRange,
    UnsupportedBase,
)
from .phitree import TileDecision, find_blocking, is_blocking, is_tile_digit_set
from .polyring import DigitSet, IntPoly, direct_sum
from .spectra import Spectrum, cyclotomic_divides

# ---------------------------------------------------------------------------
# chains


@dataclass(frozen=True)
class Stage:
    """One summand: ``part`` scaled by b**l, then shifted element-wise by offsets·n."""

    part: DigitSet
    l: int = 0
    offsets: tuple[int, ...] = ()
    modulus: int | None = None

    def shifts(self, size: int) -> tuple[int, ...]:
        if not self.offsets:
            return (0,) * size
        if len(self.offsets) != size:
            raise ChainFormatError(f"stage has {len(self.offsets)} offsets for {size} elements")
        return self.offsets


@dataclass(frozen=True)
class StageTrace:
    modulus: int
    kernel: tuple[int, ...]
    result: DigitSet


@dataclass(frozen=True)
class LayerTrace:
    stages: tuple[StageTrace, ...]
    kernel: tuple[int, ...]
    result: DigitSet


def _pairing_offsets(nominal: list[int], target: Iterable[int], n: int) -> tuple[int, ...] | None:
    by_residue = {}
    for x in target:
        if by_residue.setdefault(x % n, x) != x:
            return None
    if len(by_residue) != len(nominal):
        return None
    out = []
    for y in nominal:
        x = by_residue.get(y % n)
        if x is None:
            return None
        out.append((x - y) // n)
    return tuple(out)


def _run_layer(
    stages: Sequence[Stage],
    b: int,
    previous: LayerTrace | None,
    fit: Sequence | None = None,
) -> tuple[tuple[Stage, ...], LayerTrace]:
    """Replay one layer; with ``fit``, offsets are solved for instead of read.

    ``fit[i]`` is None (zero offsets), ("set", X) to land stage i on X, or
    ("part", P) to land it on D^(i-1) ⊕ b^l P.
    """
    if not stages:
        raise ChainFormatError("a layer needs at least one stage")
    ls = [s.l for s in stages]
    if ls[0] != 0 or any(l < 0 for l in ls) or any(x > y for x, y in zip(ls, ls[1:])):
        raise ChainFormatError(f"exponents must start at 0 and never decrease, got {ls}")
    parts = [s.part for s in stages]
    if previous is None:
        sums = direct_sum(*parts)
        if sums is None or sorted(x % b for x in sums) != list(range(b)):
            raise NotAFactorization(f"parts {[str(p) for p in parts]} do not sum to Z_{b}")
        pool = divisors(b)[1:]
    else:
        sums = direct_sum(*parts)
        if sums is None or tuple(sums) != previous.result.elements:
            raise LayerNotAFactorization("layer parts do not decompose the previous result")
        pool = previous.kernel

    acc = [0]
    kernel: set[int] = set()
    fitted, traces = [], []
    for i, st in enumerate(stages):
        scale = b**st.l
        idx: set[int] = set()
        for s in pool:
            if cyclotomic_divides(s, st.part):
                idx.update(expand_substitution(s, scale))
        kernel |= idx
        n = lcm_all(kernel)
        if st.modulus is not None and st.modulus != n:
            raise ModulusMismatch(f"stage {i}: modulus {st.modulus} given, kernel gives {n}")
        nominal = sorted(a + scale * e for a in acc for e in st.part)
        if len(set(nominal)) != len(nominal):
            raise CollisionInSum(f"stage {i}: repeated sums")
        goal = fit[i] if fit is not None else None
        if goal is None:
            shifts = st.shifts(len(nominal)) if fit is None else (0,) * len(nominal)
        else:
            kind, data = goal
            target = data if kind == "set" else [a + scale * e for a in acc for e in data]
            shifts = _pairing_offsets(nominal, target, n)
            if shifts is None:
                raise ChainExtractionFailed(f"stage {i}: target is not congruent to the nominal sum mod {n}")
        acc = [y + c * n for y, c in zip(nominal, shifts)]
        if min(acc) < 0 or len(set(acc)) != len(acc):
            raise OffsetCollision(f"stage {i}: offsets produce negative or repeated elements")
        fitted.append(Stage(st.part, st.l, tuple(shifts) if any(shifts) else (), n))
        traces.append(StageTrace(n, tuple(sorted(idx)), DigitSet.of(acc)))

    result = DigitSet.of(acc)
    kernel_sorted = tuple(sorted(kernel))
    bad = [s for s in kernel_sorted if not cyclotomic_divides(s, result)]
    if bad:
        raise KernelDivisionFailed(f"Phi_s does not divide the layer mask for s in {bad[:5]}")
    return tuple(fitted), LayerTrace(tuple(traces), kernel_sorted, result)


@dataclass(frozen=True)
class ChainTrace:
    layers: tuple[LayerTrace, ...]

    @property
    def result(self) -> DigitSet:
        return self.layers[-1].result

    @property
    def kernel(self) -> tuple[int, ...]:
        return self.layers[-1].kernel


@dataclass(frozen=True)
class ProductFormChain:
    """Layers innermost first; ``order`` is their number."""

    base: int
    layers: tuple[tuple[Stage, ...], ...]

    def __post_init__(self) -> None:
        if self.base < 2:
            raise ChainFormatError("base must be at least 2")
        if not self.layers:
            raise ChainFormatError("a chain needs at least one layer")
        object.__setattr__(self, "layers", tuple(tuple(layer) for layer in self.layers))

    @classmethod
    def single(cls, b: int, stages: Iterable[Stage]) -> "ProductFormChain":
        return cls(b, (tuple(stages),))

    @property
    def order(self) -> int:
        return len(self.layers)

    @property
    def stages(self) -> tuple[Stage, ...]:
        """Stages of the outermost layer (the whole chain when order is 1)."""
        return self.layers[-1]

    @cached_property
    def trace(self) -> ChainTrace:
        out: list[LayerTrace] = []
        previous = None
        for layer in self.layers:
            _, previous = _run_layer(layer, self.base, previous)
            out.append(previous)
        return ChainTrace(tuple(out))

    @property
    def resulting_set(self) -> DigitSet:
        return self.trace.result

    def with_moduli(self) -> "ProductFormChain":
        """Same chain with every stage's modulus filled in from the replay."""
        layers = []
        for layer, lt in zip(self.layers, self.trace.layers):
            layers.append(tuple(Stage(s.part, s.l, s.offsets, t.modulus) for s, t in zip(layer, lt.stages)))
        return ProductFormChain(self.base, tuple(layers))

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        full = self.with_moduli()
        return {
            "base": self.base,
            "order": self.order,
            "layers": [
                [
                    {"E": list(s.part.elements), "l": s.l, "n": s.modulus, "offsets": list(s.offsets)}
                    for s in layer
                ]
                for layer in full.layers
            ],
            "result": list(self.resulting_set.elements),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProductFormChain":
        try:
            layers = tuple(
                tuple(
                    Stage(
                        DigitSet.of(st["E"]),
                        int(st.get("l", 0)),
                        tuple(int(o) for o in st.get("offsets", ())),
                        int(st["n"]) if st.get("n") is not None else None,
                    )
                    for st in layer
                )
                for layer in data["layers"]
            )
            chain = cls(int(data["base"]), layers)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ChainFormatError):
                raise
            raise ChainFormatError(f"malformed chain: {exc}") from exc
        if "order" in data and int(data["order"]) != chain.order:
            raise ChainFormatError(f"order {data['order']} does not match {chain.order} layers")
        return chain

    def to_text(self) -> str:
        """One ``stage`` line per stage, indented two spaces per layer."""
        full = self.with_moduli()
        lines = [f"base {self.base}"]
        for depth, layer in enumerate(full.layers):
            for s in layer:
                line = f"{'  ' * depth}stage E={{{s.part}}} l={s.l} n={s.modulus}"
                if s.offsets:
                    line += " offsets=[" + ",".join(map(str, s.offsets)) + "]"
                lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ProductFormChain":
        base = None
        layers: dict[int, list[Stage]] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].rstrip()
            if not line.strip():
                continue
            indent = len(line) - len(line.lstrip(" "))
            words = line.split()
            if words[0] == "base":
                if len(words) != 2 or indent:
                    raise ChainFormatError(f"bad base line: {raw!r}")
                base = int(words[1])
                continue
            if words[0] != "stage" or indent % 2:
                raise ChainFormatError(f"unrecognized line: {raw!r}")
            fields = {}
            for w in words[1:]:
                key, sep, val = w.partition("=")
                if not sep:
                    raise ChainFormatError(f"expected key=value, got {w!r}")
                fields[key] = val
            if "E" not in fields:
                raise ChainFormatError(f"stage without E: {raw!r}")
            try:
                offsets = fields.get("offsets", "").strip("[]")
                st = Stage(
                    DigitSet.parse(fields["E"]),
                    int(fields.get("l", 0)),
                    tuple(int(x) for x in offsets.split(",") if x.strip()),
                    int(fields["n"]) if "n" in fields and fields["n"] != "None" else None,
                )
            except ValueError as exc:
                raise ChainFormatError(f"bad stage line {raw!r}: {exc}") from exc
            layers.setdefault(indent // 2, []).append(st)
        if base is None:
            raise ChainFormatError("missing base line")
        if sorted(layers) != list(range(len(layers))):
            raise ChainFormatError("layers must be numbered consecutively from 0")
        return cls(base, tuple(tuple(layers[k]) for k in sorted(layers)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _with_leading_zero(l_exps: Sequence[int | None], count: int) -> list[int]:
    ls = [0 if l is None else int(l) for l in l_exps]
    if len(ls) == count - 1:
        ls = [0] + ls
    if len(ls) != count:
        raise ChainFormatError(f"{count} parts need {count - 1} or {count} exponents")
    return ls


def make_product_form(parts: Sequence[Iterable[int]], l_exps: Sequence[int | None], b: int) -> DigitSet:
    """E_0 ⊕ b^(l_1) E_1 ⊕ ... ⊕ b^(l_k) E_k, after checking ⊕ E_i ≡ Z_b."""
    sets = [p if isinstance(p, DigitSet) else DigitSet.of(p) for p in parts]
    ls = _with_leading_zero(l_exps, len(sets))
    chain = ProductFormChain.single(b, (Stage(s, l) for s, l in zip(sets, ls)))
    return chain.resulting_set


def make_modulo_product_form(chain: ProductFormChain) -> DigitSet:
    if chain.order != 1:
        raise ChainFormatError(f"expected a first-order chain, got order {chain.order}")
    return chain.resulting_set


def order_k_execute(plan: ProductFormChain) -> DigitSet:
    return plan.resulting_set


def swap_identity(p: int, q: int) -> tuple[list[int], list[int]]:
    """Both sides of E_p ⊕ pE_q = qE_p ⊕ E_q, for inspection."""
    left = direct_sum(range(p), range(0, p * q, p))
    right = direct_sum(range(0, p * q, q), range(q))
    return left, right


# ---------------------------------------------------------------------------
# kernels

KINDS = ("I", "II", "III", "pq", "p^alpha")

Factor = tuple[int, int]  # (d, t) stands for Phi_d(x^t)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel polynomial given as a product of factors Phi_d(x^t).

    Exponent lists follow the general p^alpha q convention: for types I and
    II, ``m`` and ``ell`` run over j = 2..alpha; for type III, ``m`` runs over
    j = 1..alpha; for p^alpha, ``m`` holds t_2..t_alpha with k_i = i + alpha t_i.
    """

    kind: str
    p: int
    q: int | None
    alpha: int
    n: int | None
    m: tuple[int, ...]
    ell: tuple[int, ...]
    factors: tuple[Factor, ...]
    blocking_nodes: tuple[int, ...]
    M: int | None = None
    k: int | None = None

    @property
    def base(self) -> int:
        return self.p**self.alpha * (self.q or 1)

    @cached_property
    def indices(self) -> tuple[int, ...]:
        out: set[int] = set()
        for d, t in self.factors:
            out.update(expand_substitution(d, t))
        return tuple(sorted(out))

    @property
    def optional(self) -> tuple[int, ...]:
        """Indices outside the certified blocking (non-empty only for type II)."""
        chosen = set(self.blocking_nodes)
        return tuple(s for s in self.indices if s not in chosen)

    @cached_property
    def parts(self) -> tuple[tuple[int, int], ...]:
        """(u, r) with Phi_d(x^t) = 1 + x^u + ... + x^((r-1)u), r prime."""
        out = []
        for d, t in self.factors:
            r = prime_power_base(d)
            out.append((d // r * t, r))
        return tuple(out)

    @cached_property
    def canonical(self) -> DigitSet:
        sums = direct_sum(*(range(0, u * r, u) for u, r in self.parts))
        if sums is None:
            raise ParameterOutOfRange("kernel factors overlap; parameters give no digit set")
        return DigitSet.of(sums)

    @cached_property
    def polynomial(self) -> IntPoly:
        # each factor is the mask of u·E_r and the sum is direct, so K is the mask of the sum
        return IntPoly.from_terms({a: 1 for a in self.canonical.elements})

    def value_at_one(self) -> int:
        return prod(cyclo_at_one(s) for s in self.indices)

    def params(self) -> dict:
        out = {"p": self.p, "q": self.q, "alpha": self.alpha}
        if self.kind in ("I", "II", "pq"):
            out["n"] = self.n
        if self.kind != "pq":
            out["m"] = list(self.m)
        if self.kind == "II":
            out.update(ell=list(self.ell), M=self.M, k=self.k)
        if self.alpha == 2 and self.kind in ("I", "II"):
            out["p2q"] = {"m": self.m[0] + 1, "n": self.n} | ({"ell": self.ell[0]} if self.kind == "II" else {})
        if self.alpha == 2 and self.kind == "III":
            out["p2q"] = {"m": self.m[1] + 1, "n": self.m[0]}
        return out

    def describe(self) -> str:
        return " ".join(f"Phi_{d}(x^{t})" if t > 1 else f"Phi_{d}(x)" for d, t in self.factors)

    def to_dict(self) -> dict:
        return {
            "type": self.kind,
            "params": self.params(),
            "factors": [list(f) for f in self.factors],
            "indices": list(self.indices),
            "blocking_nodes": list(self.blocking_nodes),
            "optional": list(self.optional),
        }


def _ints(values, what: str) -> tuple[int, ...]:
    if values is None:
        return ()
    if isinstance(values, int):
        values = (values,)
    out = tuple(int(v) for v in values)
    if any(v < 0 for v in out):
        raise ParameterOutOfRange(f"{what} must be non-negative")
    return out


def kernel_build(
    kind: str,
    p: int,
    q: int | None = None,
    *,
    alpha: int = 1,
    n: int | None = None,
    m: Sequence[int] | int | None = None,
    ell: Sequence[int] | int | None = None,
) -> KernelSpec:
    if kind not in KINDS:
        raise ParameterOutOfRange(f"unknown kernel type {kind!r}")
    if not is_prime(p) or alpha < 1:
        raise ParameterOutOfRange("p must be prime and alpha >= 1")
    ms, ls = _ints(m, "m"), _ints(ell, "ell")
    M = k = None
    if kind == "p^alpha":
        if q is not None:
            raise ParameterOutOfRange("a prime-power base takes no q")
        if len(ms) != alpha - 1:
            raise ParameterOutOfRange(f"need {alpha - 1} values t_2..t_alpha")
        factors = [(p, 1)] + [(p ** (i + alpha * t), 1) for i, t in zip(range(2, alpha + 1), ms)]
    else:
        if q is None or not is_prime(q) or q == p:
            raise ParameterOutOfRange("q must be a prime different from p")
        if kind == "pq" and alpha != 1:
            raise ParameterOutOfRange("type pq needs alpha = 1")
        if kind in ("I", "II", "pq"):
            if n is None or n < 1:
                raise ParameterOutOfRange("n must be at least 1")
            if len(ms) != alpha - 1:
                raise ParameterOutOfRange(f"need {alpha - 1} values m_2..m_alpha")
        js = range(2, alpha + 1)
        if kind in ("I", "pq"):
            factors = [(p, 1), (q**n, p ** (alpha * (n - 1) + 1))]
            factors += [(p ** (alpha * mj + j), q ** (mj + 1)) for j, mj in zip(js, ms)]
        elif kind == "II":
            if alpha < 2 or len(ls) != alpha - 1:
                raise ParameterOutOfRange(f"type II needs alpha >= 2 and {alpha - 1} values ell_j")
            if any(not 1 <= lj <= mj + 2 for lj, mj in zip(ls, ms)) or all(lj == mj + 2 for lj, mj in zip(ls, ms)):
                raise ParameterOutOfRange("need 1 <= ell_j <= m_j + 2 with some ell_j <= m_j + 1")
            gaps = [mj - lj for mj, lj in zip(ms, ls)]
            M = max(gaps)
            k = max(j for j, g in zip(js, gaps) if g == M)
            factors = [(p, 1), (q**n, p ** (alpha * (n + M) + k))]
            factors += [(p ** (alpha * mj + j), q ** (lj - 1)) for j, mj, lj in zip(js, ms, ls)]
        else:
            if len(ms) != alpha:
                raise ParameterOutOfRange(f"type III needs {alpha} values m_1..m_alpha")
            n = None
            factors = [(q, 1)] + [(p ** (alpha * mj + j), q ** (mj + 1)) for j, mj in zip(range(1, alpha + 1), ms)]

    spec = KernelSpec(kind, p, q, alpha, n, ms, ls if kind == "II" else (), tuple(factors), (), M, k)
    spec.canonical  # raises on overlapping factors
    b = spec.base
    if kind == "II":
        found = find_blocking(spec.indices, b)
        if found is None:
            raise ParameterOutOfRange("no blocking inside the type II index set")
        nodes = found.nodes
    else:
        nodes = spec.indices
    if not is_blocking(nodes, b):
        raise ParameterOutOfRange(f"factors of {spec.describe()} do not block the base-{b} tree")
    object.__setattr__(spec, "blocking_nodes", tuple(nodes))
    return spec


def kernel_p2q(kind: str, p: int, q: int, *, m: int, n: int, ell: int | None = None) -> KernelSpec:
    """Kernels for b = p^2 q in the two-parameter notation (m >= 1)."""
    if m < 1:
        raise ParameterOutOfRange("m must be at least 1")
    if kind == "III":
        return kernel_build("III", p, q, alpha=2, m=(n, m - 1))
    return kernel_build(kind, p, q, alpha=2, n=n, m=(m - 1,), ell=None if ell is None else (ell,))


def canonical_digit_set(spec: KernelSpec) -> DigitSet:
    return spec.canonical


# ---------------------------------------------------------------------------
# chain extraction


def _valuation(x: int, b: int) -> int:
    v = 0
    while x % b == 0:
        x //= b
        v += 1
    return v


def _divide_out(elems: set[int], u: int, r: int) -> set[int] | None:
    """Q with mask(elems) = Q(x)·(1 + x^u + ... + x^((r-1)u)), Q a 0/1 polynomial."""
    pool = set(elems)
    out = set()
    for x in sorted(elems):
        if x not in pool:
            continue
        block = [x + j * u for j in range(r)]
        if any(y not in pool for y in block):
            return None
        pool.difference_update(block)
        out.add(x)
    return out


def peel(d: DigitSet, parts: Sequence[tuple[int, int]]) -> tuple[list[frozenset[int]], list[int]]:
    """Undo the stages from the top: fold at n_i, divide by the i-th factor.

    Returns the intermediate sets D^(0..k) and the moduli n_i (lcm of the
    indices of the first i factors). The quotient must stay 0/1 with its
    degree below n_i - deg(factor), and the last quotient must be 1.
    """
    seen: set[int] = set()
    moduli = []
    for u, r in parts:
        seen.update(expand_substitution(r, u))
        moduli.append(lcm_all(seen))
    current = set(d.elements)
    inter: list[frozenset[int]] = [frozenset()] * len(parts)
    for i in reversed(range(len(parts))):
        inter[i] = frozenset(current)
        u, r = parts[i]
        n = moduli[i]
        folded = {x % n for x in current}
        if len(folded) != len(current):
            raise ChainExtractionFailed(f"stage {i}: elements collide mod n = {n}")
        quotient = _divide_out(folded, u, r)
        if quotient is None:
            raise ChainExtractionFailed(
                f"stage {i}: 1 + x^{u} + ... does not divide the mask mod x^{n} - 1 with a 0/1 quotient"
            )
        if max(quotient) + (r - 1) * u >= n:
            raise ChainExtractionFailed(f"stage {i}: degree bound deg(Q) < n/r fails for n = {n}")
        current = quotient
    if current != {0}:
        raise ChainExtractionFailed(f"final quotient is {sorted(current)[:6]}, not 1")
    return inter, moduli


def _ep(g: int, r: int) -> DigitSet:
    return DigitSet.of(range(0, g * r, g))


def _complete(parts: Iterable[tuple[int, int]], b: int) -> bool:
    sums = [0]
    for g, r in parts:
        sums = [(s + g * j) % b for s in sums for j in range(r)]
    return sorted(sums) == list(range(b))


def _pure_power(x: int, p: int) -> int | None:
    e = 0
    while x % p == 0:
        x //= p
        e += 1
    return e if x == 1 else None


def _swap_step(state: list[tuple[int, int]], p: int, q: int, alpha: int):
    """Locate p^e E_q next to p^(e-1) E_p; None when the swap does not apply.

    Returns (rest, e). The swap rewrites p^(e-1)(E_p ⊕ pE_q) as
    b p^(e-1-alpha) E_p ⊕ p^(e-1) E_q.
    """
    for i, (g, r) in enumerate(state):
        if r != q:
            continue
        e = _pure_power(g, p)
        if e is None or e - 1 - alpha < 0:
            return None
        partner = (p ** (e - 1), p)
        if partner not in state:
            return None
        rest = [x for j, x in enumerate(state) if j != i]
        rest.remove(partner)
        return rest, e
    return None


def _ordered(parts: Iterable[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    """Sort (l, g, r) triples by exponent, then by the full scale b^l g."""
    return sorted(parts, key=lambda t: (t[0], t[1]))


def _stages(triples: Iterable[tuple[int, int, int]]) -> list[Stage]:
    return [Stage(_ep(g, r), l) for l, g, r in triples]


def _orderings(triples: list[tuple[int, int, int]], b: int, limit: int = 120):
    """Orders with non-decreasing l: sorted first, then permutations inside ties."""
    groups: dict[int, list] = {}
    for t in triples:
        groups.setdefault(t[0], []).append(t)
    keys = sorted(groups)
    first = _ordered(triples)
    yield first
    count = 0

    def rec(i, acc):
        nonlocal count
        if i == len(keys):
            yield list(acc)
            return
        for perm in permutations(groups[keys[i]]):
            yield from rec(i + 1, acc + list(perm))

    for cand in rec(0, []):
        if cand != first:
            count += 1
            if count > limit:
                return
            yield cand


def extract_chain(d: DigitSet, spec: KernelSpec) -> ProductFormChain:
    """A replayable chain for d built on the stages of ``spec``'s factors."""
    b = spec.base
    triples = []
    for u, r in spec.parts:
        l = _valuation(u, b)
        triples.append((l, u // b**l, r))
    errors = []
    for order in _orderings(triples, b):
        parts = [(b**l * g, r) for l, g, r in order]
        try:
            inter, _ = peel(d, parts)
            chain = _assemble(order, inter, spec, b)
        except (ChainExtractionFailed, LayerNotAFactorization, NotAFactorization, KernelDivisionFailed) as exc:
            errors.append(str(exc))
            continue
        if chain.resulting_set != d:  # pragma: no cover - replay is exact by construction
            errors.append("replay mismatch")
            continue
        return chain
    raise ChainExtractionFailed("; ".join(dict.fromkeys(errors)) or "no admissible stage order")


def _assemble(order, inter, spec: KernelSpec, b: int) -> ProductFormChain:
    top_fit = [("set", s) for s in inter]
    plain = [(g, r) for _, g, r in order]
    if _complete(plain, b):
        stages, _ = _run_layer(_stages(order), b, None, top_fit)
        return ProductFormChain.single(b, stages)
    if spec.q is None:
        raise ChainExtractionFailed("stage parts are not a complete residue system")
    p, q, alpha = spec.p, spec.q, spec.alpha

    # walk down by the swap until some state is first-order; after each swap
    # the q-part is reduced to sit just above the highest p-part still >= alpha
    states = [plain]
    steps = []
    while True:
        state = states[-1]
        if len(states) > 1 and _complete(state, b):
            bottom = _ordered((0, g, r) for g, r in state)
            break
        step = _swap_step(state, p, q, alpha)
        if step is None:
            raise ChainExtractionFailed("swap descent stalled before reaching a first-order form")
        rest, e = step
        moved = p ** (e - 1 - alpha)
        swapped = [(0, g, r) for g, r in rest] + [(1, moved, p), (0, p ** (e - 1), q)]
        if _complete(((g, r) for _, g, r in swapped), b):
            bottom = _ordered(swapped)
            break
        highs = [f for f in (_pure_power(g, p) for g, r in rest + [(moved, p)] if r == p) if f is not None and f >= alpha]
        c = max(highs) + 1 if highs else alpha
        steps.append((rest, e, c))
        states.append(rest + [(moved, p), (p**c, q)])
        if len(states) > 64:
            raise ChainExtractionFailed("swap descent did not terminate")

    stages, trace = _run_layer(_stages(bottom), b, None)
    layers = [stages]
    # climb back: each layer rebuilds states[s] from states[s + 1]
    for s in range(len(steps) - 1, -1, -1):
        rest, e, c = steps[s]
        lowered = (0, p**c, q)
        triples = _ordered([(0, g, r) for g, r in rest] + [(1, p ** (e - 1 - alpha), p), lowered])
        fit = [("part", _ep(p ** (e - 1), q)) if t == lowered else None for t in triples]
        stages, trace = _run_layer(_stages(triples), b, trace, fit)
        if list(trace.result.elements) != direct_sum(*(_ep(g, r) for g, r in states[s])):
            raise ChainExtractionFailed("swap layer did not rebuild the expected set")
        layers.append(stages)
    stages, trace = _run_layer(_stages(order), b, trace, top_fit)
    layers.append(stages)
    return ProductFormChain(b, tuple(layers))


# ---------------------------------------------------------------------------
# classification


def base_shape(b: int) -> tuple[str, int, int | None, int]:
    """(shape, p, q, alpha) for b = p^alpha, pq or p^alpha q."""
    f = factorization(b) if b > 1 else {}
    if len(f) == 1:
        ((p, a),) = f.items()
        return "p^alpha", p, None, a
    if len(f) == 2:
        (p1, a1), (p2, a2) = sorted(f.items())
        if a1 == a2 == 1:
            return "pq", p1, p2, 1
        if a2 == 1:
            return "p^alpha q", p1, p2, a1
        if a1 == 1:
            return "p^alpha q", p2, p1, a2
    raise UnsupportedBase(f"b = {b} is not of the form p^alpha, pq or p^alpha q")


@dataclass(frozen=True)
class KernelMatch:
    kernel: KernelSpec
    optional_dividing: tuple[int, ...] = ()

    @property
    def normalization(self) -> dict:
        """A kernel has G(1) = b and exponents with gcd 1."""
        value = self.kernel.value_at_one()
        g = 0
        for a in self.kernel.canonical.elements:
            g = gcd(g, a)
        return {"value_at_one": value, "exponent_gcd": g, "holds": value == self.kernel.base and g == 1}

    def to_dict(self) -> dict:
        return self.kernel.to_dict() | {
            "optional_dividing": list(self.optional_dividing),
            "normalization": self.normalization,
        }


@dataclass(frozen=True)
class Classification:
    verdict: str
    base: int
    shape: str
    p: int
    q: int | None
    alpha: int
    spectrum: Spectrum
    tile: TileDecision
    matches: tuple[KernelMatch, ...] = ()
    chain: ProductFormChain | None = None
    chain_match: int | None = None
    note: str = ""
    order_label: str = "as-extracted"

    @property
    def kernel(self) -> KernelSpec | None:
        """The kernel whose factors the extracted chain is built on."""
        if self.chain_match is not None:
            return self.matches[self.chain_match].kernel
        return self.matches[0].kernel if self.matches else None

    @property
    def kind(self) -> str | None:
        return self.kernel.kind if self.kernel else None

    @property
    def order(self) -> int | None:
        return self.chain.order if self.chain else None

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "base": self.base,
            "shape": self.shape,
            "p": self.p,
            "q": self.q,
            "alpha": self.alpha,
            "prime_power_spectrum": list(self.spectrum.prime_power),
            "matches": [m.to_dict() for m in self.matches],
            "chain": self.chain.to_dict() if self.chain else None,
            "chain_match": self.chain_match,
            "order": self.order,
            "order_label": self.order_label,
        }
        if self.note:
            out["note"] = self.note
        if not self.tile.accepted:
            out["uncovered_path"] = list(self.tile.uncovered or ())
        return out


def _residue_slots(exps: Sequence[int], alpha: int, js: Iterable[int]) -> dict[int, int] | None:
    """Map j to the exponent congruent to j mod alpha; None unless one per class."""
    if len(exps) != alpha or sorted(e % alpha for e in exps) != list(range(alpha)):
        return None
    by_class = {e % alpha: e for e in exps}
    return {j: by_class[j % alpha] for j in js}


def _divides_all(spec: KernelSpec, d: DigitSet) -> bool:
    return all(cyclotomic_divides(s, d) for s in spec.indices)


def _candidate_kernels(d: DigitSet, shape: str, p: int, q: int | None, alpha: int, by_prime) -> list[KernelSpec]:
    out: list[KernelSpec] = []
    ep = list(by_prime.get(p, ()))
    if shape == "p^alpha":
        slots = _residue_slots(ep, alpha, range(1, alpha + 1))
        if slots and slots[1] == 1:
            out.append(kernel_build("p^alpha", p, alpha=alpha, m=[(slots[i] - i) // alpha for i in range(2, alpha + 1)]))
        return out
    if shape == "pq":
        for a, c in ((p, q), (q, p)):
            if list(by_prime.get(a, ())) == [1] and len(by_prime.get(c, ())) == 1:
                out.append(kernel_build("pq", a, c, n=by_prime[c][0]))
        return out
    eq = list(by_prime.get(q, ()))
    # case (i): p and a single power of q in the spectrum
    slots = _residue_slots(ep, alpha, range(1, alpha + 1))
    if slots and slots[1] == 1 and len(eq) == 1:
        n = eq[0]
        js = range(2, alpha + 1)
        ms = [(slots[j] - j) // alpha for j in js]
        # ell_j may be any c whose lower block Phi_{p^e_j}(x^{q^(c-1)}) divides P_D
        choices = []
        for j, mj in zip(js, ms):
            top = next((c for c in range(1, mj + 2) if not cyclotomic_divides(p ** slots[j] * q**c, d)), mj + 2)
            choices.append(range(1, top + 1))
        if all(c[-1] == mj + 2 for c, mj in zip(choices, ms)):
            out.append(kernel_build("I", p, q, alpha=alpha, n=n, m=ms))
        for ells in product(*choices):
            if all(lj == mj + 2 for lj, mj in zip(ells, ms)):
                continue
            out.append(kernel_build("II", p, q, alpha=alpha, n=n, m=ms, ell=ells))
    # case (ii): q and alpha powers of p
    if eq == [1] and slots:
        out.append(kernel_build("III", p, q, alpha=alpha, m=[(slots[j] - j) // alpha for j in range(1, alpha + 1)]))
    return out


def classify(d: DigitSet | Iterable[int], b: int) -> Classification:
    d = d if isinstance(d, DigitSet) else DigitSet.of(d)
    shape, p, q, alpha = base_shape(b)
    if d.cardinality != b:
        raise CardinalityMismatch(f"#D = {d.cardinality} but b = {b}")
    tile = is_tile_digit_set(d, b)
    spectrum = Spectrum.from_indices(tile.candidates)
    base = dict(base=b, shape=shape, p=p, q=q, alpha=alpha, spectrum=spectrum, tile=tile)
    if not tile.accepted:
        return Classification("REJECT", **base)
    matches = []
    for spec in _candidate_kernels(d, shape, p, q, alpha, spectrum.by_prime):
        if _divides_all(spec, d):
            extra = tuple(s for s in spec.optional if cyclotomic_divides(s, d))
            matches.append(KernelMatch(spec, extra))
    if not matches:
        return Classification("ACCEPT", **base, note="no kernel family matched the spectrum")
    notes = []
    for i, match in enumerate(matches):
        try:
            chain = extract_chain(d, match.kernel)
        except ChainExtractionFailed as exc:
            notes.append(f"type {match.kernel.kind}: {exc}")
            continue
        return Classification("ACCEPT", **base, matches=tuple(matches), chain=chain, chain_match=i)
    return Classification("ACCEPT", **base, matches=tuple(matches), note="; ".join(notes))
