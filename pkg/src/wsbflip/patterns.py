"""Nodes, node labelings, pattern sets and the fiber graphs M_λ(σ).

A node of level d is stored as ``d`` coherent pairs ``(top, bottom)``; the
last one is the level-1 node ``(S, x)`` written as ``((S,), ({x},))``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .flipgraph import SubgraphSpec, as_vertex, ground_size
from .tuples import (
    PreconditionError,
    Tup,
    bit,
    decode_set,
    elems,
    encode_set,
    encode_tuple,
    full_mask,
    mask,
    normalizer,
    popcount,
    restrict_raw,
    submasks,
    support,
)

Pair = tuple  # (top: Tup, bottom: Tup)


# ---------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Node:
    n: int
    comps: tuple  # tuple[Pair, ...]

    def __post_init__(self) -> None:
        if not self.comps:
            raise PreconditionError("a node has at least one component")
        for i in range(len(self.comps) - 1):
            if support(self.comps[i][1]) != support(self.comps[i + 1][0]):
                raise PreconditionError("color/carrier chaining violated")
        top, bottom = self.comps[-1]
        if len(top) != 1 or popcount(bottom[0]) != 1:
            raise PreconditionError("last component must be a level-1 node (S, x)")

    @property
    def level(self) -> int:
        return len(self.comps)

    @property
    def carrier(self) -> int:
        return support(self.comps[0][0])

    @property
    def x(self) -> int:
        return self.comps[-1][1][0].bit_length()

    @property
    def S(self) -> int:
        return self.comps[-1][0][0]

    @property
    def internal(self) -> bool:
        return self.carrier == full_mask(self.n)

    def encode(self) -> str:
        parts = [f"{encode_tuple(t)}::{encode_tuple(b)}" for t, b in self.comps[:-1]]
        parts.append(f"({encode_set(self.S)},{self.x})")
        return " ‖ ".join(parts)

    @classmethod
    def level1(cls, n: int, S: int, x: int) -> "Node":
        if not S & bit(x):
            raise PreconditionError("x must lie in S")
        return cls(n, (((S,), (bit(x),)),))


def adjacent_node(v, x: int) -> Node:
    """The node of color ``x`` adjacent to the vertex ``v`` of Γ_n^d."""
    v = as_vertex(v)
    n = ground_size(v[0])
    last = v[-1]
    acc = 0
    for b in last:
        acc |= b
        if b & bit(x):
            break
    comps = [((acc,), (bit(x),))]
    car = acc
    for sigma in reversed(v[:-1]):
        top, bottom = restrict_raw(sigma, sigma, car)
        comps.append((top, bottom))
        car = support(top)
    return Node(n, tuple(reversed(comps)))


def adjacent_nodes(v) -> list[Node]:
    v = as_vertex(v)
    n = ground_size(v[0])
    return [adjacent_node(v, x) for x in range(1, n + 1)]


def parent(v: Node) -> Node:
    """w_d = v_d restricted to the color, then restrictions cascade upward."""
    if v.level < 2:
        raise PreconditionError("parent needs a node of level at least 2")
    comps = v.comps[:-1]
    target = bit(v.x)
    out = []
    for top, bottom in reversed(comps):
        t2, b2 = restrict_raw(top, bottom, target)
        out.append((t2, b2))
        target = support(t2)
    out.reverse()
    # the deepest restriction has a single bottom block {x}: rewrite as (T, x)
    t_last, b_last = out[-1]
    out[-1] = ((support(t_last),), b_last)
    return Node(v.n, tuple(out))


def normal_form(v: Node) -> Node:
    phi = normalizer(v.carrier)
    comps = tuple((phi.apply_tuple(t), phi.apply_tuple(b)) for t, b in v.comps)
    return Node(popcount(v.carrier), comps)


def relabel(v: Node, target: int) -> Node:
    """Image of ``v`` under the order bijection carrier(v) -> ``target``."""
    if popcount(target) != popcount(v.carrier):
        raise PreconditionError("carriers differ in size")
    phi = normalizer(v.carrier)
    psi = normalizer(target)
    comps = tuple(
        (psi.inverse_tuple(phi.apply_tuple(t)), psi.inverse_tuple(phi.apply_tuple(b)))
        for t, b in v.comps
    )
    return Node(v.n, comps)


# ---------------------------------------------------------------- pattern sets


def p_plus(k: int) -> frozenset:
    return frozenset((full_mask(i), bit(i)) for i in range(1, k + 1))


def p_minus(k: int) -> frozenset:
    if k < 3:
        raise PreconditionError("P_k^- is defined for k >= 3")
    return p_plus(k) | {(full_mask(2), bit(1)), (full_mask(3), bit(2))}


@dataclass(frozen=True)
class PatternSet:
    """Per-cardinality sets B_1..B_{n-1} of level-1 nodes ``(S, {x})``."""

    n: int
    by_k: tuple  # tuple of frozensets, index k-1
    vector: tuple | None = None

    def __post_init__(self) -> None:
        if len(self.by_k) != self.n - 1:
            raise PreconditionError("need one family per k = 1..n-1")
        for k, fam in enumerate(self.by_k, start=1):
            for S, xb in fam:
                if S & ~full_mask(k) or not S & xb:
                    raise PreconditionError(f"bad pattern ({encode_set(S)},{xb}) for k={k}")

    def B(self, k: int) -> frozenset:
        return self.by_k[k - 1]

    def contains(self, k: int, S: int, x: int) -> bool:
        return (S, bit(x)) in self.by_k[k - 1]

    @classmethod
    def from_vector(cls, xs: Sequence[int]) -> "PatternSet":
        n = len(xs) + 1
        fams = []
        for k, xk in enumerate(xs, start=1):
            if xk == 1:
                fams.append(p_plus(k))
            elif xk == -1:
                fams.append(p_minus(k))
            elif xk == 0:
                fams.append(frozenset())
            else:
                raise PreconditionError("vector entries must be in {-1,0,1}")
        return cls(n, tuple(fams), tuple(xs))

    @classmethod
    def from_lists(cls, n: int, lists: Mapping[int, Iterable[tuple[Iterable[int], int]]]) -> "PatternSet":
        fams = []
        for k in range(1, n):
            fams.append(frozenset((mask(S), bit(x)) for S, x in lists.get(k, ())))
        return cls(n, tuple(fams))

    def to_text(self) -> str:
        if self.vector is not None:
            return "x=" + ",".join(str(v) for v in self.vector) + "\n"
        lines = []
        for k, fam in enumerate(self.by_k, start=1):
            for S, xb in sorted(fam):
                lines.append(f"{k} ({encode_set(S)},{xb.bit_length()})")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> "PatternSet":
        text = text.strip()
        if text.startswith("x="):
            return cls.from_vector([int(v) for v in text[2:].split(",")])
        lists: dict[int, list] = {}
        for line in text.splitlines():
            k, rest = line.split(" ", 1)
            S, x = rest.strip()[1:-1].rsplit(",", 1)
            lists.setdefault(int(k), []).append((elems(decode_set(S)), int(x)))
        if n is None:
            raise PreconditionError("explicit pattern lists need n")
        return cls.from_lists(n, lists)


def wsb6_patterns() -> PatternSet:
    """The n = 6 pattern set used in earlier work; equals B_x for x = (1,1,-1,0,0)."""
    return PatternSet.from_lists(
        6,
        {
            1: [({1}, 1)],
            2: [({1}, 1), ({1, 2}, 2)],
            3: [({1}, 1), ({1, 2}, 1), ({1, 2}, 2), ({1, 2, 3}, 2), ({1, 2, 3}, 3)],
        },
    )


# ---------------------------------------------------------------- λ_B


def lambda_B(v: Node, B: PatternSet) -> int:
    if v.level != 2:
        raise PreconditionError("λ_B is defined on level-2 nodes")
    if v.internal:
        return 0
    top, _ = v.comps[0]
    if len(top) >= 2:
        return 1
    A = top[0]
    phi = normalizer(A)
    S = phi.apply_mask(v.S)
    x = phi(v.x)
    return 0 if B.contains(popcount(A), S, x) else 1


def compose(Bk: Iterable[tuple[int, int]]) -> frozenset:
    """All tuples C_1|…|C_q (q >= 1) with (C_1∪…∪C_i, x) in Bk for x in C_i."""
    Bk = frozenset(Bk)
    allowed: dict[int, int] = {}
    for S, xb in Bk:
        allowed[S] = allowed.get(S, 0) | xb
    out = set()

    def grow(prefix: Tup, U: int) -> None:
        for S, xs in allowed.items():
            if S & U != U or S == U:
                continue
            C = S & ~U
            if C & ~xs:
                continue
            t = prefix + (C,)
            out.add(t)
            grow(t, S)

    grow((), 0)
    return frozenset(out)


@lru_cache(maxsize=None)
def _composed(fam: frozenset) -> frozenset:
    return compose(fam)


def omega(B: PatternSet, sigma: Sequence[int]) -> frozenset:
    """Ω(B, σ): union over l of composable tuples pulled back into A_l."""
    t = len(sigma)
    if t == 1:
        return frozenset()
    out = set()
    acc = 0
    for l in range(t - 1):
        acc |= sigma[l]
        k = popcount(acc)
        phi = normalizer(acc)
        Al = phi.apply_mask(sigma[l])
        for C in _composed(B.B(k)):
            if support(C) & ~Al == 0:
                out.add(phi.inverse_tuple(C))
    return frozenset(out)


def m_lambda_fiber(sigma: Sequence[int], B: PatternSet) -> SubgraphSpec:
    n = ground_size(sigma)
    V = full_mask(n) & ~sigma[-1]
    return SubgraphSpec(V, omega(B, sigma))


# ---------------------------------------------------------------- labelings


@dataclass
class NodeLabeling:
    """An evaluation rule on nodes plus a descriptor."""

    rule: Callable[[Node], int]
    descriptor: object = None

    def __call__(self, v: Node) -> int:
        return self.rule(v)


def pattern_labeling(B: PatternSet) -> NodeLabeling:
    return NodeLabeling(lambda v: lambda_B(v, B), B)


def is_monochromatic(v, L: NodeLabeling, bitval: int) -> bool:
    return all(L(w) == bitval for w in adjacent_nodes(v))


@dataclass
class ComplianceReport:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_compliance(L: NodeLabeling, samples: Iterable[tuple[Node, int]]) -> ComplianceReport:
    """For each ``(v, target)`` compare L(v) with L at the order image on ``target``."""
    rep = ComplianceReport()
    for v, target in samples:
        if v.internal:
            rep.checked += 1
            continue
        w = relabel(v, target)
        rep.checked += 1
        if L(v) != L(w):
            rep.violations.append((v.encode(), w.encode()))
    return rep


def random_node(n: int, level: int, rng: random.Random) -> Node:
    """A node adjacent to a uniformly random vertex of Γ_n^level."""
    from .sim import random_full_tuple

    v = tuple(random_full_tuple(n, rng) for _ in range(level))
    return adjacent_node(v, rng.randint(1, n))


def equicarrier_samples(n: int, level: int, count: int, seed: int) -> list[tuple[Node, int]]:
    """Random boundary nodes paired with a random equal-size target carrier."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        v = random_node(n, level, rng)
        k = popcount(v.carrier)
        target = mask(sorted(rng.sample(range(1, n + 1), k)))
        out.append((v, target))
    return out
