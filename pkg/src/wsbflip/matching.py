"""Standard matchings μ_R, alternating paths and matching verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Sequence

from .flipgraph import (
    SubgraphSpec,
    as_vertex,
    encode_vertex,
    flip,
    flip_full,
    flippable_set,
)
from .tuples import PreconditionError, Tup, bit, elems, full_mask, full_tuples, mask


# ---------------------------------------------------------------- orders and heights


@dataclass(frozen=True)
class OrderR:
    """An order ``seq`` on the complement of ``V``."""

    seq: tuple
    V: int

    def __post_init__(self) -> None:
        if len(set(self.seq)) != len(self.seq):
            raise PreconditionError("order repeats an id")
        if mask(self.seq) & self.V:
            raise PreconditionError("order meets V")

    def check(self, n: int) -> None:
        if mask(self.seq) | self.V != full_mask(n):
            raise PreconditionError("order does not cover [n] minus V")

    @classmethod
    def ascending(cls, n: int, V: int) -> "OrderR":
        return cls(tuple(elems(full_mask(n) & ~V)), V)


def height(sigma: Sequence[int], R: OrderR | Sequence[int]) -> int:
    seq = R.seq if isinstance(R, OrderR) else tuple(R)
    j = len(seq)
    pos = len(sigma) - 1
    while j >= 1 and pos >= 0 and sigma[pos] == bit(seq[j - 1]):
        j -= 1
        pos -= 1
    return j


def standard_partner(sigma: Sequence[int], R: OrderR | Sequence[int]) -> tuple[Tup, int] | None:
    """(μ_R(σ), color) or None when σ is critical."""
    seq = R.seq if isinstance(R, OrderR) else tuple(R)
    h = height(sigma, seq)
    if h == 0:
        return None
    x = seq[h - 1]
    return flip_full(sigma, x), x


# ---------------------------------------------------------------- matchings


class Matching:
    """Partial matching on some flip graph, stored symmetrically."""

    def __init__(self, edges: dict | None = None, scope: SubgraphSpec | None = None):
        self._m: dict = {}
        self.scope = scope
        if edges:
            for v, (w, c) in edges.items():
                self._m[v] = (w, c)

    def __contains__(self, v) -> bool:
        return v in self._m

    def __len__(self) -> int:
        return len(self._m) // 2

    def partner(self, v):
        e = self._m.get(v)
        return None if e is None else e[0]

    def color(self, v) -> int | None:
        e = self._m.get(v)
        return None if e is None else e[1]

    def add(self, v, w, c: int) -> None:
        if v in self._m or w in self._m:
            raise PreconditionError("vertex already matched")
        self._m[v] = (w, c)
        self._m[w] = (v, c)

    def remove(self, v) -> None:
        w, _ = self._m.pop(v)
        del self._m[w]

    def copy(self) -> "Matching":
        m = Matching(scope=self.scope)
        m._m = dict(self._m)
        return m

    def items(self) -> Iterator:
        return iter(self._m.items())

    def edges(self, key: Callable = encode_vertex) -> list[tuple]:
        """One record per edge, keyed by the canonically smaller endpoint."""
        out = []
        for v, (w, c) in self._m.items():
            if key(v) < key(w):
                out.append((v, w, c))
        out.sort(key=lambda e: key(e[0]))
        return out


def standard_matching(n: int, V: int, R: OrderR | None = None, omega: Iterable = ()) -> Matching:
    """μ_R restricted to Γ_n(Ω, V), materialized (small n only)."""
    if R is None:
        R = OrderR.ascending(n, V)
    R.check(n)
    spec = SubgraphSpec(V, frozenset(t for t in omega if t))
    mu = Matching(scope=spec)
    for s in full_tuples(n):
        if not spec.member(s) or s in mu:
            continue
        p = standard_partner(s, R)
        if p is not None:
            mu.add(s, p[0], p[1])
    return mu


def critical_vertices(mu: Matching, spec: SubgraphSpec, n: int) -> list[Tup]:
    from .tuples import encode_tuple

    out = [s for s in full_tuples(n) if spec.member(s) and s not in mu]
    return sorted(out, key=encode_tuple)


# ---------------------------------------------------------------- alternating paths


@dataclass
class AltPath:
    vertices: list
    colors: list = field(default_factory=list)
    flags: list = field(default_factory=list)  # True = matching edge

    def __post_init__(self) -> None:
        if self.colors and len(self.colors) != len(self.vertices) - 1:
            raise PreconditionError("colors do not fit the vertex list")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def reversed(self) -> "AltPath":
        return AltPath(self.vertices[::-1], self.colors[::-1], self.flags[::-1])

    def concat(self, other: "AltPath", color: int | None = None, flag: bool | None = None) -> "AltPath":
        """Join two paths, either sharing an endpoint or through one extra edge."""
        if color is None:
            if other.vertices[0] != self.vertices[-1]:
                raise PreconditionError("paths do not share an endpoint")
            return AltPath(
                self.vertices + other.vertices[1:],
                self.colors + other.colors,
                self.flags + other.flags,
            )
        return AltPath(
            self.vertices + other.vertices,
            self.colors + [color] + other.colors,
            self.flags + [bool(flag)] + other.flags,
        )

    def serialize(self) -> list[str]:
        out = [encode_vertex(self.vertices[0], file_form=True)]
        for v, c, f in zip(self.vertices[1:], self.colors, self.flags):
            out.append(f"{'M' if f else '-'}{c} {encode_vertex(v, file_form=True)}")
        return out


def path_from_vertices(vertices: Sequence, partner: Callable) -> AltPath:
    """Recover colors by flipping and flags from the matching partner function."""
    colors, flags = [], []
    for a, b in zip(vertices, vertices[1:]):
        c = edge_color(a, b)
        colors.append(c)
        flags.append(partner(a) == b)
    return AltPath(list(vertices), colors, flags)


def edge_color(a, b) -> int:
    va, vb = as_vertex(a), as_vertex(b)
    for x in elems(flippable_set(va)):
        if flip(va, x) == vb:
            return x
    raise PreconditionError(f"{encode_vertex(a)} and {encode_vertex(b)} are not adjacent")


def _same(v, w) -> bool:
    return as_vertex(v) == as_vertex(w)


def validate_path(
    gamma: AltPath,
    partner: Callable,
    member: Callable | None = None,
    require_alternating: bool = True,
) -> list[str]:
    """Problems with ``gamma`` w.r.t. a partner function; empty when valid."""
    problems = []
    vs = gamma.vertices
    if len(gamma.colors) != len(vs) - 1 or len(gamma.flags) != len(vs) - 1:
        return ["length mismatch between vertices, colors and flags"]
    for i, (a, b, c, f) in enumerate(zip(vs, vs[1:], gamma.colors, gamma.flags)):
        va = as_vertex(a)
        if not flippable_set(va) & bit(c) or not _same(flip(va, c), b):
            problems.append(f"edge {i}: {encode_vertex(a)} -{c}- {encode_vertex(b)} is not a flip")
            continue
        is_m = partner(a) == b
        if is_m != f:
            problems.append(f"edge {i}: matching flag {f} but matching says {is_m}")
    if require_alternating:
        for i in range(len(gamma.flags) - 1):
            if gamma.flags[i] == gamma.flags[i + 1]:
                problems.append(f"edges {i},{i + 1} do not alternate")
    if member is not None:
        for v in vs:
            if not member(v):
                problems.append(f"vertex {encode_vertex(v)} outside the graph")
    return problems


def is_self_intersecting(gamma: AltPath) -> bool:
    return len(set(map(as_vertex, gamma.vertices))) != len(gamma.vertices)


def remove_cycles(gamma: AltPath) -> AltPath:
    """Excise closed detours so that every vertex appears once."""
    vs: list = []
    cs: list = []
    fs: list = []
    pos: dict = {}
    for i, v in enumerate(gamma.vertices):
        key = as_vertex(v)
        if key in pos:
            # back at an earlier vertex: drop the loop including its closing edge
            p = pos[key]
            for u in vs[p + 1 :]:
                del pos[as_vertex(u)]
            del vs[p + 1 :]
            del cs[p:]
            del fs[p:]
            continue
        if i > 0:
            cs.append(gamma.colors[i - 1])
            fs.append(gamma.flags[i - 1])
        pos[key] = len(vs)
        vs.append(v)
    return AltPath(vs, cs, fs)


def apply_alternating(mu: Matching, gamma: AltPath) -> Matching:
    """D(μ, γ): symmetric difference with the edge set of γ."""
    problems = validate_path(gamma, mu.partner)
    if problems:
        raise PreconditionError("path is not properly alternating: " + problems[0])
    if is_self_intersecting(gamma):
        raise PreconditionError("path is self-intersecting")
    vs = gamma.vertices
    for end, flag in ((vs[0], gamma.flags[0] if gamma.flags else True), (vs[-1], gamma.flags[-1] if gamma.flags else True)):
        if not flag and end in mu:
            raise PreconditionError(f"endpoint {encode_vertex(end)} is matched outside the path")
    out = mu.copy()
    for a, b, f in zip(vs, vs[1:], gamma.flags):
        if f:
            out.remove(a)
    for a, b, c, f in zip(vs, vs[1:], gamma.colors, gamma.flags):
        if not f:
            out.add(a, b, c)
    return out


# ---------------------------------------------------------------- verification


@dataclass
class MatchingReport:
    vertices: int = 0
    matched: int = 0
    critical: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    critical_count: int = 0  # may exceed len(critical) when examples are capped

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def classification(self) -> str:
        if self.violations:
            return "invalid"
        k = max(self.critical_count, len(self.critical))
        if not k:
            return "perfect"
        if k == 1:
            return "near-perfect"
        return f"{k} critical"


def verify_matching(spec: SubgraphSpec, mu: Matching, n: int) -> MatchingReport:
    """Streaming check of a matching on Γ_n(Ω, V)."""
    rep = MatchingReport()
    for s in full_tuples(n):
        if not spec.member(s):
            if s in mu:
                rep.violations.append(f"{encode_vertex(s)} matched but outside the graph")
            continue
        rep.vertices += 1
        w = mu.partner(s)
        if w is None:
            rep.critical.append(s)
            continue
        rep.matched += 1
        c = mu.color(s)
        if not flippable_set(s) & bit(c) or flip_full(s, c) != w:
            rep.violations.append(f"{encode_vertex(s)}: partner is not the flip by {c}")
        if mu.partner(w) != s:
            rep.violations.append(f"{encode_vertex(s)}: involution fails")
        elif mu.color(w) != c:
            rep.violations.append(f"{encode_vertex(s)}: color mismatch")
        if not spec.member(w):
            rep.violations.append(f"{encode_vertex(s)}: partner outside the graph")
    return rep


def predicted_critical(spec: SubgraphSpec, R: OrderR, n: int) -> list[Tup]:
    """Critical vertices of μ_R on Γ_n(Ω, V) from the closed-form critical-set characterization."""
    tail = tuple(bit(x) for x in R.seq)
    if not spec.V:
        return [tail]
    return sorted((tuple(t) + tail for t in spec.full_v_tuples()), key=_enc)


def _enc(t: Sequence[int]) -> str:
    from .tuples import encode_tuple

    return encode_tuple(t)
