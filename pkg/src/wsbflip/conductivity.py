"""Alternating-path kit and the conductivity lemmas inside one fiber.

All templates live in canonical coordinates: ``V = {1..d}``, the distinguished
element outside ``V`` is ``n`` and the order is ``R = (d+1, …, n)``.  Each
lemma renames its input into these coordinates, instantiates templates, checks
every edge against μ_R and the subgraph, and renames the result back.

Template vertices are written over *positions* of an element sequence
``xs = (x_1, …, x_n)``: a vertex is a list of position groups, e.g.
``[[1, 2], [3], [4]]`` for ``x_1,x_2 | x_3 | x_4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .flipgraph import SubgraphSpec, flip_full, ground_size
from .matching import AltPath, OrderR, remove_cycles, standard_partner, validate_path
from .tuples import (
    PreconditionError,
    Tup,
    bit,
    elems,
    encode_tuple,
    full_mask,
    mask,
    popcount,
    support,
)

KINDS = ("swapI_k", "swapII_k", "swapI_2", "swapII_2", "upI_k", "upII_k", "specupII", "star")


class ConductionError(RuntimeError):
    """A lemma step produced an invalid path (legality or alternation)."""


# ---------------------------------------------------------------- connectors


@dataclass(frozen=True)
class Connector:
    vertex: Tup
    kind: str  # "first" or "second"

    @property
    def terminal(self) -> int:
        return self.vertex[-1].bit_length()

    @property
    def sequence(self) -> tuple:
        """a_1, …, a_n; for the second kind a_1, a_2 is the first block ascending."""
        out = []
        for b in self.vertex:
            out.extend(elems(b))
        return tuple(out)

    def proper(self, V: int) -> bool:
        return bool(self.vertex[0] & ~V)


def connector_of(sigma: Sequence[int]) -> Connector | None:
    if not sigma or any(popcount(b) != 1 for b in sigma[1:]):
        return None
    k = popcount(sigma[0])
    if k == 1:
        return Connector(tuple(sigma), "first")
    if k == 2:
        return Connector(tuple(sigma), "second")
    return None


# ---------------------------------------------------------------- renaming


@dataclass(frozen=True)
class Renaming:
    """A permutation ``fwd`` of [n] (original id -> canonical id)."""

    fwd: tuple  # fwd[i-1] = image of i

    def __call__(self, x: int) -> int:
        return self.fwd[x - 1]

    def inverse(self, y: int) -> int:
        return self.fwd.index(y) + 1

    def m(self, mk: int) -> int:
        return mask(self(x) for x in elems(mk))

    def mi(self, mk: int) -> int:
        return mask(self.inverse(y) for y in elems(mk))

    def t(self, tup: Sequence[int]) -> Tup:
        return tuple(self.m(b) for b in tup)

    def ti(self, tup: Sequence[int]) -> Tup:
        return tuple(self.mi(b) for b in tup)


def make_renaming(n: int, v_order: Sequence[int], top: int, rest_order: Sequence[int] | None = None) -> Renaming:
    """V ids in ``v_order`` go to 1..d, ``top`` goes to n, the rest ascending (or ``rest_order``)."""
    d = len(v_order)
    used = set(v_order) | {top}
    rest = list(rest_order) if rest_order is not None else [x for x in range(1, n + 1) if x not in used]
    if len(used) != d + 1 or d + 1 + len(rest) != n:
        raise PreconditionError("renaming data does not partition [n]")
    fwd = [0] * n
    for i, x in enumerate(v_order):
        fwd[x - 1] = i + 1
    for i, x in enumerate(rest):
        fwd[x - 1] = d + 1 + i
    fwd[top - 1] = n
    return Renaming(tuple(fwd))


# ---------------------------------------------------------------- templates


def _vertex(xs: Sequence[int], groups: Sequence[Sequence[int]]) -> Tup:
    return tuple(mask(xs[p - 1] for p in g) for g in groups)


def _singles(n: int, start: int = 1) -> list[list[int]]:
    return [[p] for p in range(start, n + 1)]


def _groups_swap(n: int, k: int, head: list[list[int]], merged: bool, swapped: bool) -> list[list[int]]:
    """``head`` followed by positions after the head with k,k+1 merged/swapped."""
    used = {p for g in head for p in g}
    out = [list(g) for g in head]
    p = max(used) + 1
    while p <= n:
        if p == k and merged:
            out.append([k, k + 1])
            p += 2
        elif p == k and swapped:
            out.extend([[k + 1], [k]])
            p += 2
        else:
            out.append([p])
            p += 1
    return out


def _template(kind: str, n: int, k: int) -> tuple[list[list[list[int]]], list[bool]]:
    """Position-group rows of a kit template and its matching flags."""
    M, N = True, False
    if kind == "swapI_k":
        if not 3 <= k <= n - 1:
            raise PreconditionError("swapI_k needs 3 <= k <= n-1")
        rows = [
            _groups_swap(n, k, [[1]], False, False),
            _groups_swap(n, k, [[1, 2]], False, False),
            _groups_swap(n, k, [[1, 2]], True, False),
            _groups_swap(n, k, [[1], [2]], True, False),
            _groups_swap(n, k, [[1], [2]], False, True),
        ]
        return rows, [M, N, M, N]
    if kind == "swapII_k":
        if not 3 <= k <= n - 1:
            raise PreconditionError("swapII_k needs 3 <= k <= n-1")
        rows = [
            _groups_swap(n, k, [[1, 2]], False, False),
            _groups_swap(n, k, [[1], [2]], False, False),
            _groups_swap(n, k, [[1], [2]], True, False),
            _groups_swap(n, k, [[1, 2]], True, False),
            _groups_swap(n, k, [[1, 2]], False, True),
        ]
        return rows, [M, N, M, N]
    mid = [[p] for p in range(4, n - 1)]  # positions strictly between 3 and n-1
    if kind == "swapI_2":
        rows = [
            [[1], [2], [3]] + mid + [[n - 1], [n]],
            [[1, 2], [3]] + mid + [[n - 1], [n]],
            [[1, 2], [3]] + mid + [[n - 1, n]],
            [[1], [2], [3]] + mid + [[n - 1, n]],
            [[1], [2, 3]] + mid + [[n - 1, n]],
            [[1, 2, 3]] + mid + [[n - 1, n]],
            [[1, 2, 3]] + mid + [[n - 1], [n]],
            [[1], [2, 3]] + mid + [[n - 1], [n]],
            [[1], [3], [2]] + mid + [[n - 1], [n]],
        ]
        return rows, [M, N] * 4
    if kind == "swapII_2":
        rows = [
            [[1, 2], [3]] + mid + [[n - 1], [n]],
            [[1], [2], [3]] + mid + [[n - 1], [n]],
            [[1], [2, 3]] + mid + [[n - 1], [n]],
            [[1, 2, 3]] + mid + [[n - 1], [n]],
            [[1, 2, 3]] + mid + [[n - 1, n]],
            [[1], [2, 3]] + mid + [[n - 1, n]],
            [[1], [3], [2]] + mid + [[n - 1, n]],
            [[1, 3], [2]] + mid + [[n - 1, n]],
            [[1, 3], [2]] + mid + [[n - 1], [n]],
        ]
        return rows, [M, N] * 4
    if kind == "upI_k":
        # n sits at position k (k = 1 means template upI_1)
        if not 1 <= k <= n - 1:
            raise PreconditionError("upI_k needs 1 <= k <= n-1")
        head = [[p] for p in range(1, k)]
        tail = [[p] for p in range(k + 2, n + 1)]
        rows = [
            head + [[k], [k + 1]] + tail,
            head + [[k, k + 1]] + tail,
            head + [[k + 1], [k]] + tail,
        ]
        return rows, [M, N]
    if kind == "upII_k":
        # element sequence x_1, x_2, … with {x_1, x_2} the first block, n at position k
        if not 3 <= k <= n - 1:
            raise PreconditionError("upII_k needs 3 <= k <= n-1")
        head = [[1, 2]] + [[p] for p in range(3, k)]
        tail = [[p] for p in range(k + 2, n + 1)]
        rows = [
            head + [[k], [k + 1]] + tail,
            head + [[k, k + 1]] + tail,
            head + [[k + 1], [k]] + tail,
        ]
        return rows, [M, N]
    rest = [[p] for p in range(5, n + 1)]
    if kind == "specupII":
        # xs = (n, a_2, n-1, a_4, …)
        rows = [
            [[1, 2], [3], [4]] + rest,
            [[1], [2], [3], [4]] + rest,
            [[1], [2, 3], [4]] + rest,
            [[1, 2, 3], [4]] + rest,
            [[3], [1, 2], [4]] + rest,
            [[3], [1], [2], [4]] + rest,
            [[3], [1], [2, 4]] + rest,
            [[3], [1, 2, 4]] + rest,
            [[3], [2], [1, 4]] + rest,
            [[3], [2], [1], [4]] + rest,
            [[3, 2], [1], [4]] + rest,
        ]
        return rows, [M, N] * 5
    if kind == "upII_2":
        # xs = (n, n-1, a_3, a_4, …)
        rows = [
            [[1, 2], [3], [4]] + rest,
            [[1], [2], [3], [4]] + rest,
            [[1], [2], [3, 4]] + rest,
            [[1, 2], [3, 4]] + rest,
            [[2], [1], [3, 4]] + rest,
            [[2], [1, 3, 4]] + rest,
            [[2], [3], [1, 4]] + rest,
            [[2], [3], [1], [4]] + rest,
            [[2, 3], [1], [4]] + rest,
        ]
        return rows, [M, N] * 4
    if kind == "star":
        # xs = (n, 1, 2, …, n-1)
        rows = [
            [[1, 2], [3], [4]] + rest,
            [[1], [2], [3], [4]] + rest,
            [[1], [2], [3, 4]] + rest,
            [[1, 2], [3, 4]] + rest,
            [[2], [1], [3, 4]] + rest,
            [[2], [1, 3, 4]] + rest,
            [[2], [3], [1, 4]] + rest,
            [[2], [3], [1], [4]] + rest,
            [[2, 3], [1], [4]] + rest,
        ]
        flags = [M, N] * 4
        # then n walks right through positions 4, 5, …, n
        for j in range(4, n + 1):
            after = [[p] for p in range(j + 1, n + 1)]
            before = [[2, 3]] + [[p] for p in range(4, j)]
            rows.append(before + [[1, j]] + after)
            rows.append(before + [[j], [1]] + after)
            flags += [M, N]
        return rows, flags
    raise PreconditionError(f"unknown kit kind {kind}")


@dataclass(frozen=True)
class KitPathSpec:
    kind: str
    k: int
    start: Tup
    R: OrderR
    spec: SubgraphSpec


def _sequence(start: Sequence[int], kind: str, n: int) -> tuple:
    """Element sequence x_1..x_n read off the start vertex of a template."""
    seq = []
    for b in start:
        es = elems(b)
        if len(es) == 2 and n in es:
            es = [n] + [e for e in es if e != n]  # n leads a two-element first block
        seq.extend(es)
    return tuple(seq)


def _legality(kind: str, k: int, xs: Sequence[int], spec: SubgraphSpec) -> None:
    """Caption conditions of the up templates.

    A legality tuple counts as admitted when its V-prefix is empty or in Ω,
    so tuples running past V are judged by their V-part.
    """
    V = spec.V

    def inV(x: int) -> bool:
        return bool(V & bit(x))

    def ok(t: Sequence[int]) -> bool:
        return spec.member(tuple(t))

    if kind == "upI_k" and k == 1:
        if inV(xs[1]) and not ok((bit(xs[1]),)):
            raise PreconditionError("upI_1 is illegal: x_2 in V and not admitted by Ω")
    elif kind == "upI_k":
        if inV(xs[0]):
            pre = tuple(bit(x) for x in xs[: k - 1])
            if not ok(pre) or not ok(pre + (bit(xs[k]),)):
                raise PreconditionError(f"upI_{k} is illegal for this Ω")
    elif kind == "upII_k":
        if bit(xs[0]) & V and bit(xs[1]) & V:
            pre = (bit(xs[0]) | bit(xs[1]),) + tuple(bit(x) for x in xs[2 : k - 1])
            if not ok(pre) or not ok(pre + (bit(xs[k]),)):
                raise PreconditionError(f"upII_{k} is illegal for this Ω")


def kit_path(spec: KitPathSpec, extra: dict | None = None) -> AltPath:
    """Instantiate a kit template at ``spec.start`` and validate it edge by edge."""
    start = tuple(spec.start)
    n = ground_size(start)
    if n < 5:
        raise PreconditionError("the path kit needs n >= 5")
    rows, flags = _template(spec.kind, n, spec.k)
    xs = _sequence(start, spec.kind, n)
    if _vertex(xs, rows[0]) != start:
        raise PreconditionError(f"start {encode_tuple(start)} does not fit template {spec.kind}")
    if spec.kind in ("specupII",) and (xs[0] != n or xs[2] != n - 1):
        raise PreconditionError("specupII starts at n,a_2 | n-1 | …")
    if spec.kind == "upII_2" and set(xs[:2]) != {n, n - 1}:
        raise PreconditionError("upII_2 starts at n-1,n | …")
    if spec.kind == "star" and xs != (n,) + tuple(range(1, n)):
        raise PreconditionError("star starts at n,1 | 2 | … | n-1")
    if spec.kind.startswith("up") and spec.kind != "upII_2":
        pos = spec.k
        if xs[pos - 1] != n:
            raise PreconditionError(f"{spec.kind} needs n at position {pos}")
    _legality(spec.kind, spec.k, xs, spec.spec)
    vertices = [_vertex(xs, r) for r in rows]
    gamma = AltPath(vertices, [_edge_color(a, b) for a, b in zip(vertices, vertices[1:])], list(flags))
    check_path(gamma, spec.R, spec.spec, extra)
    return gamma


def _v_tuples(V: int) -> list[Tup]:
    from .tuples import ordered_partitions, submasks

    return [t for m in submasks(V) if m for t in ordered_partitions(m)]


def random_kit_spec(kind: str, n: int, rng) -> tuple[KitPathSpec, dict | None]:
    """A random canonical-coordinate instance of one template, plus its overrides.

    ``V = {1..d}``, ``R`` ascending and Ω a random V-tuple family.  Draws that
    break a template's legality conditions are rejected by :func:`kit_path`
    with :class:`PreconditionError`; callers resample those.
    """
    d = rng.randint(3, n - 1) if kind == "star" else rng.randint(1, n - 2)
    V = full_mask(d)
    vt = _v_tuples(V)
    om = frozenset(t for t in vt if rng.random() < 0.5)
    R = OrderR(tuple(range(d + 1, n + 1)), V)
    rest = list(range(1, n))
    rng.shuffle(rest)
    extra = None
    k = {"swapI_2": 2, "swapII_2": 2, "upII_2": 2}.get(kind, 0)
    if kind in ("swapI_k", "swapII_k", "upII_k"):
        k = rng.randint(3, n - 1)
    elif kind == "upI_k":
        k = rng.randint(1, n - 1)
    if kind in ("upI_k", "upII_k"):
        xs = rest[: k - 1] + [n] + rest[k - 1 :]
    elif kind == "upII_2":
        xs = [n, n - 1] + [x for x in rest if x != n - 1]
    elif kind == "specupII":
        r = [x for x in rest if x != n - 1]
        xs = [n, r[0], n - 1] + r[1:]
    elif kind == "star":
        xs = [n] + list(range(1, n))
        b = [bit(i) for i in range(1, d + 1)]
        full = [tuple(b), (b[0] | b[1],) + tuple(b[2:]), (b[0], b[1] | b[2]) + tuple(b[3:])]
        om = frozenset(t for t in vt if support(t) != V and rng.random() < 0.5)
        om |= {f[:i] for f in full for i in range(1, len(f) + 1)}
        a1 = tuple(bit(i) for i in range(1, n + 1))
        a2 = (bit(1), bit(2) | bit(3)) + tuple(bit(i) for i in range(4, n + 1))
        extra = {a1: a2, a2: a1}
    else:
        xs = [n] + rest
    rows, _ = _template(kind, n, k)
    return KitPathSpec(kind, k, _vertex(xs, rows[0]), R, SubgraphSpec(V, om)), extra


def _edge_color(a: Tup, b: Tup) -> int:
    n = ground_size(a)
    for x in range(1, n + 1):
        try:
            if flip_full(a, x) == b:
                return x
        except PreconditionError:
            continue
    raise ConductionError(f"{encode_tuple(a)} -> {encode_tuple(b)} is not a flip")


def partner_fn(R: OrderR, spec: SubgraphSpec, extra: dict | None = None) -> Callable:
    """μ_R on Γ_n(Ω, V), overridden by ``extra`` (vertex -> partner)."""

    def partner(v):
        if extra and v in extra:
            return extra[v]
        if not spec.member(v):
            return None
        p = standard_partner(v, R)
        return None if p is None else p[0]

    return partner


def check_path(gamma: AltPath, R: OrderR, spec: SubgraphSpec, extra: dict | None = None) -> None:
    problems = validate_path(gamma, partner_fn(R, spec, extra), spec.member)
    if problems:
        raise ConductionError("; ".join(problems[:3]))


def _chain(pieces: list[AltPath]) -> AltPath:
    out = pieces[0]
    for p in pieces[1:]:
        out = out.concat(p)
    return out


def _matching_step(v: Tup, R: OrderR, expect: Tup | None = None) -> AltPath:
    p = standard_partner(v, R)
    if p is None:
        raise ConductionError(f"{encode_tuple(v)} is critical, expected a matching edge")
    w, c = p
    if expect is not None and w != expect:
        raise ConductionError(f"matching edge at {encode_tuple(v)} leads to {encode_tuple(w)}")
    return AltPath([v, w], [c], [True])


# ---------------------------------------------------------------- lemma-level helpers


def _canonical_setup(n: int, V: int, omega: Iterable, rn: Renaming) -> tuple[SubgraphSpec, OrderR]:
    d = popcount(V)
    Vc = rn.m(V)
    if Vc != full_mask(d):
        raise PreconditionError("renaming does not send V onto 1..d")
    spec = SubgraphSpec(Vc, frozenset(rn.t(t) for t in omega if t))
    return spec, OrderR(tuple(range(d + 1, n + 1)), Vc)


def _uncanon(gamma: AltPath, rn: Renaming) -> AltPath:
    return AltPath(
        [rn.ti(v) for v in gamma.vertices],
        [rn.inverse(c) for c in gamma.colors],
        list(gamma.flags),
    )


def _order_back(R: OrderR, rn: Renaming, V: int) -> OrderR:
    return OrderR(tuple(rn.inverse(x) for x in R.seq), V)


def _run(kinds: list[tuple[str, int]], start: Tup, R: OrderR, spec: SubgraphSpec, extra=None) -> AltPath:
    pieces = []
    cur = start
    for kind, k in kinds:
        p = kit_path(KitPathSpec(kind, k, cur, R, spec), extra)
        pieces.append(p)
        cur = p.end
    if not pieces:
        return AltPath([start], [], [])
    return _chain(pieces)


def _join(a: AltPath, b: AltPath) -> AltPath:
    if len(a) == 1:
        return b
    if len(b) == 1:
        return a
    return a.concat(b)


def _check_lemma_hypotheses(n: int, V: int) -> None:
    if n < 5:
        raise PreconditionError("the conductivity lemmas need n >= 5")
    d = popcount(V)
    if not 1 <= d <= n - 1:
        raise PreconditionError("the conductivity lemmas need 1 <= |V| <= n-1")


def _swaps_to_end(pos: int, n: int, kind: str) -> list[tuple[str, int]]:
    """Adjacent swaps moving the element at ``pos`` (>= 2) to position n."""
    steps = []
    if pos == 2:
        steps.append((f"swap{kind}_2", 2))
        pos = 3
    steps += [(f"swap{kind}_k", k) for k in range(pos, n)]
    return steps


def _swaps_towards(pos: int, target: int, kind: str) -> list[tuple[str, int]]:
    """Adjacent swaps moving the element at ``pos`` left to ``target`` (>= 2)."""
    steps = []
    for k in range(pos - 1, target - 1, -1):
        steps.append((f"swap{kind}_2", 2) if k == 2 else (f"swap{kind}_k", k))
    return steps


# ---------------------------------------------------------------- tunnel steps through intermediate fibers


def conduct_tunnel_step(
    sigma: Connector,
    f: int,
    V: int,
    omega: Iterable,
    goal: str,
    a1: int | None = None,
) -> tuple[OrderR, AltPath, Connector]:
    """Non-augmenting path from a proper connector to an f- or a_1-connector.

    ``goal`` is ``"to_f"`` (part 1 of either lemma) or ``"to_a1"`` (part 2).
    The returned path starts at ``sigma.vertex`` and ends at the new connector;
    both end edges are matching edges of the returned order.
    """
    omega = frozenset(omega)
    v = tuple(sigma.vertex)
    n = ground_size(v)
    _check_lemma_hypotheses(n, V)
    d = popcount(V)
    if not sigma.proper(V):
        raise PreconditionError("connector is not proper")
    first = elems(v[0])
    outside = [x for x in first if not V & bit(x)]
    if a1 is None:
        cands = [x for x in outside if x != f] if goal == "to_f" else outside
        if not cands:
            raise PreconditionError("no admissible a_1 in the first block")
        a1 = max(cands)
    if a1 not in outside:
        raise PreconditionError("a_1 must be a first-block id outside V")
    if goal == "to_f" and f == a1:
        raise PreconditionError("part 1 needs f != a_1")
    if goal == "to_a1" and d > n - 2:
        raise PreconditionError("part 2 needs |V| <= n-2")
    if goal not in ("to_f", "to_a1"):
        raise PreconditionError("goal must be to_f or to_a1")

    rn = make_renaming(n, elems(V), a1)
    spec, R = _canonical_setup(n, V, omega, rn)
    vc = rn.t(v)
    xs = _sequence(vc, "", n)
    fc = rn(f) if goal == "to_f" else None

    if sigma.kind == "first":
        if goal == "to_f":
            l = xs.index(fc) + 1
            steps = _swaps_to_end(l, n, "I") if l < n else []
            path = _run(steps, vc, R, spec)
            end = path.end
            tail = _matching_step(end, R, (end[0] | end[1],) + end[2:])
        else:
            l = xs.index(n - 1) + 1
            steps = _swaps_towards(l, 2, "I") + [("upI_k", k) for k in range(1, n)]
            path = _run(steps, vc, R, spec)
            end = path.end
            tail = _matching_step(end, R, (end[0] | end[1],) + end[2:])
    else:
        if goal == "to_f":
            l = xs.index(fc) + 1
            steps = _swaps_to_end(l, n, "II") if l < n else []
            path = _run(steps, vc, R, spec)
            end = path.end
            rest = end[0] & ~bit(n)
            tail = _matching_step(end, R, (bit(n), rest) + end[1:])
        else:
            l = xs.index(n - 1) + 1
            if l >= 3:
                steps = _swaps_towards(l, 3, "II") + [("specupII", 0)]
            else:
                steps = [("upII_2", 2)]
            steps += [("upII_k", k) for k in range(3, n)]
            path = _run(steps, vc, R, spec)
            end = path.end
            tail = _matching_step(end, R, (bit(n - 1), end[0] & ~bit(n - 1)) + end[1:])
    full = remove_cycles(_join(path, tail))
    check_path(full, R, spec)
    out_conn = connector_of(full.end)
    want = "second" if sigma.kind == "first" else "first"
    if out_conn is None or out_conn.kind != want:
        raise ConductionError("lemma path does not end at a connector of the expected kind")
    gamma = _uncanon(full, rn)
    conn = connector_of(gamma.end)
    expected_terminal = f if goal == "to_f" else a1
    if conn.terminal != expected_terminal:
        raise ConductionError("lemma path ends at the wrong terminal")
    return _order_back(R, rn, V), gamma, conn


# ---------------------------------------------------------------- first-kind endpoint lemma


def _single_chain(full_v: Sequence[Tup], V: int) -> list[int]:
    if len(full_v) != 1 or any(popcount(b) != 1 for b in full_v[0]):
        raise PreconditionError("Ω must hold exactly one full V-tuple of singletons")
    return [b.bit_length() for b in full_v[0]]


def conduct_endpoint_plus(V: int, omega: Iterable, tau: Connector) -> tuple[OrderR, AltPath]:
    """Semi-augmenting path from the unique critical vertex to ``tau``, as the reversed walk."""
    omega = frozenset(omega)
    v = tuple(tau.vertex)
    n = ground_size(v)
    _check_lemma_hypotheses(n, V)
    if tau.kind != "first":
        raise PreconditionError("the first-kind endpoint lemma starts at a connector of the first kind")
    y1 = v[0].bit_length()
    if V & bit(y1):
        raise PreconditionError("y_1 must lie outside V")
    spec0 = SubgraphSpec(V, omega)
    chain = _single_chain(spec0.full_v_tuples(), V)
    for t in range(len(chain) + 1):
        if t and tuple(bit(c) for c in chain[:t]) not in omega:
            raise PreconditionError("Ω must contain every truncation of its full V-tuple")
    rn = make_renaming(n, chain, y1)
    spec, R = _canonical_setup(n, V, omega, rn)
    vc = rn.t(v)
    xs = list(_sequence(vc, "", n))
    # bubble-sort positions 2..n into 1, 2, …, n-1
    steps = []
    changed = True
    while changed:
        changed = False
        for p in range(2, n):
            if xs[p - 1] > xs[p]:
                xs[p - 1], xs[p] = xs[p], xs[p - 1]
                steps.append(("swapI_2", 2) if p == 2 else ("swapI_k", p))
                changed = True
    steps += [("upI_k", k) for k in range(1, n)]
    path = remove_cycles(_run(steps, vc, R, spec))
    target = tuple(bit(i) for i in range(1, n + 1))
    if path.end != target:
        raise ConductionError("first-kind endpoint path misses the critical vertex")
    if standard_partner(path.end, R) is not None or not spec.member(path.end):
        raise ConductionError("first-kind endpoint is not critical")
    gamma = path.reversed()
    check_path(gamma, R, spec)
    return _order_back(R, rn, V), _uncanon(gamma, rn)


# ---------------------------------------------------------------- second-kind endpoint lemma


def _three_chain(full_v: Sequence[Tup]) -> list[int]:
    singles = [t for t in full_v if all(popcount(b) == 1 for b in t)]
    if len(full_v) != 3 or len(singles) != 1:
        raise PreconditionError("Ω must hold the three full V-tuples of the second-kind endpoint shape")
    c = [b.bit_length() for b in singles[0]]
    if len(c) < 3:
        raise PreconditionError("the second-kind endpoint lemma needs |V| >= 3")
    b = [bit(x) for x in c]
    want = {
        tuple(b),
        (b[0] | b[1],) + tuple(b[2:]),
        (b[0], b[1] | b[2]) + tuple(b[3:]),
    }
    if set(full_v) != want:
        raise PreconditionError("full V-tuples are not of the second-kind endpoint shape")
    return c


def conduct_endpoint_minus(
    V: int, omega: Iterable, f: int, *, n: int
) -> tuple[OrderR, tuple[Tup, Tup], AltPath, Connector]:
    """Extra matched pair and a semi-augmenting path from the remaining critical vertex.

    The path runs from the critical vertex ``{c1,c2}|c3|…`` to an f-connector of
    the second kind; it alternates w.r.t. μ_R plus the returned pair.
    """
    omega = frozenset(omega)
    chain = _three_chain(SubgraphSpec(V, omega).full_v_tuples())
    return _endpoint_minus_n(V, omega, f, chain, n)


def _endpoint_minus_n(V: int, omega: frozenset, f: int, chain: list[int], n: int):
    _check_lemma_hypotheses(n, V)
    outside = [x for x in range(1, n + 1) if not V & bit(x)]
    if outside == [f]:
        raise PreconditionError("the second-kind endpoint lemma needs [n] minus V to differ from {f}")
    top = max(x for x in outside if x != f)
    rn = make_renaming(n, chain, top)
    spec, R = _canonical_setup(n, V, omega, rn)
    alpha1 = tuple(bit(i) for i in range(1, n + 1))
    alpha2 = (bit(1), bit(2) | bit(3)) + tuple(bit(i) for i in range(4, n + 1))
    extra = {alpha1: alpha2, alpha2: alpha1}
    fc = rn(f)
    seq = [n] + [i for i in range(1, n) if i != fc] + [fc]
    start = (bit(seq[0]) | bit(seq[1]),) + tuple(bit(x) for x in seq[2:])
    steps = []
    for k in range(n - 1, fc, -1):
        steps.append(("swapII_2", 2) if k == 2 else ("swapII_k", k))
    steps.append(("star", 0))
    path = remove_cycles(_run(steps, start, R, spec, extra))
    sigma = (bit(1) | bit(2),) + tuple(bit(i) for i in range(3, n + 1))
    if path.end != sigma:
        raise ConductionError("second-kind endpoint path misses the critical vertex")
    gamma = path.reversed()
    check_path(gamma, R, spec, extra)
    back = _uncanon(gamma, rn)
    conn = connector_of(back.end)
    if conn is None or conn.kind != "second" or conn.terminal != f:
        raise ConductionError("second-kind endpoint path does not end at an f-connector")
    return _order_back(R, rn, V), (rn.ti(alpha1), rn.ti(alpha2)), back, conn


# ---------------------------------------------------------------- standard paths


@dataclass(frozen=True)
class WellOrderedPair:
    S: int
    T: int
    order: tuple  # all of T, S first

    def __post_init__(self) -> None:
        if not self.S or self.S & ~self.T or self.S == self.T:
            raise PreconditionError("need nonempty S strictly inside T")
        s = popcount(self.S)
        if mask(self.order) != self.T or len(self.order) != popcount(self.T):
            raise PreconditionError("order must list T exactly once")
        if mask(self.order[:s]) != self.S:
            raise PreconditionError("order must list S before the rest of T")

    @classmethod
    def canonical(cls, S: int, T: int) -> "WellOrderedPair":
        return cls(S, T, tuple(elems(S) + elems(T & ~S)))


def b_vertex(S: int, n: int) -> Tup:
    rest = full_mask(n) & ~S
    return (S, rest) if rest else (S,)


def standard_pst(pair: WellOrderedPair, n: int) -> AltPath:
    """Edge path from b_T to b_S following the split/merge stages."""
    if pair.T == full_mask(n):
        raise PreconditionError("T must be a proper subset of [n]")
    xs = pair.order
    s, t = popcount(pair.S), popcount(pair.T)
    Y = full_mask(n) & ~pair.T
    b = [bit(x) for x in xs]
    verts: list[Tup] = []
    # split off x_1, …, x_s
    for i in range(s + 1):
        verts.append(tuple(b[:i]) + (mask(xs[i:t]), Y))
    # merge x_{s-1}, …, x_1 into the following block
    for j in range(s - 1, 0, -1):
        verts.append(tuple(b[: j - 1]) + (mask(xs[j - 1 : s]), mask(xs[s:t]), Y))
    # split off x_{s+1}, …, x_{t-1}
    for i in range(s + 1, t):
        verts.append((pair.S,) + tuple(b[s:i]) + (mask(xs[i:t]), Y))
    # merge x_t, …, x_{s+1} into Y
    for j in range(t, s, -1):
        verts.append((pair.S,) + tuple(b[s : j - 1]) + (mask(xs[j - 1 : t]) | Y,))
    colors = [_edge_color(a, c) for a, c in zip(verts, verts[1:])]
    if verts[0] != b_vertex(pair.T, n) or verts[-1] != b_vertex(pair.S, n):
        raise ConductionError("standard path endpoints are wrong")
    return AltPath(verts, colors, [False] * len(colors))


def ds(sigma: Sequence[int]) -> Tup:
    n = ground_size(sigma)
    big = [i for i, blk in enumerate(sigma) if popcount(blk) >= 2]
    if not big:
        return (full_mask(n),)
    out = []
    prev = -1
    for i in big:
        out.append(support(sigma[prev + 1 : i + 1]))
        prev = i
    if prev < len(sigma) - 1:
        out.append(support(sigma[prev + 1 :]))
    return tuple(out)


def nested(p: WellOrderedPair, q: WellOrderedPair) -> bool:
    def inside(a: int, b: int) -> bool:
        return a & ~b == 0 and a != b

    return (inside(p.S, q.S) and inside(q.T, p.T)) or (inside(q.S, p.S) and inside(p.T, q.T))


def disjoint_path_system(pairs: Sequence[WellOrderedPair], n: int) -> list[AltPath]:
    for i, p in enumerate(pairs):
        for q in pairs[i + 1 :]:
            if {p.S, p.T} & {q.S, q.T}:
                raise PreconditionError("well-ordered pairs are not disjoint")
            if nested(p, q):
                raise PreconditionError("well-ordered pairs are nested")
    paths = [standard_pst(p, n) for p in pairs]
    seen: dict = {}
    for i, g in enumerate(paths):
        for v in g.vertices:
            if v in seen and seen[v] != i:
                raise ConductionError(f"paths {seen[v]} and {i} meet at {encode_tuple(v)}")
            seen[v] = i
    return paths
