"""Flip graphs Γ_n^d, flips, and the induced subgraphs Γ_n(Ω, V).

A vertex of Γ_n^d is a tuple of ``d`` full [n]-tuples (rounds); a vertex of
Γ_n is passed either as a bare full tuple or as a 1-round vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .tuples import (
    PreconditionError,
    Tup,
    bit,
    check_tuple,
    decode_tuple,
    elems,
    encode_tuple,
    full_mask,
    full_tuples,
    support,
    v_prefix,
)

Vertex = tuple  # tuple of full tuples, one per round

ROUND_SEP = " ‖ "
FILE_ROUND_SEP = "||"


# ---------------------------------------------------------------- single round


def ground_size(sigma: Sequence[int]) -> int:
    return support(sigma).bit_length()


def flippable_full(sigma: Sequence[int], n: int | None = None) -> int:
    if n is None:
        n = ground_size(sigma)
    last = sigma[-1]
    if last & (last - 1) == 0:
        return full_mask(n) & ~last
    return full_mask(n)


def flip_full(sigma: Sequence[int], x: int) -> Tup:
    """Split ``x`` off its block, or merge the singleton ``{x}`` into the next block."""
    b = bit(x)
    for k, block in enumerate(sigma):
        if block & b:
            break
    else:
        raise PreconditionError(f"{x} not in the tuple")
    if block != b:
        return tuple(sigma[:k]) + (b, block & ~b) + tuple(sigma[k + 1 :])
    if k == len(sigma) - 1:
        raise PreconditionError(f"{x} is not flippable")
    return tuple(sigma[:k]) + (b | sigma[k + 1],) + tuple(sigma[k + 2 :])


# ---------------------------------------------------------------- d rounds


def as_vertex(v) -> Vertex:
    """Accept a bare full tuple or a tuple of rounds."""
    if v and isinstance(v[0], int):
        return (tuple(v),)
    return tuple(tuple(r) for r in v)


def flippable_set(v) -> int:
    v = as_vertex(v)
    n = ground_size(v[0])
    out = 0
    for r in v:
        out |= flippable_full(r, n)
    return out


def flip(v, x: int) -> Vertex:
    """Flip at the deepest round in which ``x`` is flippable."""
    v = as_vertex(v)
    n = ground_size(v[0])
    b = bit(x)
    for k in range(len(v) - 1, -1, -1):
        if flippable_full(v[k], n) & b:
            return v[:k] + (flip_full(v[k], x),) + v[k + 1 :]
    raise PreconditionError(f"{x} is not flippable at {encode_vertex(v)}")


def neighbors(v) -> list[tuple[int, Vertex]]:
    v = as_vertex(v)
    return [(x, flip(v, x)) for x in elems(flippable_set(v))]


def support_map(v, c: int) -> Vertex:
    v = as_vertex(v)
    if not 1 <= c < len(v):
        raise PreconditionError("support level out of range")
    return v[:c]


def encode_vertex(v, file_form: bool = False) -> str:
    sep = FILE_ROUND_SEP if file_form else ROUND_SEP
    return sep.join(encode_tuple(r) for r in as_vertex(v))


def decode_vertex(s: str, n: int | None = None) -> Vertex:
    s = s.replace(ROUND_SEP.strip(), FILE_ROUND_SEP)
    parts = [p for p in s.split(FILE_ROUND_SEP)]
    v = tuple(decode_tuple(p, n) for p in parts)
    n = ground_size(v[0])
    for r in v:
        if support(r) != full_mask(n):
            raise PreconditionError(f"round {encode_tuple(r)} is not a full [{n}]-tuple")
    return v


# ---------------------------------------------------------------- Γ_n(Ω, V)


@dataclass(frozen=True)
class SubgraphSpec:
    """Γ_n(Ω, V): vertices whose V-prefix is empty or lies in Ω.

    The empty prefix is always admitted, so ``Ω = ∅`` describes Γ_n(V) and
    ``V = 0`` describes all of Γ_n.
    """

    V: int
    omega: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for t in self.omega:
            check_tuple(t)
            if support(t) & ~self.V:
                raise PreconditionError(f"Ω member {encode_tuple(t)} leaves V")

    def member(self, sigma: Sequence[int]) -> bool:
        p = v_prefix(sigma, self.V)
        return not p or p in self.omega

    def full_v_tuples(self) -> list[Tup]:
        return sorted((t for t in self.omega if support(t) == self.V and t), key=encode_tuple)

    def encode(self) -> str:
        om = ",".join(sorted(encode_tuple(t).replace(",", "") for t in self.omega))
        return f"V={{{','.join(map(str, elems(self.V)))}}} Ω={{{om}}}"

    @classmethod
    def from_text(cls, V: Iterable[int], omega: Iterable[str] = ()) -> "SubgraphSpec":
        from .tuples import mask

        fam = frozenset(t for t in (decode_tuple(s) for s in omega) if t)
        return cls(mask(V), fam)


def member(sigma: Sequence[int], spec: SubgraphSpec) -> bool:
    return spec.member(sigma)


def enumerate_vertices(n: int, d: int = 1, spec: SubgraphSpec | None = None) -> Iterator[Vertex]:
    if n < 1 or d < 1:
        raise PreconditionError("n and d must be positive")
    if spec is not None and d != 1:
        raise PreconditionError("a subgraph spec applies to d = 1 only")
    base = full_tuples(n)
    if d == 1:
        for s in base:
            if spec is None or spec.member(s):
                yield (s,)
        return
    # for fixed n no encoding is a proper prefix of another, so the product
    # order coincides with the order of the joined encodings
    for combo in itertools.product(base, repeat=d):
        yield combo


# ---------------------------------------------------------------- indexed view


class FlipIndex:
    """Index-based view of Γ_n with numpy lookup tables.

    ``tups[i]`` is the i-th full tuple in canonical order; ``flip_tab[i, x-1]``
    is the index of ``flip(tups[i], x)`` or -1 when ``x`` is not flippable.
    """

    def __init__(self, n: int):
        self.n = n
        self.tups: tuple[Tup, ...] = full_tuples(n)
        self.N = len(self.tups)
        self.index: dict[Tup, int] = {t: i for i, t in enumerate(self.tups)}
        N, full = self.N, full_mask(n)
        self.flip_tab = np.full((N, n), -1, dtype=np.int32)
        self.last = np.zeros(N, dtype=np.int64)
        self.last_single = np.zeros(N, dtype=np.int8)  # id of a singleton last block, else 0
        self.nblocks = np.zeros(N, dtype=np.int8)
        # prefix_tab[i, x-1] = T_1 ∪ … ∪ T_k where x ∈ T_k
        self.prefix_tab = np.zeros((N, n), dtype=np.int64)
        for i, t in enumerate(self.tups):
            self.nblocks[i] = len(t)
            self.last[i] = t[-1]
            if t[-1] & (t[-1] - 1) == 0:
                self.last_single[i] = t[-1].bit_length()
            F = flippable_full(t, n)
            for x in range(1, n + 1):
                if F >> (x - 1) & 1:
                    self.flip_tab[i, x - 1] = self.index[flip_full(t, x)]
            acc = 0
            for b in t:
                acc |= b
                for x in elems(b):
                    self.prefix_tab[i, x - 1] = acc
        assert acc == full

    def enc(self, i: int) -> str:
        return encode_tuple(self.tups[i])

    @cached_property
    def enc_list(self) -> list[str]:
        return [encode_tuple(t) for t in self.tups]

    def flip2(self, i1: np.ndarray, i2: np.ndarray, x: np.ndarray):
        """Vectorized Γ_n^2 flip of (i1, i2) by colors ``x`` (1-based)."""
        x0 = x - 1
        round2 = self.last_single[i2] != x
        j2 = np.where(round2, self.flip_tab[i2, x0], i2)
        j1 = np.where(round2, i1, self.flip_tab[i1, x0])
        return j1, j2

    def prefix_ids(self, V: int) -> np.ndarray:
        """Per vertex, an integer key of its V-prefix (0 for the empty prefix)."""
        return _prefix_keys(self.n, V)


@lru_cache(maxsize=None)
def flip_index(n: int) -> FlipIndex:
    return FlipIndex(n)


@lru_cache(maxsize=256)
def _prefix_keys(n: int, V: int) -> np.ndarray:
    fi = flip_index(n)
    out = np.zeros(fi.N, dtype=np.int64)
    for i, t in enumerate(fi.tups):
        p = v_prefix(t, V)
        out[i] = tuple_key(p, n)
    return out


def tuple_key(t: Sequence[int], n: int) -> int:
    """Injective integer key for a tuple of nonempty masks over [n] (n <= 10)."""
    k = 0
    for b in t:
        k = (k << n) | b
    return k
