"""Ordered set partitions, coherent pairs and the restriction calculus.

Process ids are the integers ``1..n`` (``n <= 64``).  Sets of ids are carried
as int bitmasks with id ``i`` stored in bit ``i - 1``; a tuple of blocks is a
plain Python ``tuple`` of masks.  Everything here is an immutable value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

Tup = tuple  # tuple[int, ...] of nonempty, pairwise disjoint block masks

EMPTY_PREFIX = "ε"
MAX_IDS = 64


class PreconditionError(ValueError):
    """Raised when an operation is called outside its domain."""


# ---------------------------------------------------------------- bitmasks


def mask(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        if not 1 <= i <= MAX_IDS:
            raise PreconditionError(f"id {i} out of range 1..{MAX_IDS}")
        m |= 1 << (i - 1)
    return m


def elems(m: int) -> list[int]:
    """Ids in ``m`` in ascending order."""
    out = []
    i = 1
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return out


def full_mask(n: int) -> int:
    return (1 << n) - 1


def bit(x: int) -> int:
    return 1 << (x - 1)


def popcount(m: int) -> int:
    return bin(m).count("1")


def lowest(m: int) -> int:
    """Smallest id in a nonempty mask."""
    return (m & -m).bit_length()


# ---------------------------------------------------------------- encodings


def encode_set(m: int) -> str:
    return ",".join(str(i) for i in elems(m))


def encode_tuple(t: Sequence[int]) -> str:
    if not t:
        return EMPTY_PREFIX
    return "|".join(encode_set(b) for b in t)


def decode_set(s: str, n: int | None = None) -> int:
    """Comma-separated ids; the compact digit form "123" is read only when n <= 9.

    Without ``n`` a comma-less block is compact, so callers reading data for
    n >= 10 must pass ``n``.
    """
    s = s.strip()
    if not s:
        raise PreconditionError("empty block")
    if "," in s or len(s) == 1 or (n is not None and n >= 10):
        return mask(int(p) for p in s.split(","))
    return mask(int(c) for c in s)


def decode_tuple(s: str, n: int | None = None) -> Tup:
    s = s.strip()
    if s in (EMPTY_PREFIX, ""):
        return ()
    blocks = tuple(decode_set(b, n) for b in s.split("|"))
    check_tuple(blocks)
    return blocks


def check_tuple(t: Sequence[int]) -> None:
    seen = 0
    for b in t:
        if b <= 0:
            raise PreconditionError("blocks must be nonempty")
        if b & seen:
            raise PreconditionError("blocks must be pairwise disjoint")
        seen |= b


def support(t: Sequence[int]) -> int:
    m = 0
    for b in t:
        m |= b
    return m


def is_full(t: Sequence[int], n: int) -> bool:
    return support(t) == full_mask(n)


def V_of(sigma: Sequence[int], n: int) -> int:
    """V(σ) = [n] minus the last block."""
    return full_mask(n) & ~sigma[-1]


# ---------------------------------------------------------------- normalizer


@dataclass(frozen=True)
class Normalizer:
    """Order-preserving bijection from ``domain`` onto ``[k]``."""

    domain: int
    forward: tuple[tuple[int, int], ...]

    @property
    def k(self) -> int:
        return len(self.forward)

    def __call__(self, x: int) -> int:
        for src, j in self.forward:
            if src == x:
                return j
        raise PreconditionError(f"{x} outside the normalizer domain")

    def apply_mask(self, m: int) -> int:
        if m & ~self.domain:
            raise PreconditionError("set outside the normalizer domain")
        out = 0
        for src, j in self.forward:
            if m >> (src - 1) & 1:
                out |= 1 << (j - 1)
        return out

    def apply_tuple(self, t: Sequence[int]) -> Tup:
        return tuple(self.apply_mask(b) for b in t)

    def inverse_mask(self, m: int) -> int:
        out = 0
        for src, j in self.forward:
            if m >> (j - 1) & 1:
                out |= 1 << (src - 1)
        return out

    def inverse_tuple(self, t: Sequence[int]) -> Tup:
        return tuple(self.inverse_mask(b) for b in t)


@lru_cache(maxsize=None)
def normalizer(A: int) -> Normalizer:
    if A <= 0:
        raise PreconditionError("normalizer of the empty set")
    ids = elems(A)
    return Normalizer(A, tuple((x, i + 1) for i, x in enumerate(ids)))


# ---------------------------------------------------------------- coherent pairs


@dataclass(frozen=True)
class CoherentPair:
    top: Tup
    bottom: Tup

    def __post_init__(self) -> None:
        if len(self.top) != len(self.bottom):
            raise PreconditionError("top and bottom lengths differ")
        check_tuple(self.top)
        check_tuple(self.bottom)
        for a, b in zip(self.top, self.bottom):
            if b & ~a:
                raise PreconditionError("bottom block not inside top block")

    @property
    def carrier(self) -> int:
        return support(self.top)

    @property
    def color(self) -> int:
        return support(self.bottom)

    def encode(self) -> str:
        return f"{encode_tuple(self.top)}::{encode_tuple(self.bottom)}"

    @classmethod
    def decode(cls, s: str) -> "CoherentPair":
        top, bottom = s.split("::")
        return cls(decode_tuple(top), decode_tuple(bottom))

    @classmethod
    def of_full(cls, sigma: Sequence[int]) -> "CoherentPair":
        return cls(tuple(sigma), tuple(sigma))


def restrict_raw(top: Sequence[int], bottom: Sequence[int], T: int) -> tuple[Tup, Tup]:
    """Restriction of a coherent pair to a nonempty ``T`` inside its color.

    ``T`` equal to the whole color is allowed here and returns the pair itself.
    """
    new_top = []
    new_bottom = []
    acc = 0
    for a, b in zip(top, bottom):
        acc |= a
        hit = b & T
        if hit:
            new_top.append(acc)
            new_bottom.append(hit)
            acc = 0
    return tuple(new_top), tuple(new_bottom)


def restrict(cp: CoherentPair, T: int) -> CoherentPair:
    color = cp.color
    if T <= 0:
        raise PreconditionError("restriction to the empty set")
    if T & ~color:
        raise PreconditionError("restriction target not inside the color")
    if T == color:
        raise PreconditionError("restriction target equals the color")
    top, bottom = restrict_raw(cp.top, cp.bottom, T)
    return CoherentPair(top, bottom)


def delete(cp: CoherentPair, T: int) -> CoherentPair:
    """dl(cp, T) = cp restricted to color minus T."""
    if T <= 0 or T & ~cp.color:
        raise PreconditionError("deleted set must be a nonempty subset of the color")
    rest = cp.color & ~T
    if not rest:
        raise PreconditionError("deleting the whole color")
    return restrict(cp, rest)


# ---------------------------------------------------------------- prefixes


def v_prefix(sigma: Sequence[int], V: int) -> Tup:
    """Longest initial run of blocks contained in ``V``."""
    k = 0
    for b in sigma:
        if b & ~V:
            break
        k += 1
    return tuple(sigma[:k])


def truncations(t: Sequence[int]) -> list[Tup]:
    return [tuple(t[:i]) for i in range(len(t) + 1)]


# ---------------------------------------------------------------- enumeration


@lru_cache(maxsize=None)
def fubini(n: int) -> int:
    """Ordered Bell number via a(n) = sum_k C(n,k) a(n-k)."""
    if n == 0:
        return 1
    return sum(comb(n, k) * fubini(n - k) for k in range(1, n + 1))


def submasks(m: int) -> Iterator[int]:
    """Nonempty submasks of ``m`` (descending numeric order)."""
    s = m
    while s:
        yield s
        s = (s - 1) & m


def ordered_partitions(m: int) -> Iterator[Tup]:
    """All ordered set partitions of the ids in ``m`` (unsorted)."""
    if m == 0:
        yield ()
        return
    for first in submasks(m):
        for rest in ordered_partitions(m & ~first):
            yield (first,) + rest


@lru_cache(maxsize=16)
def full_tuples(n: int) -> tuple[Tup, ...]:
    """All full [n]-tuples, sorted by canonical encoding."""
    if n < 1:
        raise PreconditionError("n must be positive")
    return tuple(sorted(ordered_partitions(full_mask(n)), key=encode_tuple))
