"""Binomial Diophantine equations, suffix-set algebra and comparable matchings.

Subsets of [n] are int masks (id i in bit i-1).  Their support vectors are
bitstrings ``a_1 … a_n`` read left to right, so the last character is id n.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .tuples import PreconditionError, bit, elems, full_mask, popcount


class SearchBudgetExceeded(RuntimeError):
    """The primitive-solution search gave up; the answer is unknown."""


# ---------------------------------------------------------------- bitstrings


def to_bits(S: int, n: int) -> str:
    return "".join("1" if S >> i & 1 else "0" for i in range(n))


def from_bits(s: str) -> int:
    if set(s) - {"0", "1"}:
        raise PreconditionError(f"not a bitstring: {s!r}")
    return sum(1 << i for i, c in enumerate(s) if c == "1")


def repeat_truncated(alpha: str, n: int) -> str:
    """[α]^∞_{≤n}: the last n characters of …ααα (right-aligned)."""
    if not alpha:
        raise PreconditionError("empty repetition block")
    s = alpha * (n // len(alpha) + 1)
    return s[len(s) - n :] if n else ""


# ---------------------------------------------------------------- primitive solutions


@dataclass(frozen=True)
class PrimitiveSolution:
    n: int
    x: tuple

    def __post_init__(self) -> None:
        if len(self.x) != self.n - 1:
            raise PreconditionError("x has length n-1")
        if self.x[0] != 1 or self.x[1:2] not in ((), (0,), (1,)):
            raise PreconditionError("primitive solutions have x_1 = 1 and x_2 in {0,1}")
        if any(v not in (-1, 0, 1) for v in self.x):
            raise PreconditionError("entries must lie in {-1,0,1}")
        if sum(v * comb(self.n, i) for i, v in enumerate(self.x, start=1)) != 1:
            raise PreconditionError("x does not solve the binomial Diophantine equation")

    @property
    def I(self) -> tuple:
        return tuple(i for i, v in enumerate(self.x, start=1) if v == 1)

    @property
    def J(self) -> tuple:
        return tuple(i for i, v in enumerate(self.x, start=1) if v == -1)

    @property
    def tunnels(self) -> int:
        """|Λ_x|, the number of tunnels in the perfect-matching construction."""
        return sum(comb(self.n, j) for j in self.J)

    def encode(self) -> str:
        return ",".join(str(v) for v in self.x)

    @classmethod
    def decode(cls, s: str) -> "PrimitiveSolution":
        x = tuple(int(v) for v in s.strip().removeprefix("x=").split(","))
        return cls(len(x) + 1, x)


def prime_power(n: int) -> bool:
    if n < 2:
        return False
    p = next(d for d in range(2, n + 1) if n % d == 0)
    while n % p == 0:
        n //= p
    return n == 1


def canonical_6t(n: int) -> PrimitiveSolution:
    """x_1 = x_4 = … = x_{6t-2} = 1, x_3 = x_6 = … = x_{6t-3} = -1."""
    if n < 6 or n % 6:
        raise PreconditionError("the 6t pattern needs 6 | n")
    x = [0] * (n - 1)
    for i in range(1, n):
        if i % 3 == 1:
            x[i - 1] = 1
        elif i % 3 == 0:
            x[i - 1] = -1
    return PrimitiveSolution(n, tuple(x))


def primitive_solution_search(n: int, budget: int = 3**16) -> PrimitiveSolution | None:
    """Exact search; among all primitive solutions return the one with fewest tunnels.

    Ties break towards the lexicographically largest vector.  ``None`` means
    there is no primitive solution; an exhausted budget raises
    :class:`SearchBudgetExceeded`.
    """
    if n < 2:
        raise PreconditionError("n >= 2")
    if prime_power(n):
        return None
    if n == 2:
        return None
    free = list(range(3, n))  # indices with values in {-1,0,1}
    h = len(free) // 2
    left_idx, right_idx = free[:h], free[h:]
    if 2 * 3 ** len(left_idx) + 3 ** len(right_idx) > budget:
        raise SearchBudgetExceeded(f"search space for n={n} exceeds the budget")

    def cost(idx, vals) -> int:
        return sum(comb(n, i) for i, v in zip(idx, vals) if v == -1)

    def value(idx, vals) -> int:
        return sum(v * comb(n, i) for i, v in zip(idx, vals))

    # best right half for each sum: fewest tunnels, then lexicographically largest
    best_right: dict[int, tuple] = {}
    for vals in itertools.product((1, 0, -1), repeat=len(right_idx)):
        key = value(right_idx, vals)
        cand = (cost(right_idx, vals), tuple(-v for v in vals))
        if key not in best_right or cand < best_right[key]:
            best_right[key] = cand
    best = None
    for x2 in (1, 0):
        for vals in itertools.product((1, 0, -1), repeat=len(left_idx)):
            need = 1 - n - x2 * comb(n, 2) - value(left_idx, vals)
            r = best_right.get(need)
            if r is None:
                continue
            x = (1, x2) + vals + tuple(-v for v in r[1])
            key = (cost(left_idx, vals) + r[0], tuple(-v for v in x))
            if best is None or key < best[0]:
                best = (key, x)
    return None if best is None else PrimitiveSolution(n, best[1])


def all_primitive_solutions(n: int, budget: int = 3**16) -> list[PrimitiveSolution]:
    """Every primitive solution, ordered by tunnel count then lexicographically descending."""
    if n < 3 or prime_power(n):
        return []
    free = list(range(3, n))
    h = len(free) // 2
    left_idx, right_idx = free[:h], free[h:]
    if 2 * 3 ** len(left_idx) + 3 ** len(right_idx) > budget:
        raise SearchBudgetExceeded(f"search space for n={n} exceeds the budget")
    by_sum: dict[int, list] = {}
    for vals in itertools.product((1, 0, -1), repeat=len(right_idx)):
        by_sum.setdefault(sum(v * comb(n, i) for i, v in zip(right_idx, vals)), []).append(vals)
    out = []
    for x2 in (1, 0):
        for vals in itertools.product((1, 0, -1), repeat=len(left_idx)):
            need = 1 - n - x2 * comb(n, 2) - sum(v * comb(n, i) for i, v in zip(left_idx, vals))
            for r in by_sum.get(need, ()):
                out.append(PrimitiveSolution(n, (1, x2) + vals + r))
    out.sort(key=lambda s: (s.tunnels, tuple(-v for v in s.x)))
    return out


def identity_sides(n: int, left: Iterable[int], right: Iterable[int]) -> tuple[int, int]:
    return sum(comb(n, a) for a in left), sum(comb(n, b) for b in right)


def identity_507() -> tuple[int, int]:
    lhs, rhs = identity_sides(12, (1, 4), (0, 3, 9, 10))
    assert lhs == rhs == 507
    return lhs, rhs


def identity_6476() -> tuple[int, int]:
    lhs, rhs = identity_sides(15, (1, 3, 5, 10), (0, 4, 6, 13))
    assert lhs == rhs == 6476
    return lhs, rhs


def identity_6t(t: int) -> tuple[int, int]:
    """Both sides of the mod-3 identity for n = 6t."""
    n = 6 * t
    return identity_sides(n, range(0, n - 2, 3), range(1, n - 1, 3))


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class CardinalFamilyPair:
    n: int
    I: tuple
    J: tuple

    def __post_init__(self) -> None:
        if set(self.I) & set(self.J):
            raise PreconditionError("cardinality sets must be disjoint")
        if any(not 1 <= k <= self.n - 1 for k in self.I + self.J):
            raise PreconditionError("proper families use sizes 1..n-1")

    @property
    def sigma(self) -> list[int]:
        return cardinal_family(self.n, self.I)

    @property
    def lam(self) -> list[int]:
        return cardinal_family(self.n, self.J)

    @property
    def sigma_minus_n(self) -> list[int]:
        top = bit(self.n)
        return [S for S in self.sigma if S != top]

    @classmethod
    def of(cls, x: PrimitiveSolution) -> "CardinalFamilyPair":
        fam = cls(x.n, x.I, x.J)
        if len(fam.sigma) != len(fam.lam) + 1:
            raise PreconditionError("|Σ_x| must equal |Λ_x| + 1")
        return fam


def cardinal_family(n: int, sizes: Iterable[int]) -> list[int]:
    out = []
    for k in sorted(sizes):
        for c in itertools.combinations(range(n), k):
            out.append(sum(1 << i for i in c))
    return out


def families(x: PrimitiveSolution) -> CardinalFamilyPair:
    return CardinalFamilyPair.of(x)


# ---------------------------------------------------------------- suffix patterns

_TOKEN = re.compile(r"\[([01]+)\](\*|\^(\d+))|([01])")


@dataclass(frozen=True)
class SuffixPattern:
    """Token sequence over literals, fixed repetitions and starred blocks.

    ``exact`` patterns describe single strings of length n; the others describe
    all strings ending in the pattern.
    """

    tokens: tuple  # ("lit", "0") | ("rep", block, k) | ("star", block)
    exact: bool = False
    text: str = ""

    @classmethod
    def parse(cls, text: str, exact: bool = False) -> "SuffixPattern":
        body = text.strip()
        if body in ("", "ε"):
            return cls((), exact, text)
        toks = []
        pos = 0
        for m in _TOKEN.finditer(body):
            if m.start() != pos:
                raise PreconditionError(f"malformed pattern {text!r}")
            pos = m.end()
            if m.group(4) is not None:
                toks.append(("lit", m.group(4)))
            elif m.group(2) == "*":
                toks.append(("star", m.group(1)))
            else:
                toks.append(("rep", m.group(1), int(m.group(3))))
        if pos != len(body):
            raise PreconditionError(f"malformed pattern {text!r}")
        return cls(tuple(toks), exact, text)

    def match(self, s: str) -> list | None:
        """Per-token spans ``(start, end)`` of a right-to-left match, or None.

        Stars try the maximal number of whole repetitions first and back off
        only when the rest of the pattern cannot match.
        """

        def go(ti: int, end: int) -> list | None:
            if ti < 0:
                if self.exact and end != 0:
                    return None
                return []
            tok = self.tokens[ti]
            if tok[0] == "lit":
                c = tok[1]
                if end >= 1 and s[end - 1] == c:
                    rest = go(ti - 1, end - 1)
                    return None if rest is None else rest + [(end - 1, end)]
                return None
            block = tok[1]
            L = len(block)
            if tok[0] == "rep":
                k = tok[2]
                start = end - k * L
                if start < 0 or s[start:end] != block * k:
                    return None
                rest = go(ti - 1, start)
                return None if rest is None else rest + [(start, end)]
            kmax = 0
            while end - (kmax + 1) * L >= 0 and s[end - (kmax + 1) * L : end - kmax * L] == block:
                kmax += 1
            for k in range(kmax, -1, -1):
                rest = go(ti - 1, end - k * L)
                if rest is not None:
                    return rest + [(end - k * L, end)]
            return None

        return go(len(self.tokens) - 1, len(s))


def suffix_member(S: str, p: SuffixPattern | str) -> bool:
    if isinstance(p, str):
        p = SuffixPattern.parse(p)
    return p.match(S) is not None


def suffix_set(n: int, p: SuffixPattern | str) -> list[str]:
    if isinstance(p, str):
        p = SuffixPattern.parse(p)
    return [s for s in (to_bits(S, n) for S in range(1 << n)) if p.match(s) is not None]


# ---------------------------------------------------------------- decompositions

SCHEMES = ("lm_alpha", "exp_even", "exp_odd", "c001_even", "c001_odd", "p110_even", "p110_odd")


def scheme_branches(n: int, scheme: str, alpha: str | None = None) -> list[tuple[str, SuffixPattern]]:
    """Named branches of a decomposition, each as a suffix or exact pattern."""
    sp, ex = SuffixPattern.parse, lambda t: SuffixPattern.parse(t, exact=True)
    even = n % 2 == 0
    p = n // 2
    if scheme == "lm_alpha":
        if not alpha or set(alpha) - {"0", "1"} or len(alpha) > n:
            raise PreconditionError("lm_alpha needs a 0/1 tuple of length <= n")
        out = [("exact", ex(repeat_truncated(alpha, n)))]
        for i in range(len(alpha)):
            neg = "1" if alpha[i] == "0" else "0"
            text = neg + alpha[i + 1 :] + f"[{alpha}]*"
            out.append((f"<{text}>", sp(text)))
        return out
    if scheme.endswith("_even") and not even or scheme.endswith("_odd") and even:
        raise PreconditionError(f"scheme {scheme} does not fit the parity of n={n}")
    if scheme == "exp_even":
        return [("<0[01]*>", sp("0[01]*")), ("<11[01]*>", sp("11[01]*")), ("[01]^p", ex("01" * p))]
    if scheme == "exp_odd":
        return [("<0[01]*>", sp("0[01]*")), ("<11[01]*>", sp("11[01]*")), ("1[01]^p", ex("1" + "01" * p))]
    if scheme.startswith("c001"):
        if p < 2:
            raise PreconditionError("the 001 decomposition needs p >= 2")
        out = [
            ("<10[01]*>", sp("10[01]*")),
            ("<1[10]*00[01]*>", sp("1[10]*00[01]*")),
            ("<00[10]*00[01]*>", sp("00[10]*00[01]*")),
        ]
        head = "" if even else "0"
        if not even:
            out.append(("0[01]^p", ex("0" + "01" * p)))
        for k in range(p):
            out.append((f"{head}[10]^{k}00[01]^{p - k - 1}", ex(head + "10" * k + "00" + "01" * (p - k - 1))))
        return out
    if scheme.startswith("p110"):
        if even and p < 3 or not even and p < 2:
            raise PreconditionError("the 110 decomposition needs p >= 3 (even) or p >= 2 (odd)")
        out = [
            ("<11[01]*>", sp("11[01]*")),
            ("<1[10]*10[01]*>", sp("1[10]*10[01]*")),
            ("<00[10]*01[01]*>", sp("00[10]*01[01]*")),
        ]
        head = "" if even else "0"
        if not even:
            out.append(("1[01]^p", ex("1" + "01" * p)))
        for k in range(p):
            out.append((f"{head}[10]^{k}[01]^{p - k}", ex(head + "10" * k + "01" * (p - k))))
        return out
    raise PreconditionError(f"unknown scheme {scheme}")


_SCOPE = {"c001": "0[01]*", "p110": "1[10]*"}


def classify(S: str, scheme: str, alpha: str | None = None) -> str:
    """The unique branch of ``scheme`` holding ``S``; ``outside`` if S is off its scope."""
    n = len(S)
    branches = scheme_branches(n, scheme, alpha)
    scope = _SCOPE.get(scheme.split("_")[0])
    if scope and not suffix_member(S, scope):
        return "outside"
    hits = [name for name, pat in branches if pat.match(S) is not None]
    if len(hits) != 1:
        raise AssertionError(f"{S} lies in {len(hits)} branches of {scheme}")
    return hits[0]


# ---------------------------------------------------------------- Φ, Ψ, Λ


def _phi_scan(s: str) -> tuple[str, int]:
    """Branch and 1-based position flipped by Φ on a string of ⟨0[01]*⟩."""
    n = len(s)
    a = " " + s  # 1-based
    K = 0
    while n - 2 * K - 1 >= 1 and a[n - 2 * K - 1 : n - 2 * K + 1] == "01":
        K += 1
    j = n - 2 * K
    if j < 1 or a[j] != "0":
        raise PreconditionError(f"{s} is not in <0[01]*>")
    if j == 1:
        return "0[01]^p", 1
    if a[j - 1] == "1":
        return "<10[01]*>", j
    i = j - 2
    while i >= 2 and a[i - 1 : i + 1] == "10":
        i -= 2
    if i == 0:
        return "[10]^k00[01]^*", j
    if a[i] == "1":
        return "<1[10]*00[01]*>", j - 1
    if i == 1:
        return "0[10]^k00[01]^*", j
    return "<00[10]*00[01]*>", j


def phi_branch(n: int, S: int) -> tuple[str, int]:
    if n < 5:
        raise PreconditionError("Φ is defined for n >= 5")
    return _phi_scan(to_bits(S, n))


def phi(n: int, t: int, S: int) -> int:
    """Φ_t^n: C_t⟨0[01]*⟩ -> C_{t+1}⟨1[10]*⟩ with S ⊂ Φ(S)."""
    if popcount(S) != t or S >> n:
        raise PreconditionError("S must be a t-subset of [n]")
    _, pos = phi_branch(n, S)
    return S | bit(pos)


def phi_inverse(n: int, t: int, T: int) -> int:
    """(Φ_{t-1}^n)^{-1} on C_t⟨1[10]*⟩."""
    if popcount(T) != t or not suffix_member(to_bits(T, n), "1[10]*"):
        raise PreconditionError("T must be a t-subset in <1[10]*>")
    hits = []
    for x in elems(T):
        S = T & ~bit(x)
        if suffix_member(to_bits(S, n), "0[01]*") and phi(n, t - 1, S) == T:
            hits.append(S)
    if len(hits) != 1:
        raise AssertionError(f"Φ^{n} is not bijective at {to_bits(T, n)}")
    return hits[0]


def psi(n: int, t: int, S: int) -> int:
    """Ψ_t^n = ρ ∘ (Φ_{t-2}^{n-1})^{-1} ∘ γ on C_t⟨11[01]*⟩."""
    if not 2 <= t <= n:
        raise PreconditionError("Ψ needs 2 <= t <= n")
    s = to_bits(S, n)
    if popcount(S) != t or not suffix_member(s, "11[01]*"):
        raise PreconditionError(f"{s} is not a t-subset in <11[01]*>")
    g = S & ~bit(n)  # γ drops the last character (which is 1)
    u = phi_inverse(n - 1, t - 1, g)
    return u  # ρ appends a 0, which leaves the mask unchanged


def psi_steps(n: int, t: int, S: int) -> tuple[str, str, str, str]:
    """The three-column trace S -> γ(S) -> Φ^{-1}γ(S) -> Ψ(S) as bitstrings."""
    g = S & ~bit(n)
    u = phi_inverse(n - 1, t - 1, g)
    return to_bits(S, n), to_bits(g, n - 1), to_bits(u, n - 1), to_bits(u, n)


def lambda_bij(t: int, S: int) -> int:
    """Λ on M_0^{6t} minus [01]^{3t}, onto M_1^{6t}."""
    n = 6 * t
    s = to_bits(S, n)
    if popcount(S) % 3:
        raise PreconditionError("|S| must be divisible by 3")
    if s == "01" * (3 * t):
        raise PreconditionError("Λ is undefined at [01]^{3t}")
    if suffix_member(s, "0[01]*"):
        return phi(n, popcount(S), S)
    return psi(n, popcount(S), S)


def lambda_table(t: int) -> dict[int, int]:
    n = 6 * t
    skip = from_bits("01" * (3 * t))
    return {S: lambda_bij(t, S) for S in range(1 << n) if popcount(S) % 3 == 0 and S != skip}


@dataclass(frozen=True)
class FinalFix:
    vertices: tuple  # six bitstrings
    matching_edges: tuple  # the two Λ-edges inside the path
    broken: tuple
    added: tuple


def final_fix(t: int) -> FinalFix:
    if t < 1:
        raise PreconditionError("t >= 1")
    base = "01" * (3 * t)
    v = (
        base,
        "01" * (3 * t - 1) + "11",
        "01" * (3 * t - 1) + "10",
        "01" * (3 * t - 2) + "1110",
        "01" * (3 * t - 2) + "1100",
        "1" * (6 * t - 2) + "00",
    )
    for a, b in zip(v, v[1:]):
        A, B = from_bits(a), from_bits(b)
        if A & B not in (A, B):
            raise AssertionError("final-fix path leaves the containment graph")
    broken = ((v[2], v[1]), (v[4], v[3]))
    added = ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
    return FinalFix(v, broken, broken, added)


def comparable_matching_6t(t: int) -> "ComparableMatching":
    """Λ restricted to proper sets, repaired by the final fix: Σ_x∖{{n}} -> Λ_x."""
    n = 6 * t
    full = full_mask(n)
    pairs: dict[int, int] = {}
    for S, T in lambda_table(t).items():
        if S in (0, full):
            continue
        pairs[T] = S  # Σ side has sizes 1 mod 3
    fx = final_fix(t)
    for m0, m1 in fx.broken:
        del pairs[from_bits(m1)]
    for m0, m1 in fx.added:
        pairs[from_bits(m1)] = from_bits(m0)
    return ComparableMatching(n, pairs)


# ---------------------------------------------------------------- comparable matchings


def _comparable(a: int, b: int) -> bool:
    return a != b and (a & b) in (a, b)


@dataclass
class ComparableMatching:
    """Bijection Σ -> Λ with every pair ⊆-comparable."""

    n: int
    pairs: dict  # Σ mask -> Λ mask

    def validate(self, sigma: Iterable[int] | None = None, lam: Iterable[int] | None = None) -> list[str]:
        probs = []
        if len(set(self.pairs.values())) != len(self.pairs):
            probs.append("not injective")
        for S, T in self.pairs.items():
            if not _comparable(S, T):
                probs.append(f"{to_bits(S, self.n)} and {to_bits(T, self.n)} are incomparable")
        if sigma is not None and set(self.pairs) != set(sigma):
            probs.append("domain differs from Σ")
        if lam is not None and set(self.pairs.values()) != set(lam):
            probs.append("image differs from Λ")
        return probs

    def intervals(self) -> tuple[np.ndarray, np.ndarray]:
        keys = sorted(self.pairs)
        lo = np.array([min(S, self.pairs[S], key=popcount) for S in keys], dtype=np.int64)
        hi = np.array([max(S, self.pairs[S], key=popcount) for S in keys], dtype=np.int64)
        return lo, hi

    def distances(self) -> list[int]:
        return sorted(abs(popcount(S) - popcount(T)) for S, T in self.pairs.items())

    def dist(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for d in self.distances():
            out[d] = out.get(d, 0) + 1
        return out

    def well_ordered_pairs(self):
        from .conductivity import WellOrderedPair

        out = []
        for S in sorted(self.pairs):
            T = self.pairs[S]
            lo, hi = (S, T) if popcount(S) < popcount(T) else (T, S)
            out.append(WellOrderedPair.canonical(lo, hi))
        return out

    def nested_pairs(self, limit: int | None = None) -> list[tuple[int, int]]:
        keys = sorted(self.pairs)
        lo, hi = self.intervals()
        out = []
        for i in range(len(keys)):
            hit = _nested_into(lo, hi, i)
            for j in np.nonzero(hit)[0]:
                out.append((keys[i], keys[int(j)]))
                if limit and len(out) >= limit:
                    return out
        return out

    def is_non_nested(self) -> bool:
        return not self.nested_pairs(limit=1)

    def lines(self) -> list[str]:
        return [f"{to_bits(S, self.n)}\t{to_bits(T, self.n)}" for S, T in sorted(self.pairs.items(), key=lambda p: to_bits(p[0], self.n))]


def _nested_into(lo: np.ndarray, hi: np.ndarray, i: int) -> np.ndarray:
    """Pairs j whose interval lies inside interval i (lo_i ⊆ lo_j, hi_j ⊆ hi_i)."""
    hit = ((lo[i] & ~lo) == 0) & ((hi & ~hi[i]) == 0)
    hit[i] = False
    return hit


def dist_lex_less(a: dict, b: dict) -> bool:
    """a ≺ b in distance-lexicographic order."""
    ds = sorted(set(a) | set(b), reverse=True)
    for d in ds:
        if a.get(d, 0) != b.get(d, 0):
            return a.get(d, 0) < b.get(d, 0)
    return False


def comparable_matching_search(sigma: Sequence[int], lam: Sequence[int], n: int) -> ComparableMatching | None:
    """Maximum matching in the ⊆-comparability graph; returns it iff perfect."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    if len(sigma) != len(lam):
        raise PreconditionError("families differ in size")
    if set(sigma) & set(lam):
        raise PreconditionError("families are not disjoint")
    col = {T: j for j, T in enumerate(lam)}
    lam_sizes = sorted({popcount(T) for T in lam})
    adj = []
    for S in sigma:
        k = popcount(S)
        row = []
        for b in lam_sizes:
            if b > k:
                rest = elems(full_mask(n) & ~S)
                for c in itertools.combinations(rest, b - k):
                    j = col.get(S | sum(bit(x) for x in c))
                    if j is not None:
                        row.append(j)
            elif b < k:
                for c in itertools.combinations(elems(S), b):
                    j = col.get(sum(bit(x) for x in c))
                    if j is not None:
                        row.append(j)
        adj.append(sorted(row))
    # degree-ascending pivot order, ties by mask
    order = sorted(range(len(sigma)), key=lambda i: (len(adj[i]), sigma[i]))
    indptr = [0]
    indices: list[int] = []
    for i in order:
        indices.extend(adj[i])
        indptr.append(len(indices))
    m = csr_matrix(
        (np.ones(len(indices), dtype=np.int8), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(sigma), len(lam)),
    )
    match = maximum_bipartite_matching(m, perm_type="column")
    if (match < 0).any():
        return None
    return ComparableMatching(n, {sigma[order[r]]: lam[int(c)] for r, c in enumerate(match)})


@dataclass
class RepairLog:
    swaps: int = 0
    dist_trace: list = field(default_factory=list)


def make_non_nested(phi_: ComparableMatching, log: RepairLog | None = None) -> ComparableMatching:
    """Swap partners of nested pairs until none remain.

    Each swap replaces the outer pair's distance by two strictly smaller ones,
    so ``dist`` strictly decreases in distance-lexicographic order.
    """
    pairs = dict(phi_.pairs)
    keys = sorted(pairs)
    pos = {S: i for i, S in enumerate(keys)}
    lo = np.array([min(S, pairs[S], key=popcount) for S in keys], dtype=np.int64)
    hi = np.array([max(S, pairs[S], key=popcount) for S in keys], dtype=np.int64)
    cur = ComparableMatching(phi_.n, pairs)
    prev = cur.dist()
    if log is not None:
        log.dist_trace.append(prev)
    i = 0
    while i < len(keys):
        hit = _nested_into(lo, hi, i)
        js = np.nonzero(hit)[0]
        if not len(js):
            i += 1
            continue
        j = int(js[0])
        S, T = keys[i], keys[j]
        pairs[S], pairs[T] = pairs[T], pairs[S]
        for k in (i, j):
            a, b = keys[k], pairs[keys[k]]
            if not _comparable(a, b):
                raise AssertionError("swap broke comparability")
            lo[k], hi[k] = (a, b) if popcount(a) < popcount(b) else (b, a)
        new = ComparableMatching(phi_.n, pairs).dist() if log is not None else None
        if log is not None:
            if not dist_lex_less(new, prev):
                raise AssertionError("swap did not decrease the distance multiset")
            log.swaps += 1
            log.dist_trace.append(new)
            prev = new
        i = min(i, j)  # re-examine from the earlier touched pair
    del pos
    return ComparableMatching(phi_.n, pairs)


def comparable_matching_for(x: PrimitiveSolution) -> ComparableMatching:
    """Λ-based construction for the 6t pattern, bipartite search otherwise."""
    fam = families(x)
    if x.n % 6 == 0 and x == canonical_6t(x.n):
        cm = comparable_matching_6t(x.n // 6)
    else:
        cm = comparable_matching_search(fam.sigma_minus_n, fam.lam, x.n)
        if cm is None:
            raise PreconditionError(f"no comparable matching for x={x.encode()}")
    probs = cm.validate(fam.sigma_minus_n, fam.lam)
    if probs:
        raise AssertionError(probs[0])
    return cm


# ---------------------------------------------------------------- t = 1 tables


def t1_tables() -> dict[str, list[str]]:
    """The n = 6 tables: Φ on the 14-element sets, the Ψ trace and the final fix."""
    n = 6
    phi_rows = []
    for S in range(1 << n):
        s = to_bits(S, n)
        if popcount(S) == 3 and suffix_member(s, "0[01]*"):
            branch, _ = phi_branch(n, S)
            phi_rows.append((branch, s, to_bits(phi(n, 3, S), n)))
    left = [f"{s}\t{t}" for b, s, t in phi_rows if b == "<10[01]*>"]
    right = [f"{s}\t{t}" for b, s, t in phi_rows if b != "<10[01]*>"]
    psi_rows = []
    for S in range(1 << n):
        s = to_bits(S, n)
        if popcount(S) == 3 and suffix_member(s, "11[01]*"):
            psi_rows.append("\t".join(psi_steps(n, 3, S)))
    fx = final_fix(1)
    fix = [f"break\t{a}\t{b}" for a, b in fx.broken] + [f"add\t{a}\t{b}" for a, b in fx.added]
    extremes = [
        f"phi0\t{to_bits(0, n)}\t{to_bits(phi(n, 0, 0), n)}",
        f"psi6\t{to_bits(full_mask(n), n)}\t{to_bits(psi(n, 6, full_mask(n)), n)}",
    ]
    return {
        "phi_10": sorted(left),
        "phi_1_10_00": sorted(right),
        "psi_3": sorted(psi_rows),
        "final_fix": fix,
        "extremes": extremes,
    }
