"""Perfect matchings on M_λ, the third-level labeling ρ, and their verification.

Level-2 vertices are pairs ``(σ, τ)`` of full tuples.  The matching μ is kept
as one order R per fiber (standard matching μ_R on M_λ(σ)) plus explicit
overrides for every vertex touched by an augmenting path or an extra pair.
For n <= 6 a dense numpy copy indexes all of Γ_n^2.
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .conductivity import (
    ConductionError,
    Connector,
    WellOrderedPair,
    b_vertex,
    conduct_endpoint_minus,
    conduct_endpoint_plus,
    conduct_tunnel_step,
    disjoint_path_system,
    standard_pst,
)
from .diophantine import (
    ComparableMatching,
    PrimitiveSolution,
    RepairLog,
    canonical_6t,
    comparable_matching_for,
    families,
    make_non_nested,
    prime_power,
    primitive_solution_search,
    to_bits,
)
from .flipgraph import (
    SubgraphSpec,
    encode_vertex,
    flip,
    flip_full,
    flip_index,
    flippable_set,
    tuple_key,
)
from .matching import (
    AltPath,
    MatchingReport,
    OrderR,
    is_self_intersecting,
    predicted_critical,
    remove_cycles,
    standard_partner,
    validate_path,
)
from .patterns import Node, PatternSet, adjacent_node, lambda_B, m_lambda_fiber, parent
from .tuples import (
    PreconditionError,
    Tup,
    bit,
    decode_tuple,
    elems,
    encode_tuple,
    full_mask,
    normalizer,
    popcount,
    restrict_raw,
    support,
)

log = logging.getLogger(__name__)

DENSE_MAX_N = 6


class UnsupportedN(PreconditionError):
    """No primitive solution exists (or none is reachable) for this n."""


class ArtifactIntegrityError(RuntimeError):
    """A monochromatic vertex is unmatched or the artifact is inconsistent."""


def unsupported_message(n: int) -> str:
    if prime_power(n):
        return f"n={n} is unsupported: n is a prime power, so the binomial equation has no integer solution at all"
    return f"n={n} is unsupported: the binomial equation is solvable but has no primitive solution with entries in {{-1,0,1}}"


# ---------------------------------------------------------------- fiber data


def fiber_V(sigma: Sequence[int], n: int) -> int:
    return full_mask(n) & ~sigma[-1]


class FiberCache:
    """Memoized Ω(B, σ) subgraph specs."""

    def __init__(self, B: PatternSet):
        self.B = B
        self._spec: dict = {}

    def spec(self, sigma: Tup) -> SubgraphSpec:
        s = self._spec.get(sigma)
        if s is None:
            s = m_lambda_fiber(sigma, self.B)
            self._spec[sigma] = s
        return s


# ---------------------------------------------------------------- lazy matching on M_λ


class LambdaMatching:
    """μ on M_λ: per-fiber standard matchings plus explicit overrides."""

    def __init__(self, n: int, B: PatternSet):
        self.n = n
        self.B = B
        self.fibers = FiberCache(B)
        self.orders: dict[Tup, OrderR] = {}
        self.overrides: dict[tuple, tuple] = {}  # vertex -> (partner, color)
        self._touched: set = set()  # fibers holding overrides

    def member(self, v) -> bool:
        sigma, tau = v
        return self.fibers.spec(sigma).member(tau)

    def order(self, sigma: Tup) -> OrderR:
        R = self.orders.get(sigma)
        if R is None:
            R = OrderR.ascending(self.n, fiber_V(sigma, self.n))
        return R

    def set_order(self, sigma: Tup, R: OrderR) -> None:
        if sigma in self.orders and self.orders[sigma] != R:
            raise ConductionError(f"fiber {encode_tuple(sigma)} already carries another order")
        if sigma in self._touched:
            raise ConductionError(f"fiber {encode_tuple(sigma)} already has overrides")
        R.check(self.n)
        self.orders[sigma] = R

    def partner_color(self, v) -> tuple | None:
        v = (tuple(v[0]), tuple(v[1]))
        e = self.overrides.get(v)
        if e is not None:
            return e
        if not self.member(v):
            return None
        sigma, tau = v
        p = standard_partner(tau, self.order(sigma))
        if p is None:
            return None
        w = (sigma, p[0])
        if w in self.overrides:
            return None
        return w, p[1]

    def partner(self, v):
        e = self.partner_color(v)
        return None if e is None else e[0]

    def color(self, v) -> int | None:
        e = self.partner_color(v)
        return None if e is None else e[1]

    def fiber_critical(self, sigma: Tup) -> list[tuple]:
        """Critical vertices of the fiber, via the critical-set characterization and the overrides."""
        spec = self.fibers.spec(sigma)
        out = []
        for tau in predicted_critical(spec, self.order(sigma), self.n):
            v = (sigma, tau)
            if v not in self.overrides:
                out.append(v)
        return out

    def add_pair(self, a, b) -> None:
        if self.partner(a) is not None or self.partner(b) is not None:
            raise ConductionError("extra pair touches a matched vertex")
        self._set(a, b, _edge_color2(a, b))

    def apply(self, gamma: AltPath) -> None:
        """D(μ, γ) for an augmenting path γ."""
        probs = validate_path(gamma, self.partner, self.member)
        if probs:
            raise ConductionError("augmenting path invalid: " + "; ".join(probs[:3]))
        if is_self_intersecting(gamma):
            raise ConductionError("augmenting path is self-intersecting")
        if not gamma.flags or gamma.flags[0] or gamma.flags[-1]:
            raise ConductionError("augmenting path must start and end with non-matching edges")
        for end in (gamma.start, gamma.end):
            if self.partner(end) is not None:
                raise ConductionError(f"endpoint {encode_vertex(end)} is not critical")
        vs = gamma.vertices
        for a, b, c, f in zip(vs, vs[1:], gamma.colors, gamma.flags):
            if not f:
                self._set(a, b, c)

    def _set(self, a, b, c: int) -> None:
        self.overrides[a] = (b, c)
        self.overrides[b] = (a, c)
        self._touched.add(a[0])
        self._touched.add(b[0])

    # compact serialization
    def to_json(self) -> dict:
        orders = {encode_tuple(s): list(R.seq) for s, R in sorted(self.orders.items(), key=lambda e: encode_tuple(e[0]))}
        pairs = []
        for v, (w, c) in self.overrides.items():
            a, b = encode_vertex(v, file_form=True), encode_vertex(w, file_form=True)
            if a < b:
                pairs.append([a, b, c])
        pairs.sort()
        return {"orders": orders, "overrides": pairs}

    @classmethod
    def from_json(cls, n: int, B: PatternSet, data: dict) -> "LambdaMatching":
        from .flipgraph import decode_vertex

        mu = cls(n, B)
        for s, seq in data["orders"].items():
            sigma = decode_tuple(s, n)
            mu.orders[sigma] = OrderR(tuple(seq), fiber_V(sigma, n))
        for a, b, c in data["overrides"]:
            mu._set(decode_vertex(a, n), decode_vertex(b, n), int(c))
        return mu


def _edge_color2(a, b) -> int:
    for x in elems(flippable_set(a)):
        if flip(a, x) == tuple(b):
            return x
    raise ConductionError(f"{encode_vertex(a)} and {encode_vertex(b)} are not adjacent")


def _lift(gamma: AltPath, sigma: Tup) -> AltPath:
    return AltPath([(sigma, tuple(t)) for t in gamma.vertices], list(gamma.colors), list(gamma.flags))


# ---------------------------------------------------------------- tunnels


@dataclass
class TunnelRecord:
    S: int  # Σ side, b_S holds one critical vertex
    T: int  # φ(S), b_T holds three
    fibers: int
    length: int
    kinds: list = field(default_factory=list)

    def line(self, n: int) -> str:
        return f"S={to_bits(self.S, n)}\tphi(S)={to_bits(self.T, n)}\tfibers={self.fibers}\tlength={self.length}"


def _step_goal(conn: Connector, f: int, V: int) -> tuple[str, int]:
    outside = [x for x in elems(conn.vertex[0]) if not V & bit(x)]
    others = [x for x in outside if x != f]
    if others:
        return "to_f", max(others)
    return "to_a1", f


def build_tunnel(mu: LambdaMatching, S: int, T: int) -> tuple[AltPath, TunnelRecord]:
    """Augmenting path from the critical vertex left in b_T to the one in b_S."""
    n = mu.n
    lo, hi = (S, T) if popcount(S) < popcount(T) else (T, S)
    p = standard_pst(WellOrderedPair.canonical(lo, hi), n)
    ws, ys = list(p.vertices), list(p.colors)
    if ws[0] != b_vertex(T, n):
        ws.reverse()
        ys.reverse()
    d = len(ws)
    if d % 2 == 0 or ws[0] != b_vertex(T, n) or ws[-1] != b_vertex(S, n):
        raise ConductionError("tunnel skeleton has the wrong shape")
    kinds = []

    spec = mu.fibers.spec(ws[0])
    R, (a1, a2), g, conn = conduct_endpoint_minus(spec.V, spec.omega, ys[0], n=n)
    mu.set_order(ws[0], R)
    mu.add_pair((ws[0], a1), (ws[0], a2))
    kinds.append("5.9")
    path = _lift(g, ws[0])
    for k in range(1, d):
        tau = conn.vertex
        spec = mu.fibers.spec(ws[k])
        if not conn.proper(spec.V):
            raise ConductionError(f"connector {encode_tuple(tau)} not proper in fiber {encode_tuple(ws[k])}")
        if k < d - 1:
            goal, a1 = _step_goal(conn, ys[k], spec.V)
            R, g, conn = conduct_tunnel_step(conn, ys[k], spec.V, spec.omega, goal, a1)
            kinds.append(("5.7" if conn.kind == "first" else "5.6") + ":" + goal)
        else:
            R, g = conduct_endpoint_plus(spec.V, spec.omega, conn)
            g = g.reversed()
            kinds.append("5.8")
        mu.set_order(ws[k], R)
        path = path.concat(_lift(g, ws[k]), color=ys[k - 1], flag=False)
    path = remove_cycles(path)
    mu.apply(path)
    return path, TunnelRecord(S, T, d, len(path), kinds)


def final_fix_path(n: int) -> AltPath:
    """n|[n-1] ‖ n|1|…|n-1  →  …  →  n|[n-1] ‖ 1|…|n  →  [n] ‖ 1|…|n."""
    sigma = b_vertex(bit(n), n)
    cur = (bit(n),) + tuple(bit(i) for i in range(1, n))
    verts = [(sigma, cur)]
    colors: list[int] = []
    for i in range(1, n):
        for c in (n, i):
            cur = flip_full(cur, c)
            verts.append((sigma, cur))
            colors.append(c)
    verts.append(((full_mask(n),), cur))
    colors.append(n)
    flags = [k % 2 == 1 for k in range(len(colors))]
    return AltPath(verts, colors, flags)


def build_perfect_matching(
    n: int,
    x: PrimitiveSolution,
    cm: ComparableMatching,
    system: Sequence[AltPath] | None = None,
    progress: Callable | None = None,
) -> tuple[LambdaMatching, list[TunnelRecord]]:
    """Fiber standard matchings, one tunnel per pair of ``cm``, then the final fix."""
    B = PatternSet.from_vector(x.x)
    mu = LambdaMatching(n, B)
    if system is None:
        system = disjoint_path_system(cm.well_ordered_pairs(), n)
    if len(system) != len(cm.pairs):
        raise PreconditionError("path system does not match the comparable matching")
    records = []
    for i, (S, T) in enumerate(sorted(cm.pairs.items())):
        try:
            _, rec = build_tunnel(mu, S, T)
        except (ConductionError, PreconditionError) as e:
            raise ConductionError(f"tunnel {to_bits(S, n)} -> {to_bits(T, n)}: {e}") from e
        records.append(rec)
        if progress:
            progress(i + 1, len(cm.pairs))
    mu.apply(final_fix_path(n))
    return mu, records


# ---------------------------------------------------------------- λ on level-2 nodes


class Labeler:
    """λ_B on level-2 nodes adjacent to Γ_n^2 vertices, memoized on (σ1, S, x)."""

    def __init__(self, B: PatternSet):
        self.B = B
        self.n = B.n
        self._cache: dict = {}

    def lam(self, sigma1: Tup, S: int, x: int) -> int:
        key = (sigma1, S, x)
        v = self._cache.get(key)
        if v is None:
            v = self._direct(sigma1, S, x)
            self._cache[key] = v
        return v

    def _direct(self, sigma1: Tup, S: int, x: int) -> int:
        """λ_B without building the node; cross-checked against lambda_B in tests."""
        if sigma1[-1] & S:
            return 0
        A = 0
        for blk in sigma1:
            A |= blk
            if blk & S:
                break
        if S & ~A:
            return 1
        phi = normalizer(A)
        return 0 if self.B.contains(popcount(A), phi.apply_mask(S), phi(x)) else 1

    def lam_reference(self, sigma1: Tup, S: int, x: int) -> int:
        top, bottom = restrict_raw(sigma1, sigma1, S)
        return lambda_B(Node(self.n, ((top, bottom), ((S,), (bit(x),)))), self.B)

    def at(self, alpha, x: int) -> int:
        s1, s2 = alpha
        return self.lam(tuple(s1), _prefix(s2, x), x)

    def mono(self, alpha) -> bool:
        return all(self.at(alpha, x) == 0 for x in range(1, self.n + 1))


def _prefix(sigma: Sequence[int], x: int) -> int:
    acc = 0
    b = bit(x)
    for blk in sigma:
        acc |= blk
        if blk & b:
            return acc
    raise PreconditionError(f"{x} missing")


# ---------------------------------------------------------------- dense engine (n <= 6)


class DenseEngine:
    """All of Γ_n^2 as flat arrays indexed by ``i1 * N + i2``."""

    def __init__(self, n: int, B: PatternSet):
        if n > DENSE_MAX_N:
            raise PreconditionError(f"dense engine supports n <= {DENSE_MAX_N}")
        self.n = n
        self.B = B
        self.fi = flip_index(n)
        self.N = self.fi.N
        self.L = self._lambda_table()
        self.mono = self._mono()
        self.partner = np.full(self.N * self.N, -1, dtype=np.int32)
        self.color = np.zeros(self.N * self.N, dtype=np.int8)
        self._std: dict = {}

    def _lambda_table(self) -> np.ndarray:
        n, fi = self.n, self.fi
        L = np.zeros((fi.N, 1 << n, n), dtype=np.uint8)
        full = full_mask(n)
        for i, s in enumerate(fi.tups):
            for S in range(1, full + 1):
                top, bottom = restrict_raw(s, s, S)
                for x in elems(S):
                    L[i, S, x - 1] = lambda_B(Node(n, ((top, bottom), ((S,), (bit(x),)))), self.B)
        return L

    def default_values(self, i1: np.ndarray, i2: np.ndarray) -> np.ndarray:
        """λ of the n nodes adjacent to each (i1, i2), shape (k, n)."""
        xs = np.arange(self.n)
        pre = self.fi.prefix_tab[i2]
        return self.L[i1[:, None], pre, xs[None, :]]

    def _mono(self) -> np.ndarray:
        N = self.N
        out = np.zeros(N * N, dtype=bool)
        i2 = np.arange(N)
        for i1 in range(N):
            d = self.default_values(np.full(N, i1), i2)
            out[i1 * N : (i1 + 1) * N] = ~d.any(axis=1)
        return out

    def gid(self, v) -> int:
        s, t = v
        return self.fi.index[tuple(s)] * self.N + self.fi.index[tuple(t)]

    def vertex(self, g: int) -> tuple:
        return (self.fi.tups[g // self.N], self.fi.tups[g % self.N])

    def fiber_membership(self, cache: FiberCache) -> np.ndarray:
        """Fiber-isomorphism membership Γ_n(Ω(B,σ), V(σ)) for every (σ, τ)."""
        N, n = self.N, self.n
        out = np.zeros(N * N, dtype=bool)
        for i1, s in enumerate(self.fi.tups):
            spec = cache.spec(s)
            keys = self.fi.prefix_ids(spec.V)
            allowed = [0] + [tuple_key(t, n) for t in spec.omega]
            out[i1 * N : (i1 + 1) * N] = np.isin(keys, allowed)
        return out

    def _std_table(self, seq: tuple) -> tuple[np.ndarray, np.ndarray]:
        hit = self._std.get(seq)
        if hit is not None:
            return hit
        p = np.full(self.N, -1, dtype=np.int32)
        c = np.zeros(self.N, dtype=np.int8)
        idx = self.fi.index
        for j, t in enumerate(self.fi.tups):
            r = standard_partner(t, seq)
            if r is not None:
                p[j] = idx[r[0]]
                c[j] = r[1]
        self._std[seq] = (p, c)
        return p, c

    def load(self, mu: LambdaMatching) -> None:
        """Materialize ``mu`` into the flat arrays."""
        N = self.N
        self.partner.fill(-1)
        self.color.fill(0)
        for i1, s in enumerate(self.fi.tups):
            p, c = self._std_table(mu.order(s).seq)
            sl = slice(i1 * N, (i1 + 1) * N)
            m = self.mono[sl]
            ok = m & (p >= 0)
            ok[ok] &= m[p[ok]]
            self.partner[sl] = np.where(ok, i1 * N + p, -1)
            self.color[sl] = np.where(ok, c, 0)
        ov = [(self.gid(v), self.gid(w), cc) for v, (w, cc) in mu.overrides.items()]
        if ov:
            a = np.array(ov, dtype=np.int64)
            self.partner[a[:, 0]] = a[:, 1]
            self.color[a[:, 0]] = a[:, 2]

    # certificate text form
    def certificate_lines(self, x: PrimitiveSolution) -> Iterable[str]:
        enc = self.fi.enc_list
        if enc != sorted(enc):
            raise AssertionError("tuple index order differs from encoding order")
        yield f"WSB-MATCHING n={self.n} x={','.join(map(str, x.x))}"
        N = self.N
        g = np.nonzero(self.partner > np.arange(N * N))[0]
        cols = self.color[g]
        for gg, c in zip(g.tolist(), cols.tolist()):
            yield f"{enc[gg // N]}||{enc[gg % N]}\t{c}"

    def write_certificate(self, path: Path, x: PrimitiveSolution) -> int:
        count = -1
        with open(path, "w") as fh:
            buf = []
            for line in self.certificate_lines(x):
                buf.append(line)
                count += 1
                if len(buf) >= 65536:
                    fh.write("\n".join(buf) + "\n")
                    buf.clear()
            if buf:
                fh.write("\n".join(buf) + "\n")
        return count

    def read_certificate(self, path: Path) -> tuple[str, list[str]]:
        """Fill the arrays from a certificate; returns (x header value, parse problems)."""
        idx = {e: i for i, e in enumerate(self.fi.enc_list)}
        N = self.N
        self.partner.fill(-1)
        self.color.fill(0)
        problems: list[str] = []
        with open(path) as fh:
            head = fh.readline().strip()
            if not head.startswith("WSB-MATCHING "):
                raise ArtifactIntegrityError("missing certificate header")
            fields = dict(f.split("=", 1) for f in head.split()[1:])
            if int(fields.get("n", -1)) != self.n:
                raise ArtifactIntegrityError("certificate is for another n")
            g_list, c_list = [], []
            for ln, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    v, c = line.split("\t")
                    a, b = v.split("||")
                    g_list.append(idx[a] * N + idx[b])
                    c_list.append(int(c))
                except (ValueError, KeyError):
                    problems.append(f"line {ln}: cannot parse {line!r}")
        g = np.array(g_list, dtype=np.int64)
        c = np.array(c_list, dtype=np.int64)
        bad = (c < 1) | (c > self.n)
        for k in np.nonzero(bad)[0][:5]:
            problems.append(f"edge at {self.enc(int(g[k]))}: bad color {int(c[k])}")
        g, c = g[~bad], c[~bad]
        i1, i2 = g // N, g % N
        j1, j2 = self.flip_many(i1, i2, c)
        nf = j1 < 0
        for k in np.nonzero(nf)[0][:5]:
            problems.append(f"{self.enc(int(g[k]))}: {int(c[k])} is not flippable")
        g, c, j = g[~nf], c[~nf], (j1 * N + j2)[~nf]
        ends = np.concatenate([g, j])
        uniq, counts = np.unique(ends, return_counts=True)
        for u in uniq[counts > 1][:5]:
            problems.append(f"{self.enc(int(u))}: matched more than once")
        self.partner[g] = j
        self.partner[j] = g
        self.color[g] = c
        self.color[j] = c
        return fields.get("x", ""), problems

    def flip_many(self, i1: np.ndarray, i2: np.ndarray, c: np.ndarray):
        """Γ_n^2 flips; -1 where the color is not flippable."""
        fi = self.fi
        x0 = c - 1
        round2 = fi.flip_tab[i2, x0] >= 0
        j2 = np.where(round2, fi.flip_tab[i2, x0], i2)
        j1 = np.where(round2, i1, fi.flip_tab[i1, x0])
        bad = j1 < 0
        return np.where(bad, -1, j1), np.where(bad, -1, j2)

    def enc(self, g: int) -> str:
        return encode_vertex(self.vertex(g), file_form=True)

    def verify(self, max_report: int = 20) -> MatchingReport:
        """Exhaustive check over Γ_n^2: involution, colors, flips, scope, perfection."""
        rep = MatchingReport()
        N = self.N
        chunk = 1 << 21
        for lo in range(0, N * N, chunk):
            g = np.arange(lo, min(lo + chunk, N * N), dtype=np.int64)
            m = self.mono[g]
            p = self.partner[g].astype(np.int64)
            c = self.color[g].astype(np.int64)
            rep.vertices += int(m.sum())
            matched = p >= 0
            rep.matched += int((matched & m).sum())
            for k in np.nonzero(m & ~matched)[0][: max(0, max_report - len(rep.critical))]:
                rep.critical.append(self.vertex(int(g[k])))
            rep.critical_count += int((m & ~matched).sum())
            outside = matched & ~m
            for k in np.nonzero(outside)[0][:max_report]:
                rep.violations.append(f"{self.enc(int(g[k]))} matched but not monochromatic")
            gm, pm, cm_ = g[matched], p[matched], c[matched]
            inv = self.partner[pm] != gm
            for k in np.nonzero(inv)[0][:max_report]:
                rep.violations.append(f"{self.enc(int(gm[k]))}: involution fails")
            col = self.color[pm] != cm_
            for k in np.nonzero(col)[0][:max_report]:
                rep.violations.append(f"{self.enc(int(gm[k]))}: color mismatch")
            okc = (cm_ >= 1) & (cm_ <= self.n)
            j1, j2 = self.flip_many(gm // N, gm % N, np.where(okc, cm_, 1))
            nf = ~okc | (j1 * N + j2 != pm)
            for k in np.nonzero(nf)[0][:max_report]:
                rep.violations.append(f"{self.enc(int(gm[k]))}: partner is not the flip by {int(cm_[k])}")
            pout = ~self.mono[pm]
            for k in np.nonzero(pout)[0][:max_report]:
                rep.violations.append(f"{self.enc(int(gm[k]))}: partner outside M_λ")
        return rep


# ---------------------------------------------------------------- artifact


@dataclass
class ProtocolArtifact:
    n: int
    x: PrimitiveSolution
    matching: LambdaMatching
    provenance: list = field(default_factory=list)
    cm: ComparableMatching | None = None
    dense: DenseEngine | None = None
    _labeler: Labeler | None = None

    @property
    def B(self) -> PatternSet:
        return self.matching.B

    def labeler(self) -> Labeler:
        if self._labeler is None:
            self._labeler = Labeler(self.B)
        return self._labeler

    def engine(self) -> DenseEngine:
        if self.dense is None:
            eng = DenseEngine(self.n, self.B)
            eng.load(self.matching)
            self.dense = eng
        return self.dense

    def partner_color(self, alpha) -> tuple | None:
        if self.dense is not None:
            g = self.dense.gid(alpha)
            p = int(self.dense.partner[g])
            return None if p < 0 else (self.dense.vertex(p), int(self.dense.color[g]))
        return self.matching.partner_color(alpha)

    def provenance_lines(self) -> list[str]:
        lines = [r.line(self.n) for r in self.provenance]
        lines.append(f"final\t{encode_vertex(final_fix_path(self.n).start, file_form=True)}\tlength={len(final_fix_path(self.n))}")
        return lines

    def save(self, out: Path, certificate: bool | None = None) -> dict:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "x.txt").write_text("x=" + ",".join(map(str, self.x.x)) + "\n")
        (out / "provenance.log").write_text("\n".join(self.provenance_lines()) + "\n")
        data = {"n": self.n, "x": list(self.x.x), **self.matching.to_json()}
        (out / "compact.json").write_text(json.dumps(data, indent=0, sort_keys=True) + "\n")
        if self.cm is not None:
            (out / "comparable.tsv").write_text("\n".join(self.cm.lines()) + "\n")
        info = {"tunnels": len(self.provenance)}
        if certificate is None:
            certificate = self.n <= DENSE_MAX_N
        if certificate:
            info["edges"] = self.engine().write_certificate(out / "matching.txt", self.x)
        return info

    @classmethod
    def load(cls, path: Path) -> "ProtocolArtifact":
        path = Path(path)
        data = json.loads((path / "compact.json").read_text())
        n = int(data["n"])
        x = PrimitiveSolution(n, tuple(data["x"]))
        mu = LambdaMatching.from_json(n, PatternSet.from_vector(x.x), data)
        prov = []
        plog = path / "provenance.log"
        if plog.exists():
            for line in plog.read_text().splitlines():
                if line.startswith("S="):
                    f = dict(p.split("=", 1) for p in line.split("\t"))
                    prov.append(TunnelRecord(_bits_mask(f["S"]), _bits_mask(f["phi(S)"]), int(f["fibers"]), int(f["length"])))
        return cls(n, x, mu, prov)


def _bits_mask(s: str) -> int:
    from .diophantine import from_bits

    return from_bits(s)


def pipeline(n: int, x: PrimitiveSolution | None = None, progress: Callable | None = None) -> ProtocolArtifact:
    """Solution → families → comparable matching → repair → paths → matching."""
    if x is None:
        x = primitive_solution_search(n)
        if x is None:
            raise UnsupportedN(unsupported_message(n))
    if x.n != n:
        raise PreconditionError("solution is for another n")
    cm = comparable_matching_for(x)
    rlog = RepairLog()
    cm = make_non_nested(cm, rlog)
    pairs = cm.well_ordered_pairs()
    system = disjoint_path_system(pairs, n)
    mu, records = build_perfect_matching(n, x, cm, system, progress)
    art = ProtocolArtifact(n, x, mu, records, cm)
    art.repair_swaps = rlog.swaps  # type: ignore[attr-defined]
    return art


# ---------------------------------------------------------------- ρ, the level-3 labeling


def rho_eval(v: Node, art: ProtocolArtifact, literal_case2: bool = False) -> int:
    """ρ on a level-3 node from λ and μ.

    Case 2 treats v1‖v2 as an edge of Γ_n^2 of either type whenever the node
    is internal; ``literal_case2`` restricts it to carrier(v2) = [n].
    """
    if v.level != 3:
        raise PreconditionError("ρ is defined on level-3 nodes")
    n = v.n
    full = full_mask(n)
    lam = lambda w: lambda_B(w, art.B)
    default = lam(parent(v))
    S, x = v.S, v.x
    (t1, b1), (t2, b2) = v.comps[0], v.comps[1]
    if popcount(S) <= n - 2:
        return default
    if popcount(S) == n - 1:
        y = (full & ~S).bit_length()
        if support(t1) != full:
            return default
        if support(t2) == full:
            alpha = (tuple(t1), tuple(t2))
            beta = (tuple(t1), flip_full(t2, y))
        else:
            if literal_case2:
                return default
            s2 = tuple(t2) + (bit(y),)
            alpha = (tuple(t1), s2)
            beta = (flip_full(t1, y), s2)
        pc = art.partner_color(alpha)
        return 1 if pc is not None and pc[0] == beta else default
    alpha = (tuple(t1), tuple(t2))
    if not all(lam(adjacent_node(alpha, z)) == 0 for z in range(1, n + 1)):
        return default
    pc = art.partner_color(alpha)
    if pc is None:
        raise ArtifactIntegrityError(f"monochromatic vertex {encode_vertex(alpha)} is unmatched")
    return 0 if x == pc[1] else 1


def rho_vertex(sigma, art: ProtocolArtifact, literal_case2: bool = False) -> tuple[int, ...]:
    """ρ of the n nodes adjacent to a level-3 vertex, by color."""
    return tuple(rho_eval(adjacent_node(sigma, x), art, literal_case2) for x in range(1, art.n + 1))


def rho_fast(eng: DenseEngine, i1: np.ndarray, i2: np.ndarray, i3: np.ndarray, literal_case2: bool = False):
    """Vectorized ρ, shape (k, n); second value flags unmatched monochromatic α."""
    n, N, fi = eng.n, eng.N, eng.fi
    xs = np.arange(1, n + 1)
    g = i1.astype(np.int64) * N + i2
    d = eng.default_values(i1, i2).astype(np.int8)
    mono = eng.mono[g]
    col = eng.color[g].astype(np.int64)
    part = eng.partner[g].astype(np.int64)
    unmatched = mono & (part < 0)
    pre3 = fi.prefix_tab[i3]
    size3 = _popcount(pre3)
    out = d.copy()
    # Case 3
    c3 = np.where(mono[:, None] & ~unmatched[:, None], (xs[None, :] != col[:, None]).astype(np.int8), d)
    out = np.where(size3 == n, c3, out)
    # Case 2: the missing id y is the singleton last block of σ3
    y = fi.last_single[i3].astype(np.int64)
    has_y = y > 0
    yy = np.where(has_y, y, 1)
    if literal_case2:
        edge_ok = fi.flip_tab[i2, yy - 1] >= 0
    else:
        edge_ok = (fi.flip_tab[i2, yy - 1] >= 0) | (fi.flip_tab[i1, yy - 1] >= 0)
    j1, j2 = eng.flip_many(i1, i2, yy)
    hit = has_y & edge_ok & (part >= 0) & (part == j1 * N + j2)
    c2 = np.where(hit[:, None], np.int8(1), d)
    out = np.where(size3 == n - 1, c2, out)
    return out, unmatched


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.int64)
    c = np.zeros_like(a)
    while np.any(a):
        c += a & 1
        a >>= 1
    return c


def is_mono_rows(vals: np.ndarray) -> np.ndarray:
    return (vals == vals[:, :1]).all(axis=1)


# ---------------------------------------------------------------- verification of ρ


@dataclass
class SBReport:
    mode: str
    checked: int = 0
    monochromatic: int = 0
    integrity: int = 0
    compliance_checked: int = 0
    compliance_violations: int = 0
    cases: dict = field(default_factory=dict)
    examples: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not (self.monochromatic or self.integrity or self.compliance_violations)

    def lines(self) -> list[str]:
        out = [
            f"mode={self.mode} checked={self.checked} monochromatic={self.monochromatic} "
            f"integrity={self.integrity} compliance_checked={self.compliance_checked} "
            f"compliance_violations={self.compliance_violations}"
        ]
        for k in sorted(self.cases):
            out.append(f"case {k}: " + " ".join(f"{a}={b}" for a, b in self.cases[k].items()))
        out.extend(f"violation {e}" for e in self.examples)
        return out


def _table_keys(eng: DenseEngine, g: np.ndarray, literal_case2: bool) -> np.ndarray:
    """Per-α key fixing the ρ vector of every level-3 extension."""
    N, n = eng.N, eng.n
    i1, i2 = g // N, g % N
    d = eng.default_values(i1, i2).astype(np.int64)
    key = np.zeros(len(g), dtype=np.int64)
    for k in range(n):
        key |= d[:, k] << k
    mono = eng.mono[g].astype(np.int64)
    part = eng.partner[g].astype(np.int64)
    col = np.where(part >= 0, eng.color[g].astype(np.int64), 0)
    rnd2 = (part >= 0) & (part // N == i1)
    if literal_case2:
        col2 = np.where(rnd2, col, 0)
    else:
        col2 = col
    key |= mono << n
    key |= col << (n + 1)
    key |= col2 << (n + 5)
    key |= (mono.astype(bool) & (part < 0)).astype(np.int64) << (n + 9)
    return key


def _decode_key(key: int, n: int) -> tuple:
    d = [(key >> k) & 1 for k in range(n)]
    mono = (key >> n) & 1
    col = (key >> (n + 1)) & 15
    col2 = (key >> (n + 5)) & 15
    unm = (key >> (n + 9)) & 1
    return d, mono, col, col2, unm


def _rho_from_key(key: int, eng: DenseEngine) -> np.ndarray:
    """ρ vectors of (α, σ3) for every σ3, given α's key; shape (N, n)."""
    n, fi = eng.n, eng.fi
    d, mono, col, col2, unm = _decode_key(int(key), n)
    d = np.array(d, dtype=np.int8)
    xs = np.arange(1, n + 1)
    size3 = _popcount(fi.prefix_tab)
    out = np.broadcast_to(d, (fi.N, n)).copy()
    if mono and not unm:
        c3 = (xs != col).astype(np.int8)
        out = np.where(size3 == n, c3[None, :], out)
    y = fi.last_single.astype(np.int64)
    hit = (y > 0) & (y == col2) & (col2 > 0)
    out = np.where((size3 == n - 1) & hit[:, None], np.int8(1), out)
    return out


def _case_id(key: int, n: int, eng: DenseEngine) -> np.ndarray:
    """Case of the level-3 rule per σ3 for a monochromatic α: 2a, 2b, 2c."""
    _, _, col, _, _ = _decode_key(int(key), n)
    y = eng.fi.last_single.astype(np.int64)
    return np.where(y == 0, 0, np.where(y == col, 2, 1))


def verify_symmetry_breaking(
    art: ProtocolArtifact,
    mode: str = "targeted",
    samples: int = 10**7,
    seed: int | None = None,
    compliance_samples: int = 10**5,
    literal_case2: bool = False,
    scope: str = "targeted",
    max_examples: int = 10,
) -> SBReport:
    """Targeted: every level-3 extension of α in scope; sampled: uniform level-3 vertices."""
    t0 = time.time()
    rep = SBReport(mode)
    if mode == "targeted":
        eng = art.engine()
        N, n = eng.N, eng.n
        if scope == "exhaustive":
            alphas = np.arange(N * N, dtype=np.int64)
        else:
            alphas = np.nonzero(eng.mono | (eng.partner >= 0))[0].astype(np.int64)
        keys = []
        chunk = 1 << 21
        for lo in range(0, len(alphas), chunk):
            keys.append(_table_keys(eng, alphas[lo : lo + chunk], literal_case2))
        allk = np.concatenate(keys) if keys else np.zeros(0, dtype=np.int64)
        uniq, first, counts = np.unique(allk, return_index=True, return_counts=True)
        for key, f, cnt in zip(uniq.tolist(), first.tolist(), counts.tolist()):
            vals = _rho_from_key(key, eng)
            bad = is_mono_rows(vals)
            rep.checked += cnt * N
            _, mono, _, _, unm = _decode_key(key, n)
            if unm:
                rep.integrity += cnt
            if not mono:
                e = rep.cases.setdefault("1", {"vertices": 0, "monochromatic": 0, "one_monochromatic": 0})
                e["vertices"] += cnt * N
                e["monochromatic"] += int(bad.sum()) * cnt
                e["one_monochromatic"] += int((bad & (vals[:, 0] == 1)).sum()) * cnt
            if mono and not unm:
                cid = _case_id(key, n, eng)
                for c, name in ((0, "2a"), (1, "2b"), (2, "2c")):
                    sel = cid == c
                    one = int((bad & sel & (vals[:, 0] == 1)).sum())
                    e = rep.cases.setdefault(name, {"vertices": 0, "monochromatic": 0, "one_monochromatic": 0})
                    e["vertices"] += int(sel.sum()) * cnt
                    e["monochromatic"] += int((bad & sel).sum()) * cnt
                    e["one_monochromatic"] += one * cnt
            nb = int(bad.sum())
            if nb:
                rep.monochromatic += nb * cnt
                if len(rep.examples) < max_examples:
                    a = int(alphas[f])
                    j = int(np.nonzero(bad)[0][0])
                    s1, s2 = eng.vertex(a)
                    rep.examples.append(encode_vertex((s1, s2, eng.fi.tups[j]), file_form=True))
    elif mode == "sampled":
        if seed is None:
            raise PreconditionError("sampled mode needs a seed")
        rng = np.random.default_rng(seed)
        if art.n <= DENSE_MAX_N:
            eng = art.engine()
            done = 0
            while done < samples:
                k = min(1 << 20, samples - done)
                i = rng.integers(0, eng.N, size=(3, k))
                vals, unm = rho_fast(eng, i[0], i[1], i[2], literal_case2)
                bad = is_mono_rows(vals)
                rep.integrity += int(unm.sum())
                rep.monochromatic += int(bad.sum())
                for r in np.nonzero(bad)[0][: max(0, max_examples - len(rep.examples))]:
                    rep.examples.append(encode_vertex(tuple(eng.fi.tups[int(i[q, r])] for q in range(3)), file_form=True))
                done += k
            rep.checked = done
        else:
            from .sim import random_full_tuple

            prng = random.Random(seed)
            for _ in range(samples):
                sigma = tuple(random_full_tuple(art.n, prng) for _ in range(3))
                vals = rho_vertex_lazy(sigma, art, literal_case2)
                rep.checked += 1
                if len(set(vals)) == 1:
                    rep.monochromatic += 1
                    if len(rep.examples) < max_examples:
                        rep.examples.append(encode_vertex(sigma, file_form=True))
    else:
        raise PreconditionError("mode must be targeted or sampled")
    if compliance_samples:
        c = check_rho_compliance(art, compliance_samples, seed if seed is not None else 0, literal_case2)
        rep.compliance_checked = c[0]
        rep.compliance_violations = c[1]
        rep.examples.extend(c[2][: max(0, max_examples - len(rep.examples))])
    rep.seconds = time.time() - t0
    return rep


def rho_vertex_lazy(sigma, art: ProtocolArtifact, literal_case2: bool = False) -> tuple[int, ...]:
    """ρ by color at a level-3 vertex using the memoized labeler (any n)."""
    n = art.n
    lab = art.labeler()
    s1, s2, s3 = (tuple(s) for s in sigma)
    alpha = (s1, s2)
    d = [lab.at(alpha, x) for x in range(1, n + 1)]
    mono = not any(d)
    pc = art.partner_color(alpha) if mono else None
    out = list(d)
    last = s3[-1]
    for x in range(1, n + 1):
        size = popcount(_prefix(s3, x))
        if size == n:
            if mono:
                if pc is None:
                    raise ArtifactIntegrityError(f"monochromatic vertex {encode_vertex(alpha)} is unmatched")
                out[x - 1] = 0 if x == pc[1] else 1
        elif size == n - 1:
            y = last.bit_length()
            fl = flippable_set(alpha)
            if literal_case2:
                fl = flippable_set((s2,))
            if fl & bit(y):
                pcy = pc if mono else art.partner_color(alpha)
                if pcy is not None and pcy[0] == flip(alpha, y):
                    out[x - 1] = 1
    return tuple(out)


def check_rho_compliance(art: ProtocolArtifact, count: int, seed: int, literal_case2: bool = False) -> tuple[int, int, list]:
    """ρ agrees on boundary level-3 nodes related by order bijections; both take defaults."""
    from .sim import random_full_tuple
    from .patterns import relabel

    rng = random.Random(seed)
    n = art.n
    checked = bad = 0
    examples = []
    while checked < count:
        sigma = tuple(random_full_tuple(n, rng) for _ in range(3))
        v = adjacent_node(sigma, rng.randint(1, n))
        if v.internal:
            continue
        k = popcount(v.carrier)
        target = sum(bit(z) for z in rng.sample(range(1, n + 1), k))
        w = relabel(v, target)
        rv, rw = rho_eval(v, art, literal_case2), rho_eval(w, art, literal_case2)
        dv, dw = lambda_B(parent(v), art.B), lambda_B(parent(w), art.B)
        checked += 1
        if not (rv == rw == dv == dw):
            bad += 1
            if len(examples) < 5:
                examples.append(f"compliance {v.encode()} vs {w.encode()}")
    return checked, bad, examples


# ---------------------------------------------------------------- property checks for large n


@dataclass
class FiberCheck:
    sigma: Tup
    expected: int
    found: int
    genuine: bool


def expected_critical(sigma: Sequence[int], x: PrimitiveSolution) -> int:
    """Critical count of a fiber: 0 for t >= 3, 1 for [n] and |A_1| in I, 3 for |A_1| in J, else 0."""
    if len(sigma) == 1:
        return 1
    if len(sigma) >= 3:
        return 0
    k = popcount(sigma[0])
    if k in x.I:
        return 1
    if k in x.J:
        return 3
    return 0


def check_fiber_critical(art: ProtocolArtifact, sigma: Tup) -> FiberCheck:
    """Count critical vertices of the default standard matching on M_λ(σ)."""
    n = art.n
    spec = art.matching.fibers.spec(sigma)
    R = OrderR.ascending(n, fiber_V(sigma, n))
    crit = predicted_critical(spec, R, n)
    genuine = all(spec.member(t) and standard_partner(t, R) is None for t in crit)
    return FiberCheck(sigma, expected_critical(sigma, art.x), len(crit), genuine)


def random_fiber_checks(art: ProtocolArtifact, count: int, seed: int) -> list[FiberCheck]:
    from .sim import random_full_tuple

    rng = random.Random(seed)
    out = []
    n = art.n
    # mix uniform fibers with two-block fibers b_S, where Cases 1–3 live
    for i in range(count):
        if i % 2:
            sigma = random_full_tuple(n, rng)
        else:
            k = rng.randint(1, n - 1)
            S = sum(bit(z) for z in rng.sample(range(1, n + 1), k))
            sigma = b_vertex(S, n)
        out.append(check_fiber_critical(art, sigma))
    return out


def fiber_statistics(art: ProtocolArtifact) -> dict:
    x = art.x
    fam = families(x)
    return {
        "tunnels": len(art.provenance),
        "sigma": len(fam.sigma),
        "lambda": len(fam.lam),
        "tunnel_fibers": sum(r.fibers for r in art.provenance),
        "path_vertices": sum(r.length for r in art.provenance),
        "max_path": max((r.length for r in art.provenance), default=0),
    }


def fault_inject(art: ProtocolArtifact, seed: int = 0) -> ProtocolArtifact:
    """Copy of ``art`` with every matching edge inside one fiber removed (dense only)."""
    eng = art.engine()
    N = eng.N
    bad = DenseEngine.__new__(DenseEngine)
    bad.__dict__.update(eng.__dict__)
    bad.partner = eng.partner.copy()
    bad.color = eng.color.copy()
    rng = np.random.default_rng(seed)
    counts = np.bincount(np.nonzero(eng.mono)[0] // N, minlength=N)
    cand = np.nonzero(counts >= np.quantile(counts[counts > 0], 0.9))[0]
    i1 = int(rng.choice(cand))
    sl = slice(i1 * N, (i1 + 1) * N)
    p = bad.partner[sl].copy()
    inner = (p >= 0) & (p // N == i1)
    g = np.arange(i1 * N, (i1 + 1) * N)[inner]
    bad.partner[g] = -1
    bad.color[g] = 0
    out = ProtocolArtifact(art.n, art.x, art.matching, art.provenance, art.cm, bad)
    out.fault_fiber = eng.fi.tups[i1]  # type: ignore[attr-defined]
    out.fault_edges = int(len(g) // 2)  # type: ignore[attr-defined]
    return out


__all__ = [
    "ArtifactIntegrityError",
    "DenseEngine",
    "LambdaMatching",
    "ProtocolArtifact",
    "SBReport",
    "TunnelRecord",
    "UnsupportedN",
    "build_perfect_matching",
    "build_tunnel",
    "canonical_6t",
    "check_fiber_critical",
    "fiber_statistics",
    "random_fiber_checks",
    "expected_critical",
    "fault_inject",
    "final_fix_path",
    "pipeline",
    "rho_eval",
    "rho_fast",
    "rho_vertex",
    "rho_vertex_lazy",
    "verify_symmetry_breaking",
]
