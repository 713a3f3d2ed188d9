"""Failure-free IIS executions as vertices of Γ_n^d, and protocol simulation."""

from __future__ import annotations

import random
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from .flipgraph import encode_vertex
from .tuples import PreconditionError, Tup, fubini

CHUNK = 1 << 16


@lru_cache(maxsize=None)
def _first_block_weights(m: int) -> tuple[int, ...]:
    """Cumulative weights C(m,k)·a(m-k) for first-block sizes k = 1..m."""
    acc, out = 0, []
    for k in range(1, m + 1):
        acc += comb(m, k) * fubini(m - k)
        out.append(acc)
    if acc != fubini(m):
        raise AssertionError("Fubini recurrence failed")
    return tuple(out)


def random_full_tuple(n: int, rng: random.Random) -> Tup:
    """Uniform ordered set partition of [n].

    Block sizes follow the exact Fubini weights; block contents are
    consecutive runs of one uniform permutation.
    """
    perm = list(range(1, n + 1))
    rng.shuffle(perm)
    out = []
    pos = 0
    while pos < n:
        w = _first_block_weights(n - pos)
        k = bisect_right(w, rng.randrange(w[-1])) + 1
        out.append(sum(1 << (x - 1) for x in perm[pos : pos + k]))
        pos += k
    return tuple(out)


@dataclass(frozen=True)
class Execution:
    rounds: tuple  # one full tuple per round

    @property
    def n(self) -> int:
        return sum(self.rounds[0]).bit_length()

    def encode(self) -> str:
        return encode_vertex(self.rounds, file_form=True)


def sample_execution(n: int, rounds: int, seed: int | random.Random) -> Execution:
    if rounds < 1:
        raise PreconditionError("rounds >= 1")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return Execution(tuple(random_full_tuple(n, rng) for _ in range(rounds)))


def run_protocol(e: Execution | Sequence, art) -> tuple[int, ...]:
    """Per-process outputs: ρ of the adjacent node of each color."""
    from .assembly import rho_vertex

    rounds = e.rounds if isinstance(e, Execution) else tuple(e)
    if len(rounds) != 3:
        raise PreconditionError("the protocol runs 3 rounds")
    if sum(rounds[0]) != (1 << art.n) - 1:
        raise PreconditionError("execution and artifact differ in n")
    return rho_vertex(rounds, art)


def wsb_check(out: Sequence[int]) -> bool:
    return 0 in out and 1 in out


@dataclass
class SimReport:
    trials: int = 0
    passed: int = 0
    failed: int = 0
    integrity: int = 0
    failures: list = field(default_factory=list)

    def merge(self, other: "SimReport", keep: int) -> None:
        self.trials += other.trials
        self.passed += other.passed
        self.failed += other.failed
        self.integrity += other.integrity
        self.failures.extend(other.failures[: max(0, keep - len(self.failures))])

    def lines(self) -> list[str]:
        out = [f"trials={self.trials} pass={self.passed} fail={self.failed}"]
        if self.integrity:
            out.append(f"unmatched_monochromatic_hits={self.integrity}")
        out.extend(f"failing {e}" for e in self.failures)
        return out


_ART = None  # artifact shared with forked workers


def _chunk(args) -> SimReport:
    seed_seq, k, keep = args
    art = _ART
    rep = SimReport()
    if art.n <= 6:
        from .assembly import is_mono_rows, rho_fast

        eng = art.engine()
        rng = np.random.default_rng(seed_seq)
        i = rng.integers(0, eng.N, size=(3, k))
        vals, unm = rho_fast(eng, i[0], i[1], i[2])
        bad = is_mono_rows(vals)
        rep.trials = k
        rep.failed = int(bad.sum())
        rep.passed = k - rep.failed
        rep.integrity = int(unm.sum())
        for r in np.nonzero(bad)[0][:keep]:
            rep.failures.append(encode_vertex(tuple(eng.fi.tups[int(i[q, r])] for q in range(3)), file_form=True))
        return rep
    from .assembly import ArtifactIntegrityError, rho_vertex_lazy

    prng = random.Random(int(seed_seq.generate_state(1)[0]))
    for _ in range(k):
        e = tuple(random_full_tuple(art.n, prng) for _ in range(3))
        rep.trials += 1
        try:
            ok = wsb_check(rho_vertex_lazy(e, art))
        except ArtifactIntegrityError:
            rep.integrity += 1
            ok = False
        if ok:
            rep.passed += 1
        else:
            rep.failed += 1
            if len(rep.failures) < keep:
                rep.failures.append(encode_vertex(e, file_form=True))
    return rep


def batch_simulate(n: int, trials: int, seed: int, art, workers: int = 1, keep: int = 20) -> SimReport:
    """Uniform failure-free 3-round executions; chunked seeds make results worker-independent."""
    global _ART
    if art.n != n:
        raise PreconditionError("artifact is for another n")
    rep = SimReport()
    if trials <= 0:
        return rep
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(s, k, keep) for s, k in zip(seeds, sizes)]
    _ART = art
    if n <= 6:
        art.engine()  # build before forking
    try:
        if workers > 1:
            import multiprocessing as mp

            with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as ex:
                results = list(ex.map(_chunk, jobs))
        else:
            results = [_chunk(j) for j in jobs]
    finally:
        _ART = None
    for r in results:
        rep.merge(r, keep)
    return rep
