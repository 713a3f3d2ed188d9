"""Acceptance criteria 1-13; each test records PASS/FAIL for the terminal summary.

Run alone with ``pytest -v tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import itertools
import random
import sys
import time
from math import comb
from pathlib import Path

import pytest

from conftest import ACCEPTANCE
from wsbflip.assembly import fault_inject, random_fiber_checks, verify_symmetry_breaking
from wsbflip.conductivity import KINDS, ConductionError, WellOrderedPair, kit_path, nested, random_kit_spec, standard_pst
from wsbflip.diophantine import (
    ComparableMatching,
    RepairLog,
    comparable_matching_6t,
    dist_lex_less,
    families,
    canonical_6t,
    identity_507,
    identity_6476,
    identity_6t,
    lambda_bij,
    lambda_table,
    make_non_nested,
    phi,
    psi,
    suffix_member,
    t1_tables,
    to_bits,
)
from wsbflip.flipgraph import SubgraphSpec, neighbors
from wsbflip.matching import OrderR, critical_vertices, predicted_critical, standard_matching
from wsbflip.sim import batch_simulate
from wsbflip.tuples import PreconditionError, fubini, full_mask, full_tuples, ordered_partitions, popcount, submasks

GOLDEN = Path(__file__).parent / "golden"


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_vertex_counts():
    t0 = time.time()
    a = [1]
    for m in range(1, 7):
        a.append(sum(comb(m, k) * a[m - k] for k in range(1, m + 1)))
    counts = [len(full_tuples(n)) for n in range(1, 7)]
    ok = counts == [1, 3, 13, 75, 541, 4683] == a[1:] == [fubini(n) for n in range(1, 7)]
    dt = time.time() - t0
    record(1, ok and dt < 1, f"counts={counts} recurrence={a[1:]} seconds={dt:.2f}")


def test_criterion_02_bipartition():
    res = []
    ok = True
    for n in range(1, 7):
        tups = full_tuples(n)
        par = {t: len(t) % 2 for t in tups}
        ok &= all(par[t] != par[w[0]] for t in tups for _, w in neighbors(t))
        A = sum(1 for t in tups if par[t] == n % 2)
        res.append((A, len(tups) - A))
        ok &= A == len(tups) - A + 1
    record(2, ok, f"(|A|,|B|) for n=1..6: {res}")


def test_criterion_03_critical_sets():
    t0 = time.time()
    rng = random.Random(0)
    configs = bad = 0

    def vtuples(V):
        return [t for m in submasks(V) for t in ordered_partitions(m)]

    def check(n, V, R, om):
        spec = SubgraphSpec(V, om)
        return predicted_critical(spec, R, n) == critical_vertices(standard_matching(n, V, R, om), spec, n)

    for n in range(1, 6):
        for V in range(full_mask(n)):
            R = OrderR.ascending(n, V)
            vt = vtuples(V)
            for _ in range(200 if V else 1):
                om = frozenset(t for t in vt if rng.random() < rng.random())
                configs += 1
                bad += not check(n, V, R, om)
    for _ in range(200):
        n = 6
        V = rng.randrange(full_mask(n))
        rest = [x for x in range(1, n + 1) if not V >> (x - 1) & 1]
        rng.shuffle(rest)
        om = frozenset(t for t in vtuples(V) if rng.random() < 0.5)
        configs += 1
        bad += not check(n, V, OrderR(tuple(rest), V), om)
    dt = time.time() - t0
    record(3, bad == 0 and dt < 300, f"configurations={configs} counterexamples={bad} seconds={dt:.0f}")


def test_criterion_04_path_kit():
    rng = random.Random(1)
    fails = resampled = total = 0
    for kind in KINDS:
        for n in (5, 6, 7):
            ok = 0
            while ok < 1000:
                spec, extra = random_kit_spec(kind, n, rng)
                try:
                    kit_path(spec, extra)
                except PreconditionError:
                    resampled += 1
                    continue
                except ConductionError:
                    fails += 1
                ok += 1
            total += ok
    record(4, fails == 0, f"instantiations={total} failures={fails} illegal_draws_resampled={resampled}")


def test_criterion_05_phi_bijection():
    t0 = time.time()
    bad = checked = 0
    for n in range(5, 15):
        dom, cod = {}, {}
        for S in range(1 << n):
            b = to_bits(S, n)
            if suffix_member(b, "0[01]*"):
                dom.setdefault(popcount(S), []).append(S)
            if suffix_member(b, "1[10]*"):
                cod.setdefault(popcount(S), set()).add(S)
        for t in range(n):
            src = dom.get(t, [])
            img = [phi(n, t, S) for S in src]
            checked += len(src)
            ok = len(set(img)) == len(img) and set(img) == cod.get(t + 1, set())
            ok &= all(S & ~T == 0 and S != T for S, T in zip(src, img))
            bad += not ok
    dt = time.time() - t0
    record(5, bad == 0 and dt < 120, f"sets={checked} failing (n,t) classes={bad} seconds={dt:.1f}")


def test_criterion_06_t1_tables():
    tabs = t1_tables()
    files_ok = all((GOLDEN / f"{k}.tsv").read_text() == "\n".join(v) + "\n" for k, v in tabs.items())
    p = to_bits(phi(6, 0, 0), 6) == "000001"
    s = to_bits(psi(6, 6, full_mask(6)), 6) == "111100"
    lam = lambda_bij(1, full_mask(6)) == psi(6, 6, full_mask(6))
    fam = families(canonical_6t(6))
    cm = comparable_matching_6t(1)
    fix = cm.validate(fam.sigma_minus_n, fam.lam) == []
    record(6, files_ok and p and s and lam and fix, f"golden={files_ok} phi0={p} psi6={s} lambda_top={lam} final_fix_valid={fix} tables={sorted(tabs)}")


def test_criterion_07_identities():
    a, b = identity_507(), identity_6476()
    six = [identity_6t(t) for t in range(1, 6)]
    ok = a == (507, 507) and b == (6476, 6476) and all(x == y for x, y in six)
    record(7, ok, f"507={a} 6476={b} 6t={six}")


def test_criterion_08_disjoint_paths():
    t0 = time.time()
    n, F = 6, full_mask(6)
    pairs = [WellOrderedPair.canonical(S, T) for T in range(1, F) for S in submasks(T) if S and S != T]
    verts = {p: frozenset(standard_pst(p, n).vertices) for p in pairs}
    checked = hits = 0
    for p, q in itertools.combinations(pairs, 2):
        if {p.S, p.T} & {q.S, q.T} or nested(p, q):
            continue
        checked += 1
        hits += bool(verts[p] & verts[q])
    dt = time.time() - t0
    record(8, hits == 0 and dt < 600, f"pairs={len(pairs)} disjoint_non_nested_couples={checked} intersections={hits} seconds={dt:.1f}")


def test_criterion_09_end_to_end_n6(art6):
    t0 = time.time()
    eng = art6.engine()
    rep = eng.verify()
    mono = int(eng.mono.sum())
    ok = rep.ok and rep.critical_count == 0 and rep.matched == rep.vertices == mono
    ok &= art6.build_seconds < 600
    record(9, ok, f"build_seconds={art6.build_seconds:.0f} monochromatic={mono} matched={rep.matched} critical={rep.critical_count} violations={len(rep.violations)} verify_seconds={time.time() - t0:.0f}")


def test_criterion_10_rho_n6(art6):
    tg = verify_symmetry_breaking(art6, "targeted", compliance_samples=10**5, seed=0)
    sp = verify_symmetry_breaking(art6, "sampled", samples=10**7, seed=1, compliance_samples=0)
    ok = tg.ok and sp.ok and tg.compliance_checked == 10**5 and sp.checked == 10**7
    record(
        10,
        ok,
        f"targeted checked={tg.checked} mono={tg.monochromatic} integrity={tg.integrity}; "
        f"sampled checked={sp.checked} mono={sp.monochromatic}; compliance {tg.compliance_checked} pairs, {tg.compliance_violations} violations",
    )


def test_criterion_11_simulator(art6):
    rep = batch_simulate(6, 10**6, 2026, art6, workers=1)
    bad = fault_inject(art6, seed=0)
    frep = batch_simulate(6, 10**6, 2026, bad, workers=1)
    ok = rep.failed == 0 and rep.passed == 10**6 and frep.failed + frep.integrity > 0
    record(11, ok, f"clean pass={rep.passed} fail={rep.failed}; fault-injected fail={frep.failed} unmatched_hits={frep.integrity}")


def test_criterion_12_n12(art12):
    tab = lambda_table(2)
    bij = len(tab) == len(set(tab.values())) and all(S & T in (S, T) and S != T for S, T in tab.items())
    fam = families(canonical_6t(12))
    cm = comparable_matching_6t(2)
    cm_ok = cm.validate(fam.sigma_minus_n, fam.lam) == []
    fixed = make_non_nested(cm, RepairLog())
    fibers = random_fiber_checks(art12, 1000, seed=0)
    fib_bad = sum(1 for c in fibers if c.expected != c.found or not c.genuine)
    sb = verify_symmetry_breaking(art12, "sampled", samples=10**6, seed=1, compliance_samples=1000)
    ok = bij and cm_ok and fixed.is_non_nested() and fib_bad == 0 and sb.ok
    record(
        12,
        ok,
        f"lambda sets={len(tab)} bijective={bij} comparable={cm_ok} non_nested_after_repair={fixed.is_non_nested()}; "
        f"fibers=1000 mismatches={fib_bad}; sampled={sb.checked} mono={sb.monochromatic} compliance_violations={sb.compliance_violations}",
    )


def _random_comparable_matching(n, rng):
    """Random small/large cardinal families split at a level m, greedily matched by containment."""
    while True:
        m = rng.randint(1, n - 2)
        ks = rng.sample(range(1, m + 1), rng.randint(1, m))
        js = rng.sample(range(m + 1, n), rng.randint(1, n - 1 - m))
        small = [S for S in range(1, 1 << n) if popcount(S) in ks]
        big = [S for S in range(1, 1 << n) if popcount(S) in js]
        small = rng.sample(small, min(len(small), rng.randint(2, 80)))
        rng.shuffle(big)
        used, pairs = set(), {}
        for S in small:
            for T in big:
                if T & S == S and T not in used:
                    used.add(T)
                    pairs[S] = T
                    break
        if len(pairs) >= 2:
            return ComparableMatching(n, pairs)


def test_criterion_13_non_nested_repair():
    rng = random.Random(13)
    bad = swaps = repaired = 0
    for _ in range(100):
        cm = _random_comparable_matching(rng.randint(4, 12), rng)
        log = RepairLog()
        out = make_non_nested(cm, log)
        ok = out.is_non_nested() and out.validate(cm.pairs.keys(), cm.pairs.values()) == []
        ok &= all(not dist_lex_less(a, b) for a, b in zip(log.dist_trace, log.dist_trace[1:]))
        swaps += log.swaps
        repaired += not cm.is_non_nested()
        bad += not ok
    record(13, bad == 0, f"matchings=100 failures={bad} total_swaps={swaps} needing_repair={repaired}")

if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
