import itertools
import random
import re
from math import comb
from pathlib import Path

import pytest

from wsbflip.diophantine import (
    ComparableMatching,
    PrimitiveSolution,
    RepairLog,
    all_primitive_solutions,
    canonical_6t,
    comparable_matching_6t,
    dist_lex_less,
    families,
    final_fix,
    identity_507,
    identity_6476,
    identity_6t,
    lambda_bij,
    lambda_table,
    make_non_nested,
    phi,
    phi_inverse,
    prime_power,
    primitive_solution_search,
    psi,
    suffix_member,
    suffix_set,
    t1_tables,
    to_bits,
)
from wsbflip.tuples import PreconditionError, popcount

GOLDEN = Path(__file__).parent / "golden"


def brute_primitive(n):
    out = []
    for tail in itertools.product((-1, 0, 1), repeat=n - 3):
        for x2 in (0, 1):
            x = (1, x2) + tail
            if sum(v * comb(n, i) for i, v in enumerate(x, start=1)) == 1:
                out.append(x)
    return out


@pytest.mark.parametrize("n", range(4, 13))
def test_search_against_brute_force(n):
    brute = sorted(brute_primitive(n))
    assert sorted(s.x for s in all_primitive_solutions(n)) == brute
    if prime_power(n):
        assert not brute
    best = primitive_solution_search(n)
    assert (best is None) == (not brute)


def test_known_solutions():
    assert primitive_solution_search(6).x == (1, 1, -1, 0, 0)
    assert primitive_solution_search(6).tunnels == 20
    assert primitive_solution_search(8) is None
    assert len(all_primitive_solutions(15)) == 42
    x15 = PrimitiveSolution(15, (1, 0, 1, -1, 1, -1, 0, 0, 0, 1, 0, 0, -1, 0))
    assert x15 in all_primitive_solutions(15)
    assert canonical_6t(12).x == (1, 0, -1, 1, 0, -1, 1, 0, -1, 1, 0)
    fam = families(canonical_6t(12))
    assert len(fam.sigma) == len(fam.lam) + 1


def test_identities():
    assert identity_507() == (507, 507)
    assert identity_6476() == (6476, 6476)
    for t in range(1, 6):
        a, b = identity_6t(t)
        assert a == b


def regex_suffix(pattern):
    body = pattern.replace("[01]*", "(?:01)*").replace("[10]*", "(?:10)*")
    return re.compile("[01]*" + body)


@pytest.mark.parametrize("pat", ["0[01]*", "1[10]*", "11[01]*", "10[01]*", "1[10]*00[01]*", "00[10]*00[01]*"])
def test_suffix_membership_against_regex(pat):
    rx = regex_suffix(pat)
    for n in range(1, 11):
        for S in range(1 << n):
            s = to_bits(S, n)
            assert suffix_member(s, pat) == bool(rx.fullmatch(s)), (pat, s)


def test_suffix_set_sizes():
    assert sorted(suffix_set(4, "0[01]*")) == ["0000", "0001", "0010", "0100", "0110", "1000", "1001", "1010", "1100", "1110"]
    assert all(not primitive_solution_search(n) for n in (10, 14))


def test_phi_small_bijection():
    n = 8
    for t in range(n):
        dom = [S for S in range(1 << n) if popcount(S) == t and suffix_member(to_bits(S, n), "0[01]*")]
        img = [phi(n, t, S) for S in dom]
        assert len(set(img)) == len(img)
        assert all(S & ~T == 0 and S != T for S, T in zip(dom, img))
        assert [phi_inverse(n, t + 1, T) for T in img] == dom


def test_psi_and_lambda():
    assert psi(6, 6, 0b111111) == 0b001111  # 111111 -> 111100
    assert to_bits(lambda_bij(1, 0), 6) == "000001"
    with pytest.raises(PreconditionError):
        lambda_bij(1, int("010101"[::-1], 2))
    tab = lambda_table(1)
    assert len(tab) == 21 and len(set(tab.values())) == 21


def test_t1_tables_match_golden():
    for name, rows in t1_tables().items():
        assert (GOLDEN / f"{name}.tsv").read_text() == "\n".join(rows) + "\n", name


def test_final_fix_t1():
    fx = final_fix(1)
    assert fx.vertices == ("010101", "010111", "010110", "011110", "011100", "111100")


def test_comparable_matching_6t():
    for t in (1, 2):
        cm = comparable_matching_6t(t)
        fam = families(canonical_6t(6 * t))
        assert cm.validate(fam.sigma_minus_n, fam.lam) == []


def random_comparable_matching(n, rng):
    """Families drawn from several levels below and above a split, so nesting can occur."""
    while True:
        m = rng.randint(1, n - 2)
        small = [S for S in range(1, 1 << n) if popcount(S) <= m]
        big = [S for S in range(1, 1 << n) if m < popcount(S) < n]
        small = rng.sample(small, min(len(small), 12))
        rng.shuffle(big)
        used, pairs = set(), {}
        for S in small:
            T = next((T for T in big if T & S == S and T not in used), None)
            if T is not None:
                used.add(T)
                pairs[S] = T
        if len(pairs) >= 2:
            return ComparableMatching(n, pairs)


def test_non_nested_repair_small():
    rng = random.Random(5)
    nested_inputs = 0
    for _ in range(30):
        cm = random_comparable_matching(rng.randint(4, 7), rng)
        nested_inputs += not cm.is_non_nested()
        log = RepairLog()
        out = make_non_nested(cm, log)
        assert out.is_non_nested()
        assert out.validate(cm.pairs.keys(), cm.pairs.values()) == []
        for a, b in zip(log.dist_trace, log.dist_trace[1:]):
            assert dist_lex_less(b, a)
    assert nested_inputs > 0


def test_final_fix_steps():
    for t in (1, 2, 3):
        vs = [int(v[::-1], 2) for v in final_fix(t).vertices]
        for a, b in zip(vs, vs[1:]):
            assert a & b in (a, b) and a != b
            if t == 1:
                assert popcount(a ^ b) == 1
