from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsbflip.tuples import (
    CoherentPair,
    PreconditionError,
    decode_tuple,
    delete,
    elems,
    encode_tuple,
    fubini,
    full_mask,
    full_tuples,
    normalizer,
    restrict,
    support,
    v_prefix,
)


def brute_ordered_partitions(n):
    """Independent count: surjections [n] -> [k] summed over k."""
    import itertools

    total = 0
    for k in range(1, n + 1):
        total += sum(1 for f in itertools.product(range(k), repeat=n) if len(set(f)) == k)
    return total


def test_fubini_counts():
    assert [len(full_tuples(n)) for n in range(1, 7)] == [1, 3, 13, 75, 541, 4683]
    assert [fubini(n) for n in range(1, 7)] == [1, 3, 13, 75, 541, 4683]
    assert [brute_ordered_partitions(n) for n in range(1, 6)] == [1, 3, 13, 75, 541]


@st.composite
def full_tuple(draw, n_max=12):
    n = draw(st.integers(1, n_max))
    perm = draw(st.permutations(list(range(1, n + 1))))
    cuts = sorted(draw(st.sets(st.integers(1, n - 1), max_size=n - 1))) if n > 1 else []
    blocks, prev = [], 0
    for c in cuts + [n]:
        blocks.append(sum(1 << (x - 1) for x in perm[prev:c]))
        prev = c
    return n, tuple(blocks)


@given(full_tuple())
def test_encode_roundtrip(nt):
    n, t = nt
    assert decode_tuple(encode_tuple(t), n) == t
    assert support(t) == full_mask(n)


def test_compact_form_only_below_ten():
    assert decode_tuple("12|3") == (0b011, 0b100)
    assert decode_tuple("12|3", 12) == (1 << 11, 0b100)
    assert decode_tuple("10|1,2", 10) == (1 << 9, 0b11)
    with pytest.raises(PreconditionError):
        decode_tuple("10|1,2")  # digit form has id 0
    with pytest.raises(PreconditionError):
        decode_tuple("1,2|2")


@settings(max_examples=200)
@given(full_tuple(n_max=8), st.data())
def test_restriction_is_coherent_and_idempotent(nt, data):
    n, t = nt
    cp = CoherentPair.of_full(t)
    if n == 1:
        return
    T = data.draw(st.integers(1, full_mask(n) - 1))
    r = restrict(cp, T)
    assert r.color == T
    for a, b in zip(r.top, r.bottom):
        assert b & ~a == 0
    sub = [x for x in elems(T)]
    if len(sub) > 1:
        U = 1 << (sub[0] - 1)
        assert restrict(r, U) == restrict(cp, U)
    if T != full_mask(n):
        assert delete(cp, full_mask(n) & ~T) == r


def test_restriction_example():
    cp = CoherentPair.of_full(decode_tuple("1,2|3|4|5|6"))
    r = restrict(cp, 0b10111)
    assert r.encode() == "1,2|3|4,5::1,2|3|5"
    assert restrict(r, 0b10001).encode() == "1,2|3,4,5::1|5"
    assert restrict(CoherentPair.of_full(decode_tuple("1|2")), 1).encode() == "1::1"


def test_normalizer_is_order_preserving():
    nz = normalizer(0b101100)
    assert [nz(x) for x in (3, 4, 6)] == [1, 2, 3]
    assert nz.inverse_tuple(nz.apply_tuple((0b100000, 0b001100))) == (0b100000, 0b001100)


def test_v_prefix():
    t = decode_tuple("1|2,3|4")
    assert v_prefix(t, 0b0111) == (0b1, 0b110)
    assert v_prefix(t, 0b1000) == ()


def test_fubini_recurrence_vs_closed_sum():
    # a(n) = sum_k k! S(n,k)
    def stirling(n, k):
        return sum((-1) ** j * comb(k, j) * (k - j) ** n for j in range(k + 1)) // __import__("math").factorial(k)

    import math

    for n in range(1, 15):
        assert fubini(n) == sum(math.factorial(k) * stirling(n, k) for k in range(1, n + 1))
