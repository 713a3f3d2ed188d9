import itertools
import random

import pytest

from wsbflip.patterns import (
    Node,
    NodeLabeling,
    PatternSet,
    adjacent_node,
    adjacent_nodes,
    check_compliance,
    compose,
    equicarrier_samples,
    is_monochromatic,
    lambda_B,
    m_lambda_fiber,
    normal_form,
    omega,
    p_minus,
    p_plus,
    parent,
    pattern_labeling,
    wsb6_patterns,
)
from wsbflip.tuples import PreconditionError, decode_tuple, encode_tuple, full_tuples, mask, ordered_partitions

D = decode_tuple


def vectors(n):
    for x2 in (0, 1):
        for tail in itertools.product((-1, 0, 1), repeat=n - 3):
            yield (1, x2) + tail


def fiber_oracle(sigma, B, n):
    """0-monochromatic τ in the fiber over σ, by evaluating all n adjacent nodes."""
    L = pattern_labeling(B)
    return {tau for tau in full_tuples(n) if is_monochromatic((sigma, tau), L, 0)}


def test_adjacent_nodes_examples():
    v = D("1|2,3")
    assert adjacent_node(v, 2) == Node.level1(3, 0b111, 2)
    assert adjacent_node(v, 1) == Node.level1(3, 0b001, 1)
    w = (D("1|2,3"), D("1|2|3"))
    nd = adjacent_node(w, 2)
    assert nd.S == 0b011 and nd.comps[0] == (D("1|2,3"), D("1|2"))
    for x in (1, 2):
        assert adjacent_node((D("1|2,3"), D("3|1,2")), x).internal


def test_adjacency_injective_and_parent_identity():
    n = 4
    tups = full_tuples(n)
    for s in tups:
        for t in tups:
            nodes = adjacent_nodes((s, t))
            assert len(set(nodes)) == n
            for x, nd in enumerate(nodes, start=1):
                assert parent(nd) == adjacent_node(s, x)


def test_normal_form_idempotent():
    rng = random.Random(1)
    from wsbflip.patterns import random_node

    for _ in range(200):
        v = random_node(6, 2, rng)
        f = normal_form(v)
        assert normal_form(f) == f
        if v.internal:
            assert f == v


def test_compose():
    got = {encode_tuple(t) for t in compose(p_minus(3))}
    assert got == {"1", "1|2", "1,2", "1|2|3", "1|2,3", "1,2|3"}
    assert compose(frozenset()) == frozenset()
    for k in range(1, 5):
        chain = {tuple(1 << i for i in range(j)) for j in range(1, k + 1)}
        assert compose(p_plus(k)) == chain
        # brute force over all [k]-tuple prefixes
        brute = set()
        for m in range(1, 1 << k):
            for t in ordered_partitions(m):
                acc, ok = 0, True
                for C in t:
                    acc |= C
                    ok &= all((acc, 1 << (x - 1)) in p_plus(k) for x in range(1, k + 1) if C >> (x - 1) & 1)
                if ok:
                    brute.add(t)
        assert brute == chain


def test_lambda_B_cases():
    B = PatternSet.from_vector((1, 1, -1, 0, 0))
    internal = adjacent_node((D("1,2,3,4,5,6"), D("1|2|3|4|5|6")), 6)
    assert internal.internal and lambda_B(internal, B) == 0
    two_top = adjacent_node((D("1|2|3,4,5,6"), D("1|2|3|4|5|6")), 2)
    assert not two_top.internal and len(two_top.comps[0][0]) == 2
    assert lambda_B(two_top, B) == 1
    # (top {2,4,6}; bottom {2,4}) ‖ ({2,4},4) normalizes to (({1,2}),2) ∈ P_3^-
    v = Node(6, (((mask([2, 4, 6]),), (mask([2, 4]),)), ((mask([2, 4]),), (mask([4]),))))
    assert lambda_B(v, PatternSet.from_lists(6, {3: [(s, x) for s, x in [({1}, 1), ({1, 2}, 2), ({1, 2, 3}, 3), ({1, 2}, 1), ({1, 2, 3}, 2)]]})) == 0
    assert (mask([1, 2]), 1 << 1) in p_minus(3)


def test_wsb6_equals_generated():
    assert wsb6_patterns().by_k == PatternSet.from_vector((1, 1, -1, 0, 0)).by_k


def test_omega_examples():
    B = PatternSet.from_vector((1, 1, -1, 0, 0))
    assert {encode_tuple(t) for t in omega(B, D("1,2,3|4,5,6"))} == {"1", "1|2", "1,2", "1|2|3", "1|2,3", "1,2|3"}
    assert {encode_tuple(t) for t in omega(B, D("1,2|3,4,5,6"))} == {"1", "1|2"}
    assert omega(B, D("1,2,3,4,5,6")) == frozenset()
    assert m_lambda_fiber(D("1,2,3,4,5,6"), B).V == 0


@pytest.mark.parametrize("x", list(vectors(4)))
def test_fiber_isomorphism_exhaustive_n4(x):
    B = PatternSet.from_vector(x)
    for sigma in full_tuples(4):
        spec = m_lambda_fiber(sigma, B)
        assert {t for t in full_tuples(4) if spec.member(t)} == fiber_oracle(sigma, B, 4), encode_tuple(sigma)


def test_fiber_isomorphism_sampled_n6():
    B = PatternSet.from_vector((1, 1, -1, 0, 0))
    rng = random.Random(7)
    tups = full_tuples(6)
    for sigma in rng.sample(tups, 40):
        spec = m_lambda_fiber(sigma, B)
        assert {t for t in tups if spec.member(t)} == fiber_oracle(sigma, B, 6), encode_tuple(sigma)


def test_monochromatic_basics():
    B = PatternSet.from_vector((1, 1, -1, 0, 0))
    L = pattern_labeling(B)
    zero = NodeLabeling(lambda v: 0)
    rng = random.Random(3)
    tups = full_tuples(6)
    for _ in range(300):
        v = (rng.choice(tups), rng.choice(tups))
        assert not is_monochromatic(v, L, 1)
        assert is_monochromatic(v, zero, 0)


def test_compliance():
    B = PatternSet.from_vector((1, 1, -1, 0, 0))
    samples = equicarrier_samples(6, 2, 2000, seed=4)
    assert check_compliance(pattern_labeling(B), samples).ok
    target = next(v for v, t in samples if not v.internal and t != v.carrier)
    broken = NodeLabeling(lambda v: 1 - lambda_B(v, B) if v == target else lambda_B(v, B))
    other = next(t for v, t in samples if v is target)
    assert not check_compliance(broken, [(target, other)]).ok
    internal = adjacent_node((D("1|2|3|4|5|6"), D("1|2|3|4|5|6")), 6)
    assert check_compliance(broken, [(internal, internal.carrier)]).ok


def test_pattern_validation():
    with pytest.raises(PreconditionError):
        PatternSet(4, (frozenset({(0b11, 0b100)}), frozenset(), frozenset()))
    with pytest.raises(PreconditionError):
        p_minus(2)
    B = PatternSet.from_vector((1, 0, -1, 1))
    assert PatternSet.from_text(B.to_text()) == B
