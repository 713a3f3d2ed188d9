import random

import pytest

from wsbflip.flipgraph import SubgraphSpec
from wsbflip.matching import (
    AltPath,
    Matching,
    OrderR,
    apply_alternating,
    critical_vertices,
    height,
    predicted_critical,
    remove_cycles,
    standard_matching,
    standard_partner,
    validate_path,
    verify_matching,
)
from wsbflip.tuples import PreconditionError, decode_tuple, full_mask, ordered_partitions, submasks

D = decode_tuple


def test_height_and_partner():
    R = OrderR((3, 4), 0b0011)
    assert height(D("1|2|3|4"), R) == 0
    assert height(D("1|2|3,4"), R) == 2
    assert standard_partner(D("1|2|3,4"), R) == (D("1|2|4|3"), 4)
    assert standard_partner(D("1|2|3|4"), R) is None


def test_standard_matching_is_valid_everywhere():
    rng = random.Random(3)
    for n in (3, 4):
        for V in range(full_mask(n)):
            vt = [t for m in submasks(V) for t in ordered_partitions(m)]
            om = frozenset(t for t in vt if rng.random() < 0.5)
            spec = SubgraphSpec(V, om)
            mu = standard_matching(n, V, omega=om)
            rep = verify_matching(spec, mu, n)
            assert rep.ok, rep.violations[:3]
            assert sorted(rep.critical) == sorted(critical_vertices(mu, spec, n))


def test_predicted_critical_small():
    spec = SubgraphSpec.from_text([1, 2], ["1", "1|2", "2,1"])
    R = OrderR.ascending(4, 0b11)
    assert predicted_critical(spec, R, 4) == [D("1,2|3|4"), D("1|2|3|4")]
    mu = standard_matching(4, 0b11, R, spec.omega)
    assert critical_vertices(mu, spec, 4) == predicted_critical(spec, R, 4)


def test_alternating_path_application():
    R = OrderR.ascending(3, 0)
    mu = standard_matching(3, 0, R)
    crit = critical_vertices(mu, SubgraphSpec(0), 3)
    assert crit == [D("1|2|3")]
    gamma = AltPath([D("1|2|3"), D("1,2|3")], [1], [False])
    assert validate_path(gamma, mu.partner) == []
    with pytest.raises(PreconditionError):
        apply_alternating(mu, gamma)  # 1,2|3 is matched outside the path


def test_remove_cycles():
    a, b, c = D("1|2|3"), D("1,2|3"), D("2|1|3")
    g = AltPath([a, b, a, b, c], [1, 1, 1, 1], [False, True, False, True])
    r = remove_cycles(g)
    assert r.vertices == [a, b, c]
    assert r.flags == [False, True]


def test_matching_rejects_double_use():
    mu = Matching()
    mu.add(D("1|2"), D("1,2"), 1)
    with pytest.raises(PreconditionError):
        mu.add(D("1|2"), D("2|1"), 2)
