import pytest

from wsbflip.conductivity import (
        KitPathSpec,
    WellOrderedPair,
    conduct_endpoint_minus,
    conduct_endpoint_plus,
    conduct_tunnel_step,
    connector_of,
    disjoint_path_system,
    ds,
    kit_path,
    nested,
    standard_pst,
)
from wsbflip.flipgraph import SubgraphSpec
from wsbflip.matching import OrderR, standard_partner
from wsbflip.tuples import PreconditionError, bit, decode_tuple, encode_tuple, mask

D = decode_tuple


def test_kit_examples():
    R = OrderR.ascending(5, mask([1]))
    g = kit_path(KitPathSpec("swapI_k", 3, D("5|4|1|2|3"), R, SubgraphSpec(mask([1]))))
    assert len(g) == 5 and g.end == D("5|4|2|1|3")
    g = kit_path(KitPathSpec("upI_k", 1, D("5|2|3|4|1"), R, SubgraphSpec(mask([1]))))
    assert g.end == D("2|5|3|4|1")
    V = mask([1, 2, 3, 4])
    om = frozenset(D(s) for s in ["1", "1|2", "1|2|3", "1|2|3|4", "1,2", "1,2|3", "1,2|3|4", "1|2,3", "1|2,3|4"])
    g = kit_path(KitPathSpec("star", 0, D("1,5|2|3|4"), OrderR((5,), V), SubgraphSpec(V, om)))
    assert g.end == D("1,2|3|4|5")


def test_kit_rejects_illegal_and_small():
    R = OrderR.ascending(5, mask([1, 2]))
    with pytest.raises(PreconditionError):
        kit_path(KitPathSpec("upI_k", 1, D("5|2|3|4|1"), R, SubgraphSpec(mask([1, 2]))))
    with pytest.raises(PreconditionError):
        kit_path(KitPathSpec("swapI_k", 3, D("4|3|1|2"), OrderR.ascending(4, 1), SubgraphSpec(1)))


def test_tunnel_step_lemmas():
    R, p, c = conduct_tunnel_step(connector_of(D("5|2|3|4|1")), 3, mask([1]), frozenset(), "to_f")
    assert c.terminal == 3 and c.kind == "second"
    assert p.flags[0] and p.flags[-1]
    R, p, c = conduct_tunnel_step(connector_of(D("2,5|3|4|1")), None, mask([1]), frozenset(), "to_a1")
    assert c.kind == "first" and c.terminal == 5


def test_endpoint_lemmas():
    V = mask([1, 2])
    R, p = conduct_endpoint_plus(V, frozenset([D("1"), D("1|2")]), connector_of(D("5|1|2|3|4")))
    assert standard_partner(p.start, R) is None and p.start == D("1|2|3|4|5")
    V = mask([1, 2, 3])
    om = frozenset(D(s) for s in ["1", "1|2", "1|2|3", "1,2", "1,2|3", "1|2,3"])
    R, pair, p, c = conduct_endpoint_minus(V, om, 2, n=6)
    assert c.kind == "second" and c.terminal == 2
    assert set(pair) == {D("1|2|3|4|5|6"), D("1|2,3|4|5|6")}


def test_standard_path_example():
    g = standard_pst(WellOrderedPair.canonical(mask([1]), mask([1, 2])), 4)
    assert g.start == D("1,2|3,4") and g.end == D("1|2,3,4")
    with pytest.raises(PreconditionError):
        standard_pst(WellOrderedPair.canonical(1, 0b1111), 4)


def test_ds_and_nesting():
    assert ds(D("1|2|3,4|5")) == D("1,2,3,4|5")
    assert ds(D("1|2|3")) == D("1,2,3")
    for s in ["1,2|3,4", "1,2|3,4|5", "1,2,3|4"]:
        assert ds(D(s)) == D(s)
    outer = WellOrderedPair.canonical(mask([1]), mask([1, 2, 3, 4]))
    inner = WellOrderedPair.canonical(mask([1, 2]), mask([1, 2, 3]))
    assert nested(outer, inner) and nested(inner, outer)
    side = WellOrderedPair.canonical(mask([4]), mask([4, 5, 6]))
    assert not nested(outer, side)
    same_s = WellOrderedPair.canonical(mask([1]), mask([1, 2]))
    assert not nested(outer, same_s)  # containment must be strict on both sides


def test_path_system_detects_nesting():
    outer = WellOrderedPair.canonical(mask([1]), mask([1, 2, 3, 4]))
    inner = WellOrderedPair.canonical(mask([1, 2]), mask([1, 2, 3]))
    with pytest.raises(PreconditionError):
        disjoint_path_system([outer, inner], 6)
    with pytest.raises(PreconditionError):
        disjoint_path_system([outer, WellOrderedPair.canonical(mask([1]), mask([1, 2]))], 6)
    ok = [WellOrderedPair.canonical(mask([1]), mask([1, 2, 3])), WellOrderedPair.canonical(mask([4]), mask([4, 5, 6]))]
    assert len(disjoint_path_system(ok, 7)) == 2
