import random

import numpy as np
import pytest

from wsbflip.assembly import (
    LambdaMatching,
    ProtocolArtifact,
    UnsupportedN,
    expected_critical,
    fault_inject,
    pipeline,
    rho_fast,
    rho_vertex,
    rho_vertex_lazy,
    unsupported_message,
    verify_symmetry_breaking,
)
from wsbflip.flipgraph import decode_vertex
from wsbflip.sim import batch_simulate, random_full_tuple
from wsbflip.tuples import decode_tuple, full_mask

LITERAL_CASE2_WITNESS = "1,2,3|4,5,6||2,6|3|4|5|1||2,3,4,5,6|1"


def test_unsupported():
    with pytest.raises(UnsupportedN):
        pipeline(8)
    assert "prime power" in unsupported_message(9)
    assert "no primitive solution" in unsupported_message(10)


def test_certificate_n6(art6):
    rep = art6.engine().verify()
    assert rep.ok and rep.critical_count == 0
    assert rep.matched == rep.vertices == int(art6.engine().mono.sum())
    assert len(art6.provenance) == 20


def test_lambda_fast_path_matches_reference(art6):
    lab = art6.labeler()
    rng = random.Random(2)
    for _ in range(3000):
        s = random_full_tuple(6, rng)
        S = rng.randrange(1, 64)
        x = rng.choice([i for i in range(1, 7) if S >> (i - 1) & 1])
        assert lab._direct(s, S, x) == lab.lam_reference(s, S, x)


def test_rho_implementations_agree(art6):
    eng = art6.engine()
    rng = np.random.default_rng(4)
    i = rng.integers(0, eng.N, size=(3, 400))
    vals, unm = rho_fast(eng, i[0], i[1], i[2])
    assert not unm.any()
    lazy_art = ProtocolArtifact(6, art6.x, art6.matching)
    for r in range(400):
        sigma = tuple(eng.fi.tups[int(i[q, r])] for q in range(3))
        ref = rho_vertex(sigma, art6)
        assert tuple(int(v) for v in vals[r]) == ref
        assert rho_vertex_lazy(sigma, lazy_art) == ref


def test_rho_on_matched_extensions(art6):
    """Extensions of matched monochromatic α exercise cases 2 and 3."""
    eng = art6.engine()
    rng = np.random.default_rng(5)
    g = rng.choice(np.nonzero(eng.mono)[0], 300)
    for a in g.tolist():
        s1, s2 = eng.vertex(a)
        for s3 in random.Random(a).sample(eng.fi.tups, 5):
            out = rho_vertex((s1, s2, s3), art6)
            assert len(set(out)) == 2


def test_literal_case2_counterexample(art6):
    v = decode_vertex(LITERAL_CASE2_WITNESS)
    assert len(set(rho_vertex(v, art6, literal_case2=True))) == 1
    assert len(set(rho_vertex(v, art6))) == 2


def test_fault_injection_is_detected(art6):
    bad = fault_inject(art6, seed=0)
    assert bad.fault_edges > 0
    rep = bad.dense.verify()
    assert rep.critical_count > 0
    sim = batch_simulate(6, 10**6, 1, bad, workers=1)
    assert sim.failed > 0 or sim.integrity > 0


def test_targeted_scope_small_compliance(art6):
    rep = verify_symmetry_breaking(art6, "sampled", samples=50_000, seed=3, compliance_samples=500)
    assert rep.ok and rep.checked == 50_000 and rep.compliance_checked == 500


def test_expected_critical_cases():
    from wsbflip.diophantine import primitive_solution_search

    x = primitive_solution_search(6)
    assert expected_critical(decode_tuple("1,2,3,4,5,6"), x) == 1
    assert expected_critical(decode_tuple("1|2|3,4,5,6"), x) == 0
    k_in_I = x.I[0]
    S = full_mask(k_in_I)
    assert expected_critical((S, full_mask(6) & ~S), x) == 1


def test_n12_compact_roundtrip(art12, tmp_path):
    assert art12.x.x == (1, 0, -1, 1, 0, 0, 0, 0, -1, -1, 0)
    assert len(art12.provenance) == 506
    art12.save(tmp_path)
    back = ProtocolArtifact.load(tmp_path)
    assert back.x == art12.x
    assert back.matching.to_json() == art12.matching.to_json()
    assert len(back.provenance) == 506
    rng = random.Random(8)
    for _ in range(200):
        sigma = tuple(random_full_tuple(12, rng) for _ in range(3))
        out = rho_vertex_lazy(sigma, back)
        assert out == rho_vertex_lazy(sigma, art12) and len(set(out)) == 2
