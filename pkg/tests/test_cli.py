import shutil
from pathlib import Path

import pytest

from wsbflip.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.fixture(scope="module")
def saved6(art6, tmp_path_factory):
    out = tmp_path_factory.mktemp("a6")
    art6.save(out)
    return out


def test_unsupported_n(capsys):
    assert run(capsys, "build", "--n", "8", "--out", "/tmp/never")[0] == 2
    assert run(capsys, "build", "--n", "4", "--out", "/tmp/never")[0] == 2
    assert run(capsys, "search", "--n", "10")[0] == 2


def test_search(capsys):
    code, out = run(capsys, "search", "--n", "6")
    assert code == 0 and "x=1,1,-1,0,0" in out


def test_export_lambda_table_matches_golden(capsys, tmp_path):
    code, _ = run(capsys, "export", "lambda-table", "--n", "6", "--out", str(tmp_path))
    assert code == 0
    for g in GOLDEN.glob("*.tsv"):
        assert (tmp_path / g.name).read_bytes() == g.read_bytes()
    assert len((tmp_path / "lambda.tsv").read_text().splitlines()) == 21


def test_sampled_needs_seed(capsys, saved6):
    assert run(capsys, "verify", str(saved6), "--mode", "sampled")[0] == 2


def test_verify_and_simulate_small(capsys, saved6, tmp_path):
    code, out = run(capsys, "verify", str(saved6), "--mode", "sampled", "--seed", "1", "--trials", "20000", "--pairs", "200", "--out", str(tmp_path))
    assert code == 0, out
    assert "result=ok" in out and (tmp_path / "verify_summary.txt").exists()
    code, out = run(capsys, "simulate", str(saved6), "--trials", "10000", "--seed", "2", "--workers", "1")
    assert code == 0 and "fail=0" in out


def test_corrupted_certificate_is_a_violation(capsys, saved6, tmp_path):
    bad = tmp_path / "bad"
    shutil.copytree(saved6, bad)
    lines = (bad / "matching.txt").read_text().splitlines(keepends=True)
    del lines[1000]
    (bad / "matching.txt").write_text("".join(lines))
    code, out = run(capsys, "verify", str(bad), "--mode", "sampled", "--seed", "1", "--trials", "1000", "--pairs", "10")
    assert code == 1 and "first_violation" in out


def test_export_path_system(capsys, saved6, tmp_path):
    code, out = run(capsys, "export", "path-system", str(saved6), "--out", str(tmp_path))
    assert code == 0 and "paths=20" in out
