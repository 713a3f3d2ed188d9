"""Command line: build, verify, simulate, search, export.

Exit codes: 0 success, 1 verification violation, 2 unsupported input,
3 internal fault.  Every command is deterministic given its flags.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np

from .assembly import (
    DENSE_MAX_N,
    ArtifactIntegrityError,
    DenseEngine,
    ProtocolArtifact,
    UnsupportedN,
    fiber_statistics,
    pipeline,
    random_fiber_checks,
    unsupported_message,
    verify_symmetry_breaking,
)
from .conductivity import ConductionError, disjoint_path_system
from .diophantine import (
    ComparableMatching,
    PrimitiveSolution,
    RepairLog,
    SearchBudgetExceeded,
    all_primitive_solutions,
    comparable_matching_6t,
    families,
    from_bits,
    lambda_table,
    make_non_nested,
    prime_power,
    t1_tables,
    to_bits,
)
from .tuples import PreconditionError

OK, VIOLATION, UNSUPPORTED, FAULT = 0, 1, 2, 3


class Unsupported(click.ClickException):
    exit_code = UNSUPPORTED


def _workers_option(f):
    return click.option(
        "--workers",
        type=click.IntRange(min=1),
        default=lambda: os.cpu_count() or 1,
        show_default="machine parallelism",
        help="Worker processes; results do not depend on this.",
    )(f)


def _emit(lines) -> None:
    for line in lines:
        click.echo(line)


def _parse_x(text: str | None, n: int) -> PrimitiveSolution | None:
    if text is None:
        return None
    try:
        return PrimitiveSolution(n, tuple(int(v) for v in text.split(",")))
    except (ValueError, PreconditionError) as e:
        raise Unsupported(f"bad solution vector: {e}")


def _load(path: Path) -> ProtocolArtifact:
    try:
        return ProtocolArtifact.load(path)
    except (OSError, ValueError, KeyError) as e:
        raise Unsupported(f"cannot read artifact at {path}: {e}")


@click.group()
def cli() -> None:
    """Flip-graph pipeline for 3-round weak symmetry breaking."""


@cli.command()
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Number of processes.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True, help="Artifact directory.")
@click.option("--x", "xtext", default=None, help="Solution vector x1..x_{n-1}, comma separated; default: fewest tunnels.")
@_workers_option
def build(n: int, out: Path, xtext: str | None, workers: int) -> int:
    """Construct the matching artifact for N processes."""
    if n < 5:
        raise Unsupported(f"n={n}: the construction needs n >= 5")
    if prime_power(n):
        raise Unsupported(unsupported_message(n))
    try:
        art = pipeline(n, _parse_x(xtext, n))
    except UnsupportedN as e:
        raise Unsupported(str(e))
    info = art.save(out)
    st = fiber_statistics(art)
    lines = [
        f"n={n}",
        f"x={art.x.encode()}",
        f"tunnels={info['tunnels']} augmenting_paths={info['tunnels'] + 1}",
        f"sigma={st['sigma']} lambda={st['lambda']} repair_swaps={art.repair_swaps}",
        f"tunnel_fibers={st['tunnel_fibers']} path_vertices={st['path_vertices']} max_path={st['max_path']}",
        f"fiber_orders={len(art.matching.orders)} overrides={len(art.matching.overrides) // 2}",
    ]
    if "edges" in info:
        lines.append(f"certificate_edges={info['edges']}")
    _emit(lines)
    from .report import plot_tunnels, write_tsv

    write_tsv(out / "tunnels.tsv", ({"S": to_bits(r.S, n), "partner": to_bits(r.T, n), "fibers": r.fibers, "length": r.length} for r in art.provenance))
    plot_tunnels(art.provenance, n, out / "tunnels.png")
    return OK


def _lambda_cm_check(n: int) -> tuple[list[str], bool]:
    """Λ restricted to proper sets plus the final fix, and its non-nested repair."""
    t = n // 6
    tab = lambda_table(t)
    bij = len(set(tab.values())) == len(tab) and all(S & T in (S, T) for S, T in tab.items())
    cm = comparable_matching_6t(t)
    probs = cm.validate()
    log = RepairLog()
    fixed = make_non_nested(cm, log)
    return [
        f"lambda_bijection={'ok' if bij else 'FAIL'} sets={len(tab)}",
        f"lambda_comparable={'ok' if not probs else 'FAIL'} pairs={len(cm.pairs)} repair_swaps={log.swaps} non_nested={fixed.is_non_nested()}",
    ], bij and not probs and fixed.is_non_nested()


@cli.command()
@click.argument("artifact", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice(["targeted", "sampled"]), default="targeted", show_default=True)
@click.option("--seed", type=int, default=None, help="Required in sampled mode; targeted mode uses it for compliance pairs (default 0).")
@click.option("--trials", type=click.IntRange(min=0), default=None, help="Sampled level-3 vertices [default: 10^7 for n<=6, 10^6 above].")
@click.option("--pairs", type=click.IntRange(min=0), default=None, help="Compliance node pairs [default: 10^5 for n<=6, 10^3 above].")
@click.option("--fibers", type=click.IntRange(min=0), default=1000, show_default=True, help="Random fibers checked when n > 6.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Directory for the report and figure.")
@_workers_option
def verify(artifact: Path, mode: str, seed, trials, pairs, fibers: int, out, workers: int) -> int:
    """Check the matching and the labeling of ARTIFACT."""
    if mode == "sampled" and seed is None:
        raise click.UsageError("--seed is required in sampled mode")
    art = _load(artifact)
    n = art.n
    dense = n <= DENSE_MAX_N
    if mode == "targeted" and not dense:
        raise Unsupported(f"targeted mode enumerates all level-3 extensions and needs n <= {DENSE_MAX_N}; use --mode sampled")
    if trials is None:
        trials = 10**7 if dense else 10**6
    if pairs is None:
        pairs = 10**5 if dense else 10**3
    lines = [f"n={n}", f"x={art.x.encode()}"]
    first: list[str] = []
    good = True
    if dense:
        eng = DenseEngine(n, art.B)
        cert = artifact / "matching.txt"
        if cert.exists():
            try:
                xh, problems = eng.read_certificate(cert)
            except ArtifactIntegrityError as e:
                problems, xh = [str(e)], art.x.encode()
            if xh != art.x.encode():
                problems.insert(0, f"certificate x={xh} differs from artifact x={art.x.encode()}")
            p, c = eng.partner.copy(), eng.color.copy()
            eng.load(art.matching)
            diff = np.nonzero((p != eng.partner) | (c != eng.color))[0]
            if len(diff):
                problems.append(f"certificate and compact form disagree at {len(diff)} vertices, first {eng.enc(int(diff[0]))}")
            eng.partner, eng.color = p, c
            source = "certificate"
        else:
            problems = []
            eng.load(art.matching)
            source = "compact"
        rep = eng.verify()
        lines.append(
            f"matching source={source} vertices={rep.vertices} matched={rep.matched} "
            f"critical={rep.critical_count} violations={len(rep.violations) + len(problems)} classification={rep.classification}"
        )
        first += problems + rep.violations
        first += [f"critical {eng.enc(eng.gid(v))}" for v in rep.critical]
        good &= rep.ok and not problems and rep.critical_count == 0
        art.dense = eng
    else:
        checks = random_fiber_checks(art, fibers, seed if seed is not None else 0)
        bad = [c for c in checks if c.expected != c.found or not c.genuine]
        lines.append(f"fibers checked={len(checks)} mismatches={len(bad)}")
        first += [f"fiber {c.sigma}: expected {c.expected} critical, found {c.found}" for c in bad]
        good &= not bad
        if n % 6 == 0:
            extra, ok = _lambda_cm_check(n)
            lines += extra
            good &= ok
    sb = verify_symmetry_breaking(art, mode, samples=trials, seed=seed, compliance_samples=pairs)
    lines += sb.lines()[:1] + [ln for ln in sb.lines()[1:] if ln.startswith("case ")]
    first += sb.examples
    good &= sb.ok
    lines.append(f"result={'ok' if good else 'VIOLATION'}")
    if first:
        lines.append(f"first_violation {first[0]}")
    _emit(lines)
    if out is not None:
        from .report import plot_cases, write_tsv

        out.mkdir(parents=True, exist_ok=True)
        (out / "verify_summary.txt").write_text("\n".join(lines) + "\n")
        rows = [{"case": k, **v} for k, v in sorted(sb.cases.items())]
        if rows:
            write_tsv(out / "rho_cases.tsv", rows)
            plot_cases(sb.cases, out / "rho_cases.png")
    return OK if good else VIOLATION


@cli.command()
@click.argument("artifact", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--trials", type=click.IntRange(min=1), default=10**6, show_default=True)
@click.option("--seed", type=int, required=True, help="Execution sampler seed.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Directory for the report and figure.")
@_workers_option
def simulate(artifact: Path, trials: int, seed: int, out, workers: int) -> int:
    """Run the protocol of ARTIFACT on random failure-free executions."""
    from .sim import batch_simulate

    art = _load(artifact)
    rep = batch_simulate(art.n, trials, seed, art, workers=workers)
    lines = [f"n={art.n}", f"seed={seed}"] + rep.lines()
    _emit(lines)
    if out is not None:
        from .report import plot_outcomes

        out.mkdir(parents=True, exist_ok=True)
        (out / "simulate_summary.txt").write_text("\n".join(lines) + "\n")
        plot_outcomes(rep.passed, rep.failed, out / "simulate.png", f"n={art.n}, {rep.trials} executions")
    return OK if rep.failed == 0 else VIOLATION


@cli.command()
@click.option("--n", "n", type=click.IntRange(min=2), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write the table as TSV.")
def search(n: int, out) -> int:
    """List primitive solutions for N with their family sizes."""
    if prime_power(n):
        raise Unsupported(unsupported_message(n))
    try:
        sols = all_primitive_solutions(n)
    except SearchBudgetExceeded as e:
        raise Unsupported(str(e))
    if not sols:
        raise Unsupported(unsupported_message(n))
    rows = []
    for k, s in enumerate(sols):
        fam = families(s)
        lhs = "+".join(f"C({n},{i})" for i in s.I)
        rhs = "+".join(f"C({n},{j})" for j in (0,) + s.J)
        value = len(fam.sigma)
        rows.append(
            {
                "rank": k,
                "x": s.encode(),
                "tunnels": s.tunnels,
                "sigma": len(fam.sigma),
                "lambda": len(fam.lam),
                "identity": f"{lhs}={rhs}={value}",
            }
        )
    click.echo(f"n={n} solutions={len(sols)}")
    for r in rows:
        click.echo("\t".join(f"{k}={v}" for k, v in r.items()))
    if out is not None:
        from .report import write_tsv

        write_tsv(out, rows)
    return OK


@cli.command()
@click.argument("what", type=click.Choice(["lambda-table", "path-system", "matching-table"]))
@click.argument("artifact", required=False, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--n", "n", type=click.IntRange(min=6), default=None, help="n = 6t for lambda-table.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
def export(what: str, artifact, n, out: Path) -> int:
    """Write Λ tables, the standard path system, or the comparable matching."""
    out.mkdir(parents=True, exist_ok=True)
    if what == "lambda-table":
        if n is None or n % 6:
            raise Unsupported("lambda-table needs --n divisible by 6")
        t = n // 6
        tab = lambda_table(t)
        (out / "lambda.tsv").write_text("".join(f"{to_bits(S, n)}\t{to_bits(T, n)}\n" for S, T in sorted(tab.items(), key=lambda p: to_bits(p[0], n))))
        written = ["lambda.tsv"]
        if t == 1:
            for name, rows in t1_tables().items():
                (out / f"{name}.tsv").write_text("\n".join(rows) + "\n")
                written.append(f"{name}.tsv")
        _emit(f"wrote {w}" for w in written)
        return OK
    if artifact is None:
        raise click.UsageError(f"{what} needs an ARTIFACT directory")
    art = _load(artifact)
    cm_path = artifact / "comparable.tsv"
    if not cm_path.exists():
        raise Unsupported(f"{cm_path} is missing")
    pairs = {}
    for line in cm_path.read_text().splitlines():
        a, b = line.split("\t")
        pairs[from_bits(a)] = from_bits(b)
    cm = ComparableMatching(art.n, pairs)
    if what == "matching-table":
        (out / "matching_table.tsv").write_text("\n".join(cm.lines()) + "\n")
        _emit([f"wrote matching_table.tsv pairs={len(cm.pairs)}"])
        return OK
    paths = disjoint_path_system(cm.well_ordered_pairs(), art.n)
    with open(out / "path_system.txt", "w") as fh:
        for p, g in zip(cm.well_ordered_pairs(), paths):
            fh.write(f"# S={to_bits(p.S, art.n)} T={to_bits(p.T, art.n)} order={','.join(map(str, p.order))}\n")
            fh.write("\n".join(g.serialize()) + "\n")
    _emit([f"wrote path_system.txt paths={len(paths)}"])
    return OK


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="wsbflip", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return UNSUPPORTED if isinstance(e, click.UsageError) else e.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return FAULT
    except (UnsupportedN, PreconditionError) as e:
        click.echo(f"error: {e}", err=True)
        return UNSUPPORTED
    except (ConductionError, AssertionError, RuntimeError) as e:
        click.echo(f"internal fault: {type(e).__name__}: {e}", err=True)
        return FAULT
    except Exception as e:  # noqa: BLE001
        click.echo(f"internal fault: {type(e).__name__}: {e}", err=True)
        return FAULT
    return rv if isinstance(rv, int) else OK


if __name__ == "__main__":
    sys.exit(main())
