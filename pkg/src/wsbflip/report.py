"""Delimited report files and matplotlib figures for CLI runs."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_tsv(path: Path, rows: Iterable[Mapping]) -> Path:
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    keys: list = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, delimiter="\t", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path


def plot_tunnels(records, n: int, path: Path) -> Path:
    """Histogram of augmenting-path lengths, split by tunnel fiber count."""
    by_d: dict[int, list[int]] = {}
    for r in records:
        by_d.setdefault(r.fibers, []).append(r.length)
    fig, ax = plt.subplots(figsize=(6, 4))
    for d in sorted(by_d):
        ax.hist(by_d[d], bins=20, alpha=0.7, label=f"{d} fibers")
    ax.set_xlabel("augmenting path length (vertices)")
    ax.set_ylabel("tunnels")
    ax.set_title(f"n={n}: {len(records)} tunnels")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_cases(cases: Mapping[str, Mapping[str, int]], path: Path) -> Path:
    """Level-3 vertices checked per proof case, with monochromatic counts."""
    names = sorted(cases)
    checked = [cases[k]["vertices"] for k in names]
    bad = [cases[k]["monochromatic"] for k in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = range(len(names))
    ax.bar([x - 0.2 for x in xs], checked, width=0.4, label="checked")
    ax.bar([x + 0.2 for x in xs], bad, width=0.4, label="monochromatic")
    ax.set_xticks(list(xs), [f"case {k}" for k in names])
    ax.set_yscale("symlog")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_outcomes(passed: int, failed: int, path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.bar(["pass", "fail"], [passed, failed], color=["tab:green", "tab:red"])
    ax.set_yscale("symlog")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
