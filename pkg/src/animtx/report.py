"""Recommendation reports: ranked candidates and counts as CSV, scores as a PNG."""

from __future__ import annotations

import csv
from pathlib import Path

from . import docio
from .grammar import serialize_transition


def write_candidates_csv(rec, path: Path, top: int | None = None) -> None:
    picked = rec.candidates if top is None else rec.candidates[:top]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "stages", "score", "stage_scores", "durations_ms", "signature"])
        for i, c in enumerate(picked, 1):
            w.writerow([i, c.n, f"{c.score:.12g}", ";".join(f"{s:.12g}" for s in c.stage_scores),
                        ";".join(str(d) for d in c.durations), c.signature])


def write_counts_csv(rec, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stages", "component", "raw", "pruned", "surviving", "candidates"])
        for c in rec.counts:
            for comp, (raw, pruned, surv) in c.components.items():
                w.writerow([c.n, comp, raw, pruned, surv, ""])
            w.writerow([c.n, "*", c.raw, c.pruned, c.surviving, c.combined])


def plot_scores(rec, path: Path, top: int | None = None) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    picked = rec.candidates if top is None else rec.candidates[:top]
    colors = {1: "#4c78a8", 2: "#f58518", 3: "#54a24b", 4: "#e45756"}
    fig, ax = plt.subplots(figsize=(6.4, 3.6), dpi=100)
    xs = range(1, len(picked) + 1)
    ax.bar(xs, [c.score for c in picked], color=[colors.get(c.n, "#999999") for c in picked])
    for n in sorted({c.n for c in picked}):
        ax.bar([], [], color=colors.get(n, "#999999"), label=f"{n} stage{'s' if n > 1 else ''}")
    ax.set_xlabel("rank")
    ax.set_ylabel("complexity")
    ax.set_title(f"candidates ({rec.model}, {rec.total_ms} ms)")
    if picked:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_report(rec, out_dir, top: int | None = None) -> list[Path]:
    """Write specs, CSVs, a JSON summary and a score chart into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    picked = rec.candidates if top is None else rec.candidates[:top]
    written = []
    for i, c in enumerate(picked, 1):
        p = out / f"candidate-{i:02d}.json"
        p.write_text(serialize_transition(c.spec, pretty=True) + "\n", encoding="utf-8")
        written.append(p)
    paths = {"candidates": out / "candidates.csv", "counts": out / "counts.csv",
             "summary": out / "report.json", "chart": out / "scores.png"}
    write_candidates_csv(rec, paths["candidates"], top)
    write_counts_csv(rec, paths["counts"])
    paths["summary"].write_text(docio.dumps(rec.to_doc(top), pretty=True) + "\n", encoding="utf-8")
    plot_scores(rec, paths["chart"], top)
    return written + list(paths.values())
