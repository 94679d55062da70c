"""SVG figures rendered purely from a results CSV."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import METHODS, crossover_table, read_results_csv, summarize  # noqa: E402

plt.rcParams["svg.hashsalt"] = "distgl"
MARKERS = {"distributed": "o", "centralized": "s", "baseline": "^"}
METRICS = ("normalized_frobenius", "frobenius", "wasserstein")


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit_plots(csv_path, out_dir) -> list[Path]:
    """Accuracy-vs-cost scatter per metric, plus the cost-difference curve when present."""
    rows = [r for r in read_results_csv(Path(csv_path)) if not r.get("error")]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in METRICS:
        fig, ax = plt.subplots(figsize=(6, 4))
        for meth in METHODS:
            pts = [(r["total_messages"], r[metric]) for r in rows if r["method"] == meth]
            if pts:
                xs, ys = zip(*pts)
                ax.scatter(xs, ys, marker=MARKERS[meth], label=meth, alpha=0.8)
        ax.set_xlabel("total messages")
        ax.set_ylabel(metric.replace("_", " "))
        if rows:
            ax.legend()
        written.append(_save(fig, out / f"{metric}_vs_cost.svg"))

    cross = crossover_table(summarize(rows)) if rows else []
    if len(cross) > 1:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([c["mean_degree"] for c in cross], [c["delta_cost"] for c in cross], "o-")
        ax.axhline(0.0, color="grey", lw=0.8)
        ax.set_xlabel("mean degree of the communication graph")
        ax.set_ylabel("centralized - distributed messages")
        written.append(_save(fig, out / "delta_cost_vs_degree.svg"))
    return written
