"""Grid runner: generate instances, run every method, write results.csv and summaries."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import product
from pathlib import Path

import numpy as np

from .graph import edge_differences
from .init_protocol import run_initialization
from .ledger import PHASES, MessageLedger, Transport
from .loop import (GlobalRunConfig, run_baseline_logdegree, run_centralized,
                   run_distributed)
from .metrics import build_report
from .synth import GenConfig, generate_instance

log = logging.getLogger(__name__)

KINDS = ("sparse_sweep", "dense_sweep", "sparsity_crossover", "signal_sweep", "single")
METHODS = ("distributed", "centralized", "baseline")

CSV_COLUMNS = [
    "experiment", "method", "n_nodes", "radius", "radius_factor", "removal_rate", "n_signals",
    "seed", "mean_degree", "n_comm_edges", "n_data_edges", "frobenius", "normalized_frobenius",
    "wasserstein", "wasserstein_nonzero", "total_messages", *PHASES, "rounds_used", "converged",
    "init_rounds", "transport_ok", "error",
]
SUMMARY_COLUMNS = [
    "experiment", "method", "n_nodes", "radius_factor", "n_signals", "n_seeds", "mean_degree",
    "frobenius", "normalized_frobenius", "wasserstein", "wasserstein_nonzero", "total_messages",
]


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "single"
    n_nodes: tuple = (100,)
    # radius = factor / sqrt(N)
    radius_factors: tuple = (2.0,)
    removal_rate: float = 0.5
    n_signals: tuple = (1000,)
    seeds: tuple = (0,)
    methods: tuple = METHODS
    run: GlobalRunConfig = field(default_factory=GlobalRunConfig)
    gen: dict = field(default_factory=dict)
    output_dir: str = "results"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        for name in ("n_nodes", "radius_factors", "n_signals", "seeds", "methods"):
            val = tuple(getattr(self, name))
            object.__setattr__(self, name, val)
            if not val:
                raise ValueError(f"{name} must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if isinstance(self.run, dict):
            object.__setattr__(self, "run", GlobalRunConfig(**self.run))

    def grid(self):
        return list(product(self.n_nodes, self.radius_factors, self.n_signals, self.seeds))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["run"] = asdict(self.run)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        if "run" in d:
            d["run"] = GlobalRunConfig(**d["run"])
        return cls(**d)


def preset(kind: str, full_scale: bool = False) -> ExperimentSpec:
    """Default grids; ``full_scale`` selects the full-size grid (hours of CPU)."""
    if kind in ("sparse_sweep", "dense_sweep"):
        factor = 2.0 if kind == "sparse_sweep" else 3.0
        if full_scale:
            return ExperimentSpec(kind, (150, 350, 550, 750, 950), (factor,), 0.5, (5000,), (0,))
        return ExperimentSpec(kind, (50, 100, 150, 200, 300), (factor,), 0.5, (1000,), (0, 1, 2))
    if kind == "sparsity_crossover":
        if full_scale:
            factors = tuple(float(f) for f in np.round(np.linspace(2.0, 3.0, 9), 6))
            return ExperimentSpec(kind, (500,), factors, 0.7, (5000,), (0,))
        factors = tuple(float(f) for f in np.round(np.linspace(1.6, 3.4, 10), 6))
        return ExperimentSpec(kind, (200,), factors, 0.7, (5000,), (0, 1, 2),
                              methods=("distributed", "centralized"))
    if kind == "signal_sweep":
        if full_scale:
            return ExperimentSpec(kind, (300,), (2.0,), 0.5, tuple(range(1000, 10001, 1000)), (0,))
        return ExperimentSpec(kind, (100,), (2.0,), 0.5, tuple(range(100, 1001, 100)), (0, 1, 2))
    if kind == "single":
        return ExperimentSpec()
    raise ValueError(f"unknown experiment kind {kind!r}")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def run_grid_point(spec: ExperimentSpec, n: int, factor: float, m: int, seed: int) -> list[dict]:
    """All methods on one generated instance; failures are recorded per row."""
    gcfg = GenConfig(n_nodes=n, radius=factor / math.sqrt(n), removal_rate=spec.removal_rate,
                     n_signals=m, seed=seed, **spec.gen)
    base = {
        "experiment": spec.kind, "n_nodes": n, "radius": gcfg.radius, "radius_factor": factor,
        "removal_rate": spec.removal_rate, "n_signals": m, "seed": seed,
    }
    try:
        g, d, X = generate_instance(gcfg)
    except Exception as e:  # noqa: BLE001 - recorded in the row
        return [dict(base, method=meth, error=f"{type(e).__name__}: {e}") for meth in spec.methods]
    base.update(mean_degree=g.mean_degree, n_comm_edges=g.n_edges,
                n_data_edges=int(np.count_nonzero(d.weights.values)))
    support = g.edge_index
    rows = []
    Z_central = None
    for meth in spec.methods:
        row = dict(base, method=meth)
        try:
            ledger = MessageLedger()
            tr = Transport(g.adjacency)
            if meth == "distributed":
                Z = run_initialization(g, X, ledger, tr)
                res = run_distributed(g, Z, spec.run, ledger=ledger, transport=tr)
                row["init_rounds"] = Z.rounds
            else:
                if Z_central is None:
                    Z_central = edge_differences(X, g)
                if meth == "centralized":
                    res = run_centralized(g, Z_central, spec.run, m, ledger, tr)
                else:
                    res = run_baseline_logdegree(g, Z_central, cfg=spec.run, n_signals=m,
                                                 ledger=ledger, transport=tr)
            rep = build_report(res.learned, d.weights, res.ledger, support)
            row.update(rep.as_row())
            row.update(rounds_used=res.rounds_used, converged=res.converged,
                       transport_ok=tr.matches(res.ledger))
        except Exception as e:  # noqa: BLE001 - recorded in the row
            log.warning("%s failed at N=%d factor=%g M=%d seed=%d: %s", meth, n, factor, m, seed, e)
            row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_results_csv(path_or_text) -> list[dict]:
    """Parse a results CSV, raising ValueError with the offending row number."""
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = {"method", "total_messages", "normalized_frobenius"} - set(reader.fieldnames)
    if missing:
        raise ValueError(f"results CSV missing columns {sorted(missing)}")
    out = []
    for lineno, r in enumerate(reader, start=2):
        if None in r or any(v is None for v in r.values()):
            raise ValueError(f"row {lineno}: wrong number of fields")
        try:
            parsed = dict(r)
            for k in ("total_messages", "n_nodes", "n_signals", "seed"):
                if r.get(k):
                    parsed[k] = int(r[k])
            for k in ("frobenius", "normalized_frobenius", "wasserstein", "wasserstein_nonzero",
                      "mean_degree", "radius", "radius_factor"):
                if r.get(k):
                    parsed[k] = float(r[k])
        except ValueError as e:
            raise ValueError(f"row {lineno}: {e}") from None
        out.append(parsed)
    return out


def summarize(rows) -> list[dict]:
    groups: dict = {}
    for r in rows:
        if r.get("error"):
            continue
        key = (r["experiment"], r["method"], r["n_nodes"], r["radius_factor"], r["n_signals"])
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], METHODS.index(k[1]) if k[1] in METHODS else 9, *k[2:])):
        rs = groups[key]
        agg = dict(zip(("experiment", "method", "n_nodes", "radius_factor", "n_signals"), key))
        agg["n_seeds"] = len(rs)
        for c in ("mean_degree", "frobenius", "normalized_frobenius", "wasserstein",
                  "wasserstein_nonzero", "total_messages"):
            agg[c] = float(np.mean([float(r[c]) for r in rs]))
        out.append(agg)
    return out


def crossover_table(summary) -> list[dict]:
    """Mean cost difference (centralized - distributed) per radius factor."""
    by = {}
    for s in summary:
        by.setdefault((s["n_nodes"], s["radius_factor"], s["n_signals"]), {})[s["method"]] = s
    out = []
    for key in sorted(by):
        ms = by[key]
        if "distributed" in ms and "centralized" in ms:
            out.append({
                "n_nodes": key[0], "radius_factor": key[1], "n_signals": key[2],
                "mean_degree": ms["distributed"]["mean_degree"],
                "delta_cost": ms["centralized"]["total_messages"] - ms["distributed"]["total_messages"],
            })
    return out


def _dicts_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _run_point(args):
    return run_grid_point(*args)


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1) -> dict:
    """Run the whole grid; returns rows and summary and writes files when ``out_dir`` is set.

    Output is identical for any ``jobs`` because rows are kept in grid order.
    """
    tasks = [(spec, *pt) for pt in spec.grid()]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            chunks = list(ex.map(_run_point, tasks))
    else:
        chunks = [_run_point(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    summary = summarize(rows)
    result = {"rows": rows, "summary": summary, "results_csv": rows_to_csv(rows),
              "summary_csv": _dicts_to_csv(summary, SUMMARY_COLUMNS)}
    if spec.kind == "sparsity_crossover":
        cross = crossover_table(summary)
        result["crossover"] = cross
        result["crossover_csv"] = _dicts_to_csv(
            cross, ["n_nodes", "radius_factor", "n_signals", "mean_degree", "delta_cost"])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(result["results_csv"])
        (out / "summary.csv").write_text(result["summary_csv"])
        if "crossover_csv" in result:
            (out / "crossover.csv").write_text(result["crossover_csv"])
        (out / "config.json").write_text(json.dumps(spec.to_dict(), indent=1, sort_keys=True) + "\n")
    return result
