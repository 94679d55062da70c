"""Command line entry point: ``distgl {gen,run,sweep,plot,verify}``."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import tomli

from .experiment import KINDS, ExperimentSpec, preset, run_experiment
from .io import write_instance
from .synth import GenConfig, generate_instance

OUTPUT_ENV = "DISTGL_OUTPUT_DIR"


def _int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _float_list(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _out_dir(arg, default: str) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or default)


def load_spec(args, kind_default: str) -> ExperimentSpec:
    if args.config:
        with open(args.config, "rb") as fh:
            spec = ExperimentSpec.from_dict(tomli.load(fh))
    else:
        spec = preset(args.preset or kind_default, getattr(args, "full_scale", False))
    overrides = {}
    if args.nodes:
        overrides["n_nodes"] = _int_list(args.nodes)
    if args.signals:
        overrides["n_signals"] = _int_list(args.signals)
    if args.seeds:
        overrides["seeds"] = _int_list(args.seeds)
    if args.radius_factors:
        overrides["radius_factors"] = _float_list(args.radius_factors)
    if args.removal is not None:
        overrides["removal_rate"] = args.removal
    if args.methods:
        overrides["methods"] = tuple(args.methods.split(","))
    if args.eta is not None:
        overrides["run"] = replace(spec.run, eta=args.eta)
    return replace(spec, **overrides) if overrides else spec


def cmd_gen(args) -> int:
    radius = args.radius if args.radius is not None else args.radius_factor / math.sqrt(args.nodes)
    cfg = GenConfig(args.nodes, radius=radius, removal_rate=args.removal if args.removal is not None else 0.5,
                    n_signals=args.signals, seed=args.seed)
    g, d, X = generate_instance(cfg)
    out = write_instance(_out_dir(args.out, "instance"), g, d, X, cfg)
    print(f"wrote N={g.n_nodes} |E|={g.n_edges} mean degree {g.mean_degree:.2f} M={X.shape[1]} to {out}")
    return 0


def _run_spec(args, kind_default: str) -> int:
    spec = load_spec(args, kind_default)
    out = _out_dir(args.out, f"{spec.output_dir}/{spec.kind}")
    res = run_experiment(spec, out, jobs=args.jobs)
    for s in res["summary"]:
        print(f"{s['method']:>12} N={s['n_nodes']:<4} f={s['radius_factor']:<5g} M={s['n_signals']:<5} "
              f"deg={s['mean_degree']:6.2f} nfrob={s['normalized_frobenius']:.3f} "
              f"msgs={s['total_messages']:.0f}")
    errors = sum(1 for r in res["rows"] if r.get("error"))
    if errors:
        print(f"{errors} rows recorded errors; see results.csv", file=sys.stderr)
    print(f"wrote {out}/results.csv")
    return 0


def cmd_run(args) -> int:
    return _run_spec(args, "single")


def cmd_sweep(args) -> int:
    return _run_spec(args, "sparse_sweep")


def cmd_plot(args) -> int:
    from .plotting import emit_plots

    try:
        paths = emit_plots(Path(args.csv), _out_dir(args.out, str(Path(args.csv).parent)))
    except ValueError as e:
        print(f"malformed CSV: {e}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_all

    only = set(_int_list(args.only)) if args.only else None
    results = run_all(only)
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def _add_spec_args(p):
    p.add_argument("--config", help="TOML experiment file; flags below override it")
    p.add_argument("--preset", choices=KINDS)
    p.add_argument("--nodes", help="comma-separated N values")
    p.add_argument("--signals", help="comma-separated M values")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--radius-factors", help="comma-separated c in radius = c/sqrt(N)")
    p.add_argument("--removal", type=float)
    p.add_argument("--methods", help="subset of distributed,centralized,baseline")
    p.add_argument("--eta", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distgl", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="materialize a graph/signal instance to disk")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--signals", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius", type=float)
    p.add_argument("--radius-factor", type=float, default=2.0)
    p.add_argument("--removal", type=float)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("run", help="run one experiment (default: single instance)")
    _add_spec_args(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run a grid (default: sparse_sweep preset)")
    _add_spec_args(p)
    p.add_argument("--full-scale", action="store_true", help="use the full-size grid")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("plot", help="render SVG figures from a results CSV")
    p.add_argument("csv")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
