"""Command-line interface.

Subcommands: gen-graphs, sweep, attack, mf, classical, report.
Exit codes: 0 success, 2 usage/config, 3 numerical-failure quota, 4 I/O.
Flag precedence: flags > config file > defaults. SPINNET_OUTPUT_ROOT, when
set, is prepended to relative output paths.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np
import pandas as pd

from . import experiments as ex
from . import graphs as gr
from . import minet

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_QUOTA = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _resolve_out(path: str) -> str:
    root = os.environ.get("SPINNET_OUTPUT_ROOT")
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _prepare_out_dir(path: str, force: bool) -> str:
    path = _resolve_out(path)
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise CliError(f"output directory {path!r} is not empty; pass --force "
                       "to overwrite", EXIT_CONFIG)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path!r}: {exc}", EXIT_IO)
    return path


def _load_config(args) -> ex.ExperimentConfig:
    try:
        cfg = ex.load_config(args.config)
    except OSError as exc:
        raise CliError(f"cannot read config {args.config!r}: {exc}", EXIT_IO)
    except ex.ConfigError as exc:
        raise CliError(f"invalid config {args.config!r}: {exc}", EXIT_CONFIG)
    overrides = {}
    for flag, field in (("seed", "master_seed"), ("n", "n"),
                        ("ensemble", "ensemble_size"),
                        ("realizations", "realizations")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[field] = val
    if getattr(args, "paper_scale", False):
        overrides.update(n=20, ensemble_size=100, realizations=100)
        grid = len(cfg.h_values or cfg.lambda_values)
        solves = 100 * grid
        print(f"paper scale: n=20, 100 networks x 100 realizations; "
              f"~{solves} ground-state solves at dimension 2^20 -- expect "
              "hours of runtime", file=sys.stderr)
    try:
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        return cfg
    except ex.ConfigError as exc:
        raise CliError(f"invalid configuration after overrides: {exc}", EXIT_CONFIG)


def _attack_overrides(cfg: ex.ExperimentConfig, args) -> ex.ExperimentConfig:
    base = cfg.attack
    fields = {
        "direction": args.direction if args.direction is not None
                     else (base.direction if base else None),
        "q": args.q if args.q is not None else (base.q if base else None),
        "fraction": args.fraction if args.fraction is not None
                    else (base.fraction if base else None),
        "strategy": args.strategy if args.strategy is not None
                    else (base.strategy if base else "random"),
    }
    missing = [k for k, v in fields.items() if v is None]
    if missing:
        raise CliError(f"attack parameters missing (config or flags): {missing}",
                       EXIT_CONFIG)
    try:
        return dataclasses.replace(cfg, attack=ex.AttackSpec(**fields))
    except ex.ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG)


def cmd_gen_graphs(args) -> int:
    try:
        spec = ex.ModelSpec(kind=args.model, p=args.p, K=args.K, m=args.m,
                            require_connected=args.require_connected)
    except ex.ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    out = _prepare_out_dir(args.out, args.force)
    pooled = {"k": [], "C": [], "d": []}
    for idx in range(args.count):
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 1, idx]))
        try:
            g = spec.generate(args.n, rng)
        except gr.GraphSpecError as exc:
            raise CliError(str(exc), EXIT_CONFIG)
        gr.write_graph(g, os.path.join(out, f"graph_{idx:04d}.txt"))
        k, c, d = gr.unweighted_measures(g)
        pooled["k"].append(k.astype(float))
        pooled["C"].append(c)
        pooled["d"].append(minet.pair_values(d))
    rows = []
    for meas, chunks in pooled.items():
        x = np.concatenate(chunks)
        finite = x[np.isfinite(x)]
        counts, edges = np.histogram(finite, bins=ex.HISTOGRAM_BINS)
        for left, right, cnt in zip(edges[:-1], edges[1:], counts):
            rows.append({"measure": meas, "bin_left": left, "bin_right": right,
                         "count": int(cnt),
                         "excluded_infinite_count": int(x.size - finite.size)})
    ex._write_csv(pd.DataFrame(rows), os.path.join(out, "measures.csv"))
    return EXIT_OK


def _run_and_write(cfg, runner, args, extra_meta=None) -> int:
    out = _prepare_out_dir(args.out, args.force)
    try:
        result = runner(cfg, jobs=args.jobs)
    except ex.SolverQuotaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUOTA
    try:
        ex.write_run(result, cfg, out, extra_meta=extra_meta)
    except OSError as exc:
        raise CliError(f"cannot write results to {out!r}: {exc}", EXIT_IO)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if cfg.attack is not None:
        cfg = dataclasses.replace(cfg, attack=None)
    return _run_and_write(cfg, ex.run_ground_state_sweep, args)


def cmd_attack(args) -> int:
    cfg = _attack_overrides(_load_config(args), args)
    return _run_and_write(cfg, ex.run_attack_experiment, args)


def cmd_mf(args) -> int:
    cfg = _load_config(args)
    return _run_and_write(cfg, ex.run_mf_pipeline, args)


def cmd_classical(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise CliError(f"bad --sizes value {args.sizes!r}", EXIT_CONFIG)
    out = _prepare_out_dir(args.out, args.force)
    try:
        table = ex.run_classical_attack_study(sizes, args.count, args.fraction,
                                              args.seed)
    except ex.ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    try:
        ex._write_csv(table, os.path.join(out, "results.csv"))
        hist_dir = os.path.join(out, "histograms")
        os.makedirs(hist_dir, exist_ok=True)
        for (n, model, strategy, meas), x in sorted(table.attrs["samples"].items()):
            finite = x[np.isfinite(x)]
            counts, edges = np.histogram(finite, bins=ex.HISTOGRAM_BINS)
            df = pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:],
                               "count": counts})
            ex._write_csv(df, os.path.join(
                hist_dir, f"n{n}_{model}_{strategy}_{meas}.csv"))
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}", EXIT_IO)
    return EXIT_OK


def cmd_report(args) -> int:
    tables = {}
    for d in args.inputs:
        path = os.path.join(d, "results.csv")
        if not os.path.exists(path):
            raise CliError(f"{d!r} has no results.csv", EXIT_CONFIG)
        tables[os.path.basename(os.path.normpath(d))] = ex.read_results_csv(path)
    out = _prepare_out_dir(args.out, args.force)
    try:
        curves, summary = ex.collapse_report(tables)
    except ex.ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    ex._write_csv(curves, os.path.join(out, "collapse_curves.csv"))
    ex._write_csv(summary, os.path.join(out, "collapse_summary.csv"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinnet",
        description="Transverse-Ising ground states on complex networks and "
                    "their emergent mutual-information networks")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-graphs", help="generate imprinted networks")
    g.add_argument("--model", required=True, choices=["er", "ws", "ba"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--K", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--require-connected", action="store_true")
    g.add_argument("--out", required=True)
    g.add_argument("--force", action="store_true")
    g.set_defaults(func=cmd_gen_graphs)

    def common(p, attack=False):
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--ensemble", type=int)
        p.add_argument("--realizations", type=int)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--paper-scale", action="store_true")
        p.add_argument("--force", action="store_true")
        if attack:
            p.add_argument("--direction", choices=["x", "z"])
            p.add_argument("--q", type=float)
            p.add_argument("--fraction", type=float)
            p.add_argument("--strategy", choices=["random", "preferential"])

    s = sub.add_parser("sweep", help="ground-state sweep without attacks")
    common(s)
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("attack", help="projective-measurement attack sweep")
    common(a, attack=True)
    a.set_defaults(func=cmd_attack)

    m = sub.add_parser("mf", help="mean-field pipeline")
    common(m)
    m.set_defaults(func=cmd_mf)

    c = sub.add_parser("classical", help="classical node-removal study")
    c.add_argument("--sizes", default="20,54")
    c.add_argument("--count", type=int, default=1000)
    c.add_argument("--fraction", type=float, default=0.2)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--force", action="store_true")
    c.set_defaults(func=cmd_classical)

    r = sub.add_parser("report", help="normalized collapse report")
    r.add_argument("inputs", nargs="+")
    r.add_argument("--out", required=True)
    r.add_argument("--force", action="store_true")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
