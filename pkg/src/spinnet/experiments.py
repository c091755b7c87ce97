"""Ensemble orchestration: graph ensembles, ground-state sweeps, attack
experiments, mean-field pipelines, classical node-removal studies, and the
normalized collapse report.

Reproducibility contract: every stochastic choice draws from a Generator
seeded by SeedSequence([master_seed, purpose_tag, indices...]), so reruns
with the same config are bit-identical regardless of worker count, and
adding realizations never perturbs earlier ones.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from . import graphs as gr
from . import hilbert, meanfield, minet
from . import quantum_state as qs

SCHEMA_COMMENT = "# schema=1"
MEASURES = ("k_over_n1", "C", "d")
HISTOGRAM_BINS = 40

# SeedSequence purpose tags
_TAG_GRAPH = 1
_TAG_ATTACK = 2
_TAG_CLASSICAL = 3


class ConfigError(ValueError):
    pass


class SolverQuotaError(RuntimeError):
    """More ground-state solves failed than the configured quota allows."""


@dataclass(frozen=True)
class ModelSpec:
    kind: str                      # 'er' | 'ws' | 'ba'
    p: float = None                # ER link / WS rewiring probability
    K: int = None                  # WS mean degree
    m: int = None                  # BA attachments
    require_connected: bool = True

    def __post_init__(self):
        if self.kind not in ("er", "ws", "ba"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.kind == "er" and (self.p is None or not 0 <= self.p <= 1):
            raise ConfigError(f"ER needs p in [0, 1], got {self.p}")
        if self.kind == "ws":
            if self.K is None or self.K % 2 or self.K <= 0:
                raise ConfigError(f"WS needs a positive even K, got {self.K}")
            if self.p is None or not 0 <= self.p <= 1:
                raise ConfigError(f"WS needs rewiring p in [0, 1], got {self.p}")
        if self.kind == "ba" and (self.m is None or self.m < 1):
            raise ConfigError(f"BA needs m >= 1, got {self.m}")

    def nominal_z(self, n: int) -> float:
        return gr.nominal_coordination(self.kind, n, p=self.p, K=self.K, m=self.m)

    def generate(self, n: int, rng: np.random.Generator) -> gr.Graph:
        return gr.generate(self.kind, n, rng, p=self.p, K=self.K, m=self.m,
                           require_connected=self.require_connected)


@dataclass(frozen=True)
class AttackSpec:
    direction: str                 # 'x' | 'z'
    q: float
    fraction: float
    strategy: str                  # 'random' | 'preferential'

    def __post_init__(self):
        if self.direction not in ("x", "z"):
            raise ConfigError(f"attack direction must be x or z, got {self.direction!r}")
        if not 0.0 <= self.q <= 1.0:
            raise ConfigError(f"attack strength q must be in [0, 1], got {self.q}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigError(f"attack fraction must be in [0, 1], got {self.fraction}")
        if self.strategy not in ("random", "preferential"):
            raise ConfigError(f"unknown attack strategy {self.strategy!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n: int
    ensemble_size: int
    master_seed: int
    J: float = 1.0
    h_values: tuple = None         # either explicit fields ...
    lambda_values: tuple = None    # ... or a dimensionless grid (h = lam*Z*J)
    realizations: int = 1
    attack: AttackSpec = None
    solver_tol: float = 1e-10
    solver_max_iter: int = 10_000
    mf_tol: float = 1e-12
    mf_max_iter: int = 500_000
    failure_quota: float = 0.05

    def __post_init__(self):
        if self.ensemble_size < 1 or self.realizations < 1:
            raise ConfigError("ensemble_size and realizations must be >= 1")
        if (self.h_values is None) == (self.lambda_values is None):
            raise ConfigError("exactly one of h_values / lambda_values is required")
        vals = self.h_values if self.h_values is not None else self.lambda_values
        if any(v < 0 for v in vals):
            raise ConfigError("h and lambda values must be >= 0")
        object.__setattr__(self, "h_values",
                           tuple(self.h_values) if self.h_values is not None else None)
        object.__setattr__(self, "lambda_values",
                           tuple(self.lambda_values) if self.lambda_values is not None else None)

    @property
    def nominal_z(self) -> float:
        return self.model.nominal_z(self.n)

    def field_grid(self):
        """List of (h, lambda) points."""
        z = self.nominal_z
        if self.h_values is not None:
            return [(h, h / (z * self.J)) for h in self.h_values]
        return [(lam * z * self.J, lam) for lam in self.lambda_values]

    def graph_rng(self, g_idx: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.master_seed, _TAG_GRAPH, g_idx]))

    def attack_rng(self, g_idx: int, realization: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.master_seed, _TAG_ATTACK, g_idx, realization]))

    def graph(self, g_idx: int) -> gr.Graph:
        return self.model.generate(self.n, self.graph_rng(g_idx))


def default_h_grid(J: float = 1.0) -> tuple:
    """h = 0 plus 13 logarithmically spaced points in [0.25, 16] (times J)."""
    return (0.0,) + tuple(float(J) * v for v in np.logspace(np.log10(0.25), np.log10(16.0), 13))


def config_to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["model"] = asdict(config.model)
    d["attack"] = asdict(config.attack) if config.attack else None
    return d


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    model = data.get("model")
    if not isinstance(model, dict):
        raise ConfigError("config requires a 'model' object")
    mk = set(model) - set(ModelSpec.__dataclass_fields__)
    if mk:
        raise ConfigError(f"unknown model keys: {sorted(mk)}")
    data["model"] = ModelSpec(**model)
    attack = data.get("attack")
    if attack is not None:
        ak = set(attack) - set(AttackSpec.__dataclass_fields__)
        if ak:
            raise ConfigError(f"unknown attack keys: {sorted(ak)}")
        data["attack"] = AttackSpec(**attack)
    for key in ("h_values", "lambda_values"):
        if data.get(key) is not None:
            data[key] = tuple(data[key])
    return ExperimentConfig(**data)


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    return config_from_dict(data)


def choose_attack_targets(net: minet.MINetwork, fraction: float, strategy: str,
                          rng: np.random.Generator) -> tuple:
    """round(fraction*n) distinct target nodes.

    random: uniform without replacement. preferential: sequential weighted
    sampling without replacement with weights fixed at the pre-attack
    weighted degrees.
    """
    n = net.n
    n_t = int(round(fraction * n))
    if n_t == 0:
        return ()
    if strategy == "random":
        return tuple(sorted(rng.choice(n, size=n_t, replace=False).tolist()))
    if strategy != "preferential":
        raise ConfigError(f"unknown strategy {strategy!r}")
    weights = minet.weighted_degree(net).copy()
    remaining = list(range(n))
    chosen = []
    for _ in range(n_t):
        w = weights[remaining]
        total = w.sum()
        probs = w / total if total > 0 else np.full(len(remaining), 1.0 / len(remaining))
        pick = int(rng.choice(len(remaining), p=probs))
        chosen.append(remaining.pop(pick))
    return tuple(sorted(chosen))


def _network_samples(net: minet.MINetwork) -> dict:
    n1 = net.n - 1
    return {
        "k_over_n1": minet.weighted_degree(net) / n1,
        "C": minet.weighted_clustering(net),
        "d": minet.pair_values(minet.weighted_shortest_paths(net)),
    }


def _finite_mean(x: np.ndarray) -> float:
    x = x[np.isfinite(x)]
    return float(x.mean()) if x.size else np.inf


# ---------------------------------------------------------------------------
# worker tasks (module-level for pickling)

def _sweep_task(args):
    cfg_dict, g_idx, h_idx = args
    cfg = config_from_dict(cfg_dict)
    h, _lam = cfg.field_grid()[h_idx]
    graph = cfg.graph(g_idx)
    try:
        gs = hilbert.ground_state(
            hilbert.build_hamiltonian(graph, hilbert.HamiltonianParams(cfg.J, h)),
            tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
    except hilbert.ConvergenceError as exc:
        return {"g_idx": g_idx, "h_idx": h_idx, "failed": True, "error": str(exc)}
    net = minet.build_mi_network(gs.amplitudes)
    samples = _network_samples(net)
    return {"g_idx": g_idx, "h_idx": h_idx, "failed": False,
            "samples": samples,
            "network_means": {k: _finite_mean(v) for k, v in samples.items()}}


def _attack_task(args):
    cfg_dict, g_idx, h_idx = args
    cfg = config_from_dict(cfg_dict)
    atk = cfg.attack
    h, _lam = cfg.field_grid()[h_idx]
    graph = cfg.graph(g_idx)
    try:
        gs = hilbert.ground_state(
            hilbert.build_hamiltonian(graph, hilbert.HamiltonianParams(cfg.J, h)),
            tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
    except hilbert.ConvergenceError as exc:
        return {"g_idx": g_idx, "h_idx": h_idx, "failed": True, "error": str(exc)}
    pair_rdms = qs.all_pair_rdms(gs.amplitudes)
    base = minet.mi_network_from_pair_rdms(cfg.n, pair_rdms)
    pooled = {m: [] for m in MEASURES}
    for r in range(cfg.realizations):
        rng = cfg.attack_rng(g_idx, r)
        targets = choose_attack_targets(base, atk.fraction, atk.strategy, rng)
        net = minet.mi_network_from_pair_rdms(
            cfg.n, pair_rdms, attacked_nodes=targets, direction=atk.direction,
            q=atk.q, base_weights=base.weights)
        for m, v in _network_samples(net).items():
            pooled[m].append(v)
    samples = {m: np.concatenate(v) for m, v in pooled.items()}
    return {"g_idx": g_idx, "h_idx": h_idx, "failed": False,
            "samples": samples,
            "network_means": {k: _finite_mean(v) for k, v in samples.items()}}


def _mf_task(args):
    cfg_dict, g_idx, h_idx = args
    cfg = config_from_dict(cfg_dict)
    h, _lam = cfg.field_grid()[h_idx]
    graph = cfg.graph(g_idx)
    try:
        sol = meanfield.mf_general_solve(graph, cfg.J, h, tol=cfg.mf_tol,
                                         max_iter=cfg.mf_max_iter)
    except meanfield.MFConvergenceError as exc:
        return {"g_idx": g_idx, "h_idx": h_idx, "failed": True, "error": str(exc)}
    net = meanfield.mf_network(sol.magnetizations)
    samples = _network_samples(net)
    return {"g_idx": g_idx, "h_idx": h_idx, "failed": False,
            "samples": samples,
            "network_means": {k: _finite_mean(v) for k, v in samples.items()}}


# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    table: pd.DataFrame
    samples: dict                   # (h_idx, measure) -> pooled np.ndarray
    network_means: dict             # (h_idx, measure) -> per-network means
    failures: list = field(default_factory=list)
    histograms: dict = field(default_factory=dict)


def _parallel_map(func, tasks, jobs: int):
    if jobs <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def _collect(cfg: ExperimentConfig, task_func, source: str, jobs: int) -> RunResult:
    grid = cfg.field_grid()
    cfg_dict = config_to_dict(cfg)
    tasks = [(cfg_dict, g, hi) for hi in range(len(grid))
             for g in range(cfg.ensemble_size)]
    results = _parallel_map(task_func, tasks, jobs)
    failures = [r for r in results if r["failed"]]
    quota = cfg.failure_quota * len(tasks)
    if len(failures) > quota:
        raise SolverQuotaError(
            f"{len(failures)} of {len(tasks)} solves failed "
            f"(quota {cfg.failure_quota:.0%})")
    samples: dict = {}
    network_means: dict = {}
    for hi in range(len(grid)):
        per_point = [r for r in results
                     if not r["failed"] and r["h_idx"] == hi]
        per_point.sort(key=lambda r: r["g_idx"])    # deterministic reduction
        for m in MEASURES:
            samples[(hi, m)] = (np.concatenate([r["samples"][m] for r in per_point])
                                if per_point else np.array([]))
            network_means[(hi, m)] = np.array([r["network_means"][m] for r in per_point])
    rows = []
    atk = cfg.attack
    for hi, (h, lam) in enumerate(grid):
        for m in MEASURES:
            x = samples[(hi, m)]
            if x.size and np.isfinite(x).any():
                mom = minet.moments(x)
            else:
                # e.g. shortest paths in a fully disconnected MF network
                mom = minet.MeasureMoments(np.inf, 0.0, 0.0, 0, int(x.size))
            rows.append({
                "source": source, "model": cfg.model.kind, "n": cfg.n,
                "J": cfg.J, "h": h, "lam": lam, "measure": m,
                "mean": mom.mean, "width": mom.width, "skew": mom.skewness,
                "sample_count": mom.sample_count,
                "excluded_infinite_count": mom.excluded_infinite_count,
                "per_network_mean": _finite_mean(network_means[(hi, m)]),
                "attack_direction": atk.direction if atk else "none",
                "attack_q": atk.q if atk else 0.0,
                "attack_fraction": atk.fraction if atk else 0.0,
                "attack_strategy": atk.strategy if atk else "none",
                "seed": cfg.master_seed,
            })
    table = pd.DataFrame(rows)
    hists = {}
    for (hi, m), x in samples.items():
        finite = x[np.isfinite(x)]
        if finite.size == 0:
            continue
        counts, edges = np.histogram(finite, bins=HISTOGRAM_BINS)
        hists[(hi, m)] = (edges[:-1], edges[1:], counts)
    return RunResult(table=table, samples=samples, network_means=network_means,
                     failures=[f["error"] for f in failures], histograms=hists)


def run_ground_state_sweep(config: ExperimentConfig, jobs: int = 1) -> RunResult:
    if config.attack is not None:
        raise ConfigError("sweep config must not carry an attack")
    return _collect(config, _sweep_task, "exact", jobs)


def run_attack_experiment(config: ExperimentConfig, jobs: int = 1) -> RunResult:
    if config.attack is None:
        raise ConfigError("attack config requires an attack spec")
    return _collect(config, _attack_task, "exact", jobs)


def run_mf_pipeline(config: ExperimentConfig, jobs: int = 1) -> RunResult:
    """Generalized-MF ensemble table plus MF0 closed-form rows."""
    result = _collect(config, _mf_task, "mf", jobs)
    atk = config.attack
    rows = []
    for hi, (h, lam) in enumerate(config.field_grid()):
        if atk is None:
            mf0 = meanfield.mf0_measures(lam, config.n)
        else:
            mf0 = meanfield.mf0_attacked_mean_measures(
                lam, config.n, atk.fraction, atk.q, atk.direction)
        for m in MEASURES:
            rows.append({
                "source": "mf0", "model": config.model.kind, "n": config.n,
                "J": config.J, "h": h, "lam": lam, "measure": m,
                "mean": mf0[m], "width": 0.0, "skew": 0.0,
                "sample_count": 0, "excluded_infinite_count": 0,
                "per_network_mean": mf0[m],
                "attack_direction": atk.direction if atk else "none",
                "attack_q": atk.q if atk else 0.0,
                "attack_fraction": atk.fraction if atk else 0.0,
                "attack_strategy": atk.strategy if atk else "none",
                "seed": config.master_seed,
            })
    result.table = pd.concat([result.table, pd.DataFrame(rows)], ignore_index=True)
    return result


def collapse_report(tables: dict) -> tuple:
    """Normalized Mean[k]/Mean[k(h=0)] curves per model per input table.

    tables maps a label (e.g. 'before', 'x_q1') to a ResultTable DataFrame.
    Returns (curves DataFrame, deviation summary DataFrame with the max
    pairwise absolute gap across labels per model).
    """
    curves = []
    for label, table in tables.items():
        sub = table[(table["measure"] == "k_over_n1")
                    & (table.get("source", "exact") == "exact")]
        for model, block in sub.groupby("model"):
            block = block.sort_values("lam")
            base = block[block["h"] == 0.0]
            if base.empty:
                raise ConfigError(f"table {label!r} (model {model}) has no h=0 row")
            k0 = float(base["mean"].iloc[0])
            for _, row in block.iterrows():
                curves.append({"model": model, "label": label, "lam": row["lam"],
                               "h": row["h"], "normalized_mean": row["mean"] / k0})
    curves = pd.DataFrame(curves)
    summary = []
    for model, block in curves.groupby("model"):
        grids = {lab: tuple(b.sort_values("lam")["lam"]) for lab, b in block.groupby("label")}
        unique = set(grids.values())
        if len(unique) > 1:
            raise ConfigError(f"lambda grids differ across inputs for model {model}: {grids}")
        pivot = block.pivot_table(index="lam", columns="label", values="normalized_mean")
        vals = pivot.to_numpy()
        dev = float(np.max(np.abs(vals[:, :, None] - vals[:, None, :])))
        summary.append({"model": model, "max_pairwise_deviation": dev})
    return curves, pd.DataFrame(summary)


# default Appendix-style classical parameters per size
CLASSICAL_MODELS = {
    20: [ModelSpec("er", p=0.26), ModelSpec("ws", K=4, p=0.5), ModelSpec("ba", m=3)],
    54: [ModelSpec("er", p=0.04), ModelSpec("ws", K=4, p=0.5), ModelSpec("ba", m=2)],
}


def run_classical_attack_study(sizes, count: int, fraction: float,
                               master_seed: int, models: dict = None) -> pd.DataFrame:
    """Classical node removals: pooled post-removal measures per model, size,
    and strategy, plus a fraction=0 control.

    Returns a long DataFrame with one row per (size, model, strategy, measure)
    carrying pooled moments and the 95th-percentile degree.
    """
    models = models or CLASSICAL_MODELS
    rows = []
    samples_store = {}
    for n in sizes:
        if n not in models:
            raise ConfigError(f"no classical model parameters for n={n}")
        for spec in models[n]:
            model_tag = {"er": 0, "ws": 1, "ba": 2}[spec.kind]
            strategies = ("none", "random", "targeted")
            pooled = {s: {"k": [], "C": [], "d": []} for s in strategies}
            for g_idx in range(count):
                rng = np.random.default_rng(np.random.SeedSequence(
                    [master_seed, _TAG_CLASSICAL, n, model_tag, g_idx]))
                base = spec.generate(n, rng)
                for strategy in strategies:
                    g = base if strategy == "none" else gr.remove_nodes(
                        base, fraction, strategy, rng)
                    k, c, d = gr.unweighted_measures(g)
                    pooled[strategy]["k"].append(k.astype(float))
                    pooled[strategy]["C"].append(c)
                    pooled[strategy]["d"].append(minet.pair_values(d))
            for strategy in strategies:
                for meas, chunks in pooled[strategy].items():
                    x = np.concatenate(chunks)
                    samples_store[(n, spec.kind, strategy, meas)] = x
                    mom = minet.moments(x)
                    row = {"n": n, "model": spec.kind, "strategy": strategy,
                           "fraction": 0.0 if strategy == "none" else fraction,
                           "measure": meas, "mean": mom.mean, "width": mom.width,
                           "skew": mom.skewness, "sample_count": mom.sample_count,
                           "excluded_infinite_count": mom.excluded_infinite_count,
                           "seed": master_seed}
                    if meas == "k":
                        row["p95"] = float(np.percentile(x[np.isfinite(x)], 95))
                    else:
                        row["p95"] = np.nan
                    rows.append(row)
    table = pd.DataFrame(rows)
    table.attrs["samples"] = samples_store
    return table


# ---------------------------------------------------------------------------
# persistence

def _write_csv(df: pd.DataFrame, path) -> None:
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_COMMENT + "\n")
        df.to_csv(f, index=False)


def read_results_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_run(result: RunResult, config: ExperimentConfig, out_dir,
              extra_meta: dict = None) -> None:
    """Write results.csv, histograms/<point>.csv, and meta.json."""
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(result.table, os.path.join(out_dir, "results.csv"))
    hist_dir = os.path.join(out_dir, "histograms")
    os.makedirs(hist_dir, exist_ok=True)
    for (hi, m), (left, right, counts) in sorted(result.histograms.items()):
        df = pd.DataFrame({"bin_left": left, "bin_right": right, "count": counts})
        _write_csv(df, os.path.join(hist_dir, f"h{hi:02d}_{m}.csv"))
    import scipy
    meta = {
        "config": config_to_dict(config),
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__,
                     "pandas": pd.__version__},
        "width_definition": "population standard deviation",
        "path_weight_threshold": minet.PATH_WEIGHT_THRESHOLD,
        "solver_failures": result.failures,
        "excluded_infinite_counts": {
            f"h{hi:02d}_{m}": int(np.sum(~np.isfinite(x)))
            for (hi, m), x in sorted(result.samples.items()) if x.size},
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
