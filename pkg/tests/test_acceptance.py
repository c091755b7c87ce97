"""Acceptance suite: one test per primary criterion, shared desk-scale ensemble.

The quantum ensemble uses n=14 spins, 20 networks per model, and a
dimensionless field grid LAMBDAS; attacks hit 20% of the nodes with one
target draw per network. Criteria comparing distributions use two pooled
standard errors of the per-network means.
"""

import itertools

import numpy as np
import pytest

from spinnet import experiments as ex
from spinnet import graphs as gr
from spinnet import hilbert, meanfield, minet
from spinnet import quantum_state as qs

from conftest import (dense_hamiltonian, dense_partial_trace, full_channel,
                      random_connected_graph, random_state)

SEED = 20260824
N = 14
ENSEMBLE = 20
FRACTION = 0.2
LAMBDAS = (0.0, 0.3, 0.5, 0.8, 1.0, 1.5, 2.2, 3.0)
MODELS = {
    "er": ex.ModelSpec("er", p=4.94 / (N - 1)),   # Z matched to p=0.26 at n=20
    "ws": ex.ModelSpec("ws", K=4, p=0.5),
    "ba": ex.ModelSpec("ba", m=3),
}
# attack configurations shared by the invariance / indifference / collapse tests
ATTACKS = {
    "z_rand_q05": ("z", 0.5, "random"),
    "z_rand_q10": ("z", 1.0, "random"),
    "x_rand_q05": ("x", 0.5, "random"),
    "x_rand_q10": ("x", 1.0, "random"),
    "x_pref_q05": ("x", 0.5, "preferential"),
    "x_pref_q10": ("x", 1.0, "preferential"),
}
CONFIGS = ("none",) + tuple(ATTACKS)


def _network_means(net):
    k = minet.weighted_degree(net) / (net.n - 1)
    c = minet.weighted_clustering(net)
    d = minet.pair_values(minet.weighted_shortest_paths(net))
    d = d[np.isfinite(d)]
    return {"k_over_n1": float(k.mean()), "C": float(c.mean()),
            "d": float(d.mean()) if d.size else np.inf}


@pytest.fixture(scope="session")
def ensemble():
    """means[model][lam][config][measure] -> per-network means (ENSEMBLE,)."""
    means = {}
    for m_idx, (model, spec) in enumerate(MODELS.items()):
        z = spec.nominal_z(N)
        graphs = [spec.generate(N, np.random.default_rng(
            np.random.SeedSequence([SEED, 1, m_idx, g])))
            for g in range(ENSEMBLE)]
        per_lam = {}
        for l_idx, lam in enumerate(LAMBDAS):
            acc = {cfg: {m: [] for m in ("k_over_n1", "C", "d")}
                   for cfg in CONFIGS}
            for g_idx, graph in enumerate(graphs):
                gs = hilbert.ground_state(hilbert.build_hamiltonian(
                    graph, hilbert.HamiltonianParams(1.0, lam * z)))
                rdms = qs.all_pair_rdms(gs.amplitudes)
                base = minet.mi_network_from_pair_rdms(N, rdms)
                for m, v in _network_means(base).items():
                    acc["none"][m].append(v)
                for a_idx, (name, (direction, q, strategy)) in enumerate(
                        ATTACKS.items()):
                    rng = np.random.default_rng(np.random.SeedSequence(
                        [SEED, 2, m_idx, l_idx, g_idx, a_idx]))
                    targets = ex.choose_attack_targets(base, FRACTION,
                                                       strategy, rng)
                    net = minet.mi_network_from_pair_rdms(
                        N, rdms, attacked_nodes=targets, direction=direction,
                        q=q, base_weights=base.weights)
                    for m, v in _network_means(net).items():
                        acc[name][m].append(v)
            per_lam[lam] = {cfg: {m: np.array(v) for m, v in d.items()}
                            for cfg, d in acc.items()}
        means[model] = per_lam
    return means


def _two_se_gap(a, b):
    """|mean(a)-mean(b)| minus 2 pooled standard errors (negative = agree)."""
    se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    return abs(a.mean() - b.mean()) - 2.0 * se


def test_c01_ghz_fixed_point():
    for n in (6, 10, 14):
        g = random_connected_graph(n, np.random.default_rng(n))
        gs = hilbert.ground_state(
            hilbert.build_hamiltonian(g, hilbert.HamiltonianParams(1.0, 0.0)))
        net = minet.build_mi_network(gs.amplitudes)
        mi = minet.pair_values(net.weights)
        assert np.max(np.abs(mi - 0.5)) < 1e-9
        k = minet.weighted_degree(net) / (n - 1)
        c = minet.weighted_clustering(net)
        d = minet.pair_values(minet.weighted_shortest_paths(net))
        for samples, target in ((k, 0.5), (c, 0.5), (d, 2.0)):
            mom = minet.moments(samples)
            assert mom.mean == pytest.approx(target, abs=1e-9)
            assert mom.width < 1e-9


def test_c02_paramagnetic_limit():
    spec = MODELS["er"]
    pooled_k, pooled_c = [], []
    for g_idx in range(5):
        g = spec.generate(N, np.random.default_rng(
            np.random.SeedSequence([SEED, 9, g_idx])))
        gs = hilbert.ground_state(
            hilbert.build_hamiltonian(g, hilbert.HamiltonianParams(1.0, 100.0)))
        net = minet.build_mi_network(gs.amplitudes)
        pooled_k.append(minet.weighted_degree(net) / (N - 1))
        pooled_c.append(minet.weighted_clustering(net))
    assert np.mean(np.concatenate(pooled_k)) < 0.01
    assert np.mean(np.concatenate(pooled_c)) < 0.01


def test_c03_oracle_equivalence():
    rng = np.random.default_rng(77)
    for trial in range(50):
        n = int(rng.integers(4, 11))
        g = random_connected_graph(n, rng)
        h = float(rng.uniform(0.1, 5.0))
        gs = hilbert.ground_state(
            hilbert.build_hamiltonian(g, hilbert.HamiltonianParams(1.0, h)))
        dense_e = np.linalg.eigvalsh(dense_hamiltonian(g, 1.0, h))[0]
        assert abs(gs.energy - dense_e) < 1e-8
    for trial in range(10):
        st = random_state(6, rng)
        full = np.outer(st, st)
        for i, j in itertools.combinations(range(6), 2):
            oracle = dense_partial_trace(full, [i, j], 6)
            assert np.max(np.abs(qs.reduce_pair(st, i, j) - oracle)) < 1e-12


def test_c04_attack_channel_locality():
    rng = np.random.default_rng(88)
    n = 6
    for trial in range(20):
        st = random_state(n, rng)
        n_att = int(rng.integers(1, n + 1))
        attacked = set(rng.choice(n, size=n_att, replace=False).tolist())
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        for direction in ("x", "z"):
            for q in (0.0, 0.3, 1.0):
                full = np.outer(st, st)
                for s in sorted(attacked):
                    full = full_channel(full, s, n, direction, q)
                oracle = dense_partial_trace(full, [i, j], n)
                shortcut = qs.attacked_pair_rdm(st, i, j, attacked, direction, q)
                assert np.max(np.abs(oracle - shortcut)) < 1e-10


def test_c05_mf_consistency():
    for m in np.linspace(0.0, 1.0, 41):
        rho_i, rho_j, rho_ij = meanfield.mf_rdms(m, m)
        entropy_route = qs.mutual_information(rho_i, rho_j, rho_ij)
        assert abs(meanfield.mf_uniform_mi(m) - entropy_route) < 1e-9
    rng = np.random.default_rng(5)
    for trial in range(10):
        g = random_connected_graph(10, rng)
        sol = meanfield.mf_general_solve(g, 1.0, float(rng.uniform(0.5, 8.0)))
        assert sol.residual < 1e-10
    ring = gr.gen_watts_strogatz(12, 4, 0.0, np.random.default_rng(0))
    for lam in (0.2, 0.6, 0.9):
        sol = meanfield.mf_general_solve(ring, 1.0, lam * 4.0)
        assert np.max(np.abs(sol.magnetizations
                             - meanfield.mf_uniform(lam).m)) < 1e-6


def test_c06_lambda_collapse(ensemble):
    worst = 0.0
    for lam in LAMBDAS:
        if not 0.2 < lam <= 3.0:
            continue
        curve = [ensemble[model][lam]["none"]["k_over_n1"].mean()
                 for model in MODELS]
        spread = max(curve) - min(curve)
        worst = max(worst, spread)
    assert worst < 0.05, f"max pairwise mean-degree spread {worst:.4f}"


def test_c07_mf0_vs_exact_means(ensemble):
    # MF0 depends only on lambda, so it is compared against the exact mean
    # pooled over the three (collapsing) model ensembles; the per-model worst
    # is reported alongside for context
    worst_pooled = 0.0
    worst_per_model = 0.0
    for lam in LAMBDAS:
        if not 0.3 <= lam <= 3.0:
            continue
        mf0 = meanfield.mf0_measures(lam, N)
        for measure in ("k_over_n1", "C"):
            per_model = [ensemble[model][lam]["none"][measure].mean()
                         for model in MODELS]
            worst_pooled = max(worst_pooled,
                               abs(mf0[measure] - np.mean(per_model)))
            worst_per_model = max(worst_per_model,
                                  max(abs(mf0[measure] - v) for v in per_model))
    assert worst_pooled <= 0.07, (
        f"max |MF0 - pooled exact mean| = {worst_pooled:.4f} "
        f"(per-model worst {worst_per_model:.4f})")


def _collect_se_violations(ensemble, pairs):
    violations = []
    for model in MODELS:
        for lam in LAMBDAS:
            block = ensemble[model][lam]
            for cfg_a, cfg_b in pairs:
                for measure in ("k_over_n1", "C", "d"):
                    a, b = block[cfg_a][measure], block[cfg_b][measure]
                    fin = np.isfinite(a) & np.isfinite(b)
                    gap = _two_se_gap(a[fin], b[fin])
                    if gap >= 0.0:
                        violations.append(
                            f"{model} lam={lam} {cfg_a} vs {cfg_b} {measure}: "
                            f"means {a[fin].mean():.4g} vs {b[fin].mean():.4g} "
                            f"exceed 2 SE by {gap:.4g}")
    return violations


def test_c08_z_attack_invariance(ensemble):
    # KNOWN RED: the z attack produces a small but systematic shift (up to
    # ~0.025 absolute in mean degree and clustering near lam~0.5, ~30%
    # relative in mean path length at large lam) that exceeds two pooled
    # standard errors; the uniform mean-field closed form independently
    # predicts the same shift, so the no-difference criterion is unattainable
    # for a correct implementation at any ensemble size. See the decisions
    # ledger for the full analysis.
    violations = _collect_se_violations(
        ensemble, (("none", "z_rand_q05"), ("none", "z_rand_q10")))
    assert not violations, (
        f"{len(violations)} of 144 comparisons outside 2 pooled SE, e.g.:\n  "
        + "\n  ".join(violations[:6]))


def test_c09_strategy_indifference(ensemble):
    # KNOWN RED (marginal): random and preferential target choices differ by
    # a tiny but systematic amount (~1e-3 absolute in mean degree and
    # clustering, a few percent in path length) because emergent degrees are
    # not perfectly uniform; with enough attack realizations the difference
    # always resolves beyond two pooled standard errors. See the decisions
    # ledger for the full analysis.
    violations = _collect_se_violations(
        ensemble, (("x_rand_q05", "x_pref_q05"), ("x_rand_q10", "x_pref_q10")))
    assert not violations, (
        f"{len(violations)} of 144 comparisons outside 2 pooled SE, e.g.:\n  "
        + "\n  ".join(violations[:6]))


def test_c10_rescaling_collapse(ensemble):
    # KNOWN RED (by ~0.01): the five normalized curves deviate by ~0.06 at
    # lam~0.5 (z-attacked vs x-attacked), slightly above the 0.05 tolerance;
    # the uniform mean-field closed form predicts a deviation of ~0.055 even
    # at full scale, so the tolerance sits just below the physical value.
    # See the decisions ledger for the full analysis.
    curves_cfgs = ("none", "x_rand_q05", "x_rand_q10",
                   "z_rand_q05", "z_rand_q10")
    worst = 0.0
    for model in MODELS:
        normalized = {}
        for cfg in curves_cfgs:
            k0 = ensemble[model][0.0][cfg]["k_over_n1"].mean()
            normalized[cfg] = np.array(
                [ensemble[model][lam][cfg]["k_over_n1"].mean() / k0
                 for lam in LAMBDAS])
        for a, b in itertools.combinations(curves_cfgs, 2):
            worst = max(worst, float(np.max(np.abs(normalized[a]
                                                   - normalized[b]))))
    assert worst < 0.05, f"max pairwise normalized-curve deviation {worst:.4f}"


def test_c11_classical_attack_scale():
    table = ex.run_classical_attack_study([20, 54], 1000, 0.2, SEED)
    k = table[table["measure"] == "k"].set_index(["n", "model", "strategy"])
    effects = {}
    for n in (20, 54):
        rand = k.loc[(n, "ba", "random"), "p95"]
        targ = k.loc[(n, "ba", "targeted"), "p95"]
        assert targ < rand, f"n={n}: targeted p95 {targ} !< random p95 {rand}"
        effects[n] = rand - targ
    assert effects[54] > effects[20], f"effect sizes {effects}"


def test_c12_determinism_across_workers(tmp_path):
    cfg = ex.ExperimentConfig(
        model=ex.ModelSpec("er", p=0.5), n=10, ensemble_size=4,
        master_seed=SEED, lambda_values=(0.5, 1.5), realizations=2,
        attack=ex.AttackSpec("x", 1.0, FRACTION, "random"))
    outputs = {}
    for jobs in (1, 8):
        out = tmp_path / f"jobs{jobs}"
        ex.write_run(ex.run_attack_experiment(cfg, jobs=jobs), cfg, out)
        outputs[jobs] = {name: (out / name).read_bytes()
                         for name in ("results.csv", "meta.json")}
    assert outputs[1] == outputs[8]
