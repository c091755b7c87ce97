"""The emergent mutual-information network and its weighted measures.

Link weights are the pairwise MI values; degree, clustering and shortest
paths generalize the unweighted measures, with 1/I_ij as the length of a
direct link.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from . import quantum_state as qs

# links weaker than this are absent for pathfinding (1/I overflows)
PATH_WEIGHT_THRESHOLD = 1e-12


@dataclass(frozen=True)
class MINetwork:
    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.shape != (self.n, self.n):
            raise ValueError(f"weight matrix shape {w.shape} != ({self.n}, {self.n})")
        if np.max(np.abs(w - w.T)) > 1e-12:
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("diagonal must be zero")
        if np.min(w) < 0.0:
            raise ValueError("weights must be nonnegative")


@dataclass(frozen=True)
class MeasureMoments:
    mean: float
    width: float
    skewness: float
    sample_count: int
    excluded_infinite_count: int = 0


def build_mi_network(state: np.ndarray, attacked_nodes=None,
                     direction: str = "x", q: float = 0.0) -> MINetwork:
    """All-pairs MI network of a pure state, optionally after an attack."""
    n = int(round(np.log2(state.size)))
    attacked_nodes = frozenset(attacked_nodes or ())
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            rho = qs.attacked_pair_rdm(state, i, j, attacked_nodes, direction, q)
            w[i, j] = w[j, i] = qs.pair_mutual_information(rho)
    return MINetwork(n, w)


def mi_network_from_pair_rdms(n: int, pair_rdms: dict, attacked_nodes=None,
                              direction: str = "x", q: float = 0.0,
                              base_weights: np.ndarray = None) -> MINetwork:
    """MI network from precomputed pair RDMs.

    With base_weights (the unattacked MI matrix), only pairs touching an
    attacked node are recomputed.
    """
    attacked_nodes = frozenset(attacked_nodes or ())
    if base_weights is not None:
        w = base_weights.copy()
    else:
        w = np.zeros((n, n))
    for (i, j), rho in pair_rdms.items():
        touched = i in attacked_nodes or j in attacked_nodes
        if base_weights is not None and not touched:
            continue
        if touched and q > 0.0:
            local = [s for s, node in enumerate((i, j)) if node in attacked_nodes]
            rho = qs.apply_attack_channel(rho, local, direction, q)
        w[i, j] = w[j, i] = qs.pair_mutual_information(rho)
    return MINetwork(n, w)


def weighted_degree(net: MINetwork) -> np.ndarray:
    """k_i = sum_j I_ij (row sums)."""
    return net.weights.sum(axis=1)


def weighted_clustering(net: MINetwork) -> np.ndarray:
    """C_i = (sum_{j!=k} I_ij I_jk I_ki) / (sum_{j!=k} I_ij I_ik), 0 when 0/0.

    Sums run over ordered pairs j != k with j, k != i; the zero diagonal makes
    the j,k != i exclusion automatic.
    """
    w = net.weights
    k = w.sum(axis=1)
    numer = np.diag(w @ w @ w).copy()
    denom = k * k - (w * w).sum(axis=1)
    c = np.zeros(net.n)
    mask = denom > 0.0
    c[mask] = numer[mask] / denom[mask]
    return c


def weighted_shortest_paths(net: MINetwork) -> np.ndarray:
    """d_ij with link length 1/I_ij; +inf for unreachable pairs."""
    w = net.weights
    mask = w > PATH_WEIGHT_THRESHOLD
    lengths = np.zeros_like(w)
    lengths[mask] = 1.0 / w[mask]
    return dijkstra(csr_matrix(lengths), directed=False)


def pair_values(d: np.ndarray) -> np.ndarray:
    """Upper-triangle entries of a symmetric pair matrix as a flat array."""
    iu, ju = np.triu_indices(d.shape[0], k=1)
    return d[iu, ju]


def moments(samples) -> MeasureMoments:
    """Mean, population standard deviation, and standardized skewness.

    Infinite entries are excluded and counted; skewness is 0 when the width
    is 0.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("moments of an empty sample set")
    finite = np.isfinite(x)
    excluded = int(x.size - finite.sum())
    x = x[finite]
    if x.size == 0:
        raise ValueError("all samples are infinite")
    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    width = float(np.sqrt(var))
    skew = float(np.mean((x - mean) ** 3) / width ** 3) if width > 0.0 else 0.0
    return MeasureMoments(mean, width, skew, x.size, excluded)


def write_mi_network(net: MINetwork, csv_path, sidecar_path,
                     provenance: dict = None) -> None:
    """CSV with header i,j,mi for nonzero pairs, plus a JSON sidecar."""
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["i", "j", "mi"])
        for i in range(net.n):
            for j in range(i + 1, net.n):
                if net.weights[i, j] != 0.0:
                    writer.writerow([i, j, repr(float(net.weights[i, j]))])
    with open(sidecar_path, "w") as f:
        json.dump({"n": net.n, "threshold": PATH_WEIGHT_THRESHOLD,
                   "provenance": provenance or {}}, f, indent=2)
        f.write("\n")


def read_mi_network(csv_path, sidecar_path) -> MINetwork:
    with open(sidecar_path) as f:
        meta = json.load(f)
    n = int(meta["n"])
    w = np.zeros((n, n))
    with open(csv_path, newline="") as f:
        for row in csv.DictReader(f):
            i, j, mi = int(row["i"]), int(row["j"]), float(row["mi"])
            w[i, j] = w[j, i] = mi
    return MINetwork(n, w)
