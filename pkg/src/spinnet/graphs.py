"""Imprinted-network generation (ER, WS, BA), unweighted measures, node removals.

Graphs are simple and undirected, with nodes labeled 0..n-1 and links stored
as a frozenset of ordered (i, j) pairs with i < j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path


class GraphSpecError(ValueError):
    """Invalid graph-model parameters."""


@dataclass(frozen=True)
class Graph:
    n: int
    links: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise GraphSpecError(f"node count must be >= 1, got {self.n}")
        for (i, j) in self.links:
            if not (0 <= i < j < self.n):
                raise GraphSpecError(f"bad link ({i}, {j}) for n={self.n}")

    @property
    def num_links(self) -> int:
        return len(self.links)

    def degrees(self) -> np.ndarray:
        k = np.zeros(self.n, dtype=np.int64)
        for (i, j) in self.links:
            k[i] += 1
            k[j] += 1
        return k

    def coordination_number(self) -> float:
        """Average degree Z = sum_i k_i / n."""
        return 2.0 * self.num_links / self.n

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for (i, j) in self.links:
            a[i, j] = 1
            a[j, i] = 1
        return a

    def neighbors(self, i: int) -> list:
        return sorted({j for (a, b) in self.links for j in ((b,) if a == i else (a,) if b == i else ())})

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        ncomp, _ = connected_components(csr_matrix(self.adjacency()), directed=False)
        return ncomp == 1


def graph_from_edges(n: int, edges: Iterable) -> Graph:
    return Graph(n, frozenset((min(i, j), max(i, j)) for (i, j) in edges))


def gen_erdos_renyi(n: int, p: float, rng: np.random.Generator,
                    require_connected: bool = False, max_rejects: int = 100_000):
    """ER graph: each of the n(n-1)/2 pairs is linked independently with probability p.

    With require_connected, disconnected samples are rejected and regenerated.
    Returns (graph, rejection_count).
    """
    if not 0.0 <= p <= 1.0:
        raise GraphSpecError(f"ER probability must be in [0, 1], got {p}")
    rejects = 0
    iu, ju = np.triu_indices(n, k=1)
    while rejects <= max_rejects:
        mask = rng.random(iu.size) < p
        if require_connected:
            # cheap pre-check: an isolated node is by far the most common
            # reason a sparse sample is disconnected
            degrees = np.bincount(iu[mask], minlength=n) + np.bincount(
                ju[mask], minlength=n)
            if n > 1 and degrees.min() == 0:
                rejects += 1
                continue
        g = graph_from_edges(n, zip(iu[mask].tolist(), ju[mask].tolist()))
        if not require_connected or g.is_connected():
            return g, rejects
        rejects += 1
    raise GraphSpecError(
        f"could not draw a connected ER graph (n={n}, p={p}) "
        f"after {max_rejects} rejections")


def gen_watts_strogatz(n: int, K: int, p: float, rng: np.random.Generator) -> Graph:
    """WS graph: ring lattice with K/2 neighbors per side, each link rewired w.p. p.

    Rewiring keeps the source endpoint and picks a uniformly random new target
    avoiding self-loops and duplicates; total link count is always n*K/2.
    """
    if K % 2 != 0:
        raise GraphSpecError(f"WS mean degree K must be even, got {K}")
    if not 0 < K < n:
        raise GraphSpecError(f"WS requires 0 < K < n, got K={K}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise GraphSpecError(f"WS rewiring probability must be in [0, 1], got {p}")
    # keep (source, target) orientation from the ring construction so the
    # source endpoint retained on rewiring always keeps its K/2 ring links
    oriented = [(i, (i + step) % n)
                for i in range(n) for step in range(1, K // 2 + 1)]
    current = {(min(i, j), max(i, j)) for (i, j) in oriented}
    for (i, j) in oriented:
        if rng.random() >= p:
            continue
        # keep i, rewire the j endpoint
        candidates = [t for t in range(n)
                      if t != i and (min(i, t), max(i, t)) not in current]
        if not candidates:
            continue
        t = candidates[rng.integers(len(candidates))]
        current.discard((min(i, j), max(i, j)))
        current.add((min(i, t), max(i, t)))
    return Graph(n, frozenset(current))


def gen_barabasi_albert(n: int, m: int, rng: np.random.Generator) -> Graph:
    """BA preferential attachment: each arriving node attaches to m existing nodes.

    Starts from m isolated seed nodes; the first arrival attaches uniformly
    (all degrees are zero), so the link count is exactly m*(n-m).
    """
    if not 1 <= m < n:
        raise GraphSpecError(f"BA requires 1 <= m < n, got m={m}, n={n}")
    degrees = np.zeros(n, dtype=np.float64)
    links = set()
    for new in range(m, n):
        total = degrees[:new].sum()
        targets: set = set()
        while len(targets) < m:
            if total == 0:
                probs = np.full(new, 1.0 / new)
            else:
                probs = degrees[:new] / total
            t = int(rng.choice(new, p=probs))
            targets.add(t)
        for t in targets:
            links.add((t, new))
            degrees[t] += 1
            degrees[new] += 1
    return Graph(n, frozenset(links))


def generate(model: str, n: int, rng: np.random.Generator, *, p: float = None,
             K: int = None, m: int = None, require_connected: bool = False) -> Graph:
    """Dispatch on model name ('er', 'ws', 'ba')."""
    if model == "er":
        g, _ = gen_erdos_renyi(n, p, rng, require_connected=require_connected)
        return g
    if model == "ws":
        return gen_watts_strogatz(n, K, p, rng)
    if model == "ba":
        return gen_barabasi_albert(n, m, rng)
    raise GraphSpecError(f"unknown model {model!r}")


def nominal_coordination(model: str, n: int, *, p: float = None,
                         K: int = None, m: int = None) -> float:
    """Ensemble-nominal average degree: (n-1)p for ER, K for WS, 2m(n-m)/n for BA."""
    if model == "er":
        return (n - 1) * p
    if model == "ws":
        return float(K)
    if model == "ba":
        return 2.0 * m * (n - m) / n
    raise GraphSpecError(f"unknown model {model!r}")


def unweighted_measures(g: Graph):
    """Degree, local clustering, and hop distances of an unweighted graph.

    Returns (k, C, d): k and C are length-n arrays, d is an (n, n) matrix with
    +inf for disconnected pairs. Clustering of degree-<2 nodes is 0.
    """
    a = g.adjacency().astype(np.float64)
    k = a.sum(axis=1)
    triangles = np.diag(a @ a @ a) / 2.0  # closed-triple count per node
    possible = k * (k - 1) / 2.0
    C = np.zeros(g.n)
    mask = possible > 0
    C[mask] = triangles[mask] / possible[mask]
    d = shortest_path(csr_matrix(a), method="D", unweighted=True, directed=False)
    return k, C, d


def remove_nodes(g: Graph, fraction: float, strategy: str,
                 rng: np.random.Generator = None) -> Graph:
    """Remove round(fraction*n) nodes and relabel survivors 0..n'-1.

    strategy 'random': uniform without replacement; 'targeted': descending
    initial degree, ties broken by ascending node index.
    """
    if not 0.0 <= fraction <= 1.0:
        raise GraphSpecError(f"removal fraction must be in [0, 1], got {fraction}")
    n_remove = int(round(fraction * g.n))
    if n_remove == 0:
        return g
    if strategy == "random":
        removed = set(rng.choice(g.n, size=n_remove, replace=False).tolist())
    elif strategy == "targeted":
        k = g.degrees()
        order = sorted(range(g.n), key=lambda i: (-k[i], i))
        removed = set(order[:n_remove])
    else:
        raise GraphSpecError(f"unknown removal strategy {strategy!r}")
    survivors = [i for i in range(g.n) if i not in removed]
    relabel = {old: new for new, old in enumerate(survivors)}
    links = [(relabel[i], relabel[j]) for (i, j) in g.links
             if i not in removed and j not in removed]
    return graph_from_edges(len(survivors), links)


def write_graph(g: Graph, path) -> None:
    """Serialize as one 'n=<count>' header line plus one 'i j' pair per line."""
    with open(path, "w") as f:
        f.write(f"n={g.n}\n")
        for (i, j) in sorted(g.links):
            f.write(f"{i} {j}\n")


def read_graph(path) -> Graph:
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("n="):
            raise GraphSpecError(f"{path}: expected 'n=<count>' header, got {header!r}")
        n = int(header[2:])
        edges = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            i, j = line.split()
            edges.append((int(i), int(j)))
    return graph_from_edges(n, edges)
