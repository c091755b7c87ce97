"""Mean-field theory: closed-form uniform solution, generalized per-node
self-consistent magnetizations, MF density matrices, and MF predictions for
attacked states.

The uniform theory (MF0) assumes every node has the same average degree Z;
its order parameter is m = sqrt(1 - lambda^2) for lambda = h/(ZJ) < 1 and 0
otherwise, and it predicts a fully connected emergent network with equal link
weights. The generalized theory solves a per-node fixed point on the actual
graph.

Attacked MF matrices are produced by applying the same dephasing channel used
for exact states to the MF pair matrix. For z-direction attacks this
reproduces the closed-form attacked matrices exactly; for x-direction attacks
it differs from a literal entrywise reading of the one-node attacked matrix
only in the anti-diagonal corner, where the literal form loses positive
semidefiniteness at small m and large q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import minet
from . import quantum_state as qs
from .graphs import Graph


class MFConvergenceError(RuntimeError):
    def __init__(self, message, magnetizations=None, residual=None):
        super().__init__(message)
        self.magnetizations = magnetizations
        self.residual = residual


@dataclass(frozen=True)
class MFUniform:
    lam: float
    theta: float
    m: float


@dataclass(frozen=True)
class MFGeneral:
    magnetizations: np.ndarray
    residual: float
    iterations: int


def mf_uniform(lam: float) -> MFUniform:
    """Uniform MF solution: m = sqrt(1 - lam^2) below lam = 1, else 0."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if lam < 1.0:
        return MFUniform(lam, float(np.arcsin(lam)), float(np.sqrt(1.0 - lam * lam)))
    return MFUniform(lam, np.pi / 2.0, 0.0)


def mf_uniform_mi(m: float) -> float:
    """Closed-form MI between two nodes at uniform magnetization m.

    Removable singularities at the endpoints are resolved by their limits:
    m = 1 -> 1/2, m = 0 -> 0.
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"magnetization must be in [0, 1], got {m}")
    if m == 1.0:
        return 0.5
    if m == 0.0:
        return 0.0
    r = np.sqrt(1.0 - m * m)
    val = 0.5 * (1.0 - r * np.log2((1.0 + r) / (1.0 - r))
                 + 0.5 * (2.0 - m * m) * np.log2((2.0 - m * m) / (m * m)))
    return float(min(max(val, 0.0), 1.0))


def mf0_measures(lam: float, n: int) -> dict:
    """MF0 network measures: k/(n-1) = C = I_MF and d = 1/I_MF (inf at I=0)."""
    i_mf = mf_uniform_mi(mf_uniform(lam).m)
    d = 1.0 / i_mf if i_mf > 0.0 else np.inf
    return {"k_over_n1": i_mf, "C": i_mf, "d": d}


def mf_site_rdm(m_i: float) -> np.ndarray:
    r = np.sqrt(1.0 - m_i * m_i)
    return 0.5 * np.array([[1.0, r], [r, 1.0]])


def mf_pair_rdm(m_i: float, m_j: float) -> np.ndarray:
    """MF two-node density matrix in basis {uu, ud, du, dd}.

    Single-flip coherences carry the transverse factor of the flipped spin,
    so partial tracing over either site reproduces the matching site RDM.
    """
    ri = np.sqrt(1.0 - m_i * m_i)
    rj = np.sqrt(1.0 - m_j * m_j)
    mm = m_i * m_j
    return 0.25 * np.array([
        [1.0 + mm, rj, ri, ri * rj],
        [rj, 1.0 - mm, ri * rj, ri],
        [ri, ri * rj, 1.0 - mm, rj],
        [ri * rj, ri, rj, 1.0 + mm]])


def mf_rdms(m_i: float, m_j: float):
    """Site and pair MF density matrices."""
    return mf_site_rdm(m_i), mf_site_rdm(m_j), mf_pair_rdm(m_i, m_j)


def mf_attacked_rdm(m_i: float, m_j: float, q: float, direction: str,
                    which: str):
    """MF site/pair matrices after a partial projective attack.

    which selects the attacked subset: 'none', 'first', 'second', or 'both'.
    Returns (rho_i, rho_j, rho_ij) with the dephasing channel applied to the
    attacked sites.
    """
    local = {"none": (), "first": (0,), "second": (1,), "both": (0, 1)}[which]
    rho_i, rho_j, rho_ij = mf_rdms(m_i, m_j)
    if local:
        rho_ij = qs.apply_attack_channel(rho_ij, local, direction, q)
        if 0 in local:
            rho_i = qs.apply_attack_channel(rho_i, (0,), direction, q)
        if 1 in local:
            rho_j = qs.apply_attack_channel(rho_j, (0,), direction, q)
    return rho_i, rho_j, rho_ij


def mf_general_solve(g: Graph, J: float, h: float, tol: float = 1e-12,
                     max_iter: int = 500_000, mixing: float = 1.0) -> MFGeneral:
    """Per-node magnetizations from the self-consistent fixed point.

    Iterates m_i <- (1 + ((J/h) sum_{j in N(i)} m_j)^-2)^-1/2 from the
    ferromagnetic seed m_i = 1; nodes whose neighborhood sum vanishes take the
    zero branch. The residual is the largest violation of the stationarity
    condition m_i / sqrt(1 - m_i^2) = (J/h) sum_j m_j.
    """
    if h < 0:
        raise ValueError(f"field h must be >= 0, got {h}")
    n = g.n
    if h == 0.0:
        return MFGeneral(np.ones(n), 0.0, 0)
    a = g.adjacency().astype(np.float64)
    m = np.ones(n)
    ratio = J / h
    for it in range(1, max_iter + 1):
        s = ratio * (a @ m)
        new = np.zeros(n)
        pos = s > 0.0
        new[pos] = 1.0 / np.sqrt(1.0 + 1.0 / (s[pos] * s[pos]))
        if mixing != 1.0:
            new = mixing * new + (1.0 - mixing) * m
        delta = float(np.max(np.abs(new - m)))
        m = new
        if delta < tol:
            break
    else:
        raise MFConvergenceError(
            f"MF fixed point not reached in {max_iter} iterations "
            f"(last step {delta:.3e})", magnetizations=m)
    s = ratio * (a @ m)
    residual = float(np.max(np.abs(m / np.sqrt(1.0 - m * m) - s)))
    return MFGeneral(m, residual, it)


def mf_pair_mi(m_i: float, m_j: float, q: float = 0.0, direction: str = "x",
               which: str = "none") -> float:
    rho_i, rho_j, rho_ij = mf_attacked_rdm(m_i, m_j, q, direction, which)
    return qs.mutual_information(rho_i, rho_j, rho_ij, check=False)


def mf_network(magnetizations: np.ndarray) -> minet.MINetwork:
    """All-pairs MF emergent network from per-node magnetizations."""
    n = magnetizations.size
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = mf_pair_mi(magnetizations[i], magnetizations[j])
    return minet.MINetwork(n, w)


def mf0_attacked_mean_measures(lam: float, n: int, fraction: float, q: float,
                               direction: str) -> dict:
    """MF0 mean measures after attacking a fraction of the nodes.

    Pair MI takes one of three values depending on how many endpoints are
    attacked. The mean degree uses the expected pair-category fractions
    (1-f)^2, 2f(1-f), f^2; clustering and path length are evaluated directly
    on a fully connected model network with round(f*n) attacked nodes.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    m = mf_uniform(lam).m
    i00 = mf_pair_mi(m, m, q, direction, "none")
    i10 = mf_pair_mi(m, m, q, direction, "first")
    i11 = mf_pair_mi(m, m, q, direction, "both")
    f = fraction
    mean_k = ((1 - f) ** 2 * i00 + 2 * f * (1 - f) * i10 + f * f * i11)
    n_att = int(round(f * n))
    att = set(range(n_att))
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            cnt = (i in att) + (j in att)
            w[i, j] = w[j, i] = (i00, i10, i11)[cnt]
    net = minet.MINetwork(n, w)
    mean_c = float(np.mean(minet.weighted_clustering(net)))
    d = minet.pair_values(minet.weighted_shortest_paths(net))
    finite = d[np.isfinite(d)]
    mean_d = float(np.mean(finite)) if finite.size else np.inf
    return {"k_over_n1": mean_k, "C": mean_c, "d": mean_d}
