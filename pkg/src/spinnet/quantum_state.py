"""Reduced density matrices, von Neumann entropies, pairwise mutual
information, and partial projective-measurement attack channels.

All states are real vectors in the computational z basis (site i on axis i of
the (2,)*n tensor view, bit 0 = up). Pair RDMs use basis order
{up-up, up-down, down-up, down-down}.

The attack channel scales every density-matrix element that is off-diagonal
in the attacked site's measurement eigenbasis by (1 - q); q = 1 is a complete
projective measurement. It acts locally, so attacked pair RDMs can be formed
by attacking the reduced matrix directly instead of the full state.
"""

from __future__ import annotations

import numpy as np

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)

PSD_CLAMP = 1e-12   # eigenvalue noise window clamped to zero
PSD_ERROR = 1e-9    # anything below -PSD_ERROR is a real violation


class InvalidDensityMatrixError(ValueError):
    pass


def assert_valid_rdm(rho: np.ndarray, trace_tol: float = 1e-10) -> None:
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise InvalidDensityMatrixError(f"trace {np.trace(rho)} != 1")
    if np.max(np.abs(rho - rho.T)) > 1e-10:
        raise InvalidDensityMatrixError("matrix is not symmetric")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -PSD_ERROR:
        raise InvalidDensityMatrixError(f"negative eigenvalue {lo}")


def _site_count(state: np.ndarray) -> int:
    n = int(round(np.log2(state.size)))
    if (1 << n) != state.size:
        raise ValueError(f"state length {state.size} is not a power of 2")
    return n


def reduce_single(state: np.ndarray, i: int) -> np.ndarray:
    """2x2 reduced density matrix of site i."""
    n = _site_count(state)
    if not 0 <= i < n:
        raise IndexError(f"site {i} out of range for n={n}")
    t = np.moveaxis(state.reshape((2,) * n), i, 0).reshape(2, -1)
    return t @ t.T


def reduce_pair(state: np.ndarray, i: int, j: int) -> np.ndarray:
    """4x4 reduced density matrix of the (i, j) subsystem."""
    n = _site_count(state)
    if i == j:
        raise ValueError("pair RDM requires two distinct sites")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"sites ({i}, {j}) out of range for n={n}")
    t = np.moveaxis(state.reshape((2,) * n), (i, j), (0, 1)).reshape(4, -1)
    return t @ t.T


def all_pair_rdms(state: np.ndarray) -> dict:
    """Pair RDMs for all unordered pairs, keyed by (i, j) with i < j."""
    n = _site_count(state)
    return {(i, j): reduce_pair(state, i, j)
            for i in range(n) for j in range(i + 1, n)}


def partial_trace_second(rho4: np.ndarray) -> np.ndarray:
    return np.einsum("abcb->ac", rho4.reshape(2, 2, 2, 2))


def partial_trace_first(rho4: np.ndarray) -> np.ndarray:
    return np.einsum("abac->bc", rho4.reshape(2, 2, 2, 2))


def von_neumann_entropy(rdm: np.ndarray) -> float:
    """Entropy in bits, -sum(lam * log2(lam)), with 0 log 0 := 0."""
    lam = np.linalg.eigvalsh(rdm)
    if lam[0] < -PSD_ERROR:
        raise InvalidDensityMatrixError(f"negative eigenvalue {lam[0]}")
    lam = np.clip(lam, 0.0, None)
    lam = lam[lam > 0.0]
    return float(-np.sum(lam * np.log2(lam)))


def mutual_information(rho_i: np.ndarray, rho_j: np.ndarray,
                       rho_ij: np.ndarray, check: bool = True) -> float:
    """I_ij = (S_i + S_j - S_ij) / 2, clamped to [0, 1]."""
    if check:
        if (np.max(np.abs(partial_trace_second(rho_ij) - rho_i)) > 1e-8 or
                np.max(np.abs(partial_trace_first(rho_ij) - rho_j)) > 1e-8):
            raise InvalidDensityMatrixError(
                "pair RDM is inconsistent with the site RDMs")
    mi = 0.5 * (von_neumann_entropy(rho_i) + von_neumann_entropy(rho_j)
                - von_neumann_entropy(rho_ij))
    if mi < -1e-10:
        raise InvalidDensityMatrixError(f"mutual information {mi} < 0")
    return float(min(max(mi, 0.0), 1.0))


def pair_mutual_information(rho_ij: np.ndarray) -> float:
    """MI with the site RDMs taken from the pair RDM's own partial traces."""
    return mutual_information(partial_trace_second(rho_ij),
                              partial_trace_first(rho_ij), rho_ij, check=False)


def _dephasing_mask(num_sites: int, attacked: tuple, q: float) -> np.ndarray:
    factor = np.array([[1.0, 1.0 - q], [1.0 - q, 1.0]])
    ones = np.ones((2, 2))
    mask = np.ones((1, 1))
    for s in range(num_sites):
        mask = np.kron(mask, factor if s in attacked else ones)
    return mask


def apply_attack_channel(rdm: np.ndarray, local_sites, direction: str,
                         q: float) -> np.ndarray:
    """Partial projective measurement on the given sites of a 2x2 or 4x4 RDM.

    local_sites indexes sites within the RDM (0 for a site RDM, 0 and/or 1
    for a pair RDM). In each attacked site's measurement eigenbasis
    (z: computational, x: Hadamard-rotated), every element off-diagonal in
    that site's index is scaled by (1 - q); attacks on both sites compose
    multiplicatively.
    """
    if direction not in ("x", "z"):
        raise ValueError(f"direction must be 'x' or 'z', got {direction!r}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"attack strength q must be in [0, 1], got {q}")
    num_sites = {2: 1, 4: 2}[rdm.shape[0]]
    attacked = tuple(sorted(set(local_sites)))
    if any(s not in range(num_sites) for s in attacked):
        raise ValueError(f"local sites {attacked} out of range")
    if not attacked or q == 0.0:
        return rdm.copy()
    if direction == "x":
        rot = np.ones((1, 1))
        for s in range(num_sites):
            rot = np.kron(rot, _HADAMARD if s in attacked else np.eye(2))
        work = rot @ rdm @ rot
    else:
        work = rdm
    work = work * _dephasing_mask(num_sites, attacked, q)
    if direction == "x":
        work = rot @ work @ rot
    return work


def attacked_pair_rdm(state: np.ndarray, i: int, j: int, attacked_nodes,
                      direction: str, q: float) -> np.ndarray:
    """Pair RDM of (i, j) after attacking the given nodes of the full state.

    The channel is trace-preserving on every other site, so tracing out
    attacked third parties has no effect: only attacks on i or j matter.
    """
    rho = reduce_pair(state, i, j)
    local = [s for s, node in enumerate((i, j)) if node in attacked_nodes]
    return apply_attack_channel(rho, local, direction, q) if local else rho
