"""Sparse transverse-Ising Hamiltonian on a graph and its ground state.

H = -J * sum_{links (i,j)} sz_i sz_j + h * sum_i sx_i

Basis convention: computational z basis, basis index s has the bit of site i
at position (n-1-i), bit value 0 = up (+1), 1 = down (-1). With this choice
state.reshape((2,)*n) puts site i on axis i.

H is real-symmetric, so all states are real. The matrix is never materialized:
the diagonal is precomputed and the off-diagonal action (n single-bit flips of
magnitude h) is applied by axis reversal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .graphs import Graph

MAX_SITES = 20


class CapacityError(ValueError):
    """Graph exceeds the exact-diagonalization ceiling."""


class ConvergenceError(RuntimeError):
    """Eigensolver failed to reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class HamiltonianParams:
    J: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError(f"coupling J must be > 0, got {self.J}")
        if self.h < 0:
            raise ValueError(f"field h must be >= 0, got {self.h}")


class SparseHamiltonian:
    """Matrix-action oracle for the transverse Ising Hamiltonian."""

    def __init__(self, graph: Graph, params: HamiltonianParams):
        if graph.n > MAX_SITES:
            raise CapacityError(
                f"n={graph.n} exceeds the exact-diagonalization ceiling {MAX_SITES}")
        self.graph = graph
        self.params = params
        self.n = graph.n
        self.dim = 1 << graph.n
        self.diagonal = self._build_diagonal()

    def _build_diagonal(self) -> np.ndarray:
        n, J = self.n, self.params.J
        idx = np.arange(self.dim, dtype=np.uint32)
        diag = np.zeros(self.dim)
        for (i, j) in self.graph.links:
            zi = 1.0 - 2.0 * ((idx >> (n - 1 - i)) & 1)
            zj = 1.0 - 2.0 * ((idx >> (n - 1 - j)) & 1)
            diag -= J * zi * zj
        return diag

    def _apply(self, x: np.ndarray, h: float) -> np.ndarray:
        y = self.diagonal * x
        if h != 0.0:
            for i in range(self.n):
                # flip bit of site i: reverse axis i of the (2,)*n tensor view
                xt = x.reshape(1 << i, 2, -1)
                y += h * xt[:, ::-1, :].reshape(-1)
        return y

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._apply(x, self.params.h)

    def matvec_gauged(self, x: np.ndarray) -> np.ndarray:
        """Action of D H D with D = prod_i sz_i, i.e. H with -h off-diagonals."""
        return self._apply(x, -self.params.h)

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.matvec,
                              dtype=np.float64)

    def dense(self) -> np.ndarray:
        """Explicit matrix; only sensible for small n."""
        if self.n > 12:
            raise CapacityError("dense materialization limited to n <= 12")
        eye = np.eye(self.dim)
        return np.column_stack([self.matvec(eye[:, c]) for c in range(self.dim)])


def build_hamiltonian(graph: Graph, params: HamiltonianParams) -> SparseHamiltonian:
    return SparseHamiltonian(graph, params)


@dataclass(frozen=True)
class GroundState:
    energy: float
    amplitudes: np.ndarray
    residual: float = 0.0

    @property
    def n(self) -> int:
        return int(round(np.log2(self.amplitudes.size)))


def ghz_state(n: int) -> np.ndarray:
    v = np.zeros(1 << n)
    v[0] = v[-1] = 1.0 / np.sqrt(2.0)
    return v


def _spin_flip(x: np.ndarray) -> np.ndarray:
    """Apply the global spin flip prod_i sx_i (reverses the basis index)."""
    return x[::-1]


def _parity_signs(n: int) -> np.ndarray:
    """(-1)^popcount(s) for all basis indices, i.e. the diagonal of prod_i sz_i."""
    signs = np.ones(1, dtype=np.float64)
    for _ in range(n):
        signs = np.concatenate([signs, -signs])
    return signs


def ground_state(H: SparseHamiltonian, tol: float = 1e-10,
                 max_iter: int = 10_000) -> GroundState:
    """Lowest eigenpair of H by an implicitly restarted Lanczos iteration.

    h=0 is degenerate and handled analytically: the ground state is the GHZ
    state with energy -J*|links|. For h>0 the problem is solved in the gauge
    frame D H D (D = prod_i sz_i) where the ground vector is strictly positive
    (Perron-Frobenius) and spin-flip symmetric; projecting onto that sector
    removes contamination from the quasi-degenerate partner at small h. The
    result is mapped back by D and the global phase fixed by making the
    largest-magnitude amplitude positive.
    """
    if H.params.h == 0.0:
        return GroundState(energy=-H.params.J * H.graph.num_links,
                           amplitudes=ghz_state(H.n), residual=0.0)
    op = LinearOperator((H.dim, H.dim), matvec=H.matvec_gauged, dtype=np.float64)
    # deterministic, spin-flip-symmetric start vector
    v0 = np.full(H.dim, 1.0 / np.sqrt(H.dim))
    try:
        vals, vecs = eigsh(op, k=1, which="SA", v0=v0, maxiter=max_iter, tol=0.0)
    except ArpackNoConvergence as exc:
        res = None
        if exc.eigenvectors is not None and exc.eigenvectors.size:
            v = exc.eigenvectors[:, 0]
            e = float(exc.eigenvalues[0])
            res = float(np.linalg.norm(H.matvec_gauged(v) - e * v))
        raise ConvergenceError(
            f"eigensolver did not converge in {max_iter} iterations", residual=res)
    energy = float(vals[0])
    v = vecs[:, 0]
    sym = v + _spin_flip(v)
    norm = np.linalg.norm(sym)
    if norm > 1e-8:
        v = sym / norm
    v = _parity_signs(H.n) * v
    imax = int(np.argmax(np.abs(v)))
    if v[imax] < 0:
        v = -v
    residual = float(np.linalg.norm(H.matvec(v) - energy * v))
    # residual contract is relative to the energy scale
    if residual > tol * max(1.0, abs(energy)):
        raise ConvergenceError(
            f"eigen-residual {residual:.3e} above tolerance {tol:.3e}",
            residual=residual)
    return GroundState(energy=energy, amplitudes=v, residual=residual)


def site_expectations(state: np.ndarray):
    """Per-site <sz_i> and <sx_i> of a unit-norm real state.

    Returns (sz, sx) as length-n arrays.
    """
    dim = state.size
    n = int(round(np.log2(dim)))
    prob = state * state
    sz = np.empty(n)
    sx = np.empty(n)
    for i in range(n):
        pt = prob.reshape(1 << i, 2, -1)
        sz[i] = pt[:, 0, :].sum() - pt[:, 1, :].sum()
        st = state.reshape(1 << i, 2, -1)
        sx[i] = 2.0 * np.sum(st[:, 0, :] * st[:, 1, :])
    return sz, sx


def save_ground_state(gs: GroundState, path) -> None:
    """Binary dump: little-endian uint32 n, float64 energy, then 2^n float64 amplitudes."""
    import struct
    with open(path, "wb") as f:
        f.write(struct.pack("<Id", gs.n, gs.energy))
        f.write(gs.amplitudes.astype("<f8").tobytes())


def load_ground_state(path) -> GroundState:
    with open(path, "rb") as f:
        raw = f.read()
    n = int(np.frombuffer(raw[:4], dtype="<u4")[0])
    energy = float(np.frombuffer(raw[4:12], dtype="<f8")[0])
    amps = np.frombuffer(raw[12:], dtype="<f8").copy()
    if amps.size != (1 << n):
        raise ValueError(f"{path}: expected {1 << n} amplitudes, found {amps.size}")
    return GroundState(energy=energy, amplitudes=amps)
