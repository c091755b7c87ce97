import numpy as np
import pytest

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
HAD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def kron_all(ops):
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


def site_op(op, site, n):
    ops = [np.eye(2)] * n
    ops[site] = op
    return kron_all(ops)


def dense_hamiltonian(graph, J, h):
    """Independent dense oracle built from explicit Kronecker products."""
    n = graph.n
    H = np.zeros((1 << n, 1 << n))
    for (i, j) in graph.links:
        H -= J * site_op(SZ, i, n) @ site_op(SZ, j, n)
    for i in range(n):
        H += h * site_op(SX, i, n)
    return H


def dense_partial_trace(rho_full, keep, n):
    """Partial trace of a 2^n x 2^n density matrix onto the sites in `keep`."""
    keep = list(keep)
    t = rho_full.reshape((2,) * (2 * n))
    traced = [s for s in range(n) if s not in keep]
    for s in sorted(traced, reverse=True):
        t = np.trace(t, axis1=s, axis2=t.ndim // 2 + s)
        # after tracing, axes renumber; rebuild index bookkeeping
        n_now = t.ndim // 2
        keep = [k if k < s else k - 1 for k in keep]
    dim = 1 << len(keep)
    t = t.reshape(dim, dim)
    # axes of kept sites are already in ascending site order
    return t


def full_channel(rho_full, site, n, direction, q):
    """Per-site dephasing applied to the full density matrix."""
    if direction == "x":
        U = site_op(HAD, site, n)
        rho_full = U @ rho_full @ U
    factor = np.array([[1.0, 1.0 - q], [1.0 - q, 1.0]])
    mask = kron_all([factor if s == site else np.ones((2, 2)) for s in range(n)])
    rho_full = rho_full * mask
    if direction == "x":
        rho_full = U @ rho_full @ U
    return rho_full


def random_state(n, rng):
    v = rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_connected_graph(n, rng, p=0.5):
    from spinnet.graphs import gen_erdos_renyi
    g, _ = gen_erdos_renyi(n, p, rng, require_connected=True)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
