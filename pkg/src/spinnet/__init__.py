"""Transverse-Ising ground states on imprinted complex networks, emergent
mutual-information networks, mean-field theory, and projective-measurement
attacks."""

__version__ = "0.1.0"

from .graphs import Graph, gen_barabasi_albert, gen_erdos_renyi, gen_watts_strogatz
from .hilbert import GroundState, HamiltonianParams, build_hamiltonian, ground_state
from .minet import MINetwork, build_mi_network

__all__ = [
    "Graph", "gen_erdos_renyi", "gen_watts_strogatz", "gen_barabasi_albert",
    "HamiltonianParams", "GroundState", "build_hamiltonian", "ground_state",
    "MINetwork", "build_mi_network",
]
