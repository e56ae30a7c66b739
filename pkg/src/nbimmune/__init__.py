"""Non-backtracking eigenvalue perturbation under node removal, and
greedy immunization strategies built on it."""

from .centrality import (
    CentralityVector,
    collective_influence,
    compute_centrality,
    predicted_lambda,
    x_degree,
    x_nb_approx,
    x_nb_exact,
)
from .graph import Graph, k_core_decomposition, load_edge_list, remove_node
from .immunization import (
    ImmunizationReport,
    immunize,
    immunize_approx_xnb,
    immunize_baseline,
    immunize_naive_xnb,
    immunize_xdeg,
)
from .ipq import IndexedPriorityQueue
from .spectral import SpectralResult, eigen_drop_exact, leading_eigenpair, nb_centrality

__version__ = "0.1.0"

__all__ = [
    "CentralityVector",
    "Graph",
    "ImmunizationReport",
    "IndexedPriorityQueue",
    "SpectralResult",
    "collective_influence",
    "compute_centrality",
    "eigen_drop_exact",
    "immunize",
    "immunize_approx_xnb",
    "immunize_baseline",
    "immunize_naive_xnb",
    "immunize_xdeg",
    "k_core_decomposition",
    "leading_eigenpair",
    "load_edge_list",
    "nb_centrality",
    "predicted_lambda",
    "remove_node",
    "x_degree",
    "x_nb_approx",
    "x_nb_exact",
]
