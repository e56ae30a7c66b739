"""Node-level statistics that predict the NB eigen-drop of a removal.

Every X-centrality here is a quadratic form over the neighbors of the
target node ``c``: given per-neighbor values ``s_i``,

    X(c) = (sum_i s_i)^2 - sum_i s_i^2

X-degree uses ``s_i = d_i - 1``; X-NB uses the NB-centralities of the
neighbors, measured after ``c`` is removed (exact) or before (approx).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import PreconditionError
from .graph import k_core_decomposition, remove_node
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, leading_eigenpair

__all__ = [
    "KINDS",
    "CentralityVector",
    "EdgeStatVector",
    "RemovalStats",
    "x_degree",
    "x_degree_all",
    "collective_influence",
    "collective_influence_all",
    "x_nb_exact",
    "x_nb_exact_all",
    "removal_stats",
    "x_nb_approx",
    "x_nb_approx_all",
    "predicted_lambda",
    "x_centrality_generic",
    "variance_relation_check",
    "compute_centrality",
]

KINDS = ("degree", "core", "ci", "nb", "xdeg", "xnb_exact", "xnb_approx")


@dataclass
class CentralityVector:
    kind: str
    scores: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown centrality kind {self.kind!r}")

    def top(self, k):
        """Indices of the ``k`` largest scores (ties by smallest id)."""
        order = np.lexsort((np.arange(len(self.scores)), -self.scores))
        return order[:k]


class EdgeStatVector:
    """Values on the directed edges of ``graph``, with per-node in-sums."""

    def __init__(self, graph, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (2 * graph.m,):
            raise ValueError(
                f"edge vector has shape {z.shape}, expected ({2 * graph.m},)")
        self.graph = graph
        self.z = z

    @cached_property
    def z_node(self):
        return self.graph.edge_index.in_sums(self.z)

    def neighbor_sums_excluding(self, c):
        """``z^i`` for each neighbor ``i`` of ``c``, ignoring edges at ``c``."""
        idx = self.graph.edge_index
        nbrs = self.graph.neighbors(c)
        into_from_c = idx.indices_of(np.full(len(nbrs), c), nbrs)
        return self.z_node[nbrs] - self.z[into_from_c]


def _check_node(g, c):
    if not 0 <= c < g.n:
        raise IndexError(f"node {c} out of range for n={g.n}")


def _quadratic(values):
    s = values.sum()
    return s * s - (values * values).sum()


def x_degree(g, c):
    """X-degree of ``c``; degrees are taken in the graph before removal."""
    _check_node(g, c)
    dm1 = g.degrees[g.neighbors(c)] - 1
    return int(_quadratic(dm1))


def x_degree_all(g):
    """X-degree of every node as exact ``int64`` values."""
    dm1 = g.degrees.astype(np.int64) - 1
    rows = np.repeat(np.arange(g.n), g.degrees)
    vals = dm1[g.indices]
    s = np.zeros(g.n, dtype=np.int64)
    q = np.zeros(g.n, dtype=np.int64)
    np.add.at(s, rows, vals)
    np.add.at(q, rows, vals * vals)
    return s * s - q


def collective_influence(g, c):
    _check_node(g, c)
    if g.degree(c) == 0:
        return 0
    return int((g.degree(c) - 1) * (g.degrees[g.neighbors(c)] - 1).sum())


def collective_influence_all(g):
    dm1 = g.degrees.astype(np.int64) - 1
    rows = np.repeat(np.arange(g.n), g.degrees)
    s = np.zeros(g.n, dtype=np.int64)
    np.add.at(s, rows, dm1[g.indices])
    return np.where(g.degrees > 0, dm1 * s, 0)


@dataclass(frozen=True)
class RemovalStats:
    """What one temporary removal of ``node`` tells us."""

    node: int
    x_nb: float
    lambda_after: float
    degenerate: bool
    converged: bool


def removal_stats(g, c, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Remove ``c``, solve once, and return exact X-NB with the new lambda1.

    A post-removal graph with an empty 2-core gives X-NB 0.  One whose
    2-core is a union of cycles (lambda1' = 1) uses the symmetric cycle
    eigenvector; both cases are flagged ``degenerate``.
    """
    _check_node(g, c)
    h = remove_node(g, c, compact=False)
    res = leading_eigenpair(h, tol=tol, max_iter=max_iter)
    vals = res.v_bar[g.neighbors(c)]
    return RemovalStats(int(c), float(_quadratic(vals)), res.lambda1,
                        res.degenerate, res.converged)


def x_nb_exact(g, c, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    return removal_stats(g, c, tol, max_iter).x_nb


def x_nb_exact_all(g, nodes=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    nodes = range(g.n) if nodes is None else nodes
    return [removal_stats(g, int(c), tol, max_iter) for c in nodes]


def x_nb_approx(g, c, spectral):
    """X-NB from the centralities of the intact graph (no removal).

    Returns 0 when ``spectral`` is degenerate (lambda1 <= 1).
    """
    _check_node(g, c)
    if spectral.degenerate:
        return 0.0
    return float(_quadratic(spectral.v_bar[g.neighbors(c)]))


def x_nb_approx_all(g, spectral):
    if spectral.degenerate:
        return np.zeros(g.n)
    a = g.adjacency_matrix
    vb = spectral.v_bar
    s = a @ vb
    return s * s - a @ (vb * vb)


def predicted_lambda(lambda1, alpha):
    """First-order estimate of lambda1 after removal: ``lambda1 - alpha/lambda1^2``."""
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive")
    return lambda1 - alpha / (lambda1 * lambda1)


def x_centrality_generic(g, c, z):
    """Quadratic form ``z' P X z`` for target ``c`` from any edge vector ``z``.

    Entries of ``z`` on edges incident to ``c`` are ignored.
    """
    _check_node(g, c)
    if not isinstance(z, EdgeStatVector) or z.graph is not g:
        z = EdgeStatVector(g, getattr(z, "z", z))
    return float(_quadratic(z.neighbor_sums_excluding(c)))


def variance_relation_check(g, c, z):
    """Return ``(z' P X z, Var_c(z^i))`` for the neighbors of ``c``.

    The two satisfy ``form = (d - 1) S^2 / d - d Var`` with ``S`` the
    neighbor sum, so at a fixed mean the form grows as the variance drops.
    """
    _check_node(g, c)
    d = g.degree(c)
    if d == 0:
        raise PreconditionError(f"node {c} has no neighbors")
    if not isinstance(z, EdgeStatVector) or z.graph is not g:
        z = EdgeStatVector(g, getattr(z, "z", z))
    vals = z.neighbor_sums_excluding(c)
    form = float(_quadratic(vals))
    var = float((vals * vals).sum() / d - (vals.sum() / d) ** 2)
    return form, var


def compute_centrality(g, kind, spectral=None, tol=DEFAULT_TOL,
                       max_iter=DEFAULT_MAX_ITER):
    """Score every node of ``g`` with one statistic."""
    meta = {}
    if kind == "degree":
        scores = g.degrees.astype(float)
    elif kind == "core":
        scores = k_core_decomposition(g).core_index.astype(float)
    elif kind == "ci":
        scores = collective_influence_all(g).astype(float)
    elif kind == "xdeg":
        scores = x_degree_all(g).astype(float)
    elif kind in ("nb", "xnb_approx"):
        if spectral is None:
            spectral = leading_eigenpair(g, tol=tol, max_iter=max_iter)
        meta.update(lambda1=spectral.lambda1, degenerate=spectral.degenerate,
                    converged=spectral.converged)
        if kind == "nb":
            scores = spectral.v_bar.copy()
        else:
            scores = x_nb_approx_all(g, spectral)
    elif kind == "xnb_exact":
        stats = x_nb_exact_all(g, tol=tol, max_iter=max_iter)
        scores = np.array([s.x_nb for s in stats])
        meta.update(degenerate=[s.degenerate for s in stats],
                    converged=[s.converged for s in stats],
                    lambda_after=[s.lambda_after for s in stats])
    else:
        raise ValueError(f"unknown centrality kind {kind!r}")
    return CentralityVector(kind, scores, meta)
