"""Non-backtracking operators and the leading NB-eigenpair.

The NB-matrix ``B`` acts on vectors indexed by directed edges::

    (B x)[k->l] = sum of x over in-edges of k, minus x[l->k]

and ``P`` swaps each directed edge with its reverse.  Neither is ever
materialized here; dense versions live in :mod:`nbimmune.oracle`.

The leading eigenvalue is found on the ``2n x 2n`` auxiliary matrix::

    B_aux = [[ 0,  D - I],
             [-I,  A    ]]

whose left Perron vector is ``(f, -lam f)`` with ``f`` proportional to the
NB-centralities ``vbar[i] = sum_j a_ij v[j->i]``.  ``vbar`` is rescaled so
that the edge eigenvector ``v`` it comes from satisfies ``v' P v = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator

from .errors import ConvergenceWarning, EmptyGraphError
from .graph import remove_node, two_core_mask

__all__ = [
    "NbOperator",
    "AuxOperator",
    "SpectralResult",
    "build_nb_operator",
    "build_aux_operator",
    "leading_eigenpair",
    "nb_centrality",
    "eigen_drop_exact",
    "edge_eigenvector",
    "small_big_mu",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
# lambda1 <= 1 + DEGENERATE_GAP is treated as the non-simple / unnormalizable case
DEGENERATE_GAP = 1e-9


class NbOperator:
    """Matrix-free NB-matrix ``B`` and reversal ``P`` of a graph."""

    def __init__(self, g):
        self.graph = g
        self.index = g.edge_index
        self.shape = (len(self.index), len(self.index))

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.index
        return idx.in_sums(x)[idx.src] - x[idx.reverse]

    def rmatvec(self, x):
        """``B^T x``: out-sum at the head of each edge minus its reverse."""
        x = np.asarray(x, dtype=float)
        idx = self.index
        return idx.out_sums(x)[idx.dst] - x[idx.reverse]

    def reverse(self, x):
        return np.asarray(x)[self.index.reverse]

    def as_linear_operator(self):
        return LinearOperator(self.shape, matvec=self.matvec,
                              rmatvec=self.rmatvec, dtype=float)


class AuxOperator:
    """Matrix-free ``B_aux`` acting on length-``2n`` vectors."""

    def __init__(self, g):
        self.graph = g
        self.n = g.n
        self.shape = (2 * g.n, 2 * g.n)
        self._adj = g.adjacency_matrix
        self._dm1 = g.degrees.astype(float) - 1.0

    def matvec(self, z):
        x, y = z[:self.n], z[self.n:]
        return np.concatenate([self._dm1 * y, self._adj @ y - x])

    def rmatvec(self, z):
        x, y = z[:self.n], z[self.n:]
        return np.concatenate([-y, self._dm1 * x + self._adj @ y])

    def as_linear_operator(self):
        return LinearOperator(self.shape, matvec=self.matvec,
                              rmatvec=self.rmatvec, dtype=float)


def build_nb_operator(g):
    return NbOperator(g)


def build_aux_operator(g):
    return AuxOperator(g)


@dataclass(frozen=True)
class SpectralResult:
    """Leading NB-eigenvalue with its node-level eigenvector data.

    ``f`` is the first half of the unit left eigenvector of ``B_aux``.
    ``v_bar`` holds NB-centralities scaled so that ``v' P v = 1``.
    ``degenerate`` marks ``lambda1 <= 1``: an empty 2-core (everything
    zero) or a 2-core made of disjoint cycles, where the eigenvalue is not
    simple and ``v_bar`` uses the symmetric cycle eigenvector.
    """

    lambda1: float
    f: np.ndarray
    v_bar: np.ndarray
    converged: bool
    iterations: int
    degenerate: bool = False

    @property
    def mu(self):
        """Ratio ``|v_bar| / |f|`` (``nan`` when ``f`` vanishes)."""
        nf = np.linalg.norm(self.f)
        return float(np.linalg.norm(self.v_bar) / nf) if nf else math.nan


def small_big_mu(lam, f, degrees):
    """Scale taking the aux eigenvector half ``f`` to normalized centralities.

    Only defined for ``lam > 1``.
    """
    fdf = float(np.dot(f * f, degrees))
    return math.sqrt(lam * (lam * lam - 1.0) / (1.0 - fdf))


def _cycle_core_result(g, core):
    # The 2-core is a union of cycles: lambda1 = 1 exactly.  Take the
    # eigenvector that is constant on both orientations of every cycle;
    # edges pointing out of a cycle into its trees carry the in-sum of
    # their tail, edges pointing back carry 0.  That makes v_bar constant
    # (= 2a) on every component containing a cycle, with 2 a^2 L = 1 where
    # L counts all cycle nodes.
    n = g.n
    cycle_nodes = int(core.sum())
    a = 1.0 / math.sqrt(2.0 * cycle_nodes)
    _, comp = connected_components(g.adjacency_matrix, directed=False)
    has_cycle = np.zeros(comp.max() + 1, dtype=bool)
    has_cycle[comp[core]] = True
    v_bar = np.where(has_cycle[comp], 2.0 * a, 0.0)
    # unit (f, -f): 2 |f|^2 = 1
    nv = np.linalg.norm(v_bar)
    f = v_bar / (nv * math.sqrt(2.0)) if nv else np.zeros(n)
    return SpectralResult(1.0, f, v_bar, True, 0, degenerate=True)


def _pencil_rayleigh(g, x, fallback):
    # f solves (lam^2 I - lam A + D - I) f = 0 with a symmetric pencil, so
    # the larger root of f'f lam^2 - f'Af lam + f'(D-I)f = 0 is accurate to
    # second order in the eigenvector error.
    xx = float(x @ x)
    xax = float(x @ (g.adjacency_matrix @ x))
    xdx = float((x * x) @ (g.degrees - 1.0))
    disc = xax * xax - 4.0 * xx * xdx
    if xx == 0.0 or disc < 0.0:
        return fallback
    return (xax + math.sqrt(disc)) / (2.0 * xx)


def leading_eigenpair(g, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, shift=1.0):
    """Leading NB-eigenvalue and normalized NB-centralities of ``g``.

    Power iteration on ``B_aux^T + shift * I`` from the uniform start
    vector.  The shift keeps the iteration convergent on bipartite graphs,
    where ``-lambda1`` is also an eigenvalue; it is subtracted back out of
    the estimate.  Iteration stops once the estimate moves by less than
    ``tol`` and the eigen-residual is below ``tol * max(1, lambda)``.
    """
    n = g.n
    if n == 0:
        raise EmptyGraphError("graph has no nodes")
    core = two_core_mask(g)
    if not core.any():
        z = np.zeros(n)
        return SpectralResult(0.0, z, z.copy(), True, 0, degenerate=True)
    core_deg = np.bincount(
        np.repeat(np.arange(n), g.degrees)[core[g.indices]], minlength=n)
    if core_deg[core].max() <= 2:
        return _cycle_core_result(g, core)

    op = AuxOperator(g)
    z = np.full(2 * n, 1.0 / math.sqrt(2 * n))
    y = op.rmatvec(z) + shift * z
    rho = np.linalg.norm(y)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        z = y / rho
        y = op.rmatvec(z) + shift * z
        rho_new = np.linalg.norm(y)
        resid = np.linalg.norm(y - rho_new * z)
        done = abs(rho_new - rho) < tol and resid < tol * max(1.0, rho_new)
        rho = rho_new
        if done:
            converged = True
            break
    if not converged:
        warnings.warn(f"power iteration stopped after {it} steps without "
                      f"converging (tol={tol})", ConvergenceWarning, stacklevel=2)
    z = y / rho
    x = z[:n]
    if x.sum() < 0:
        x = -x
    lam = _pencil_rayleigh(g, x, float(rho - shift))
    # components without a 2-core contribute exactly nothing to the
    # eigenvector; zero them instead of keeping iteration round-off
    _, comp = connected_components(g.adjacency_matrix, directed=False)
    has_core = np.zeros(comp.max() + 1, dtype=bool)
    has_core[comp[core]] = True
    x = np.where(has_core[comp], x, 0.0)
    f = x / (np.linalg.norm(x) * math.sqrt(1.0 + lam * lam))
    f[(f < 0) & (f > -1e-12)] = 0.0
    mu = small_big_mu(lam, f, g.degrees)
    return SpectralResult(lam, f, mu * f, converged, it, degenerate=False)


def nb_centrality(g, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """NB-centralities ``vbar`` normalized so that ``v' P v = 1``.

    For graphs whose 2-core is empty every score is zero; when the 2-core
    is a union of cycles the symmetric cycle eigenvector is used.  Both
    cases warn, since the eigenvalue is then not simple.
    """
    res = leading_eigenpair(g, tol=tol, max_iter=max_iter)
    if res.degenerate:
        warnings.warn(f"leading NB-eigenvalue is {res.lambda1:g} <= 1; "
                      "normalization is degenerate", RuntimeWarning, stacklevel=2)
    return res.v_bar


def edge_eigenvector(g, res):
    """Rebuild the directed-edge eigenvector ``v`` from node centralities.

    Uses ``v[k->l] = (lam vbar[k] - vbar[l]) / (lam^2 - 1)``, valid for
    ``lam > 1``.
    """
    lam = res.lambda1
    if lam <= 1.0 + DEGENERATE_GAP:
        raise ValueError("edge eigenvector reconstruction needs lambda1 > 1")
    idx = g.edge_index
    return (lam * res.v_bar[idx.src] - res.v_bar[idx.dst]) / (lam * lam - 1.0)


def eigen_drop_exact(g, c, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """``lambda1(g) - lambda1(g - c)``, both by full eigensolves."""
    if not 0 <= c < g.n:
        raise IndexError(f"node {c} out of range for n={g.n}")
    before = leading_eigenpair(g, tol=tol, max_iter=max_iter).lambda1
    h = remove_node(g, c, compact=False)
    after = leading_eigenpair(h, tol=tol, max_iter=max_iter).lambda1
    return before - after


def aux_sparse_matrix(g):
    """``B_aux`` as a scipy sparse matrix (handy for external eigensolvers)."""
    n = g.n
    eye = sparse.identity(n, format="csr")
    dm1 = sparse.diags(g.degrees.astype(float) - 1.0)
    return sparse.bmat([[None, dm1], [-eye, g.adjacency_matrix]], format="csr")
