"""Experiment harnesses: eigen-drop prediction, strategy comparison, scaling."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .centrality import (
    collective_influence_all,
    predicted_lambda,
    removal_stats,
    x_degree_all,
    x_nb_approx_all,
)
from .errors import PreconditionError
from .generators import child_seed, config_powerlaw
from .immunization import immunize, immunize_xdeg
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, leading_eigenpair

__all__ = [
    "PredictRow",
    "STAT_COLUMNS",
    "sample_nodes",
    "predict_rows",
    "pearson",
    "correlations",
    "percent_to_count",
    "compare_strategies",
    "scaling_table",
]

STAT_COLUMNS = ("x_nb_exact", "x_nb_approx", "x_degree", "ci", "degree")


@dataclass(frozen=True)
class PredictRow:
    graph_id: int
    node: int
    degree: int
    drop: float
    lambda_after: float
    lambda_hat: float
    lambda_tilde: float
    drop_hat: float
    drop_tilde: float
    x_nb_exact: float
    x_nb_approx: float
    x_degree: int
    ci: int

    def as_dict(self):
        return asdict(self)


def sample_nodes(g, fraction, rng):
    """Nodes drawn with probability ``d_i / 2m``: a uniform edge, then a
    uniform endpoint.  ``ceil(fraction * n)`` draws with replacement,
    returned sorted and de-duplicated."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    if g.m == 0:
        raise PreconditionError("graph has no edges to sample from")
    draws = max(1, math.ceil(fraction * g.n))
    edges = g.edges[rng.integers(g.m, size=draws)]
    side = rng.integers(2, size=draws)
    return np.unique(edges[np.arange(draws), side])


def predict_rows(g, nodes, graph_id=0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """One :class:`PredictRow` per node: true drop against both estimates."""
    spectrum = leading_eigenpair(g, tol=tol, max_iter=max_iter)
    if spectrum.degenerate:
        raise PreconditionError(
            f"leading eigenvalue {spectrum.lambda1:g} <= 1; the eigen-drop estimates "
            "need a 2-core that is more than disjoint cycles")
    lam = spectrum.lambda1
    approx = x_nb_approx_all(g, spectrum)
    xdeg = x_degree_all(g)
    ci = collective_influence_all(g)
    rows = []
    for c in nodes:
        c = int(c)
        st = removal_stats(g, c, tol, max_iter)
        lam_hat = predicted_lambda(lam, st.x_nb)
        lam_tilde = predicted_lambda(lam, float(approx[c]))
        rows.append(PredictRow(
            graph_id, c, g.degree(c), lam - st.lambda_after, st.lambda_after,
            lam_hat, lam_tilde, lam - lam_hat, lam - lam_tilde,
            st.x_nb, float(approx[c]), int(xdeg[c]), int(ci[c])))
    return rows


def pearson(x, y):
    """Pearson correlation; ``nan`` when either input is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("inputs differ in length")
    if len(x) < 2:
        return math.nan
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(dx @ dx), math.sqrt(dy @ dy)
    if sx == 0 or sy == 0:
        return math.nan
    return float(dx @ dy / (sx * sy))


def correlations(rows, columns=STAT_COLUMNS):
    drop = [r.drop for r in rows]
    return {col: pearson([getattr(r, col) for r in rows], drop) for col in columns}


def percent_to_count(percent, n):
    """``floor(percent * n / 100)``, at least 1."""
    if percent < 0:
        raise ValueError("percent must be non-negative")
    return max(1, math.floor(percent * n / 100.0))


def compare_strategies(graphs, strategies, percent, backend="ipq",
                       tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Mean percentage eigen-drop of each strategy over ``graphs``.

    Returns ``{strategy: (mean, per-graph list)}``.
    """
    out = {}
    for s in strategies:
        drops = []
        for g in graphs:
            p = percent_to_count(percent, g.n)
            rep = immunize(g, p, s, backend=backend, record_lambda=False,
                           tol=tol, max_iter=max_iter)
            drops.append(rep.percent_drop)
        out[s] = (float(np.mean(drops)), drops)
    return out


def scaling_table(ns, p, seeds, gamma=2.5, backends=("ipq", "map"), seed=0,
                  warmup=True):
    """Mean and std runtime of X-degree immunization per ``(n, backend)``.

    Each of the ``seeds`` repetitions draws a fresh configuration-model
    graph; both backends run on the same graph.  Sizes are interleaved
    within each repetition so slow drift in machine load does not bias one
    size.  With ``warmup`` each timed run is preceded by an identical
    untimed one, so first-touch allocation and cache costs on a fresh
    graph stay out of the numbers.  Rows come sorted by ``(n, backend)``.
    """
    times = {}
    for r in range(seeds):
        for n in ns:
            g = config_powerlaw(n, gamma, seed=child_seed(seed, n, r))
            for b in backends:
                if warmup:
                    immunize_xdeg(g, min(p, g.n), backend=b, record_lambda=False)
                rep = immunize_xdeg(g, min(p, g.n), backend=b, record_lambda=False)
                times.setdefault((n, b), []).append(rep.wall_time)
    rows = []
    for (n, b) in sorted(times):
        t = np.array(times[(n, b)])
        rows.append({"n": n, "backend": b, "mean_seconds": float(t.mean()),
                     "std_seconds": float(t.std())})
    return rows
