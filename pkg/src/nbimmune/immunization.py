"""Greedy node-removal strategies for lowering the leading NB-eigenvalue.

Every strategy removes one node per round, recomputing its statistic on
the current graph in between.  Removed nodes keep their ids and are simply
detached, so reports always speak in the ids of the input graph.  Ties go
to the smallest id.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .centrality import (
    collective_influence_all,
    removal_stats,
    x_degree_all,
    x_nb_approx_all,
)
from .graph import Graph, k_core_decomposition
from .ipq import IndexedPriorityQueue
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, leading_eigenpair

__all__ = [
    "ImmunizationReport",
    "XDegreeTracker",
    "immunize",
    "immunize_naive_xnb",
    "immunize_approx_xnb",
    "immunize_xdeg",
    "immunize_baseline",
    "BASELINE_KINDS",
    "BACKENDS",
]

BASELINE_KINDS = ("degree", "core", "ci", "nb")
BACKENDS = ("map", "ipq")
# scores within this relative distance of the maximum count as tied
TIE_RTOL = 1e-12


@dataclass
class ImmunizationReport:
    """Outcome of one greedy immunization run.

    ``lambda_after_each[r]`` is lambda1 after round ``r``; entries are
    ``nan`` for rounds whose eigen-solve was skipped.  ``wall_time`` covers
    node selection and removal but not solves done only for the trace.
    """

    strategy: str
    removed: list
    lambda_before: float
    lambda_after_each: np.ndarray
    wall_time: float
    backend: str | None = None
    zero_score_rounds: list = field(default_factory=list)
    fallback_round: int | None = None
    truncated: bool = False

    @property
    def lambda_final(self):
        if len(self.lambda_after_each) == 0:
            return self.lambda_before
        return float(self.lambda_after_each[-1])

    @property
    def percent_drop(self):
        """``100 (lambda_before - lambda_final) / lambda_before`` (0 if lambda is 0)."""
        if self.lambda_before == 0:
            return 0.0
        return 100.0 * (self.lambda_before - self.lambda_final) / self.lambda_before

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "backend": self.backend,
            "removed": [int(c) for c in self.removed],
            "lambda_before": float(self.lambda_before),
            "lambda_after_each": [None if math.isnan(x) else float(x)
                                  for x in self.lambda_after_each],
            "percent_drop": self.percent_drop,
            "zero_score_rounds": list(self.zero_score_rounds),
            "fallback_round": self.fallback_round,
            "truncated": self.truncated,
            "wall_time": self.wall_time,
        }


def _argmax(scores, alive):
    """Smallest alive id whose score ties the alive maximum."""
    masked = np.where(alive, scores, -np.inf)
    best = masked.max()
    tol = TIE_RTOL * max(1.0, abs(best))
    return int(np.flatnonzero(masked >= best - tol)[0]), float(best)


def _rounds(g, p):
    if p < 0:
        raise ValueError("p must be non-negative")
    if p > g.n:
        warnings.warn(f"p={p} exceeds the {g.n} available nodes; truncating",
                      RuntimeWarning, stacklevel=3)
        return g.n, True
    return p, False


class _Run:
    """Shared bookkeeping: current graph, trace, timing and flags."""

    def __init__(self, g, p, strategy, record_lambda, tol, max_iter, backend=None):
        self.tol, self.max_iter = tol, max_iter
        self.rounds, truncated = _rounds(g, p)
        self._base = g
        self._graph = g
        self._spectrum = None
        self.alive = np.ones(g.n, dtype=bool)
        self.record_lambda = record_lambda
        self.report = ImmunizationReport(
            strategy, [], self.spectrum().lambda1,
            np.full(self.rounds, np.nan), 0.0, backend, truncated=truncated)
        self._trace_time = 0.0
        self._start = time.perf_counter()

    def spectrum(self):
        """Leading eigenpair of the current graph, solved once per graph state."""
        if self._spectrum is None:
            self._spectrum = leading_eigenpair(
                self.graph, tol=self.tol, max_iter=self.max_iter)
        return self._spectrum

    @property
    def graph(self):
        """Input graph with every removed node detached (rebuilt on demand)."""
        if self._graph is None:
            e = self._base.edges
            keep = self.alive[e[:, 0]] & self.alive[e[:, 1]]
            self._graph = Graph.from_edges(self._base.n, e[keep], self._base.labels)
        return self._graph

    def remove(self, c, score):
        r = len(self.report.removed)
        self.report.removed.append(c)
        if score == 0:
            self.report.zero_score_rounds.append(r)
        self.alive[c] = False
        self._graph = None
        self._spectrum = None
        if self.record_lambda or r == self.rounds - 1:
            t0 = time.perf_counter()
            self.report.lambda_after_each[r] = self.spectrum().lambda1
            self._trace_time += time.perf_counter() - t0

    def finish(self):
        elapsed = time.perf_counter() - self._start
        self.report.wall_time = elapsed - self._trace_time
        return self.report


def immunize_naive_xnb(g, p, record_lambda=True, tol=DEFAULT_TOL,
                       max_iter=DEFAULT_MAX_ITER):
    """Remove the node of largest exact X-NB, recomputed for every node each round.

    Costs one eigen-solve per remaining node per round; small graphs only.
    """
    run = _Run(g, p, "xnb_naive", record_lambda, tol, max_iter)
    for _ in range(run.rounds):
        scores = np.zeros(g.n)
        for c in np.flatnonzero(run.alive):
            scores[c] = removal_stats(run.graph, int(c), tol, max_iter).x_nb
        c, best = _argmax(scores, run.alive)
        run.remove(c, best)
    return run.finish()


def immunize_approx_xnb(g, p, record_lambda=True, tol=DEFAULT_TOL,
                        max_iter=DEFAULT_MAX_ITER):
    """Remove the node of largest approximate X-NB, one eigen-solve per round.

    Once the current spectrum is degenerate (lambda1 <= 1) the remaining
    rounds rank by X-degree instead; ``fallback_round`` records when.
    """
    run = _Run(g, p, "xnb", record_lambda, tol, max_iter)
    for r in range(run.rounds):
        if run.report.fallback_round is None:
            spectrum = run.spectrum()
            if spectrum.degenerate:
                run.report.fallback_round = r
        if run.report.fallback_round is None:
            scores = x_nb_approx_all(run.graph, spectrum)
        else:
            scores = x_degree_all(run.graph).astype(float)
        c, best = _argmax(scores, run.alive)
        run.remove(c, best)
    return run.finish()


def immunize_baseline(g, p, kind, record_lambda=True, tol=DEFAULT_TOL,
                      max_iter=DEFAULT_MAX_ITER):
    """Greedy removal by degree, coreness, CI or NB-centrality, recomputed each round."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
    run = _Run(g, p, kind, record_lambda, tol, max_iter)
    for _ in range(run.rounds):
        h = run.graph
        if kind == "degree":
            scores = h.degrees.astype(float)
        elif kind == "core":
            scores = k_core_decomposition(h).core_index.astype(float)
        elif kind == "ci":
            scores = collective_influence_all(h).astype(float)
        else:
            scores = run.spectrum().v_bar
        c, best = _argmax(scores, run.alive)
        run.remove(c, best)
    return run.finish()


class XDegreeTracker:
    """X-degrees kept current under node removals by local updates.

    For each node ``i`` it stores ``s_i = sum(d_j - 1)`` and
    ``q_i = sum((d_j - 1)^2)`` over neighbors ``j``; the X-degree is
    ``s_i^2 - q_i``.  Removing ``r`` changes ``s, q`` only at neighbors of
    ``r`` (they lose ``r``) and at neighbors of those neighbors (one of
    their neighbors lost a degree), so only that ball is touched.
    """

    def __init__(self, g, backend="ipq"):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        self.backend = backend
        self.adj = [set(nb) for nb in g.adjacency]
        self.deg = g.degrees.tolist()
        dm1 = g.degrees.astype(np.int64) - 1
        rows = np.repeat(np.arange(g.n), g.degrees)
        s = np.zeros(g.n, dtype=np.int64)
        q = np.zeros(g.n, dtype=np.int64)
        np.add.at(s, rows, dm1[g.indices])
        np.add.at(q, rows, dm1[g.indices] ** 2)
        self.s, self.q = s.tolist(), q.tolist()
        xs = (s * s - q).tolist()
        if backend == "map":
            self._store = dict(enumerate(xs))
        else:
            self._store = IndexedPriorityQueue(enumerate(xs))

    def __len__(self):
        return len(self._store)

    def _x(self, i):
        return self.s[i] * self.s[i] - self.q[i]

    def best(self):
        """``(node, x_degree)`` of the current maximum (smallest id on ties)."""
        if self.backend == "map":
            return max(self._store.items(), key=lambda kv: (kv[1], -kv[0]))
        return self._store.peek()

    def remove(self, r):
        """Detach ``r`` and refresh X-degrees in its two-step neighborhood."""
        adj, deg, s, q = self.adj, self.deg, self.s, self.q
        dr = deg[r] - 1
        touched = set()
        for i in adj[r]:
            adj[i].discard(r)
            s[i] -= dr
            q[i] -= dr * dr
            di = deg[i]
            deg[i] = di - 1
            # (d_i - 1)^2 - (d_i - 2)^2
            dq = 2 * di - 3
            touched.add(i)
            for j in adj[i]:
                s[j] -= 1
                q[j] -= dq
                touched.add(j)
        adj[r] = set()
        deg[r] = s[r] = q[r] = 0
        touched.discard(r)
        store = self._store
        if self.backend == "map":
            del store[r]
            for i in touched:
                store[i] = self._x(i)
        else:
            store.remove(r)
            for i in touched:
                store.update(i, self._x(i))
        return touched

    def snapshot(self):
        """Current X-degrees of the nodes still present, as ``{node: value}``."""
        return {i: self._store[i] for i in sorted(self._store.keys())}

    def to_graph(self):
        n = len(self.adj)
        edges = [(i, j) for i in range(n) for j in self.adj[i] if i < j]
        return Graph.from_edges(n, edges)


def immunize_xdeg(g, p, backend="ipq", record_lambda=True, tol=DEFAULT_TOL,
                  max_iter=DEFAULT_MAX_ITER, on_round=None):
    """Remove the node of largest X-degree, with local updates after each removal.

    ``on_round(tracker)`` is called after every removal, which tests use to
    compare the maintained values against a full recomputation.
    """
    run = _Run(g, p, "xdeg", record_lambda, tol, max_iter, backend=backend)
    tracker = XDegreeTracker(g, backend)
    for _ in range(run.rounds):
        c, best = tracker.best()
        tracker.remove(c)
        run.remove(int(c), best)
        if on_round is not None:
            on_round(tracker)
    return run.finish()


def immunize(g, p, strategy, backend="ipq", record_lambda=True,
             tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Dispatch on a strategy name: a baseline kind, ``xdeg``, ``xnb`` or ``xnb_naive``."""
    kw = dict(record_lambda=record_lambda, tol=tol, max_iter=max_iter)
    if strategy in BASELINE_KINDS:
        return immunize_baseline(g, p, strategy, **kw)
    if strategy == "xdeg":
        return immunize_xdeg(g, p, backend=backend, **kw)
    if strategy == "xnb":
        return immunize_approx_xnb(g, p, **kw)
    if strategy == "xnb_naive":
        return immunize_naive_xnb(g, p, **kw)
    raise ValueError(f"unknown strategy {strategy!r}")
