"""Graph storage, edge-list ingestion, and k-core peeling.

Graphs are simple and undirected, stored as a CSR adjacency with sorted
neighbor lists.  Node ids are dense integers ``0..n-1``; the original ids
an input used are kept in ``Graph.labels``.

Directed edges follow one canonical layout everywhere in the package:
undirected edges are sorted by ``(min endpoint, max endpoint)`` and edge
number ``k`` owns directed index ``2k`` for ``min -> max`` and ``2k + 1``
for ``max -> min``.  Reversal is therefore ``k ^ 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.csgraph import connected_components

from .errors import EdgeListParseError, EmptyGraphError

logger = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "DirectedEdgeIndex",
    "CoreLabels",
    "LoadSummary",
    "load_edge_list",
    "load_edge_list_with_summary",
    "write_edge_list",
    "largest_connected_component",
    "induced_subgraph",
    "remove_node",
    "k_core_decomposition",
    "two_core_mask",
]


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Graph:
    """Immutable simple undirected graph.

    Build instances with :meth:`from_edges`; the constructor trusts its
    arguments to already be a valid symmetric CSR structure.
    """

    def __init__(self, indptr, indices, labels=None):
        self.indptr = _frozen(np.asarray(indptr, dtype=np.int64))
        self.indices = _frozen(np.asarray(indices, dtype=np.int64))
        n = len(self.indptr) - 1
        if labels is None:
            labels = np.arange(n, dtype=np.int64)
        self.labels = _frozen(np.asarray(labels, dtype=np.int64))

    @classmethod
    def from_edges(cls, n, edges, labels=None):
        """Build a graph on ``n`` nodes, dropping loops and duplicate edges."""
        g, _, _ = cls._from_edges_counted(n, edges, labels)
        return g

    @classmethod
    def _from_edges_counted(cls, n, edges, labels=None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise IndexError("edge endpoint outside 0..n-1")
        loops = edges[:, 0] == edges[:, 1]
        edges = edges[~loops]
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        keys = np.unique(lo * max(n, 1) + hi)
        duplicates = len(lo) - len(keys)
        lo, hi = keys // max(n, 1), keys % max(n, 1)
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(indptr, cols, labels), int(loops.sum()), int(duplicates)

    @property
    def n(self):
        return len(self.indptr) - 1

    @property
    def m(self):
        return len(self.indices) // 2

    @cached_property
    def degrees(self):
        return _frozen(np.diff(self.indptr))

    def degree(self, i):
        return int(self.indptr[i + 1] - self.indptr[i])

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self):
        """Per-node sorted neighbor lists."""
        ind, ptr = self.indices.tolist(), self.indptr.tolist()
        return [ind[ptr[i]:ptr[i + 1]] for i in range(self.n)]

    @cached_property
    def edges(self):
        """Undirected edges as an ``(m, 2)`` array in canonical order."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return _frozen(np.column_stack([rows[keep], self.indices[keep]]))

    @cached_property
    def edge_index(self):
        return DirectedEdgeIndex(self.edges, self.n)

    @cached_property
    def adjacency_matrix(self):
        data = np.ones(len(self.indices))
        return sparse.csr_matrix(
            (data, self.indices, self.indptr), shape=(self.n, self.n))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    __hash__ = None


class DirectedEdgeIndex:
    """Bijection between directed edges and ``0..2m-1`` (canonical layout)."""

    def __init__(self, edges, n):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        m = len(edges)
        self.n = n
        src = np.empty(2 * m, dtype=np.int64)
        dst = np.empty(2 * m, dtype=np.int64)
        src[0::2], dst[0::2] = edges[:, 0], edges[:, 1]
        src[1::2], dst[1::2] = edges[:, 1], edges[:, 0]
        self.src = _frozen(src)
        self.dst = _frozen(dst)
        self.reverse = _frozen(np.arange(2 * m, dtype=np.int64) ^ 1)
        self._keys = edges[:, 0] * max(n, 1) + edges[:, 1]

    def __len__(self):
        return len(self.src)

    def edge_of_index(self, k):
        return int(self.src[k]), int(self.dst[k])

    def index_of(self, u, v):
        out = self.indices_of(np.array([u]), np.array([v]))
        return int(out[0])

    def indices_of(self, us, vs):
        """Vectorized :meth:`index_of`; raises ``KeyError`` on non-edges."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        lo, hi = np.minimum(us, vs), np.maximum(us, vs)
        keys = lo * max(self.n, 1) + hi
        pos = np.searchsorted(self._keys, keys)
        ok = (pos < len(self._keys)) & (us != vs)
        ok[ok] &= self._keys[pos[ok]] == keys[ok]
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise KeyError((int(us[bad]), int(vs[bad])))
        return 2 * pos + (us > vs)

    def in_sums(self, x):
        """Per-node sum of ``x`` over incoming directed edges."""
        return np.bincount(self.dst, weights=x, minlength=self.n)

    def out_sums(self, x):
        return np.bincount(self.src, weights=x, minlength=self.n)


@dataclass(frozen=True)
class LoadSummary:
    n: int
    m: int
    lines: int
    self_loops: int
    duplicates: int


def load_edge_list_with_summary(stream: TextIO | Iterable[str]):
    """Parse a whitespace-separated edge list; returns ``(graph, summary)``.

    Lines starting with ``#`` and blank lines are skipped.  Original ids are
    compacted to ``0..n-1`` in increasing order and kept in ``graph.labels``.
    """
    pairs = []
    lines = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lines += 1
        tokens = line.split()
        if len(tokens) != 2:
            raise EdgeListParseError(lineno, line)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(lineno, line) from None
        if u < 0 or v < 0:
            raise EdgeListParseError(lineno, line, "negative node id")
        pairs.append((u, v))
    if not pairs:
        raise EmptyGraphError("edge list contains no edges")
    raw_edges = np.array(pairs, dtype=np.int64)
    labels, compact = np.unique(raw_edges, return_inverse=True)
    g, loops, dupes = Graph._from_edges_counted(
        len(labels), compact.reshape(-1, 2), labels)
    summary = LoadSummary(g.n, g.m, lines, loops, dupes)
    if loops or dupes:
        logger.info("dropped %d self-loops and %d duplicate edges", loops, dupes)
    return g, summary


def load_edge_list(stream):
    return load_edge_list_with_summary(stream)[0]


def write_edge_list(g, stream, use_labels=True):
    ids = g.labels if use_labels else np.arange(g.n)
    for u, v in g.edges:
        stream.write(f"{ids[u]} {ids[v]}\n")


def induced_subgraph(g, nodes):
    """Subgraph on ``nodes`` (sorted), relabelled densely; labels carried over."""
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    e = g.edges
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    return Graph.from_edges(len(nodes), remap[e[keep]], g.labels[nodes])


def largest_connected_component(g):
    """Largest component; ties go to the component holding the smallest label."""
    if g.n == 0:
        raise EmptyGraphError("graph has no nodes")
    ncomp, comp = connected_components(g.adjacency_matrix, directed=False)
    if ncomp == 1:
        return g
    sizes = np.bincount(comp)
    best = sizes.max()
    candidates = np.flatnonzero(sizes == best)
    if len(candidates) > 1:
        first_label = {k: g.labels[comp == k].min() for k in candidates}
        chosen = min(candidates, key=first_label.get)
    else:
        chosen = candidates[0]
    return induced_subgraph(g, np.flatnonzero(comp == chosen))


def remove_node(g, c, compact=True):
    """Delete node ``c`` and its edges.

    With ``compact=True`` the result has ``n - 1`` nodes and ``labels`` maps
    back to the caller's ids.  With ``compact=False`` ids are kept and ``c``
    simply becomes isolated.  The result is never reduced to a component.
    """
    if not 0 <= c < g.n:
        raise IndexError(f"node {c} out of range for n={g.n}")
    e = g.edges
    keep = (e[:, 0] != c) & (e[:, 1] != c)
    if not compact:
        return Graph.from_edges(g.n, e[keep], g.labels)
    nodes = np.delete(np.arange(g.n), c)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(g.n - 1)
    return Graph.from_edges(g.n - 1, remap[e[keep]], g.labels[nodes])


@dataclass(frozen=True)
class CoreLabels:
    core_index: np.ndarray
    in_two_core: np.ndarray


def k_core_decomposition(g):
    """Coreness of every node by bucketed minimum-degree peeling (O(n + m))."""
    n = g.n
    deg = g.degrees.tolist()
    md = max(deg, default=0)
    # bin sort nodes by degree
    bin_start = [0] * (md + 1)
    for d in deg:
        bin_start[d] += 1
    start = 0
    for d in range(md + 1):
        count = bin_start[d]
        bin_start[d] = start
        start += count
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        pos[v] = bin_start[deg[v]]
        vert[pos[v]] = v
        bin_start[deg[v]] += 1
    for d in range(md, 0, -1):
        bin_start[d] = bin_start[d - 1]
    if md >= 0 and n:
        bin_start[0] = 0
    indptr, indices = g.indptr.tolist(), g.indices.tolist()
    for i in range(n):
        v = vert[i]
        dv = deg[v]
        for u in indices[indptr[v]:indptr[v + 1]]:
            du = deg[u]
            if du > dv:
                pu = pos[u]
                pw = bin_start[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bin_start[du] += 1
                deg[u] = du - 1
    core = np.asarray(deg, dtype=np.int64)
    return CoreLabels(_frozen(core), _frozen(core >= 2))


def two_core_mask(g):
    """Boolean mask of 2-core membership, by repeated leaf stripping."""
    alive = np.ones(g.n, dtype=bool)
    deg = g.degrees.astype(np.int64)
    rows = np.repeat(np.arange(g.n), g.degrees)
    while True:
        strip = alive & (deg < 2)
        if not strip.any():
            return alive
        alive &= ~strip
        hit = strip[g.indices]
        deg -= np.bincount(rows[hit], minlength=g.n)
