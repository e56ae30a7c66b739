"""Seeded synthetic graph families used by the experiments.

Every generator returns the simple largest connected component of the
sampled graph.  All randomness comes from the integer ``seed``: numpy's
PCG64 ``default_rng`` for degree sequences, and integer seeds derived from
it for the networkx samplers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graph import Graph, largest_connected_component

__all__ = [
    "GENERATORS",
    "ExperimentConfig",
    "child_seed",
    "from_networkx",
    "erdos_renyi",
    "barabasi_albert",
    "two_block_sbm",
    "powerlaw_degree_sequence",
    "config_powerlaw",
    "generate",
]

GENERATORS = ("er", "ba", "sbm", "config_powerlaw")


def child_seed(seed, *keys):
    """Independent 32-bit seed for a sub-stream identified by ``keys``."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def from_networkx(h):
    """Dense-relabelled :class:`Graph`; the original node keys become labels
    when they are integers."""
    nodes = list(h.nodes())
    pos = {u: i for i, u in enumerate(nodes)}
    edges = [(pos[u], pos[v]) for u, v in h.edges()]
    labels = nodes if all(isinstance(u, (int, np.integer)) for u in nodes) else None
    return Graph.from_edges(len(nodes), edges, labels)


def _finish(h):
    return largest_connected_component(from_networkx(h))


def erdos_renyi(n, mean_degree=12.0, seed=0):
    return _finish(nx.gnp_random_graph(n, mean_degree / (n - 1), seed=seed))


def barabasi_albert(n, attach=6, seed=0):
    return _finish(nx.barabasi_albert_graph(n, attach, seed=seed))


def two_block_sbm(n, within=9.0, between=3.0, seed=0):
    """Two equal blocks with expected within/between-block degrees."""
    a = n // 2
    sizes = [a, n - a]
    p_in = within / (a - 1)
    p_out = between / (n - a)
    probs = [[p_in, p_out], [p_out, p_in]]
    return _finish(nx.stochastic_block_model(sizes, probs, seed=seed))


def powerlaw_degree_sequence(n, gamma, rng, max_tries=100):
    """Degrees drawn i.i.d. with ``P(d) ~ d^-gamma`` on ``1..n-1``.

    Draws above ``n - 1`` are redrawn; a sequence with odd sum is thrown
    away and resampled, up to ``max_tries`` times.
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    for _ in range(max_tries):
        deg = rng.zipf(gamma, size=n)
        bad = deg > n - 1
        while bad.any():
            deg[bad] = rng.zipf(gamma, size=int(bad.sum()))
            bad = deg > n - 1
        if deg.sum() % 2 == 0:
            return deg
    raise RuntimeError(f"no even-sum degree sequence after {max_tries} tries")


def config_powerlaw(n, gamma=2.5, seed=0):
    """Configuration-model graph on a power-law sequence, with loops and
    multi-edges dropped."""
    rng = np.random.default_rng(seed)
    deg = powerlaw_degree_sequence(n, gamma, rng)
    h = nx.configuration_model(deg.tolist(), seed=child_seed(seed, 1))
    h = nx.Graph(h)
    h.remove_edges_from(nx.selfloop_edges(h))
    return _finish(h)


@dataclass
class ExperimentConfig:
    generator: str = "ba"
    n: int = 1000
    repetitions: int = 1
    sample_fraction: float = 0.1
    seed: int = 0
    strategies: list = field(default_factory=lambda: ["degree", "ci", "xdeg", "xnb"])
    percent: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; "
                             f"expected one of {GENERATORS}")
        if not 0 < self.sample_fraction <= 1:
            raise ValueError("sample_fraction must lie in (0, 1]")
        if self.n < 2:
            raise ValueError("n must be at least 2")

    def graph_seed(self, rep):
        return child_seed(self.seed, rep)


def generate(config, rep=0):
    """The ``rep``-th graph of ``config``; same config and rep give the same graph."""
    seed = config.graph_seed(rep)
    kw = dict(config.params)
    if config.generator == "er":
        return erdos_renyi(config.n, seed=seed, **kw)
    if config.generator == "ba":
        return barabasi_albert(config.n, seed=seed, **kw)
    if config.generator == "sbm":
        return two_block_sbm(config.n, seed=seed, **kw)
    return config_powerlaw(config.n, seed=seed, **kw)
