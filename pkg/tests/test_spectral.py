import math
import warnings

import networkx as nx
import numpy as np
import pytest
from hypothesis import assume, given, settings

from conftest import from_nx, gnp, small_graphs, triangle_with_pendant
from nbimmune.errors import ConvergenceWarning, EmptyGraphError
from nbimmune.graph import Graph, k_core_decomposition
from nbimmune.oracle import (
    dense_aux_matrix,
    dense_leading_eigenpair,
    dense_nb_matrix,
    dense_reversal,
    perron_index,
)
from nbimmune.spectral import (
    build_aux_operator,
    build_nb_operator,
    edge_eigenvector,
    eigen_drop_exact,
    leading_eigenpair,
    nb_centrality,
    small_big_mu,
)

# Frozen from an independent computation: the characteristic polynomial of
# the bowtie's B factors (symbolically) as
# (t-1)^2 (t+1) (t^3-3) (t^2-t+1) (t^2+t+1)^2, so lambda1 = 3^(1/3).
BOWTIE_LAMBDA = 3 ** (1 / 3)
# Dense LAPACK eigenvalues of the 156 x 156 B of Zachary's karate club.
KARATE_LAMBDA = 5.2927806445486745


def bowtie():
    return Graph.from_edges(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])


# --- operators ----------------------------------------------------------

def test_triangle_b_has_six_ones():
    b = dense_nb_matrix(from_nx(nx.complete_graph(3)))
    assert b.shape == (6, 6) and b.sum() == 6


def test_star_b_squared_vanishes():
    b = dense_nb_matrix(from_nx(nx.star_graph(3)))
    assert not (b @ b).any()


def test_k4_columns_have_degree_minus_one_ones(k4):
    b = dense_nb_matrix(k4)
    assert b.sum() == 24
    assert (b.sum(axis=0) == 2).all()


@settings(max_examples=50)
@given(small_graphs(max_n=12))
def test_column_counts_match_head_degree(g):
    b = dense_nb_matrix(g)
    heads = g.edge_index.dst
    assert np.array_equal(b.sum(axis=0), g.degrees[heads] - 1)


@settings(max_examples=50)
@given(small_graphs(max_n=12))
def test_matrix_free_products_match_dense(g):
    rng = np.random.default_rng(g.m)
    op, b, p = build_nb_operator(g), dense_nb_matrix(g), dense_reversal(g)
    x = rng.standard_normal(2 * g.m)
    assert np.allclose(op.matvec(x), b @ x, atol=1e-12, rtol=0)
    assert np.allclose(op.rmatvec(x), b.T @ x, atol=1e-12, rtol=0)
    assert np.array_equal(op.reverse(x), p @ x)
    assert np.array_equal(op.reverse(op.reverse(x)), x)
    aux, dense = build_aux_operator(g), dense_aux_matrix(g)
    y = rng.standard_normal(2 * g.n)
    assert np.allclose(aux.matvec(y), dense @ y, atol=1e-12, rtol=0)
    assert np.allclose(aux.rmatvec(y), dense.T @ y, atol=1e-12, rtol=0)


def test_linear_operator_wrappers(k4):
    x = np.arange(12.0)
    lo = build_nb_operator(k4).as_linear_operator()
    assert np.allclose(lo @ x, dense_nb_matrix(k4) @ x)
    assert np.allclose(lo.rmatvec(x), dense_nb_matrix(k4).T @ x)


@settings(max_examples=40)
@given(small_graphs(max_n=10))
def test_pb_is_symmetric(g):
    pb = dense_reversal(g) @ dense_nb_matrix(g)
    assert np.array_equal(pb, pb.T)


# --- leading eigenpair ----------------------------------------------------

def test_tree_has_zero_eigenvalue():
    res = leading_eigenpair(from_nx(nx.balanced_tree(2, 3)))
    assert res.lambda1 == 0.0 and res.converged and res.degenerate
    assert not res.f.any() and not res.v_bar.any()


def test_k4_eigenpair(k4):
    res = leading_eigenpair(k4)
    assert res.lambda1 == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(res.v_bar, 3 / math.sqrt(12), atol=1e-10)
    assert not res.degenerate


def test_k4_edge_vector_is_uniform(k4):
    v = edge_eigenvector(k4, leading_eigenpair(k4))
    assert np.allclose(v, 1 / math.sqrt(12), atol=1e-10)


def test_cycle_has_unit_eigenvalue():
    res = leading_eigenpair(from_nx(nx.cycle_graph(5)))
    assert res.lambda1 == 1.0 and res.degenerate


@pytest.mark.parametrize("h, lam", [
    (nx.complete_bipartite_graph(3, 3), 2.0),
    (nx.petersen_graph(), 2.0),
    (nx.complete_graph(6), 4.0),
    (nx.hypercube_graph(3), 2.0),
])
def test_regular_graphs(h, lam):
    # (d-1)-regular spectrum; bipartite cases also carry -lambda1
    res = leading_eigenpair(from_nx(h))
    assert res.lambda1 == pytest.approx(lam, abs=1e-10)
    assert np.ptp(res.v_bar) < 1e-9


def test_bowtie_matches_symbolic_root():
    assert leading_eigenpair(bowtie()).lambda1 == pytest.approx(BOWTIE_LAMBDA, abs=1e-12)


def test_karate_matches_dense_eigenvalues():
    g = from_nx(nx.karate_club_graph())
    assert leading_eigenpair(g).lambda1 == pytest.approx(KARATE_LAMBDA, abs=1e-9)


def test_empty_graph_rejected():
    with pytest.raises(EmptyGraphError):
        leading_eigenpair(Graph.from_edges(0, []))


def test_non_convergence_is_flagged():
    g = from_nx(nx.karate_club_graph())
    with pytest.warns(ConvergenceWarning):
        res = leading_eigenpair(g, tol=1e-14, max_iter=3)
    assert not res.converged and res.iterations == 3


def test_start_vector_is_deterministic():
    g = gnp(40, 0.15, seed=3)
    a, b = leading_eigenpair(g), leading_eigenpair(g)
    assert a.lambda1 == b.lambda1 and np.array_equal(a.v_bar, b.v_bar)


@settings(max_examples=60, deadline=None)
@given(small_graphs(max_n=10))
def test_lambda_zero_iff_two_core_empty(g):
    assume(g.n > 0)
    res = leading_eigenpair(g)
    assert res.lambda1 >= 0
    assert (res.lambda1 == 0) == (not k_core_decomposition(g).in_two_core.any())


@settings(max_examples=60, deadline=None)
@given(small_graphs(max_n=10))
def test_lambda_matches_dense(g):
    assume(g.m > 0)
    ev = np.linalg.eigvals(dense_nb_matrix(g).astype(float))
    dense = ev[perron_index(ev)].real
    assert leading_eigenpair(g).lambda1 == pytest.approx(max(dense, 0.0), abs=1e-8)


def _dense_cases():
    for seed in range(40):
        g = gnp(9, 0.45, seed)
        if g.m and leading_eigenpair(g).lambda1 > 1.05:
            yield g


@pytest.mark.parametrize("g", list(_dense_cases())[:20], ids=lambda g: repr(g))
def test_centralities_match_dense_eigenvector(g):
    res = leading_eigenpair(g)
    lam, v, _ = dense_leading_eigenpair(g)
    assert res.lambda1 == pytest.approx(lam, rel=1e-10)
    assert np.allclose(res.v_bar, g.edge_index.in_sums(v), atol=1e-8)


@pytest.mark.parametrize("g", list(_dense_cases())[:20], ids=lambda g: repr(g))
def test_dense_structure_of_eigenvectors(g):
    lam, v, u = dense_leading_eigenpair(g)
    b = dense_nb_matrix(g).astype(float)
    # Pv is a left eigenvector
    assert np.linalg.norm(b.T @ u - lam * u) < 1e-8
    # left aux eigenvector has the form (f, -lam f)
    aux = dense_aux_matrix(g)
    vals, vecs = np.linalg.eig(aux.T)
    z = vecs[:, perron_index(vals)].real
    z /= np.linalg.norm(z)
    n = g.n
    assert np.allclose(z[n:], -lam * z[:n], atol=1e-8)
    # small-big: |vbar| = mu |f|
    res = leading_eigenpair(g)
    mu = small_big_mu(res.lambda1, res.f, g.degrees)
    assert np.linalg.norm(res.v_bar) == pytest.approx(mu * np.linalg.norm(res.f), rel=1e-10)
    assert np.linalg.norm(res.f) ** 2 == pytest.approx(1 / (1 + lam ** 2), rel=1e-10)


def test_edge_eigenvector_is_normalized_and_eigen():
    g = from_nx(nx.karate_club_graph())
    res = leading_eigenpair(g)
    v = edge_eigenvector(g, res)
    op = build_nb_operator(g)
    assert np.linalg.norm(op.matvec(v) - res.lambda1 * v) < 1e-8
    assert v @ op.reverse(v) == pytest.approx(1.0, rel=1e-9)
    assert np.allclose(g.edge_index.in_sums(v), res.v_bar, atol=1e-12)


def test_edge_eigenvector_needs_lambda_above_one():
    g = from_nx(nx.cycle_graph(4))
    with pytest.raises(ValueError):
        edge_eigenvector(g, leading_eigenpair(g))


# --- centralities and the tree fringe -----------------------------------

def test_regular_graph_has_equal_centralities():
    v = nb_centrality(from_nx(nx.random_regular_graph(3, 20, seed=1)))
    assert np.ptp(v) < 1e-9


def test_leaf_centrality_is_parent_over_lambda():
    # bowtie plus a leaf 5 on node 1; in-sum centralities do not vanish on
    # the tree fringe but decay by a factor lambda1 per step away from the core
    g = Graph.from_edges(6, list(map(tuple, bowtie().edges)) + [(1, 5)])
    res = leading_eigenpair(g)
    assert res.v_bar[5] == pytest.approx(res.v_bar[1] / res.lambda1, rel=1e-9)
    lam, v, _ = dense_leading_eigenpair(g)
    assert np.allclose(res.v_bar, g.edge_index.in_sums(v), atol=1e-9)


def test_tree_component_has_zero_centrality():
    # K4 plus a disjoint path: the path has an empty 2-core
    g = Graph.from_edges(7, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
                             (4, 5), (5, 6)])
    v = nb_centrality(g)
    assert np.all(v[4:] == 0) and np.all(v[:4] > 0)


def test_cycle_core_uses_symmetric_eigenvector():
    g = triangle_with_pendant()
    with pytest.warns(RuntimeWarning, match="degenerate"):
        v = nb_centrality(g)
    # every directed cycle edge carries a = 1/sqrt(6); the pendant inherits
    # the in-sum of its attachment node
    assert np.allclose(v, 2 / math.sqrt(6))


def test_triangle_centralities_k3():
    res = leading_eigenpair(from_nx(nx.complete_graph(3)))
    assert np.allclose(res.v_bar, 2 / math.sqrt(6))


def test_tree_centrality_warns():
    with pytest.warns(RuntimeWarning):
        v = nb_centrality(from_nx(nx.path_graph(4)))
    assert not v.any()


# --- exact eigen-drop ---------------------------------------------------

def test_eigen_drop_k4(k4):
    for c in range(4):
        assert eigen_drop_exact(k4, c) == pytest.approx(1.0, abs=1e-10)


def test_eigen_drop_pendant_is_zero():
    assert eigen_drop_exact(triangle_with_pendant(), 3) == 0.0


def test_eigen_drop_cycle():
    g = from_nx(nx.cycle_graph(5))
    assert all(eigen_drop_exact(g, c) == 1.0 for c in range(5))


def test_eigen_drop_bad_node(k4):
    with pytest.raises(IndexError):
        eigen_drop_exact(k4, -1)


@settings(max_examples=30, deadline=None)
@given(small_graphs(min_n=2, max_n=9))
def test_eigen_drop_is_non_negative(g):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for c in range(g.n):
            assert eigen_drop_exact(g, c) >= -1e-8
