"""Dense brute-force versions of the NB perturbation identities.

Everything here materializes ``2m x 2m`` matrices and calls LAPACK, so it
is capped to small graphs and meant as ground truth for the tests.  Edges
are indexed in the canonical layout of :mod:`nbimmune.graph`; when a node
``c`` is singled out, directed edges not touching ``c`` come first (in
canonical order) and the ``2d`` edges touching ``c`` come last, giving::

    B = [[B', D],
         [E,  F]]      X = D F E
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, ConditioningError, PreconditionError
from .graph import k_core_decomposition, remove_node, two_core_mask
from .spectral import small_big_mu

__all__ = [
    "DEFAULT_CAP",
    "DenseBlocks",
    "DenseEigen",
    "dense_nb_matrix",
    "dense_reversal",
    "dense_aux_matrix",
    "dense_blocks",
    "x_matrix_formula",
    "perron_index",
    "dense_eigen",
    "dense_leading_eigenpair",
    "lemma1_check",
    "theorem1_check",
    "theorem2_eigendrop",
    "qbound_check",
    "corollary1_check",
    "proposition1_check",
    "small_big_check",
]

DEFAULT_CAP = 400
IMAG_TOL = 1e-8
EIG_COLLISION = 1e-6
MAX_COND = 1e10


def _check_cap(g, cap):
    if 2 * g.m > cap:
        raise CapExceededError(f"2m = {2 * g.m} exceeds the dense cap {cap}")


def dense_nb_matrix(g, cap=DEFAULT_CAP):
    """``B[a, b] = 1`` iff edge ``b`` flows into edge ``a`` without backtracking."""
    _check_cap(g, cap)
    idx = g.edge_index
    src, dst = idx.src, idx.dst
    flows = (dst[None, :] == src[:, None]) & (src[None, :] != dst[:, None])
    return flows.astype(np.int64)


def dense_reversal(g, cap=DEFAULT_CAP):
    _check_cap(g, cap)
    k = 2 * g.m
    p = np.zeros((k, k), dtype=np.int64)
    p[np.arange(k), np.arange(k) ^ 1] = 1
    return p


def dense_aux_matrix(g, cap=DEFAULT_CAP):
    _check_cap(g, cap)
    n = g.n
    a = g.adjacency_matrix.toarray()
    eye = np.eye(n)
    return np.block([[np.zeros((n, n)), np.diag(g.degrees - 1.0)], [-eye, a]])


@dataclass(frozen=True)
class DenseBlocks:
    """Block split of ``B`` around node ``c`` (non-incident edges first)."""

    c: int
    d: int
    order: np.ndarray
    B: np.ndarray
    B_prime: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    X: np.ndarray
    P: np.ndarray

    def reassemble(self):
        """``B`` in the original edge order, rebuilt from the four blocks."""
        perm = np.block([[self.B_prime, self.D], [self.E, self.F]])
        out = np.empty_like(perm)
        out[np.ix_(self.order, self.order)] = perm
        return out


def dense_blocks(g, c, cap=DEFAULT_CAP):
    if not 0 <= c < g.n:
        raise IndexError(f"node {c} out of range for n={g.n}")
    b = dense_nb_matrix(g, cap)
    idx = g.edge_index
    touches = (idx.src == c) | (idx.dst == c)
    order = np.concatenate([np.flatnonzero(~touches), np.flatnonzero(touches)])
    k = int((~touches).sum())
    bp = b[np.ix_(order, order)]
    bb, d, e, f = bp[:k, :k], bp[:k, k:], bp[k:, :k], bp[k:, k:]
    p = dense_reversal(g, cap)[np.ix_(order, order)][:k, :k]
    return DenseBlocks(int(c), g.degree(c), order, b, bb, d, e, f, d @ f @ e, p)


def x_matrix_formula(g, c):
    """``X`` entrywise: ``X[k->l, i->j] = a_ck a_cj (1 - [k == j])``."""
    idx = g.edge_index
    keep = (idx.src != c) & (idx.dst != c)
    src, dst = idx.src[keep], idx.dst[keep]
    adj_c = np.zeros(g.n, dtype=np.int64)
    adj_c[g.neighbors(c)] = 1
    return (adj_c[src][:, None] * adj_c[dst][None, :]
            * (src[:, None] != dst[None, :]))


def perron_index(vals):
    """Index of the eigenvalue with largest real part among the (near-)real ones."""
    vals = np.asarray(vals)
    real = np.abs(vals.imag) < IMAG_TOL
    if not real.any():
        raise ValueError("no real eigenvalue")
    cand = np.flatnonzero(real)
    return int(cand[np.argmax(vals.real[cand])])


@dataclass(frozen=True)
class DenseEigen:
    """Eigen-decomposition ``B' = R diag(vals) L`` with the Perron pair.

    ``v1`` is normalized so ``v1' P v1 = 1`` and ``u1 = P v1`` (so
    ``u1' v1 = 1``).  ``perron`` lists every index whose eigenvalue equals
    the Perron root; when it has several members ``v1`` is taken inside
    that eigenspace along the direction chosen by the caller.
    """

    vals: np.ndarray
    R: np.ndarray
    L: np.ndarray
    perron: np.ndarray
    cond: float


def dense_eigen(m, max_cond=MAX_COND):
    vals, r = np.linalg.eig(m)
    cond = np.linalg.cond(r) if len(vals) else 1.0
    if not np.isfinite(cond) or cond > max_cond:
        raise ConditioningError(
            f"eigenvector matrix has condition number {cond:.3g}; "
            "the matrix is (nearly) defective")
    l = np.linalg.inv(r)
    i = perron_index(vals)
    lam = vals[i].real
    perron = np.flatnonzero(np.abs(vals - lam) < IMAG_TOL * max(1.0, abs(lam)))
    return DenseEigen(vals, r, l, perron, float(cond))


def _real_phase(v):
    """Rotate a complex vector so its largest entry is real positive."""
    j = int(np.argmax(np.abs(v)))
    return (v * (abs(v[j]) / v[j])).real if v[j] != 0 else v.real


def _reversal_normalize(v, p):
    s = float(v @ p @ v)
    if s <= 0:
        raise ConditioningError("v' P v is not positive; cannot normalize")
    return v / math.sqrt(s)


def dense_leading_eigenpair(g, cap=DEFAULT_CAP):
    """``(lambda1, v, u)`` of dense ``B`` with ``v' P v = 1`` and ``u = P v``.

    ``v`` is the Perron eigenvector returned by LAPACK, rotated real and
    signed to have a non-negative sum; meaningful when lambda1 is simple.
    """
    b = dense_nb_matrix(g, cap).astype(float)
    p = dense_reversal(g, cap)
    if b.size == 0:
        return 0.0, np.zeros(0), np.zeros(0)
    vals, vecs = np.linalg.eig(b)
    i = perron_index(vals)
    v = _real_phase(vecs[:, i])
    if v.sum() < 0:
        v = -v
    v = _reversal_normalize(v, p)
    return float(vals[i].real), v, p @ v


def lemma1_check(g, c, cap=DEFAULT_CAP):
    """``{"DE": DE == 0, "F2": F^2 == 0, "F_inverse": (F - I)(F + I) == -I}``."""
    blk = dense_blocks(g, c, cap)
    f = blk.F
    eye = np.eye(len(f), dtype=np.int64)
    return {
        "DE": not (blk.D @ blk.E).any(),
        "F2": not (f @ f).any(),
        "F_inverse": bool(np.array_equal((f - eye) @ (f + eye), -eye)),
    }


def _slogdet(m):
    if m.size == 0:
        return 1.0, 0.0
    sign, logabs = np.linalg.slogdet(m)
    return sign, logabs


def theorem1_check(g, c, t_samples, cap=DEFAULT_CAP):
    """Max relative error between the two sides of the removal determinant identity.

    Compares ``det(B - tI) / det(B' - tI)`` with
    ``t^(2d) det(I + (B' - tI)^-1 X / t^2)`` in log-magnitude/sign form.
    Samples at ``t`` within 1e-6 of an eigenvalue of ``B'`` are skipped
    with a warning.  Returns ``nan`` if every sample was skipped.
    """
    blk = dense_blocks(g, c, cap)
    b = blk.B.astype(float)
    bp = blk.B_prime.astype(float)
    x = blk.X.astype(float)
    k = len(bp)
    ev = np.linalg.eigvals(bp) if k else np.zeros(0)
    worst = math.nan
    for t in t_samples:
        t = float(t)
        if t == 0:
            raise ValueError("t must be non-zero")
        if k and np.min(np.abs(ev - t)) < EIG_COLLISION:
            warnings.warn(f"t={t} is within {EIG_COLLISION} of an eigenvalue "
                          "of B'; sample skipped", RuntimeWarning, stacklevel=2)
            continue
        s_full, l_full = _slogdet(b - t * np.eye(len(b)))
        s_rem, l_rem = _slogdet(bp - t * np.eye(k))
        lhs_sign, lhs_log = s_full * s_rem, l_full - l_rem
        if k:
            inner = np.eye(k) + np.linalg.solve(bp - t * np.eye(k), x) / (t * t)
            s_in, l_in = _slogdet(inner)
        else:
            s_in, l_in = 1.0, 0.0
        rhs_sign = s_in  # t^(2d) is positive
        rhs_log = 2 * blk.d * math.log(abs(t)) + l_in
        if lhs_sign != rhs_sign:
            err = 2.0
        else:
            err = abs(math.expm1(lhs_log - rhs_log))
        worst = err if math.isnan(worst) else max(worst, err)
    return worst


@dataclass(frozen=True)
class EigenDropTerms:
    """Pieces of the eigen-drop expansion around node ``c``.

    ``drop = sum(weights * alpha) / lambda1^2`` where ``weights[i]`` is the
    coefficient of ``v_i`` in ``w`` relative to that of ``v1`` (so the
    Perron weight is 1) and ``alpha[i] = u1' X v_i``.
    """

    drop: float
    dominant: float
    true_drop: float
    lambda1: float
    lambda1_after: float
    alpha: np.ndarray
    weights: np.ndarray
    w: np.ndarray
    v1: np.ndarray
    u1: np.ndarray
    X: np.ndarray
    P: np.ndarray


def _edge_classes(g, c, src, dst):
    """Split the directed edges of ``g - c`` into tree-outward, core, tree-inward.

    Ordered that way, ``B'`` is block upper triangular with nilpotent
    diagonal blocks on the two tree classes, so every non-zero eigenvalue
    belongs to the core block.  Edges of components without a 2-core
    count as outward.
    """
    h = remove_node(g, c, compact=False)
    core = two_core_mask(h)
    depth = np.full(g.n, np.inf)
    depth[core] = 0
    frontier = list(np.flatnonzero(core))
    while frontier:
        nxt = []
        for u in frontier:
            for v in h.neighbors(u):
                if depth[v] == np.inf:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    in_core = core[src] & core[dst]
    outward = ~in_core & ((depth[dst] > depth[src]) | np.isinf(depth[src]))
    inward = ~in_core & ~outward
    return np.flatnonzero(outward), np.flatnonzero(in_core), np.flatnonzero(inward)


def _nonzero_eigentriples(bp, classes):
    """Right/left eigenvectors of ``B'`` for its non-zero eigenvalues.

    Returns ``(vals, R, L, perron)`` with ``B' R = R diag(vals)``,
    ``L B' = diag(vals) L``, ``L R = I`` and ``perron`` the indices of the
    Perron root.  Built from the core block, which must be diagonalizable.
    """
    o, cc, i = classes
    k = len(bp)
    b_oo, b_oc = bp[np.ix_(o, o)], bp[np.ix_(o, cc)]
    b_ii, b_ci = bp[np.ix_(i, i)], bp[np.ix_(cc, i)]
    eig = dense_eigen(bp[np.ix_(cc, cc)])
    r = np.zeros((k, len(cc)), dtype=complex)
    l = np.zeros((len(cc), k), dtype=complex)
    for j, lam in enumerate(eig.vals):
        r[cc, j] = eig.R[:, j]
        l[j, cc] = eig.L[j]
        if len(o):
            r[o, j] = np.linalg.solve(lam * np.eye(len(o)) - b_oo, b_oc @ eig.R[:, j])
        if len(i):
            l[j, i] = np.linalg.solve((lam * np.eye(len(i)) - b_ii).T, b_ci.T @ eig.L[j])
    return eig.vals, r, l, eig.perron


def _drop_terms(g, c, cap):
    blk = dense_blocks(g, c, cap)
    b = blk.B.astype(float)
    bp = blk.B_prime.astype(float)
    x = blk.X.astype(float)
    p = blk.P.astype(float)
    ev = np.linalg.eigvals(b)
    lam = float(ev[perron_index(ev)].real)
    k = len(bp)
    if not x.any():
        ev = np.linalg.eigvals(bp) if k else np.zeros(1)
        lam_after = max(float(ev[perron_index(ev)].real), 0.0)
        z = np.zeros(k)
        return EigenDropTerms(0.0, 0.0, lam - lam_after, lam, lam_after,
                              z, z, z, z, z, x, p)
    if lam <= 0:
        raise PreconditionError("leading eigenvalue is zero")
    idx = g.edge_index
    keep = blk.order[:k]
    classes = _edge_classes(g, c, idx.src[keep], idx.dst[keep])
    if not len(classes[1]):
        raise PreconditionError("the graph without c has an empty 2-core")
    vals, r, l, s = _nonzero_eigentriples(bp, classes)
    lam_after = float(vals[s[0]].real)
    resid = np.abs(bp @ r - r * vals).max()
    if resid > 1e-8 * max(1.0, lam):
        raise ConditioningError(f"eigen-decomposition residual {resid:.3g}")
    # w spans the kernel of B' + X/lam^2 - lam I
    _, _, vh = np.linalg.svd(bp + x / lam ** 2 - lam * np.eye(k))
    w = _real_phase(vh[-1].conj())
    if w.sum() < 0:
        w = -w
    coef = l @ w
    v1 = r[:, s] @ coef[s]
    if np.abs(v1).max() < 1e-10:
        raise ConditioningError("w has no component along the Perron eigenspace")
    v1 = _real_phase(v1)
    norm = float(v1 @ p @ v1)
    if not norm > 0:
        raise ConditioningError("v1' P v1 is not positive")
    v1 = v1 / math.sqrt(norm)
    u1 = p @ v1
    w1 = float(u1 @ w)
    rest = np.setdiff1d(np.arange(len(vals)), s)
    # whatever is left of w lies in the generalized kernel of B' (tree
    # parts); it enters as a single lumped term
    w0 = (w - r @ coef).real
    w0_norm = float(np.linalg.norm(w0))
    lump_alpha = [u1 @ x @ (w0 / w0_norm)] if w0_norm > 1e-12 else []
    lump_weight = [w0_norm / w1] if w0_norm > 1e-12 else []
    alpha = np.concatenate([[u1 @ x @ v1], u1 @ x @ r[:, rest], lump_alpha])
    weights = np.concatenate([[1.0], coef[rest] / w1, lump_weight])
    drop = (weights * alpha).sum().real / lam ** 2
    return EigenDropTerms(float(drop), float(alpha[0].real) / lam ** 2,
                          lam - lam_after, lam, lam_after, alpha, weights,
                          w / w1, v1, u1, x, p)


def theorem2_eigendrop(g, c, cap=DEFAULT_CAP):
    """Eigen-drop from the eigenbasis expansion of ``B'``.

    Returns ``(drop, terms)``; ``terms.dominant`` is ``alpha_1 / lambda1^2``
    and ``terms.true_drop`` the difference of dense Perron roots.  When the
    Perron root of ``B'`` is repeated, ``v1`` is the projection of ``w``
    onto its eigenspace.  Tree parts of ``g - c`` make ``B'`` defective at
    eigenvalue 0 only; that generalized kernel is kept as one lumped term
    of the sum.  Raises :class:`ConditioningError` when the 2-core block of
    ``B'`` is too close to defective to expand in its eigenvectors.
    """
    terms = _drop_terms(g, c, cap)
    return terms.drop, terms


@dataclass(frozen=True)
class QBound:
    q: float
    frobenius: float
    correction: float

    @property
    def holds(self):
        if self.frobenius == 0:
            return abs(self.q) <= 1e-8
        return self.q <= self.frobenius * self.correction + 1e-8


def qbound_check(g, c, cap=DEFAULT_CAP):
    """``q = sum_i w_i alpha_i`` against ``1' P X 1`` times ``e1' L P R w``.

    ``w`` is scaled so its Perron coefficient is 1.  The correction factor
    ``e1' L P R w`` reduces to ``u1' P w`` in the coefficient convention
    used here.
    """
    t = _drop_terms(g, c, cap)
    if not t.X.any():
        return QBound(0.0, 0.0, math.nan)
    q = float((t.weights * t.alpha).sum().real)
    frob = float((t.P @ t.X).sum())
    corr = float(t.u1 @ t.P @ t.w)
    return QBound(q, frob, corr)


def corollary1_check(g, c, cap=DEFAULT_CAP, tol=1e-8):
    """True when removing 1-shell node ``c`` keeps the non-zero NB-spectrum.

    Non-zero means modulus above ``tol``; the two multisets must have the
    same size and Hausdorff distance at most ``tol``.
    """
    core = k_core_decomposition(g).core_index
    if core[c] >= 2:
        raise PreconditionError(f"node {c} lies in the 2-core")
    before = np.linalg.eigvals(dense_nb_matrix(g, cap).astype(float)) if g.m else np.zeros(0)
    h = remove_node(g, c, compact=False)
    after = np.linalg.eigvals(dense_nb_matrix(h, cap).astype(float)) if h.m else np.zeros(0)
    before = before[np.abs(before) > tol]
    after = after[np.abs(after) > tol]
    if len(before) != len(after):
        return False
    if len(before) == 0:
        return True
    dist = np.abs(before[:, None] - after[None, :])
    return bool(max(dist.min(axis=0).max(), dist.min(axis=1).max()) <= tol)


def proposition1_check(g, c, cap=DEFAULT_CAP):
    """``(u1' X v1, v1' P X v1)`` for the post-removal Perron pair of ``B'``.

    ``v1`` is normalized so ``v1' P v1 = 1``; ``u1`` is the left Perron
    vector from ``eig(B'^T)`` scaled so ``u1' v1 = 1``.  Needs a simple
    Perron root above 1.
    """
    blk = dense_blocks(g, c, cap)
    bp = blk.B_prime.astype(float)
    if not len(bp):
        raise PreconditionError("no edges remain after removal")
    vals, vecs = np.linalg.eig(bp)
    i = perron_index(vals)
    lam = vals[i].real
    if lam <= 1 + 1e-9 or (np.abs(vals - lam) < 1e-6).sum() > 1:
        raise PreconditionError("post-removal Perron root is not simple and > 1")
    v1 = _real_phase(vecs[:, i])
    if v1.sum() < 0:
        v1 = -v1
    v1 = _reversal_normalize(v1, blk.P)
    lvals, lvecs = np.linalg.eig(bp.T)
    u1 = _real_phase(lvecs[:, perron_index(lvals)])
    u1 = u1 / float(u1 @ v1)
    x = blk.X.astype(float)
    return float(u1 @ x @ v1), float(v1 @ blk.P @ x @ v1)


def small_big_check(g, cap=DEFAULT_CAP):
    """Dense ``(lambda1, vbar, f, mu)`` with ``vbar`` from ``v' P v = 1``.

    ``f`` is the first half of the unit left Perron vector of ``B_aux``;
    the small-big identity says ``|vbar| = mu |f|``.
    """
    lam, v, _ = dense_leading_eigenpair(g, cap)
    vbar = g.edge_index.in_sums(v)
    aux = dense_aux_matrix(g, cap)
    vals, vecs = np.linalg.eig(aux.T)
    z = _real_phase(vecs[:, perron_index(vals)])
    z = z / np.linalg.norm(z)
    f = z[:g.n]
    if f.sum() < 0:
        f = -f
    return lam, vbar, f, small_big_mu(lam, f, g.degrees)
