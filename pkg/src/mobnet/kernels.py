"""Hot numeric kernels with a jitted path and a pure-numpy fallback.

Four operations dominate runtime: the two-path count matrix, the full
statistic vector, the dyad-by-dyad change-statistic matrix used by the
pseudo-likelihood fit, and the Metropolis-Hastings chain.  Each has a
numba implementation in :mod:`mobnet._jit` and a numpy implementation
here; the public functions dispatch on :func:`mobnet.backend.use_numba`.

Term encoding shared by both paths: ``kinds`` holds one code per model
term (K_* constants below), ``eas``/``rs`` hold exp(decay) and
1 - exp(-decay) for geometrically weighted terms (zero otherwise), and
``node_vals`` holds one float per node per term (factor indicators or
transformed covariates; unused rows are zero).

The MH chain consumes a single uniform stream (MT19937) and both paths
draw from it identically, so the visited graph sequence is bit-identical
across backends for a given seed.
"""

import math

import numpy as np

from . import backend

K_EDGES = 0
K_GWESP = 1
K_GWNSP = 2
K_GWIDEG = 3
K_GWODEG = 4
K_SRC = 5
K_DST = 6

PROPOSAL_TNT = 0
PROPOSAL_UNIFORM = 1


def _powi(base: float, e: int) -> float:
    # binary exponentiation, mirrored exactly in the jitted path
    result = 1.0
    b = base
    while e > 0:
        if e & 1:
            result *= b
        b *= b
        e >>= 1
    return result


def _twopaths_numpy(adj: np.ndarray) -> np.ndarray:
    a = adj.astype(np.float64)
    return (a @ a).astype(np.int64)


def twopaths(adj: np.ndarray) -> np.ndarray:
    """T[u, v] = number of k with edges u->k and k->v (OTP counts)."""
    if backend.use_numba():
        from . import _jit

        return _jit.twopaths_nb(adj)
    return _twopaths_numpy(adj)


def _full_stats_numpy(adj, kinds, eas, rs, node_vals):
    n = adj.shape[0]
    t = _twopaths_numpy(adj)
    indeg = adj.sum(axis=0, dtype=np.int64)
    outdeg = adj.sum(axis=1, dtype=np.int64)
    edge_mask = adj.astype(bool)
    offdiag = ~np.eye(n, dtype=bool)
    out = np.zeros(len(kinds))
    for idx, kind in enumerate(kinds):
        if kind == K_EDGES:
            out[idx] = float(edge_mask.sum())
        elif kind == K_GWESP:
            out[idx] = eas[idx] * (1.0 - rs[idx] ** t[edge_mask]).sum()
        elif kind == K_GWNSP:
            mask = offdiag & ~edge_mask
            out[idx] = eas[idx] * (1.0 - rs[idx] ** t[mask]).sum()
        elif kind == K_GWIDEG:
            out[idx] = eas[idx] * (1.0 - rs[idx] ** indeg).sum()
        elif kind == K_GWODEG:
            out[idx] = eas[idx] * (1.0 - rs[idx] ** outdeg).sum()
        elif kind == K_SRC:
            out[idx] = float(outdeg @ node_vals[idx])
        elif kind == K_DST:
            out[idx] = float(indeg @ node_vals[idx])
        else:
            raise ValueError(f"unknown term code {kind}")
    return out


def full_stats(adj, kinds, eas, rs, node_vals) -> np.ndarray:
    """Statistic vector of the whole graph, one entry per term."""
    if backend.use_numba():
        from . import _jit

        return _jit.full_stats_nb(adj, kinds, eas, rs, node_vals)
    return _full_stats_numpy(adj, kinds, eas, rs, node_vals)


def change_add(adj, t, indeg, outdeg, kinds, eas, rs, node_vals, i, j):
    """Change statistics for adding edge (i, j) to the graph without it.

    If (i, j) is currently present the formulas discount its own
    contribution, so the caller never has to toggle the matrix.  Plain
    Python loops; the bulk paths live in the design matrix and chain
    kernels.
    """
    k = len(kinds)
    out = np.empty(k)
    yij = int(adj[i, j])
    out_j = np.flatnonzero(adj[j])
    in_i = np.flatnonzero(adj[:, i])
    for idx in range(k):
        kind = kinds[idx]
        if kind == K_EDGES:
            out[idx] = 1.0
        elif kind == K_GWESP:
            r = rs[idx]
            val = eas[idx] * (1.0 - _powi(r, int(t[i, j])))
            for v in out_j:
                if adj[i, v]:
                    val += _powi(r, int(t[i, v]) - yij)
            for u in in_i:
                if adj[u, j]:
                    val += _powi(r, int(t[u, j]) - yij)
            out[idx] = val
        elif kind == K_GWNSP:
            r = rs[idx]
            val = -eas[idx] * (1.0 - _powi(r, int(t[i, j])))
            for v in out_j:
                if v != i and not adj[i, v]:
                    val += _powi(r, int(t[i, v]) - yij)
            for u in in_i:
                if u != j and not adj[u, j]:
                    val += _powi(r, int(t[u, j]) - yij)
            out[idx] = val
        elif kind == K_GWIDEG:
            out[idx] = _powi(rs[idx], int(indeg[j]) - yij)
        elif kind == K_GWODEG:
            out[idx] = _powi(rs[idx], int(outdeg[i]) - yij)
        elif kind == K_SRC:
            out[idx] = node_vals[idx, i]
        else:
            out[idx] = node_vals[idx, j]
    return out


def _design_matrix_numpy(adj, kinds, eas, rs, node_vals):
    n = adj.shape[0]
    k = len(kinds)
    a = adj.astype(np.float64)
    t = a @ a
    indeg = a.sum(axis=0)
    outdeg = a.sum(axis=1)
    offdiag = ~np.eye(n, dtype=bool)
    edge_mask = adj.astype(bool)
    x = np.empty((n * (n - 1), k))
    for idx in range(k):
        kind = kinds[idx]
        if kind == K_EDGES:
            m = np.ones((n, n))
        elif kind == K_GWIDEG:
            m = rs[idx] ** (indeg[None, :] - a)
        elif kind == K_GWODEG:
            m = rs[idx] ** (outdeg[:, None] - a)
        elif kind == K_SRC:
            m = np.broadcast_to(node_vals[idx][:, None], (n, n))
        elif kind == K_DST:
            m = np.broadcast_to(node_vals[idx][None, :], (n, n))
        elif kind in (K_GWESP, K_GWNSP):
            r = rs[idx]
            ea = eas[idx]
            w0 = r ** t
            # exponent t-1 only ever read where a two-path through the
            # toggled edge guarantees t >= 1; the clamp silences 0**-1
            w1 = r ** np.maximum(t - 1.0, 0.0)
            base = ea * (1.0 - w0)
            if kind == K_GWESP:
                s_0 = (a * w0) @ a.T + a.T @ (a * w0)
                s_1 = (a * w1) @ a.T + a.T @ (a * w1)
                m = np.where(edge_mask, base + s_1, base + s_0)
            else:
                d0 = (1.0 - a) * w0
                d1 = (1.0 - a) * w1
                s_0 = d0 @ a.T + a.T @ d0
                s_1 = d1 @ a.T + a.T @ d1
                # remove the v=i and u=j self-pair terms picked up
                # because (1-a) has an all-ones diagonal
                g0 = np.diag(w0)
                g1 = np.diag(w1)
                s_0 -= a.T * (g0[:, None] + g0[None, :])
                s_1 -= a.T * (g1[:, None] + g1[None, :])
                m = np.where(edge_mask, -base + s_1, -base + s_0)
        else:
            raise ValueError(f"unknown term code {kind}")
        x[:, idx] = m[offdiag]
    y = adj[offdiag]
    return x, y


def design_matrix(adj, kinds, eas, rs, node_vals):
    """Change statistics for every ordered dyad, row-major (i, j) order.

    Returns (X, y): X has one row per dyad and one column per term,
    y is the 0/1 edge indicator.  This is the pseudo-likelihood design
    matrix; at 1,000 nodes it has about a million rows.
    """
    if backend.use_numba():
        from . import _jit

        return _jit.design_matrix_nb(adj, kinds, eas, rs, node_vals)
    return _design_matrix_numpy(adj, kinds, eas, rs, node_vals)


class ChainState:
    """Mutable sampler state: adjacency plus incremental bookkeeping.

    Tracks the two-path matrix, degrees, a swap-remove edge list for O(1)
    uniform edge picks, and the running statistic vector.
    """

    __slots__ = ("adj", "t", "indeg", "outdeg", "es", "ed", "epos", "n_edges", "cur")

    def __init__(self, adj, kinds, eas, rs, node_vals):
        n = adj.shape[0]
        self.adj = adj
        self.t = _twopaths_numpy(adj)
        self.indeg = adj.sum(axis=0, dtype=np.int64)
        self.outdeg = adj.sum(axis=1, dtype=np.int64)
        nd = n * (n - 1)
        self.es = np.zeros(nd, dtype=np.int64)
        self.ed = np.zeros(nd, dtype=np.int64)
        self.epos = np.full((n, n), -1, dtype=np.int64)
        self.n_edges = 0
        for i, j in np.argwhere(adj):
            self.es[self.n_edges], self.ed[self.n_edges] = i, j
            self.epos[i, j] = self.n_edges
            self.n_edges += 1
        self.cur = _full_stats_numpy(adj, kinds, eas, rs, node_vals)

    def apply_toggle(self, i, j, delta):
        if self.adj[i, j]:
            self.adj[i, j] = 0
            pos = self.epos[i, j]
            last = self.n_edges - 1
            self.es[pos], self.ed[pos] = self.es[last], self.ed[last]
            self.epos[self.es[pos], self.ed[pos]] = pos
            self.epos[i, j] = -1
            self.n_edges -= 1
            self.t[i, :] -= self.adj[j, :]
            self.t[:, j] -= self.adj[:, i]
            self.indeg[j] -= 1
            self.outdeg[i] -= 1
            self.cur -= delta
        else:
            self.adj[i, j] = 1
            self.es[self.n_edges], self.ed[self.n_edges] = i, j
            self.epos[i, j] = self.n_edges
            self.n_edges += 1
            self.t[i, :] += self.adj[j, :]
            self.t[:, j] += self.adj[:, i]
            self.indeg[j] += 1
            self.outdeg[i] += 1
            self.cur += delta


def mh_step_numpy(state, theta, kinds, eas, rs, node_vals, rng, proposal=PROPOSAL_TNT):
    """One Metropolis-Hastings step on a ChainState; returns acceptance.

    Proposes a dyad (TNT: an existing edge with probability one half,
    otherwise a uniform dyad), accepts with min(1, exp(theta . delta) H)
    where H is the tie/no-tie Hastings correction for the asymmetric
    proposal.
    """
    adj = state.adj
    n = adj.shape[0]
    nd = n * (n - 1)
    n_edges = state.n_edges
    if proposal == PROPOSAL_TNT:
        u0 = rng.random_sample()
        if u0 < 0.5 and n_edges > 0:
            eidx = int(rng.random_sample() * n_edges)
            i, j = int(state.es[eidx]), int(state.ed[eidx])
        else:
            i = int(rng.random_sample() * n)
            jj = int(rng.random_sample() * (n - 1))
            j = jj + 1 if jj >= i else jj
    else:
        i = int(rng.random_sample() * n)
        jj = int(rng.random_sample() * (n - 1))
        j = jj + 1 if jj >= i else jj
    removing = adj[i, j] == 1
    delta = change_add(
        adj, state.t, state.indeg, state.outdeg, kinds, eas, rs, node_vals, i, j
    )
    lr = 0.0
    for idx in range(len(kinds)):
        lr += theta[idx] * delta[idx]
    if removing:
        lr = -lr
    if proposal == PROPOSAL_TNT:
        if removing:
            if n_edges >= 2:
                h = n_edges / (nd + n_edges + 0.0)
            else:
                h = 2.0 / (nd + 1.0)
        else:
            if n_edges >= 1:
                h = (nd + n_edges + 1.0) / (n_edges + 1.0)
            else:
                h = (nd + 1.0) / 2.0
    else:
        h = 1.0
    a = lr + math.log(h)
    u = rng.random_sample()
    if a >= 0.0 or u < math.exp(a):
        state.apply_toggle(i, j, delta)
        return True
    return False


def _mh_chain_numpy(
    adj, theta, kinds, eas, rs, node_vals, seed, burn_in, interval,
    n_samples, keep_graphs, proposal,
):
    rng = np.random.RandomState(seed & 0xFFFFFFFF)
    n = adj.shape[0]
    state = ChainState(adj, kinds, eas, rs, node_vals)
    stats_out = np.empty((n_samples, len(kinds)))
    graphs_out = np.empty((n_samples if keep_graphs else 0, n, n), dtype=np.uint8)
    accepts = 0
    taken = 0
    total = burn_in + interval * n_samples
    for step in range(total):
        if mh_step_numpy(state, theta, kinds, eas, rs, node_vals, rng, proposal):
            accepts += 1
        if step >= burn_in and (step - burn_in + 1) % interval == 0 and taken < n_samples:
            stats_out[taken] = state.cur
            if keep_graphs:
                graphs_out[taken] = adj
            taken += 1
    return stats_out, graphs_out, state.cur.copy(), accepts


def mh_chain(
    adj, theta, kinds, eas, rs, node_vals, seed,
    burn_in, interval, n_samples, keep_graphs=True, proposal=PROPOSAL_TNT,
):
    """Run a Metropolis-Hastings chain in place on ``adj``.

    Retains ``n_samples`` statistic vectors (and graphs when
    ``keep_graphs``) every ``interval`` steps after ``burn_in``.
    Returns (stats, graphs, final_stats, accepted_count); ``adj`` is
    left at the final state.
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.shape[0] != len(kinds):
        raise ValueError("theta length does not match term count")
    if backend.use_numba():
        from . import _jit

        return _jit.mh_chain_nb(
            adj, theta, kinds, eas, rs, node_vals,
            seed & 0xFFFFFFFF, burn_in, interval, n_samples,
            keep_graphs, proposal,
        )
    return _mh_chain_numpy(
        adj, theta, kinds, eas, rs, node_vals, seed,
        burn_in, interval, n_samples, keep_graphs, proposal,
    )


def _geodesic_counts_numpy(adj):
    n = adj.shape[0]
    hist = np.zeros(n, dtype=np.int64)
    reached = adj.astype(bool)
    frontier = reached.copy()
    np.fill_diagonal(reached, True)
    hist[1] = int(frontier.sum())
    d = 1
    a = adj.astype(np.float64)
    while frontier.any() and d < n - 1:
        nxt = ((frontier.astype(np.float64) @ a) > 0) & ~reached
        d += 1
        hist[d] = int(nxt.sum())
        reached |= nxt
        frontier = nxt
    unreachable = n * (n - 1) - int(hist.sum())
    return hist, unreachable


def geodesic_counts(adj):
    """Directed geodesic distribution via BFS from every node.

    Returns (hist, unreachable) where hist[d] counts ordered pairs at
    distance d >= 1 and unreachable counts ordered pairs with no path.
    """
    if backend.use_numba():
        from . import _jit

        return _jit.geodesic_counts_nb(adj)
    return _geodesic_counts_numpy(adj)
