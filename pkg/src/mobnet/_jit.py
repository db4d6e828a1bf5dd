"""Numba implementations of the hot kernels.

Sums run in the same order and with the same scalar operations as the
numpy fallback's per-dyad loops, so change statistics agree bitwise and
MH chains visit identical graph sequences across backends.
"""

import math

import numpy as np
from numba import njit, prange

K_EDGES = 0
K_GWESP = 1
K_GWNSP = 2
K_GWIDEG = 3
K_GWODEG = 4
K_SRC = 5
K_DST = 6

PROPOSAL_TNT = 0


@njit(cache=True, inline="always")
def _powi(base, e):
    result = 1.0
    b = base
    while e > 0:
        if e & 1:
            result *= b
        b *= b
        e >>= 1
    return result


@njit(cache=True)
def twopaths_nb(adj):
    n = adj.shape[0]
    t = np.zeros((n, n), np.int64)
    for k in range(n):
        for u in range(n):
            if adj[u, k]:
                for v in range(n):
                    if adj[k, v]:
                        t[u, v] += 1
    return t


@njit(cache=True)
def full_stats_nb(adj, kinds, eas, rs, node_vals):
    n = adj.shape[0]
    nterms = kinds.shape[0]
    t = twopaths_nb(adj)
    indeg = np.zeros(n, np.int64)
    outdeg = np.zeros(n, np.int64)
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                outdeg[i] += 1
                indeg[j] += 1
    out = np.zeros(nterms)
    for idx in range(nterms):
        kind = kinds[idx]
        if kind == K_EDGES:
            total = 0.0
            for i in range(n):
                total += outdeg[i]
            out[idx] = total
        elif kind == K_GWESP:
            val = 0.0
            for i in range(n):
                for j in range(n):
                    if adj[i, j]:
                        val += 1.0 - _powi(rs[idx], t[i, j])
            out[idx] = eas[idx] * val
        elif kind == K_GWNSP:
            val = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j and adj[i, j] == 0:
                        val += 1.0 - _powi(rs[idx], t[i, j])
            out[idx] = eas[idx] * val
        elif kind == K_GWIDEG:
            val = 0.0
            for i in range(n):
                val += 1.0 - _powi(rs[idx], indeg[i])
            out[idx] = eas[idx] * val
        elif kind == K_GWODEG:
            val = 0.0
            for i in range(n):
                val += 1.0 - _powi(rs[idx], outdeg[i])
            out[idx] = eas[idx] * val
        elif kind == K_SRC:
            val = 0.0
            for i in range(n):
                val += outdeg[i] * node_vals[idx, i]
            out[idx] = val
        else:
            val = 0.0
            for i in range(n):
                val += indeg[i] * node_vals[idx, i]
            out[idx] = val
    return out


@njit(cache=True, inline="always")
def _change_add_inner(
    adj, t, indeg, outdeg, kinds, eas, rs, node_vals,
    i, j, out, obuf, n_oj, ibuf, n_ii,
):
    yij = np.int64(adj[i, j])
    nterms = kinds.shape[0]
    for idx in range(nterms):
        kind = kinds[idx]
        if kind == K_EDGES:
            out[idx] = 1.0
        elif kind == K_GWESP:
            r = rs[idx]
            val = eas[idx] * (1.0 - _powi(r, t[i, j]))
            for a in range(n_oj):
                v = obuf[a]
                if adj[i, v]:
                    val += _powi(r, t[i, v] - yij)
            for a in range(n_ii):
                u = ibuf[a]
                if adj[u, j]:
                    val += _powi(r, t[u, j] - yij)
            out[idx] = val
        elif kind == K_GWNSP:
            r = rs[idx]
            val = -eas[idx] * (1.0 - _powi(r, t[i, j]))
            for a in range(n_oj):
                v = obuf[a]
                if v != i and adj[i, v] == 0:
                    val += _powi(r, t[i, v] - yij)
            for a in range(n_ii):
                u = ibuf[a]
                if u != j and adj[u, j] == 0:
                    val += _powi(r, t[u, j] - yij)
            out[idx] = val
        elif kind == K_GWIDEG:
            out[idx] = _powi(rs[idx], indeg[j] - yij)
        elif kind == K_GWODEG:
            out[idx] = _powi(rs[idx], outdeg[i] - yij)
        elif kind == K_SRC:
            out[idx] = node_vals[idx, i]
        else:
            out[idx] = node_vals[idx, j]


@njit(cache=True, parallel=True)
def design_matrix_nb(adj, kinds, eas, rs, node_vals):
    n = adj.shape[0]
    nterms = kinds.shape[0]
    t = twopaths_nb(adj)
    indeg = np.zeros(n, np.int64)
    outdeg = np.zeros(n, np.int64)
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                outdeg[i] += 1
                indeg[j] += 1
    x = np.empty((n * (n - 1), nterms))
    y = np.empty(n * (n - 1), np.uint8)
    for i in prange(n):
        obuf = np.empty(n, np.int64)
        ibuf = np.empty(n, np.int64)
        row = np.empty(nterms)
        n_ii = 0
        for u in range(n):
            if adj[u, i]:
                ibuf[n_ii] = u
                n_ii += 1
        base = i * (n - 1)
        for j in range(n):
            if j == i:
                continue
            n_oj = 0
            for v in range(n):
                if adj[j, v]:
                    obuf[n_oj] = v
                    n_oj += 1
            _change_add_inner(
                adj, t, indeg, outdeg, kinds, eas, rs, node_vals,
                i, j, row, obuf, n_oj, ibuf, n_ii,
            )
            idx = base + (j - 1 if j > i else j)
            for c in range(nterms):
                x[idx, c] = row[c]
            y[idx] = adj[i, j]
    return x, y


@njit(cache=True)
def mh_chain_nb(
    adj, theta, kinds, eas, rs, node_vals, seed,
    burn_in, interval, n_samples, keep_graphs, proposal,
):
    np.random.seed(seed)
    n = adj.shape[0]
    nterms = kinds.shape[0]
    nd = n * (n - 1)
    t = twopaths_nb(adj)
    indeg = np.zeros(n, np.int64)
    outdeg = np.zeros(n, np.int64)
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                outdeg[i] += 1
                indeg[j] += 1
    es = np.zeros(nd, np.int64)
    ed = np.zeros(nd, np.int64)
    epos = np.full((n, n), -1, np.int64)
    n_edges = 0
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                es[n_edges] = i
                ed[n_edges] = j
                epos[i, j] = n_edges
                n_edges += 1
    cur = full_stats_nb(adj, kinds, eas, rs, node_vals)
    stats_out = np.empty((n_samples, nterms))
    gshape = n_samples if keep_graphs else 0
    graphs_out = np.empty((gshape, n, n), np.uint8)
    delta = np.empty(nterms)
    obuf = np.empty(n, np.int64)
    ibuf = np.empty(n, np.int64)
    accepts = 0
    taken = 0
    total = burn_in + interval * n_samples
    for step in range(total):
        if proposal == PROPOSAL_TNT:
            u0 = np.random.random()
            if u0 < 0.5 and n_edges > 0:
                eidx = int(np.random.random() * n_edges)
                i = es[eidx]
                j = ed[eidx]
            else:
                i = np.int64(np.random.random() * n)
                jj = np.int64(np.random.random() * (n - 1))
                j = jj + 1 if jj >= i else jj
        else:
            i = np.int64(np.random.random() * n)
            jj = np.int64(np.random.random() * (n - 1))
            j = jj + 1 if jj >= i else jj
        removing = adj[i, j] == 1
        n_oj = 0
        for v in range(n):
            if adj[j, v]:
                obuf[n_oj] = v
                n_oj += 1
        n_ii = 0
        for u in range(n):
            if adj[u, i]:
                ibuf[n_ii] = u
                n_ii += 1
        _change_add_inner(
            adj, t, indeg, outdeg, kinds, eas, rs, node_vals,
            i, j, delta, obuf, n_oj, ibuf, n_ii,
        )
        lr = 0.0
        for idx in range(nterms):
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
        u = np.random.random()
        if a >= 0.0 or u < math.exp(a):
            accepts += 1
            if removing:
                adj[i, j] = 0
                pos = epos[i, j]
                last = n_edges - 1
                es[pos] = es[last]
                ed[pos] = ed[last]
                epos[es[pos], ed[pos]] = pos
                epos[i, j] = -1
                n_edges -= 1
                for v in range(n):
                    if adj[j, v]:
                        t[i, v] -= 1
                    if adj[v, i]:
                        t[v, j] -= 1
                indeg[j] -= 1
                outdeg[i] -= 1
                for idx in range(nterms):
                    cur[idx] -= delta[idx]
            else:
                adj[i, j] = 1
                es[n_edges] = i
                ed[n_edges] = j
                epos[i, j] = n_edges
                n_edges += 1
                for v in range(n):
                    if adj[j, v]:
                        t[i, v] += 1
                    if adj[v, i]:
                        t[v, j] += 1
                indeg[j] += 1
                outdeg[i] += 1
                for idx in range(nterms):
                    cur[idx] += delta[idx]
        if step >= burn_in and (step - burn_in + 1) % interval == 0 and taken < n_samples:
            for idx in range(nterms):
                stats_out[taken, idx] = cur[idx]
            if keep_graphs:
                for r in range(n):
                    for c in range(n):
                        graphs_out[taken, r, c] = adj[r, c]
            taken += 1
    return stats_out, graphs_out, cur, accepts


@njit(cache=True)
def geodesic_counts_nb(adj):
    n = adj.shape[0]
    hist = np.zeros(n, np.int64)
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    unreachable = 0
    for s in range(n):
        for v in range(n):
            dist[v] = -1
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            for v in range(n):
                if adj[u, v] and dist[v] < 0:
                    dist[v] = du + 1
                    hist[du + 1] += 1
                    queue[tail] = v
                    tail += 1
        unreachable += n - tail
    return hist, unreachable
