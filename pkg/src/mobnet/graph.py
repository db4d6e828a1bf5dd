"""Directed binary graph storage and the node attribute table.

The graph is dense (uint8 adjacency) because every network handled here
is desk scale (n up to a few thousand); neighbor queries return sorted
index arrays, which is what the shared-partner counting and the kernels
rely on.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import (
    NodeOutOfRangeError,
    SelfDyadError,
    SelfLoopError,
    TooFewNodesError,
)

ORDINARY = "Ordinary"
ORGANIZATION = "Organization"
LEADER = "Leader"
INFLUENTIAL = "Influential"
ROLES = (ORDINARY, ORGANIZATION, LEADER, INFLUENTIAL)
ROLE_CODES = {name: i for i, name in enumerate(ROLES)}


class DirectedGraph:
    """Binary directed graph with dual adjacency bookkeeping.

    Invariants: no self-loops, at most one edge per ordered dyad,
    ``edge_count`` equal to the number of set entries in ``adj``.
    Read operations never mutate; ``toggle_edge`` requires exclusive
    access (samplers work on private copies).
    """

    __slots__ = ("n", "adj", "edge_count")

    def __init__(self, n: int, adj: np.ndarray | None = None):
        if n < 0:
            raise NodeOutOfRangeError(f"node count must be >= 0, got {n}")
        self.n = int(n)
        if adj is None:
            adj = np.zeros((n, n), dtype=np.uint8)
        else:
            adj = np.ascontiguousarray(adj, dtype=np.uint8)
            if adj.shape != (n, n):
                raise NodeOutOfRangeError(
                    f"adjacency shape {adj.shape} does not match n={n}"
                )
            if adj.max(initial=0) > 1:
                raise ValueError("adjacency entries must be 0/1")
            if n and np.any(np.diag(adj)):
                raise SelfLoopError(int(np.flatnonzero(np.diag(adj))[0]))
        self.adj = adj
        self.edge_count = int(adj.sum())

    @classmethod
    def from_edge_list(cls, edges, n: int) -> "DirectedGraph":
        """Build a graph from (source, target) pairs.

        Duplicate pairs collapse to a single edge; self-loops raise.
        """
        g = cls(n)
        a = g.adj
        for s, t in edges:
            s = int(s)
            t = int(t)
            if s == t:
                raise SelfLoopError(s)
            if not (0 <= s < n and 0 <= t < n):
                raise NodeOutOfRangeError(
                    f"edge ({s}, {t}) outside node range [0, {n})"
                )
            a[s, t] = 1
        g.edge_count = int(a.sum())
        return g

    def copy(self) -> "DirectedGraph":
        return DirectedGraph(self.n, self.adj.copy())

    def __eq__(self, other):
        return (
            isinstance(other, DirectedGraph)
            and self.n == other.n
            and np.array_equal(self.adj, other.adj)
        )

    def __repr__(self):
        return f"DirectedGraph(n={self.n}, edges={self.edge_count})"

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i, j])

    def toggle_edge(self, i: int, j: int) -> None:
        """Flip the dyad (i, j); toggling twice restores the graph."""
        if i == j:
            raise SelfDyadError(i)
        if self.adj[i, j]:
            self.adj[i, j] = 0
            self.edge_count -= 1
        else:
            self.adj[i, j] = 1
            self.edge_count += 1

    def out_neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adj[i])

    def in_neighbors(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.adj[:, j])

    def out_degree(self, i: int) -> int:
        return int(self.adj[i].sum())

    def in_degree(self, j: int) -> int:
        return int(self.adj[:, j].sum())

    def out_degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1, dtype=np.int64)

    def in_degrees(self) -> np.ndarray:
        return self.adj.sum(axis=0, dtype=np.int64)

    def degree_histograms(self) -> tuple[np.ndarray, np.ndarray]:
        """(in_hist, out_hist): counts of nodes per degree value."""
        indeg = self.in_degrees()
        outdeg = self.out_degrees()
        return np.bincount(indeg), np.bincount(outdeg)

    def edge_array(self) -> np.ndarray:
        """Edges as an (E, 2) array in row-major dyad order."""
        return np.argwhere(self.adj)

    def shared_partners_otp(self, i: int, j: int) -> int:
        """Number of intermediaries k with edges i->k and k->j.

        Independent of whether the edge i->j itself exists.
        """
        if i == j:
            raise SelfDyadError(i)
        common = np.intersect1d(
            self.out_neighbors(i), self.in_neighbors(j), assume_unique=True
        )
        return int(common.size)

    def degree_centralization(self, mode: str = "total") -> float:
        """Freeman degree centralization.

        mode="total" uses d_i = indegree + outdegree with normalizer
        2(n-1)^2, the variant consistent with the descriptive tables
        this package reproduces.  mode="in"/"out" use the one-sided
        degree with normalizer (n-1)^2, under which a directed star
        pointing at a single hub scores exactly 1.
        """
        n = self.n
        if n < 3:
            raise TooFewNodesError(f"centralization needs n >= 3, got {n}")
        if mode == "total":
            d = self.in_degrees() + self.out_degrees()
            denom = 2.0 * (n - 1) ** 2
        elif mode == "in":
            d = self.in_degrees()
            denom = float((n - 1) ** 2)
        elif mode == "out":
            d = self.out_degrees()
            denom = float((n - 1) ** 2)
        else:
            raise ValueError(f"unknown centralization mode {mode!r}")
        return float((d.max() * n - d.sum()) / denom)

    def relabel(self, perm) -> "DirectedGraph":
        """New graph with node i renamed to perm[i]."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.n)
        return DirectedGraph(self.n, self.adj[np.ix_(inv, inv)])


class NodeTable:
    """Per-node attributes: role category, follower count, screen name."""

    __slots__ = ("role", "followers", "screen_name")

    def __init__(self, role, followers, screen_name=None):
        self.role = np.ascontiguousarray(role, dtype=np.int8)
        self.followers = np.ascontiguousarray(followers, dtype=np.int64)
        n = self.role.shape[0]
        if self.followers.shape[0] != n:
            raise ValueError("role and followers must have equal length")
        if np.any(self.followers < 0):
            raise ValueError("follower counts must be non-negative")
        if np.any((self.role < 0) | (self.role >= len(ROLES))):
            raise ValueError("unknown role code")
        if screen_name is None:
            screen_name = [f"user{i}" for i in range(n)]
        if len(screen_name) != n:
            raise ValueError("screen_name length mismatch")
        self.screen_name = list(screen_name)

    def __len__(self):
        return self.role.shape[0]

    @classmethod
    def uniform(cls, n: int, role: str = ORDINARY, followers: int = 0) -> "NodeTable":
        return cls(
            np.full(n, ROLE_CODES[role], dtype=np.int8),
            np.full(n, followers, dtype=np.int64),
        )

    def role_counts(self) -> dict[str, int]:
        counts = np.bincount(self.role, minlength=len(ROLES))
        return {name: int(counts[code]) for name, code in ROLE_CODES.items()}

    def has_role(self, level: str) -> bool:
        return bool(np.any(self.role == ROLE_CODES[level]))

    def role_indicator(self, level: str) -> np.ndarray:
        return (self.role == ROLE_CODES[level]).astype(np.float64)

    def relabel(self, perm) -> "NodeTable":
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(self))
        return NodeTable(
            self.role[inv],
            self.followers[inv],
            [self.screen_name[i] for i in inv],
        )


def write_edge_tsv(g: DirectedGraph, path) -> None:
    """UTF-8 TSV, one "source<TAB>target" pair per line, zero-based ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for s, t in g.edge_array():
            fh.write(f"{s}\t{t}\n")


def read_edge_tsv(path, n: int | None = None) -> DirectedGraph:
    edges = []
    hi = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise NodeOutOfRangeError(
                    f"{path}:{lineno}: expected 'source<TAB>target', got {line!r}"
                )
            s, t = int(parts[0]), int(parts[1])
            hi = max(hi, s, t)
            edges.append((s, t))
    if n is None:
        n = hi + 1
    return DirectedGraph.from_edge_list(edges, n)


def write_node_csv(nodes: NodeTable, path) -> None:
    """CSV schema: node_id,screen_name,role,followers."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "screen_name", "role", "followers"])
        for i in range(len(nodes)):
            w.writerow(
                [i, nodes.screen_name[i], ROLES[nodes.role[i]], int(nodes.followers[i])]
            )


def read_node_csv(path) -> NodeTable:
    ids, names, roles, followers = [], [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"node_id", "screen_name", "role", "followers"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: node CSV must have columns {sorted(required)}")
        for row in reader:
            ids.append(int(row["node_id"]))
            names.append(row["screen_name"])
            role = row["role"].strip().capitalize()
            if role not in ROLE_CODES:
                raise ValueError(f"{path}: unknown role {row['role']!r}")
            roles.append(ROLE_CODES[role])
            followers.append(int(row["followers"]))
    order = np.argsort(ids)
    if not np.array_equal(np.asarray(ids)[order], np.arange(len(ids))):
        raise ValueError(f"{path}: node ids must be 0..n-1 without gaps")
    return NodeTable(
        np.asarray(roles, dtype=np.int8)[order],
        np.asarray(followers, dtype=np.int64)[order],
        [names[i] for i in order],
    )
