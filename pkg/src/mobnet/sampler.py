"""Metropolis-Hastings simulation and synthetic scenario generation.

Chains are deterministic given the seed: both kernel backends consume
one MT19937 uniform stream in the same order, so the visited graph
sequence is reproducible (and identical across backends).  Multi-run
callers derive per-chain seeds from a master seed via SeedSequence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import DimensionMismatchError
from .graph import (
    INFLUENTIAL,
    LEADER,
    ORDINARY,
    ORGANIZATION,
    ROLE_CODES,
    DirectedGraph,
    NodeTable,
)
from .terms import (
    EDGES,
    GWESP_OTP,
    GWIDEGREE,
    GWNSP_OTP,
    NODE_IN_COV,
    NODE_IN_FACTOR,
    NODE_OUT_FACTOR,
    ModelSpec,
    TermSpec,
    compile_terms,
)

_PROPOSALS = {"tnt": kernels.PROPOSAL_TNT, "uniform": kernels.PROPOSAL_UNIFORM}


@dataclass(frozen=True)
class SamplerConfig:
    """Chain settings; burn_in/interval default to 10*n^2 and n^2."""

    burn_in: int | None = None
    interval: int | None = None
    sample_size: int = 100
    seed: int = 0
    proposal: str = "tnt"

    def resolved(self, n: int) -> tuple[int, int, int, int, int]:
        burn = 10 * n * n if self.burn_in is None else self.burn_in
        interval = n * n if self.interval is None else self.interval
        if burn < 0:
            raise ValueError("burn_in must be >= 0")
        if interval < 1:
            raise ValueError("interval must be >= 1")
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        if self.proposal not in _PROPOSALS:
            raise ValueError(f"unknown proposal {self.proposal!r}")
        return burn, interval, self.sample_size, self.seed, _PROPOSALS[self.proposal]


class SamplerState:
    """Graph plus incrementally maintained statistics for stepping."""

    def __init__(self, g: DirectedGraph, nodes: NodeTable | None, spec: ModelSpec):
        spec, _ = spec.resolve(nodes)
        self._c = compile_terms(spec, nodes, g.n)
        self._chain = kernels.ChainState(
            g.adj.copy(), self._c.kinds, self._c.eas, self._c.rs, self._c.node_vals
        )

    @property
    def stats(self) -> np.ndarray:
        return self._chain.cur.copy()

    @property
    def graph(self) -> DirectedGraph:
        return DirectedGraph(self._chain.adj.shape[0], self._chain.adj.copy())


def mh_step(state: SamplerState, theta, rng, proposal: str = "tnt") -> bool:
    """Advance the state by one proposal; returns True when accepted.

    ``rng`` is a ``numpy.random.RandomState``; the acceptance ratio is
    min(1, exp(theta . delta) * H) with H the tie/no-tie correction.
    An empty graph falls through to the uniform-dyad branch.
    """
    theta = np.asarray(theta, dtype=np.float64)
    c = state._c
    if theta.shape[0] != len(c.kinds):
        raise DimensionMismatchError(
            f"theta has {theta.shape[0]} entries for {len(c.kinds)} terms"
        )
    return kernels.mh_step_numpy(
        state._chain, theta, c.kinds, c.eas, c.rs, c.node_vals,
        rng, _PROPOSALS[proposal],
    )


def _run_chain(spec, theta, nodes, config, start, keep_graphs):
    spec, _ = spec.resolve(nodes)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] != len(spec):
        raise DimensionMismatchError(
            f"theta has {theta.shape[0]} entries for {len(spec)} terms"
        )
    c = compile_terms(spec, nodes, start.n)
    burn, interval, size, seed, proposal = config.resolved(start.n)
    adj = start.adj.copy()
    stats, graphs, final_stats, accepts = kernels.mh_chain(
        adj, theta, c.kinds, c.eas, c.rs, c.node_vals,
        seed, burn, interval, size, keep_graphs, proposal,
    )
    return stats, graphs, final_stats, accepts


def simulate(
    spec: ModelSpec,
    theta,
    nodes: NodeTable | None,
    config: SamplerConfig,
    start: DirectedGraph,
) -> list[tuple[DirectedGraph, np.ndarray]]:
    """Draw networks from exp(theta . g(y)); returns (graph, stats) pairs.

    ``config.sample_size`` networks are retained every ``interval``
    steps after ``burn_in``, starting the chain at ``start``.
    """
    stats, graphs, _, _ = _run_chain(spec, theta, nodes, config, start, True)
    n = start.n
    return [
        (DirectedGraph(n, graphs[m]), stats[m].copy()) for m in range(stats.shape[0])
    ]


def simulate_stats(spec, theta, nodes, config, start) -> np.ndarray:
    """Statistic vectors only; the cheap path for likelihood iterations."""
    stats, _, _, _ = _run_chain(spec, theta, nodes, config, start, False)
    return stats


# -- synthetic scenarios ----------------------------------------------------

CROWD_ROLE_COUNTS = {ORGANIZATION: 15, LEADER: 5, INFLUENTIAL: 6}
ORG_ROLE_COUNTS = {ORGANIZATION: 32, LEADER: 24}

# followers are drawn as round(10 ** Normal(mu, sigma)) per role
_FOLLOWER_MU = {ORDINARY: 2.0, LEADER: 3.0, ORGANIZATION: 3.5, INFLUENTIAL: 4.5}
_FOLLOWER_SIGMA = 0.5


def _scenario_nodes(n: int, role_counts: dict, rng: np.random.Generator) -> NodeTable:
    total = sum(role_counts.values())
    if total > n:
        raise ValueError(f"role counts sum to {total} > n = {n}")
    if any(v < 0 for v in role_counts.values()):
        raise ValueError("role counts must be non-negative")
    roles = np.full(n, ROLE_CODES[ORDINARY], dtype=np.int8)
    pos = 0
    for name in (ORGANIZATION, LEADER, INFLUENTIAL):
        count = role_counts.get(name, 0)
        roles[pos : pos + count] = ROLE_CODES[name]
        pos += count
    mus = np.array([_FOLLOWER_MU[r] for r in (ORDINARY, ORGANIZATION, LEADER, INFLUENTIAL)])
    followers = np.round(
        10.0 ** rng.normal(mus[roles], _FOLLOWER_SIGMA)
    ).astype(np.int64)
    return NodeTable(roles, followers)


def _preset(kind: str, nodes: NodeTable) -> tuple[ModelSpec, np.ndarray]:
    """Scenario parameter fixtures (not estimates from any dataset).

    Crowd-like networks lean on triadic closure; organization-like
    networks lean on non-edgewise cascades with concentrated attention
    on organization and leader accounts.
    """
    if kind == "crowd":
        rows = [
            (TermSpec(EDGES), -6.2),
            (TermSpec(GWESP_OTP, decay=0.5), 1.6),
            (TermSpec(NODE_OUT_FACTOR, level=ORGANIZATION), 0.8),
            (TermSpec(NODE_IN_FACTOR, level=ORGANIZATION), 1.2),
            (TermSpec(NODE_IN_FACTOR, level=INFLUENTIAL), 1.6),
        ]
    elif kind == "org":
        rows = [
            (TermSpec(EDGES), -6.2),
            (TermSpec(GWNSP_OTP, decay=0.5), 0.35),
            (TermSpec(NODE_OUT_FACTOR, level=ORGANIZATION), 1.6),
            (TermSpec(NODE_OUT_FACTOR, level=LEADER), 1.2),
            (TermSpec(NODE_IN_FACTOR, level=ORGANIZATION), 2.6),
            (TermSpec(NODE_IN_FACTOR, level=LEADER), 1.6),
            (TermSpec(GWIDEGREE, decay=0.5), -1.0),
        ]
    else:
        raise ValueError(f"unknown scenario kind {kind!r} (use 'crowd' or 'org')")
    specs = [r[0] for r in rows]
    theta = [r[1] for r in rows]
    keep = [
        idx
        for idx, t in enumerate(specs)
        if t.level is None or nodes.has_role(t.level)
    ]
    return ModelSpec([specs[i] for i in keep]), np.array([theta[i] for i in keep])


def generate_scenario(
    kind: str,
    n: int = 300,
    role_counts: dict | None = None,
    seed: int = 0,
) -> tuple[DirectedGraph, NodeTable]:
    """Simulate a role-annotated synthetic network of the given archetype.

    ``kind`` is "crowd" or "org"; role counts default to the reference
    compositions above.  Deterministic given (kind, n, role_counts, seed).
    """
    if role_counts is None:
        role_counts = CROWD_ROLE_COUNTS if kind == "crowd" else ORG_ROLE_COUNTS
    ss = np.random.SeedSequence(seed)
    node_seed, chain_seed = ss.generate_state(2)
    rng = np.random.default_rng(node_seed)
    nodes = _scenario_nodes(n, role_counts, rng)
    spec, theta = _preset(kind, nodes)
    config = SamplerConfig(sample_size=1, seed=int(chain_seed))
    [(g, _)] = simulate(spec, theta, nodes, config, DirectedGraph(n))
    return g, nodes
