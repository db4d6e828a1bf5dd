"""Model terms: the sufficient-statistic vector and its change statistics.

A model is an ordered list of :class:`TermSpec`.  Nine kinds are
supported; shared-partner terms use the outgoing-two-path (OTP) rule
throughout: an intermediary for the ordered pair (i, j) is a node k with
edges i->k and k->j.

Geometrically weighted terms evaluate
``exp(decay) * sum_c [1 - (1 - exp(-decay))**c] * N_c`` where ``N_c``
counts edges / non-edge dyads / nodes whose shared-partner count or
degree equals c.  At decay 0 this collapses to the count of units with
c >= 1, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import kernels
from .errors import (
    BaseLevelError,
    ModelFileError,
    NegativeDecayError,
    SelfDyadError,
)
from .graph import ORDINARY, ROLE_CODES, DirectedGraph, NodeTable

EDGES = "edges"
GWESP_OTP = "gwesp_otp"
GWNSP_OTP = "gwnsp_otp"
GWIDEGREE = "gwidegree"
GWODEGREE = "gwodegree"
NODE_OUT_FACTOR = "node_out_factor"
NODE_IN_FACTOR = "node_in_factor"
NODE_OUT_COV = "node_out_cov"
NODE_IN_COV = "node_in_cov"

KINDS = (
    EDGES, GWESP_OTP, GWNSP_OTP, GWIDEGREE, GWODEGREE,
    NODE_OUT_FACTOR, NODE_IN_FACTOR, NODE_OUT_COV, NODE_IN_COV,
)
_GW_KINDS = {GWESP_OTP, GWNSP_OTP, GWIDEGREE, GWODEGREE}
_FACTOR_KINDS = {NODE_OUT_FACTOR, NODE_IN_FACTOR}
_COV_KINDS = {NODE_OUT_COV, NODE_IN_COV}
# edge toggles at these terms change other dyads' statistics
DYAD_DEPENDENT = {GWESP_OTP, GWNSP_OTP, GWIDEGREE, GWODEGREE}

DEFAULT_DECAY = 0.5

_KERNEL_CODE = {
    EDGES: kernels.K_EDGES,
    GWESP_OTP: kernels.K_GWESP,
    GWNSP_OTP: kernels.K_GWNSP,
    GWIDEGREE: kernels.K_GWIDEG,
    GWODEGREE: kernels.K_GWODEG,
    NODE_OUT_FACTOR: kernels.K_SRC,
    NODE_IN_FACTOR: kernels.K_DST,
    NODE_OUT_COV: kernels.K_SRC,
    NODE_IN_COV: kernels.K_DST,
}


@dataclass(frozen=True)
class TermSpec:
    kind: str
    decay: float | None = None
    level: str | None = None
    covariate: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelFileError(f"unknown term kind {self.kind!r}")
        if self.kind in _GW_KINDS:
            decay = DEFAULT_DECAY if self.decay is None else float(self.decay)
            if decay < 0:
                raise NegativeDecayError(decay)
            object.__setattr__(self, "decay", decay)
        elif self.decay is not None:
            raise ModelFileError(f"{self.kind} does not take a decay")
        if self.kind in _FACTOR_KINDS:
            if self.level is None:
                raise ModelFileError(f"{self.kind} requires a level")
            if self.level not in ROLE_CODES:
                raise ModelFileError(f"unknown role level {self.level!r}")
            if self.level == ORDINARY:
                raise BaseLevelError(
                    f"{self.kind}: {ORDINARY} is the omitted base category"
                )
        elif self.level is not None:
            raise ModelFileError(f"{self.kind} does not take a level")
        if self.kind in _COV_KINDS:
            if self.covariate is None:
                object.__setattr__(self, "covariate", "followers")
        elif self.covariate is not None:
            raise ModelFileError(f"{self.kind} does not take a covariate")

    @property
    def label(self) -> str:
        if self.kind in _GW_KINDS:
            return f"{self.kind}({self.decay:g})"
        if self.kind in _FACTOR_KINDS:
            return f"{self.kind}({self.level})"
        if self.kind in _COV_KINDS:
            return f"{self.kind}({self.covariate})"
        return self.kind


class ModelSpec:
    """Ordered term list; defines the statistic vector g(y)."""

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ModelFileError("a model needs at least one term")
        self.terms = terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        return isinstance(other, ModelSpec) and self.terms == other.terms

    def labels(self):
        return [t.label for t in self.terms]

    def resolve(self, nodes: NodeTable | None) -> tuple["ModelSpec", list[str]]:
        """Drop factor terms whose level has no nodes (reported as skipped).

        Mirrors the descriptive tables' N/A entries for roles absent
        from a network.
        """
        if nodes is None:
            return self, []
        kept, skipped = [], []
        for t in self.terms:
            if t.kind in _FACTOR_KINDS and not nodes.has_role(t.level):
                skipped.append(t.label)
            else:
                kept.append(t)
        if not kept:
            raise ModelFileError("all model terms were skipped (roles missing)")
        if not skipped:
            return self, []
        return ModelSpec(kept), skipped

    @classmethod
    def table3(cls, include_influential: bool = True, decay: float = DEFAULT_DECAY):
        """The nine-row model shape used in the reported results:
        density, cascades, closure, activity and popularity factors,
        degree spread terms, and follower sender/receiver covariates.
        """
        terms = [
            TermSpec(EDGES),
            TermSpec(GWNSP_OTP, decay=decay),
            TermSpec(GWESP_OTP, decay=decay),
        ]
        levels = (["Influential"] if include_influential else []) + [
            "Leader",
            "Organization",
        ]
        terms += [TermSpec(NODE_OUT_FACTOR, level=lv) for lv in levels]
        terms += [TermSpec(NODE_IN_FACTOR, level=lv) for lv in levels]
        terms += [
            TermSpec(GWIDEGREE, decay=decay),
            TermSpec(GWODEGREE, decay=decay),
            TermSpec(NODE_OUT_COV),
            TermSpec(NODE_IN_COV),
        ]
        return cls(terms)


def transformed_covariate(nodes: NodeTable, name: str = "followers") -> np.ndarray:
    """log10(1 + x), then z-standardized across nodes (population SD).

    Raw follower counts span five-plus orders of magnitude and would
    destabilize estimation; the transform is recorded in fit reports.
    """
    if name != "followers":
        raise ModelFileError(f"unknown covariate {name!r}")
    x = np.log10(1.0 + nodes.followers.astype(np.float64))
    sd = x.std()
    if sd == 0.0:
        return np.zeros_like(x)
    return (x - x.mean()) / sd


COVARIATE_TRANSFORM_NOTE = "log10(1 + followers), z-standardized over nodes"


class CompiledTerms:
    """Kernel-ready arrays for a resolved model."""

    __slots__ = ("kinds", "eas", "rs", "node_vals", "labels", "spec")

    def __init__(self, spec: ModelSpec, nodes: NodeTable | None, n: int):
        k = len(spec)
        self.spec = spec
        self.kinds = np.empty(k, dtype=np.int64)
        self.eas = np.zeros(k)
        self.rs = np.zeros(k)
        self.node_vals = np.zeros((k, n))
        self.labels = spec.labels()
        cov_cache: dict[str, np.ndarray] = {}
        for idx, t in enumerate(spec):
            self.kinds[idx] = _KERNEL_CODE[t.kind]
            if t.kind in _GW_KINDS:
                self.eas[idx] = exp(t.decay)
                self.rs[idx] = 1.0 - exp(-t.decay)
            elif t.kind in _FACTOR_KINDS:
                if nodes is None:
                    raise ModelFileError(f"{t.label} requires a node table")
                if len(nodes) != n:
                    raise ModelFileError("node table size does not match graph")
                self.node_vals[idx] = nodes.role_indicator(t.level)
            elif t.kind in _COV_KINDS:
                if nodes is None:
                    raise ModelFileError(f"{t.label} requires a node table")
                if t.covariate not in cov_cache:
                    cov_cache[t.covariate] = transformed_covariate(nodes, t.covariate)
                self.node_vals[idx] = cov_cache[t.covariate]


def compile_terms(spec: ModelSpec, nodes: NodeTable | None, n: int) -> CompiledTerms:
    return CompiledTerms(spec, nodes, n)


# -- individual statistics ------------------------------------------------

def _gw_sum(counts: np.ndarray, decay: float) -> float:
    if decay < 0:
        raise NegativeDecayError(decay)
    r = 1.0 - exp(-decay)
    return float(exp(decay) * (1.0 - r ** counts).sum())


def stat_edges(g: DirectedGraph) -> float:
    return float(g.edge_count)


def stat_gwesp_otp(g: DirectedGraph, decay: float) -> float:
    t = kernels.twopaths(g.adj)
    return _gw_sum(t[g.adj.astype(bool)], decay)


def stat_gwnsp_otp(g: DirectedGraph, decay: float) -> float:
    t = kernels.twopaths(g.adj)
    mask = ~g.adj.astype(bool) & ~np.eye(g.n, dtype=bool)
    return _gw_sum(t[mask], decay)


def stat_gwdegree(g: DirectedGraph, decay: float, direction: str) -> float:
    if direction == "in":
        d = g.in_degrees()
    elif direction == "out":
        d = g.out_degrees()
    else:
        raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")
    return _gw_sum(d, decay)


def stat_nodefactor(g: DirectedGraph, nodes: NodeTable, level: str, direction: str) -> float:
    if level == ORDINARY:
        raise BaseLevelError(f"{ORDINARY} is the omitted base category")
    ind = nodes.role_indicator(level)
    if direction == "out":
        return float(g.out_degrees() @ ind)
    if direction == "in":
        return float(g.in_degrees() @ ind)
    raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")


def stat_nodecov(g: DirectedGraph, nodes: NodeTable, covariate, direction: str) -> float:
    """Sum of the source (out) or target (in) covariate over edges.

    ``covariate`` is an attribute name (transformed per
    :func:`transformed_covariate`) or an explicit per-node array.
    """
    if isinstance(covariate, str):
        x = transformed_covariate(nodes, covariate)
    else:
        x = np.asarray(covariate, dtype=np.float64)
    if direction == "out":
        return float(g.out_degrees() @ x)
    if direction == "in":
        return float(g.in_degrees() @ x)
    raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")


def statistics(g: DirectedGraph, nodes: NodeTable | None, spec: ModelSpec) -> np.ndarray:
    """Statistic vector of the whole graph, in model order."""
    c = compile_terms(spec, nodes, g.n)
    return kernels.full_stats(g.adj, c.kinds, c.eas, c.rs, c.node_vals)


def change_statistics(
    g: DirectedGraph, nodes: NodeTable | None, spec: ModelSpec, i: int, j: int
) -> np.ndarray:
    """g(y with edge i->j) - g(y without it); the graph is not modified."""
    if i == j:
        raise SelfDyadError(i)
    c = compile_terms(spec, nodes, g.n)
    t = kernels.twopaths(g.adj)
    return kernels.change_add(
        g.adj, t, g.in_degrees(), g.out_degrees(),
        c.kinds, c.eas, c.rs, c.node_vals, i, j,
    )


# -- model files -----------------------------------------------------------

_FIELDS = {"kind", "decay", "level", "covariate"}


def load_model(path) -> ModelSpec:
    """Read a model file: TOML with an ordered [[term]] array.

    Example::

        [[term]]
        kind = "edges"

        [[term]]
        kind = "gwesp_otp"
        decay = 0.5

        [[term]]
        kind = "node_out_factor"
        level = "Organization"
    """
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ModelFileError(f"{path}: {e}") from e
    if "term" not in doc or not isinstance(doc["term"], list):
        raise ModelFileError(f"{path}: expected an array of [[term]] tables")
    terms = []
    for idx, raw in enumerate(doc["term"], start=1):
        if not isinstance(raw, dict):
            raise ModelFileError(f"{path}: term {idx} is not a table")
        unknown = set(raw) - _FIELDS
        if unknown:
            raise ModelFileError(
                f"{path}: term {idx}: unknown field(s) {sorted(unknown)}"
            )
        if "kind" not in raw:
            raise ModelFileError(f"{path}: term {idx}: missing 'kind'")
        try:
            terms.append(
                TermSpec(
                    kind=str(raw["kind"]),
                    decay=raw.get("decay"),
                    level=raw.get("level"),
                    covariate=raw.get("covariate"),
                )
            )
        except (ModelFileError, NegativeDecayError, BaseLevelError) as e:
            raise ModelFileError(f"{path}: term {idx}: {e}") from e
    return ModelSpec(terms)


def save_model(spec: ModelSpec, path) -> None:
    lines = []
    for t in spec:
        lines.append("[[term]]")
        lines.append(f'kind = "{t.kind}"')
        if t.kind in _GW_KINDS:
            lines.append(f"decay = {t.decay:g}")
        if t.level is not None:
            lines.append(f'level = "{t.level}"')
        if t.kind in _COV_KINDS:
            lines.append(f'covariate = "{t.covariate}"')
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
