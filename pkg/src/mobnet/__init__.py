"""mobnet: retweet mobilization networks, from raw tweets to fitted
exponential-family network models and their goodness of fit."""

__version__ = "0.1.0"

from .backend import active_backend
from .errors import MobnetError
from .estimator import FitResult, mcmle, mple, report
from .gof import GofReport, gof_run, render
from .graph import (
    INFLUENTIAL,
    LEADER,
    ORDINARY,
    ORGANIZATION,
    DirectedGraph,
    NodeTable,
    read_edge_tsv,
    read_node_csv,
    write_edge_tsv,
    write_node_csv,
)
from .ingest import (
    DescriptiveStats,
    TweetRecord,
    build_network,
    describe,
    krippendorff_alpha,
    parse_retweet,
    read_tweets,
)
from .sampler import SamplerConfig, generate_scenario, mh_step, simulate
from .terms import (
    ModelSpec,
    TermSpec,
    change_statistics,
    load_model,
    save_model,
    statistics,
)

__all__ = [
    "__version__",
    "active_backend",
    "MobnetError",
    "FitResult",
    "mcmle",
    "mple",
    "report",
    "GofReport",
    "gof_run",
    "render",
    "DirectedGraph",
    "NodeTable",
    "ORDINARY",
    "ORGANIZATION",
    "LEADER",
    "INFLUENTIAL",
    "read_edge_tsv",
    "read_node_csv",
    "write_edge_tsv",
    "write_node_csv",
    "DescriptiveStats",
    "TweetRecord",
    "build_network",
    "describe",
    "krippendorff_alpha",
    "parse_retweet",
    "read_tweets",
    "SamplerConfig",
    "generate_scenario",
    "mh_step",
    "simulate",
    "ModelSpec",
    "TermSpec",
    "change_statistics",
    "load_model",
    "save_model",
    "statistics",
]
