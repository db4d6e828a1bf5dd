"""Tweet archive ingestion, descriptive statistics and coder reliability.

Retweets are detected by scanning the text for the markers "RT @",
"MT @" and "retweet @" (case-insensitive) and taking the username right
after the first matching marker's @.  Usernames follow the historical
convention: letters, digits and underscore, at most 15 characters; the
rule lives in one regex below.

Edges run from the retweeter to the original author.  The first
``limit`` parsed retweets are kept (self-retweets are dropped before
counting); duplicate dyads collapse in the binary graph while every raw
retweet is preserved in the edge log.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import InsufficientDataError, UnknownTimestampError
from .graph import (
    ORDINARY,
    ROLE_CODES,
    ROLES,
    DirectedGraph,
    NodeTable,
)

log = logging.getLogger(__name__)

# marker + single space + @ + 2011-era username charset
_RETWEET_RE = re.compile(r"\b(?:RT|MT|retweet) @([A-Za-z0-9_]{1,15})", re.IGNORECASE)


def parse_retweet(text: str):
    """Screen name being retweeted, or None when no marker matches."""
    m = _RETWEET_RE.search(text)
    return m.group(1) if m else None


@dataclass(frozen=True)
class TweetRecord:
    id: str
    created_at: datetime
    author: str
    followers: int
    text: str


@dataclass(frozen=True)
class EdgeLogEntry:
    tweet_id: str
    created_at: datetime
    source: int
    target: int
    source_name: str
    target_name: str


_CLASSIC_FORMAT = "%a %b %d %H:%M:%S %z %Y"


def parse_timestamp(value: str, line_number: int = 0) -> datetime:
    """ISO 8601 or the classic 'Sat Aug 27 18:23:01 +0000 2011' form."""
    value = value.strip()
    try:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        try:
            ts = datetime.strptime(value, _CLASSIC_FORMAT)
        except ValueError:
            raise UnknownTimestampError(value, line_number) from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _record_from_mapping(row, line_number):
    for key in ("id", "created_at", "author", "followers", "text"):
        if key not in row:
            raise InsufficientDataError(
                f"line {line_number}: tweet record missing field {key!r}"
            )
    return TweetRecord(
        id=str(row["id"]),
        created_at=parse_timestamp(str(row["created_at"]), line_number),
        author=str(row["author"]),
        followers=max(0, int(row["followers"])),
        text=str(row["text"]),
    )


def read_tweets(path_or_buffer) -> list[TweetRecord]:
    """JSON-lines or headed CSV; records come back sorted by time, id."""
    if hasattr(path_or_buffer, "read"):
        content = path_or_buffer.read()
    else:
        with open(path_or_buffer, encoding="utf-8") as fh:
            content = fh.read()
    stripped = content.lstrip()
    records = []
    if stripped.startswith("{"):
        for lineno, line in enumerate(content.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            records.append(_record_from_mapping(json.loads(line), lineno))
    else:
        reader = csv.DictReader(io.StringIO(content))
        for lineno, row in enumerate(reader, start=2):
            records.append(_record_from_mapping(row, lineno))
    records.sort(key=lambda r: (r.created_at, r.id))
    return records


def read_role_csv(path) -> dict[str, str]:
    """screen_name,role pairs; keys are lowercased for joining."""
    roles = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"screen_name", "role"}.issubset(
            reader.fieldnames
        ):
            raise InsufficientDataError(
                f"{path}: role CSV needs columns screen_name,role"
            )
        for row in reader:
            role = row["role"].strip().capitalize()
            if role not in ROLE_CODES:
                raise InsufficientDataError(f"{path}: unknown role {row['role']!r}")
            roles[row["screen_name"].strip().lower()] = role
    return roles


def build_network(
    records,
    limit: int,
    roles: dict[str, str] | None = None,
    exclude_ids=None,
) -> tuple[DirectedGraph, NodeTable, list[EdgeLogEntry]]:
    """First ``limit`` retweets -> (graph, node table, raw edge log).

    Screen names are matched case-insensitively (display casing is the
    first seen).  Followers are recorded the first time a user appears
    as a retweeter; users only ever retweeted keep 0.  Accounts missing
    from ``roles`` default to Ordinary with a logged warning.
    """
    exclude = set(exclude_ids or ())
    name_to_id: dict[str, int] = {}
    display: list[str] = []
    followers: list[int] = []
    has_authored: set[int] = set()

    def node_id(name: str) -> int:
        key = name.lower()
        if key not in name_to_id:
            name_to_id[key] = len(display)
            display.append(name)
            followers.append(0)
        return name_to_id[key]

    edge_log: list[EdgeLogEntry] = []
    for rec in records:
        if len(edge_log) >= limit:
            break
        if rec.id in exclude:
            continue
        target_name = parse_retweet(rec.text)
        if target_name is None:
            continue
        if target_name.lower() == rec.author.lower():
            continue  # self-retweet
        src = node_id(rec.author)
        if src not in has_authored:
            has_authored.add(src)
            followers[src] = rec.followers
        tgt = node_id(target_name)
        edge_log.append(
            EdgeLogEntry(
                tweet_id=rec.id,
                created_at=rec.created_at,
                source=src,
                target=tgt,
                source_name=display[src],
                target_name=display[tgt],
            )
        )

    n = len(display)
    g = DirectedGraph.from_edge_list([(e.source, e.target) for e in edge_log], n)

    role_codes = np.full(n, ROLE_CODES[ORDINARY], dtype=np.int8)
    if roles:
        missing = []
        for key, idx in name_to_id.items():
            if key in roles:
                role_codes[idx] = ROLE_CODES[roles[key]]
            else:
                missing.append(display[idx])
        if missing:
            log.warning(
                "%d account(s) missing from role coding, defaulting to Ordinary: %s",
                len(missing),
                ", ".join(missing[:10]) + ("..." if len(missing) > 10 else ""),
            )
    nodes = NodeTable(role_codes, np.asarray(followers, dtype=np.int64), display)
    return g, nodes, edge_log


def write_edge_log(edge_log, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tweet_id", "created_at", "source", "target", "source_name", "target_name"])
        for e in edge_log:
            w.writerow(
                [e.tweet_id, e.created_at.isoformat(), e.source, e.target,
                 e.source_name, e.target_name]
            )


@dataclass
class DescriptiveStats:
    """Everything in the descriptive tables, plus both centralization
    variants (total-degree for table compatibility, indegree under which
    a single-hub star scores exactly 1)."""

    edges_raw: int
    unique_dyads: int
    users: int
    role_counts: dict[str, int]
    centralization: float
    centralization_in: float
    max_indegree: int
    max_outdegree: int
    role_degrees: dict[str, dict[str, float | int | None]]
    sd_convention: str = "sample (n-1)"

    def to_dict(self) -> dict:
        def clean(v):
            if v is None or (isinstance(v, float) and not np.isfinite(v)):
                return None
            return v

        return {
            "edges_raw": self.edges_raw,
            "unique_dyads": self.unique_dyads,
            "users": self.users,
            "role_counts": self.role_counts,
            "centralization_degree": self.centralization,
            "centralization_indegree": self.centralization_in,
            "max_indegree": self.max_indegree,
            "max_outdegree": self.max_outdegree,
            "role_degrees": {
                role: {k: clean(v) for k, v in d.items()}
                for role, d in self.role_degrees.items()
            },
            "sd_convention": self.sd_convention,
        }

    def format_table(self) -> str:
        lines = [
            f"{'Edges (raw retweets)':<28}{self.edges_raw:>10}",
            f"{'Unique dyads':<28}{self.unique_dyads:>10}",
            f"{'Users':<28}{self.users:>10}",
            "Number of accounts",
        ]
        for role in ROLES:
            count = self.role_counts.get(role, 0)
            shown = str(count) if count else "N/A"
            lines.append(f"  {role:<26}{shown:>10}")
        lines += [
            f"{'Centralization (degree)':<28}{self.centralization:>10.3f}",
            f"{'Centralization (indegree)':<28}{self.centralization_in:>10.3f}",
            f"{'Max. indegree':<28}{self.max_indegree:>10}",
            f"{'Max. outdegree':<28}{self.max_outdegree:>10}",
            "",
            f"Average degree by role (SD, {self.sd_convention})",
        ]

        def fmt(v):
            return "N/A" if v is None or not np.isfinite(v) else f"{v:.2f}"

        for role in ROLES:
            d = self.role_degrees.get(role)
            if d is None or d["count"] == 0:
                lines.append(f"  {role + ' indegree':<26}{'N/A':>18}")
                lines.append(f"  {role + ' outdegree':<26}{'N/A':>18}")
                continue
            lines.append(
                f"  {role + ' indegree':<26}"
                f"{fmt(d['in_mean']) + ' (' + fmt(d['in_sd']) + ')':>18}"
            )
            lines.append(
                f"  {role + ' outdegree':<26}"
                f"{fmt(d['out_mean']) + ' (' + fmt(d['out_sd']) + ')':>18}"
            )
        return "\n".join(lines) + "\n"


def describe(g: DirectedGraph, nodes: NodeTable, edge_log=None) -> DescriptiveStats:
    """Reproduce the descriptive tables from graph plus roles.

    Degree means and SDs are per role; SD uses the sample (n-1)
    convention, stated in the output metadata.
    """
    indeg = g.in_degrees()
    outdeg = g.out_degrees()
    role_degrees = {}
    for role in ROLES:
        mask = nodes.role == ROLE_CODES[role]
        count = int(mask.sum())
        if count == 0:
            role_degrees[role] = {
                "count": 0, "in_mean": None, "in_sd": None,
                "out_mean": None, "out_sd": None,
            }
            continue
        din = indeg[mask].astype(np.float64)
        dout = outdeg[mask].astype(np.float64)
        role_degrees[role] = {
            "count": count,
            "in_mean": float(din.mean()),
            "in_sd": float(din.std(ddof=1)) if count > 1 else None,
            "out_mean": float(dout.mean()),
            "out_sd": float(dout.std(ddof=1)) if count > 1 else None,
        }
    return DescriptiveStats(
        edges_raw=len(edge_log) if edge_log is not None else g.edge_count,
        unique_dyads=g.edge_count,
        users=g.n,
        role_counts={r: c for r, c in nodes.role_counts().items() if c or r == ORDINARY},
        centralization=g.degree_centralization("total"),
        centralization_in=g.degree_centralization("in"),
        max_indegree=int(indeg.max(initial=0)),
        max_outdegree=int(outdeg.max(initial=0)),
        role_degrees=role_degrees,
    )


def krippendorff_alpha(coder_a, coder_b) -> float:
    """Nominal-metric Krippendorff's alpha for two coders.

    Items where either coding is None are dropped; at least two fully
    coded items are required.  Computed as 1 - D_o/D_e from the
    coincidence matrix over paired codings.  Values at or below zero are
    returned as-is (no clamping): they signal agreement no better than
    chance.
    """
    if len(coder_a) != len(coder_b):
        raise InsufficientDataError("coders rated different numbers of items")
    pairs = [
        (a, b) for a, b in zip(coder_a, coder_b) if a is not None and b is not None
    ]
    if len(pairs) < 2:
        raise InsufficientDataError(
            f"need >= 2 items coded by both coders, got {len(pairs)}"
        )
    categories = sorted({v for p in pairs for v in p}, key=repr)
    index = {c: i for i, c in enumerate(categories)}
    k = len(categories)
    coincidence = np.zeros((k, k))
    for a, b in pairs:
        coincidence[index[a], index[b]] += 1.0
        coincidence[index[b], index[a]] += 1.0
    n_c = coincidence.sum(axis=1)
    n_total = n_c.sum()
    d_o = (coincidence.sum() - np.trace(coincidence)) / n_total
    d_e = (n_total**2 - (n_c**2).sum()) / (n_total * (n_total - 1.0))
    if d_e == 0.0:
        return 1.0  # a single category used throughout: perfect agreement
    return float(1.0 - d_o / d_e)
