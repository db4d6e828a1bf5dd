"""Simulation-based goodness of fit.

Networks are simulated at the fitted coefficients and five auxiliary
statistic families are compared against the observed network: in- and
out-degree distributions, edgewise shared partners (OTP), the geodesic
distance distribution (with an explicit unreachable bucket; these
directed networks are mostly disconnected), and the model statistics
themselves.  A coordinate passes when the observed value lies inside
the central 95% simulation envelope.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import MobnetError
from .graph import DirectedGraph, NodeTable
from .sampler import SamplerConfig, simulate
from .terms import ModelSpec, compile_terms

FAMILIES = ("in_degree", "out_degree", "esp_otp", "geodesic", "model_statistics")

_QUANTS = (2.5, 25.0, 50.0, 75.0, 97.5)


@dataclass
class GofFamily:
    name: str
    coords: list[str]
    observed: np.ndarray
    quantiles: np.ndarray  # shape (5, len(coords)): 2.5/25/50/75/97.5
    inside: np.ndarray  # bool per coordinate

    @property
    def inside_fraction(self) -> float:
        return float(self.inside.mean()) if len(self.inside) else 1.0

    def __eq__(self, other):
        return (
            isinstance(other, GofFamily)
            and self.name == other.name
            and self.coords == other.coords
            and np.array_equal(self.observed, other.observed)
            and np.array_equal(self.quantiles, other.quantiles)
            and np.array_equal(self.inside, other.inside)
        )


@dataclass
class GofReport:
    families: dict[str, GofFamily]

    @property
    def inside_fraction(self) -> float:
        total = sum(len(f.inside) for f in self.families.values())
        hits = sum(int(f.inside.sum()) for f in self.families.values())
        return hits / total if total else 1.0

    def __eq__(self, other):
        return isinstance(other, GofReport) and self.families == other.families


def _degree_hist(degrees: np.ndarray, length: int) -> np.ndarray:
    return np.bincount(degrees, minlength=length).astype(np.float64)[:length]


def _esp_hist(adj: np.ndarray, length: int) -> np.ndarray:
    t = kernels.twopaths(adj)
    vals = t[adj.astype(bool)]
    return np.bincount(vals, minlength=length).astype(np.float64)[:length]


def _geodesic_vec(adj: np.ndarray, n_finite: int) -> np.ndarray:
    hist, unreachable = kernels.geodesic_counts(adj)
    out = np.zeros(n_finite + 1)
    take = min(n_finite, len(hist) - 1)
    out[:take] = hist[1 : take + 1]
    out[n_finite] = unreachable
    return out


def gof_run(
    g: DirectedGraph,
    nodes: NodeTable | None,
    spec: ModelSpec,
    fit,
    config: SamplerConfig,
) -> GofReport:
    """Simulate at fit.theta and envelope the auxiliary statistics."""
    if not fit.converged:
        raise MobnetError("goodness of fit requires a converged fit", "gof_run")
    resolved, _ = spec.resolve(nodes)
    compiled = compile_terms(resolved, nodes, g.n)
    draws = simulate(resolved, fit.theta, nodes, config, g)
    sim_adj = [gg.adj for gg, _ in draws]
    sim_stats = np.stack([s for _, s in draws])

    n = g.n
    obs_in = g.in_degrees()
    obs_out = g.out_degrees()
    sim_in = [a.sum(axis=0, dtype=np.int64) for a in sim_adj]
    sim_out = [a.sum(axis=1, dtype=np.int64) for a in sim_adj]

    len_in = int(max([obs_in.max(initial=0)] + [d.max(initial=0) for d in sim_in])) + 1
    len_out = int(max([obs_out.max(initial=0)] + [d.max(initial=0) for d in sim_out])) + 1

    t_obs = kernels.twopaths(g.adj)
    obs_esp_vals = t_obs[g.adj.astype(bool)]
    sim_esp_vals = []
    for a in sim_adj:
        t = kernels.twopaths(a)
        sim_esp_vals.append(t[a.astype(bool)])
    len_esp = int(
        max(
            [obs_esp_vals.max(initial=0)]
            + [v.max(initial=0) for v in sim_esp_vals]
        )
    ) + 1

    # longest finite geodesic across observed and simulated networks
    def _max_finite(adj):
        hist, _ = kernels.geodesic_counts(adj)
        nz = np.flatnonzero(hist)
        return int(nz.max()) if nz.size else 0

    n_finite = max([_max_finite(g.adj)] + [_max_finite(a) for a in sim_adj])
    n_finite = max(n_finite, 1)

    families = {}

    def _family(name, coords, observed, sims):
        sims = np.asarray(sims)
        q = np.percentile(sims, _QUANTS, axis=0)
        inside = (observed >= q[0]) & (observed <= q[4])
        families[name] = GofFamily(name, coords, observed, q, inside)

    _family(
        "in_degree",
        [str(d) for d in range(len_in)],
        _degree_hist(obs_in, len_in),
        [_degree_hist(d, len_in) for d in sim_in],
    )
    _family(
        "out_degree",
        [str(d) for d in range(len_out)],
        _degree_hist(obs_out, len_out),
        [_degree_hist(d, len_out) for d in sim_out],
    )
    _family(
        "esp_otp",
        [str(d) for d in range(len_esp)],
        np.bincount(obs_esp_vals, minlength=len_esp).astype(np.float64)[:len_esp],
        [
            np.bincount(v, minlength=len_esp).astype(np.float64)[:len_esp]
            for v in sim_esp_vals
        ],
    )
    _family(
        "geodesic",
        [str(d) for d in range(1, n_finite + 1)] + ["unreachable"],
        _geodesic_vec(g.adj, n_finite),
        [_geodesic_vec(a, n_finite) for a in sim_adj],
    )
    _family(
        "model_statistics",
        resolved.labels(),
        np.asarray(
            kernels.full_stats(
                g.adj, compiled.kinds, compiled.eas, compiled.rs, compiled.node_vals
            )
        ),
        sim_stats,
    )
    return GofReport(families)


# -- rendering ---------------------------------------------------------------

_CSV_HEADER = ["coordinate", "observed", "q025", "q250", "q500", "q750", "q975", "inside"]


def _family_csv_path(out_dir, name):
    return os.path.join(out_dir, f"gof_{name}.csv")


def render(report: GofReport, out_dir) -> list[str]:
    """One CSV and one SVG per family, plus a summary JSON.

    Returns the list of paths written.  Floats are serialized with
    ``repr`` so a re-parsed CSV reproduces the report exactly.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, fam in report.families.items():
        path = _family_csv_path(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_CSV_HEADER)
            for idx, coord in enumerate(fam.coords):
                w.writerow(
                    [coord]
                    + [repr(float(v)) for v in (fam.observed[idx], *fam.quantiles[:, idx])]
                    + ["true" if fam.inside[idx] else "false"]
                )
        written.append(path)
        svg_path = os.path.join(out_dir, f"gof_{name}.svg")
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(_family_svg(fam))
        written.append(svg_path)
    summary = {
        "families": {
            name: {
                "coordinates": len(fam.coords),
                "inside_fraction": fam.inside_fraction,
            }
            for name, fam in report.families.items()
        },
        "inside_fraction": report.inside_fraction,
    }
    spath = os.path.join(out_dir, "gof_summary.json")
    with open(spath, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    written.append(spath)
    return written


def read_family_csv(path) -> GofFamily:
    name = os.path.basename(path)
    if name.startswith("gof_") and name.endswith(".csv"):
        name = name[4:-4]
    coords, rows, inside = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _CSV_HEADER:
            raise MobnetError(f"{path}: unexpected GoF CSV header {header}", "read")
        for row in reader:
            coords.append(row[0])
            rows.append([float(v) for v in row[1:7]])
            inside.append(row[7] == "true")
    arr = np.asarray(rows)
    return GofFamily(
        name=name,
        coords=coords,
        observed=arr[:, 0],
        quantiles=arr[:, 1:6].T.copy(),
        inside=np.asarray(inside, dtype=bool),
    )


def read_report(out_dir) -> GofReport:
    families = {}
    for name in FAMILIES:
        path = _family_csv_path(out_dir, name)
        if os.path.exists(path):
            families[name] = read_family_csv(path)
    return GofReport(families)


def _family_svg(fam: GofFamily, width: int = 640, height: int = 360) -> str:
    """Quantile boxes (25-75), whiskers (2.5-97.5), median ticks and the
    observed polyline, one x position per coordinate."""
    k = len(fam.coords)
    margin = 46
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    hi = float(max(fam.quantiles.max(initial=0.0), fam.observed.max(initial=0.0), 1.0))
    lo = float(min(fam.quantiles.min(initial=0.0), fam.observed.min(initial=0.0), 0.0))
    span = hi - lo or 1.0

    def sx(i):
        return margin + plot_w * (i + 0.5) / k

    def sy(v):
        return margin + plot_h * (1.0 - (v - lo) / span)

    bw = max(2.0, min(18.0, plot_w / (2.0 * k)))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{fam.name}</text>',
    ]
    for i in range(k):
        x = sx(i)
        q = fam.quantiles[:, i]
        parts.append(
            f'<line x1="{x:.1f}" y1="{sy(q[0]):.1f}" x2="{x:.1f}" y2="{sy(q[4]):.1f}" '
            'stroke="#888" stroke-width="1"/>'
        )
        top = sy(q[3])
        bot = sy(q[1])
        parts.append(
            f'<rect x="{x - bw / 2:.1f}" y="{top:.1f}" width="{bw:.1f}" '
            f'height="{max(bot - top, 0.5):.1f}" fill="#cfd8e3" stroke="#555"/>'
        )
        parts.append(
            f'<line x1="{x - bw / 2:.1f}" y1="{sy(q[2]):.1f}" x2="{x + bw / 2:.1f}" '
            f'y2="{sy(q[2]):.1f}" stroke="#222" stroke-width="1.5"/>'
        )
    pts = " ".join(
        f"{sx(i):.1f},{sy(fam.observed[i]):.1f}" for i in range(k)
    )
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.8"/>'
    )
    for i in range(k):
        parts.append(
            f'<circle cx="{sx(i):.1f}" cy="{sy(fam.observed[i]):.1f}" r="2.4" '
            'fill="#c0392b"/>'
        )
    step = max(1, k // 16)
    for i in range(0, k, step):
        parts.append(
            f'<text x="{sx(i):.1f}" y="{height - margin + 16:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{fam.coords[i]}</text>'
        )
    parts.append(
        f'<text x="12" y="{margin:.1f}" font-family="sans-serif" font-size="10">{hi:g}</text>'
    )
    parts.append(
        f'<text x="12" y="{height - margin:.1f}" font-family="sans-serif" font-size="10">{lo:g}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
