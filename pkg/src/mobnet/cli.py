"""Command-line entry point wiring ingestion, descriptives, estimation,
simulation and goodness of fit into reproducible batch runs.

Every subcommand writes its artifacts under --out-dir together with a
manifest.json recording the configuration, seed and SHA-256 checksums
of inputs and outputs, so any two runs can be compared byte for byte.
No subcommand mutates its inputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import MobnetError
from .estimator import FitResult, mcmle, mple, report
from .gof import gof_run, render
from .graph import read_edge_tsv, read_node_csv, write_edge_tsv, write_node_csv
from .ingest import (
    build_network,
    describe,
    read_role_csv,
    read_tweets,
    write_edge_log,
)
from .sampler import SamplerConfig, generate_scenario, simulate
from .terms import load_model, save_model

# default seed: fixed so that runs are reproducible out of the box
DEFAULT_SEED = 2011


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _require(path, what):
    if path is None:
        raise MobnetError(f"missing required {what}", "cli")
    if not os.path.exists(path):
        raise MobnetError(f"{what} not found: {path}", "cli")
    return path


def _write_manifest(out_dir, command, config, inputs, outputs):
    manifest = {
        "command": command,
        "config": config,
        "package_version": __version__,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {os.path.relpath(p, out_dir): _sha256(p) for p in outputs},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _sampler_config(args, sample_size=None) -> SamplerConfig:
    return SamplerConfig(
        burn_in=args.burn_in,
        interval=args.interval,
        sample_size=sample_size if sample_size is not None else args.samples,
        seed=args.seed,
        proposal=args.proposal,
    )


def _cmd_ingest(args):
    _require(args.input, "tweet file (--input)")
    exclude = None
    if args.exclude:
        _require(args.exclude, "exclusion list (--exclude)")
        with open(args.exclude, encoding="utf-8") as fh:
            exclude = {line.strip() for line in fh if line.strip()}
    roles = None
    if args.roles:
        _require(args.roles, "role CSV (--roles)")
        roles = read_role_csv(args.roles)
    records = read_tweets(args.input)
    g, nodes, edge_log = build_network(records, args.limit, roles, exclude)
    stats = describe(g, nodes, edge_log)

    outputs = []
    p = _out(args, "edges.tsv"); write_edge_tsv(g, p); outputs.append(p)
    p = _out(args, "nodes.csv"); write_node_csv(nodes, p); outputs.append(p)
    p = _out(args, "edge_log.csv"); write_edge_log(edge_log, p); outputs.append(p)
    p = _out(args, "descriptives.json")
    with open(p, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
    outputs.append(p)
    p = _out(args, "descriptives.txt")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(stats.format_table())
    outputs.append(p)
    inputs = [args.input] + ([args.roles] if args.roles else []) + (
        [args.exclude] if args.exclude else []
    )
    _write_manifest(
        args.out_dir, "ingest",
        {"limit": args.limit, "seed": args.seed}, inputs, outputs,
    )
    print(stats.format_table())
    return 0


def _cmd_describe(args):
    g = read_edge_tsv(_require(args.edges, "edge list (--edges)"))
    nodes = read_node_csv(_require(args.nodes, "node CSV (--nodes)"))
    edge_log = None
    if args.edge_log:
        _require(args.edge_log, "edge log (--edge-log)")
        with open(args.edge_log, encoding="utf-8", newline="") as fh:
            edge_log = list(csv.DictReader(fh))
    stats = describe(g, nodes, edge_log)
    outputs = []
    p = _out(args, "descriptives.json")
    with open(p, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
    outputs.append(p)
    p = _out(args, "descriptives.txt")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(stats.format_table())
    outputs.append(p)
    inputs = [args.edges, args.nodes] + ([args.edge_log] if args.edge_log else [])
    _write_manifest(args.out_dir, "describe", {}, inputs, outputs)
    print(stats.format_table())
    return 0


def _cmd_fit(args):
    g = read_edge_tsv(_require(args.edges, "edge list (--edges)"))
    nodes = read_node_csv(_require(args.nodes, "node CSV (--nodes)"))
    spec = load_model(_require(args.model, "model file (--model)"))
    if args.method == "mple":
        fit = mple(g, nodes, spec)
    else:
        fit = mcmle(g, nodes, spec, config=_sampler_config(args))
    outputs = []
    p = _out(args, "fit.json")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(fit.to_json())
    outputs.append(p)
    p = _out(args, "fit.txt")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(report(fit))
    outputs.append(p)
    _write_manifest(
        args.out_dir, "fit",
        {"method": args.method, "seed": args.seed, "samples": args.samples},
        [args.edges, args.nodes, args.model], outputs,
    )
    print(report(fit))
    return 0


def _load_theta(args, spec, nodes):
    if args.fit:
        _require(args.fit, "fit JSON (--fit)")
        with open(args.fit, encoding="utf-8") as fh:
            fit = FitResult.from_json(fh.read())
        resolved, _ = spec.resolve(nodes)
        if fit.labels != resolved.labels():
            raise MobnetError(
                "fit JSON terms do not match the model file: "
                f"{fit.labels} vs {resolved.labels()}", "simulate",
            )
        return np.asarray(fit.theta)
    if args.theta:
        return np.asarray([float(v) for v in args.theta.split(",")])
    raise MobnetError("simulate needs --fit or --theta", "simulate")


def _cmd_simulate(args):
    spec = load_model(_require(args.model, "model file (--model)"))
    nodes = None
    inputs = [args.model]
    if args.nodes:
        nodes = read_node_csv(_require(args.nodes, "node CSV (--nodes)"))
        inputs.append(args.nodes)
    if args.edges:
        start = read_edge_tsv(_require(args.edges, "edge list (--edges)"))
        inputs.append(args.edges)
    else:
        n = args.n if args.n else (len(nodes) if nodes is not None else 0)
        if n <= 0:
            raise MobnetError("simulate needs --edges, --nodes or --n", "simulate")
        from .graph import DirectedGraph

        start = DirectedGraph(n)
    theta = _load_theta(args, spec, nodes)
    if args.fit:
        inputs.append(args.fit)
    resolved, _ = spec.resolve(nodes)
    draws = simulate(resolved, theta, nodes, _sampler_config(args), start)
    outputs = []
    p = _out(args, "samples.csv")
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample"] + resolved.labels())
        for idx, (_, stats) in enumerate(draws):
            w.writerow([idx] + [repr(float(v)) for v in stats])
    outputs.append(p)
    if args.write_graphs:
        for idx, (gg, _) in enumerate(draws):
            p = _out(args, f"sample_{idx:04d}.tsv")
            write_edge_tsv(gg, p)
            outputs.append(p)
    _write_manifest(
        args.out_dir, "simulate",
        {"seed": args.seed, "samples": args.samples,
         "theta": [float(v) for v in theta]},
        inputs, outputs,
    )
    print(f"wrote {len(draws)} samples to {args.out_dir}")
    return 0


def _cmd_gof(args):
    g = read_edge_tsv(_require(args.edges, "edge list (--edges)"))
    nodes = read_node_csv(_require(args.nodes, "node CSV (--nodes)"))
    spec = load_model(_require(args.model, "model file (--model)"))
    _require(args.fit, "fit JSON (--fit)")
    with open(args.fit, encoding="utf-8") as fh:
        fit = FitResult.from_json(fh.read())
    rep = gof_run(g, nodes, spec, fit, _sampler_config(args))
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = render(rep, args.out_dir)
    _write_manifest(
        args.out_dir, "gof",
        {"seed": args.seed, "samples": args.samples},
        [args.edges, args.nodes, args.model, args.fit], outputs,
    )
    for name, fam in rep.families.items():
        print(f"{name}: {fam.inside_fraction:.1%} of coordinates inside the 95% envelope")
    print(f"overall: {rep.inside_fraction:.1%}")
    return 0


def _cmd_scenario(args):
    g, nodes = generate_scenario(args.kind, n=args.n, seed=args.seed)
    outputs = []
    p = _out(args, "edges.tsv"); write_edge_tsv(g, p); outputs.append(p)
    p = _out(args, "nodes.csv"); write_node_csv(nodes, p); outputs.append(p)
    stats = describe(g, nodes)
    p = _out(args, "descriptives.json")
    with open(p, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
    outputs.append(p)
    _write_manifest(
        args.out_dir, "scenario",
        {"kind": args.kind, "n": args.n, "seed": args.seed}, [], outputs,
    )
    print(f"scenario '{args.kind}' with {g.n} nodes, {g.edge_count} edges -> {args.out_dir}")
    return 0


def _add_sampler_flags(p):
    p.add_argument("--samples", type=int, default=100,
                   help="number of retained networks (default 100)")
    p.add_argument("--burn-in", type=int, default=None,
                   help="chain burn-in steps (default 10*n^2)")
    p.add_argument("--interval", type=int, default=None,
                   help="steps between retained samples (default n^2)")
    p.add_argument("--proposal", choices=["tnt", "uniform"], default="tnt",
                   help="dyad proposal (default tnt)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mobnet",
        description="Retweet mobilization networks: ingest, describe, fit, "
                    "simulate, goodness of fit, synthetic scenarios.",
    )
    ap.add_argument("--version", action="version", version=f"mobnet {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tweets -> network, node table, descriptives")
    p.add_argument("--input", required=True,
                   help="tweet archive: JSON-lines or CSV with header "
                        "id,created_at,author,followers,text")
    p.add_argument("--roles", help="role CSV: screen_name,role")
    p.add_argument("--limit", type=int, default=1000,
                   help="number of retweets to keep (default 1000)")
    p.add_argument("--exclude", help="file of tweet ids to skip, one per line")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("describe", help="descriptive tables for an existing network")
    p.add_argument("--edges", required=True, help="edge list TSV (source<TAB>target)")
    p.add_argument("--nodes", required=True,
                   help="node CSV: node_id,screen_name,role,followers")
    p.add_argument("--edge-log", help="raw edge log CSV from ingest")
    p.set_defaults(func=_cmd_describe)

    p = sub.add_parser("fit", help="estimate model coefficients")
    p.add_argument("--edges", required=True)
    p.add_argument("--nodes", required=True)
    p.add_argument("--model", required=True, help="model file (TOML [[term]] tables)")
    p.add_argument("--method", choices=["mple", "mcmle"], default="mple")
    _add_sampler_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="draw networks from a fitted or given model")
    p.add_argument("--model", required=True)
    p.add_argument("--nodes")
    p.add_argument("--edges", help="starting network (default: empty graph)")
    p.add_argument("--n", type=int, help="node count when no --nodes/--edges")
    p.add_argument("--fit", help="fit JSON to take coefficients from")
    p.add_argument("--theta", help="comma-separated coefficients")
    p.add_argument("--write-graphs", action="store_true",
                   help="also write one edge-list TSV per retained sample")
    _add_sampler_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gof", help="simulation-based goodness of fit")
    p.add_argument("--edges", required=True)
    p.add_argument("--nodes", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--fit", required=True)
    _add_sampler_flags(p)
    p.set_defaults(func=_cmd_gof)

    p = sub.add_parser("scenario", help="generate a synthetic archetype network")
    p.add_argument("--kind", choices=["crowd", "org"], required=True)
    p.add_argument("--n", type=int, default=300)
    p.set_defaults(func=_cmd_scenario)

    for name, sp in sub.choices.items():
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"random seed (default {DEFAULT_SEED})")
        sp.add_argument("--out-dir", required=True, help="output directory")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except MobnetError as e:
        print(
            json.dumps(
                {
                    "module": e.module,
                    "operation": e.operation or args.command,
                    "cause": str(e),
                },
                sort_keys=True,
            ),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
