"""Command-line entry point: ``coopsgd {run,bounds,topology,ensemble,plotdata}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from coopsgd.bounds import BoundError, BoundInputs, bound_report
from coopsgd.config import ConfigError, parse_config
from coopsgd.ensemble import NoParticipantsError, Participation, SiloPredictor, TestSet, evaluate
from coopsgd.experiment import atomic_write, csv_text, json_text, emit_plotdata, run_experiment
from coopsgd.topology import (
    TopologyError,
    adjacency_from_edges,
    build_topology,
    read_edge_list,
    validate_mixing,
)

# run flags that override config keys of the same name
_RUN_OVERRIDES = ("n", "v", "tau", "alpha", "m", "k", "topology", "objective", "sigma2", "seed", "out")


def _cmd_run(args) -> int:
    text = Path(args.config).read_text() if args.config else ""
    overrides = {k: getattr(args, k) for k in _RUN_OVERRIDES if getattr(args, k) is not None}
    config = parse_config(text, overrides)
    result = run_experiment(config)
    for p in result.points:
        print(f"{p.point.name} {p.status:<10} topology={p.point.topology} tau={p.point.tau} "
              f"v={p.point.v} alpha={p.alpha} runs={len(p.rows)} {p.message}".rstrip())
    print(f"artifacts written to {result.out}")
    return result.exit_code


def _cmd_bounds(args) -> int:
    fields = dict(L=args.L, sigma2=args.sigma2, m=args.m, zeta=args.zeta, tau=args.tau, v=args.v,
                  N=args.N, F_u1=args.F_u1, F_inf=args.F_inf, K=args.K)
    if args.alpha_e is not None:
        inputs = BoundInputs.from_alpha_e(args.alpha_e, **fields)
    else:
        inputs = BoundInputs(alpha=args.alpha, **fields)
    print(json_text(bound_report(inputs).to_dict()), end="")
    return 0


def _cmd_topology(args) -> int:
    adj = None
    if args.topology == "custom":
        if not args.adjacency:
            raise TopologyError("custom topology needs --adjacency")
        adj = adjacency_from_edges(read_edge_list(args.adjacency), args.n)
    W = build_topology(args.topology, args.n, adj)
    report = validate_mixing(W)
    out = {
        "kind": args.topology,
        "size": W.size,
        "zeta": report.zeta,
        "eigenvalues": W.eigenvalues.tolist() if report["symmetry"].passed else None,
        "validation": report.to_dict(),
    }
    if args.matrix:
        out["entries"] = W.entries.tolist()
    print(json_text(out), end="")
    return 0 if report.passed else 1


def _read_test_csv(path: str) -> TestSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(x) for x in r] for r in reader if r]
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    if "label" in header:
        j = header.index("label")
        return TestSet(np.delete(data, j, axis=1), data[:, j])
    return TestSet(data)


def _cmd_ensemble(args) -> int:
    models = json.loads(Path(args.state).read_text())
    silos = [SiloPredictor(i, m, args.kind) for i, m in enumerate(models)]
    flags = Participation.parse(args.participate) if args.participate else Participation.all(len(silos))
    testset = _read_test_csv(args.test)
    metrics = evaluate(silos, flags, testset)
    out = Path(args.out)
    rows = [[i, p] + ([testset.labels[i]] if testset.labels is not None else [])
            for i, p in enumerate(metrics.predictions.tolist())]
    header = ("sample", "prediction") + (("label",) if testset.labels is not None else ())
    atomic_write(out / "predictions.csv", csv_text(header, rows))
    atomic_write(out / "metrics.json", json_text({**metrics.to_dict(), "flags": list(flags.flags)}))
    print(json_text(metrics.to_dict()), end="")
    return 0


def _cmd_plotdata(args) -> int:
    for path in emit_plotdata(args.out):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopsgd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a single experiment or a sweep")
    p.add_argument("--config", help="flat key = value config file")
    for key in _RUN_OVERRIDES:
        p.add_argument(f"--{key}", help=f"override config key '{key}'")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bounds", help="print the bound report as JSON")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--v", type=int, default=0)
    p.add_argument("--N", type=int, required=True)
    rate = p.add_mutually_exclusive_group(required=True)
    rate.add_argument("--alpha", type=float)
    rate.add_argument("--alpha_e", type=float, help="effective rate; alpha = alpha_e (N + v) / N")
    p.add_argument("--F_u1", type=float, default=0.0)
    p.add_argument("--F_inf", type=float, default=0.0)
    p.add_argument("--K", type=int, default=1)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("topology", help="build and validate a mixing matrix")
    p.add_argument("--topology", choices=("complete", "ring", "star", "custom"), required=True)
    p.add_argument("--n", type=int, required=True, help="matrix size (N + v)")
    p.add_argument("--adjacency", help="edge list file for custom topologies")
    p.add_argument("--matrix", action="store_true", help="include the entries in the output")
    p.set_defaults(func=_cmd_topology)

    p = sub.add_parser("ensemble", help="aggregate silo predictions on a test set")
    p.add_argument("--state", required=True, help="JSON array of per-silo model vectors")
    p.add_argument("--test", required=True, help="CSV with feature columns and optional 'label'")
    p.add_argument("--participate", help="comma list of 0/1 flags, default all 1")
    p.add_argument("--kind", choices=("linear", "logistic"), default="logistic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("plotdata", help="write plot-ready CSVs for an experiment directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, BoundError, TopologyError, NoParticipantsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
