"""Sweep orchestration and artifact writing.

Output layout under the experiment directory::

    traces/<point>_s<seed>.csv      k,f_u,grad_norm_sq,consensus
    summaries/<point>_s<seed>.json  bound fields + run metadata
    states/<point>_s<seed>.json     final worker models, one d-vector per silo
    aggregate.csv                   one row per (point, seed)
    manifest.json                   every sweep point with its status
    plot/curves.csv, plot/ratios.csv  (from emit_plotdata)

All files are written atomically (temp file + rename) so concurrent jobs
never leave partial output behind.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from coopsgd.bounds import BoundError, BoundInputs, bound_report, check_trace, inputs_for, lr_feasible
from coopsgd.config import ConfigError, ExperimentConfig, SweepPoint
from coopsgd.objectives import (
    LogisticObjective,
    LogisticSyntheticSpec,
    Objective,
    QuadraticObjective,
    QuadraticSpec,
)
from coopsgd.simulator import NumericFailure, SimConfig, Trace, run
from coopsgd.topology import MixingMatrix, TopologyError, adjacency_from_edges, build_topology, read_edge_list

__all__ = [
    "THREADS_ENV",
    "AGGREGATE_COLUMNS",
    "TRACE_COLUMNS",
    "PointResult",
    "ExperimentResult",
    "thread_count",
    "make_objective",
    "run_experiment",
    "emit_plotdata",
    "write_trace_csv",
    "read_trace_csv",
    "atomic_write",
    "csv_text",
    "json_text",
]

log = logging.getLogger(__name__)

THREADS_ENV = "COOPSGD_THREADS"
TRACE_COLUMNS = ("k", "f_u", "grad_norm_sq", "consensus")
AGGREGATE_COLUMNS = (
    "point", "topology", "tau", "zeta", "v", "alpha", "seed", "mean_grad_norm_sq", "bound_finite", "ratio",
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARTIAL = 2


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1, got {raw!r}")
    return n


def make_objective(config: ExperimentConfig) -> Objective:
    if config.objective == "quadratic":
        return QuadraticObjective(QuadraticSpec(config.quad_diag, config.quad_b, config.sigma2))
    return LogisticObjective(
        LogisticSyntheticSpec(config.logistic_samples, config.dim, config.logistic_seed, config.ridge)
    )


# -- atomic file output -------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def write_trace_csv(path: Path, trace: Trace) -> None:
    rows = zip(
        trace.k.tolist(), trace.f_u.tolist(), trace.grad_norm_sq.tolist(), trace.consensus.tolist()
    )
    atomic_write(Path(path), csv_text(TRACE_COLUMNS, rows))


def read_trace_csv(path: Path) -> Trace:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trace(data[:, 0].astype(int), data[:, 1], data[:, 2], data[:, 3])


# -- sweep --------------------------------------------------------------------


@dataclass
class PointResult:
    point: SweepPoint
    status: str  # ok | infeasible | failed
    alpha: float | None = None
    zeta: float | None = None
    lhs_lr: float | None = None
    message: str = ""
    rows: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "point": self.point.name,
            "topology": self.point.topology,
            "tau": self.point.tau,
            "v": self.point.v,
            "alpha": self.alpha,
            "zeta": self.zeta,
            "lhs_lr": self.lhs_lr,
            "status": self.status,
            "message": self.message,
            "runs": len(self.rows),
        }


@dataclass
class ExperimentResult:
    out: Path
    points: list[PointResult]
    exit_code: int

    @property
    def rows(self) -> list[dict]:
        return [r for p in self.points for r in p.rows]


def _mixing_matrices(config: ExperimentConfig) -> dict[tuple[str, int], MixingMatrix]:
    """Build every W the sweep needs; any failure aborts before a run starts."""
    edges = read_edge_list(config.adjacency) if config.adjacency else None
    mats = {}
    for topo in config.topology:
        for v in config.v:
            size = config.N + v
            if (topo, size) in mats:
                continue
            try:
                adj = adjacency_from_edges(edges, size) if topo == "custom" else None
                W = build_topology(topo, size, adj)
                W.zeta  # noqa: B018 - force the spectral check up front
            except (TopologyError, ValueError) as exc:
                raise ConfigError(f"{topo} with N + v = {size}: {exc}", key="topology") from None
            mats[topo, size] = W
    return mats


def _bound_inputs(config, point, alpha, obj, W, F_u1) -> BoundInputs:
    return BoundInputs(
        L=obj.L, sigma2=obj.sigma2, m=config.m, zeta=W.zeta, tau=point.tau, v=point.v,
        N=config.N, alpha=alpha, F_u1=F_u1, F_inf=obj.F_inf, K=config.K,
    )


def _resolve_alpha(config, point, obj, W, F_u1) -> tuple[float, float, bool]:
    if point.alpha is not None:
        feasible, lhs = lr_feasible(_bound_inputs(config, point, point.alpha, obj, W, F_u1))
        return point.alpha, lhs, feasible
    grid = sorted(config.alpha_grid, reverse=True)
    lhs = float("nan")
    for a in grid:
        feasible, lhs = lr_feasible(_bound_inputs(config, point, a, obj, W, F_u1))
        if feasible:
            return a, lhs, True
    return grid[-1], lhs, False


def _run_one(config, point, alpha, seed, obj, W, omega_ok, out: Path) -> dict:
    sim = SimConfig(N=config.N, v=point.v, tau=point.tau, alpha=alpha, m=config.m, K=config.K,
                    dim=config.dim, u1=config.u1, seed=seed)
    stem = f"{point.name}_s{seed}"
    trace = run(sim, obj, W)
    inputs = inputs_for(sim, obj, W, assume_omega_zero=True)
    report = bound_report(inputs)
    verdict = check_trace(trace, report) if omega_ok else None
    summary = {
        "point": point.name,
        "seed": seed,
        "topology": point.topology,
        "N": config.N,
        "v": point.v,
        "tau": point.tau,
        "alpha": alpha,
        "K": config.K,
        "objective": config.objective,
        "mean_grad_norm_sq": trace.summary,
        "alpha_e": report.alpha_e,
        "zeta": W.zeta,
        "feasible": report.feasible,
        "lhs_lr": report.lhs_lr,
        "bound_finite": report.finite_bound if omega_ok else None,
        "bound_finite_literal": report.finite_bound_literal if omega_ok else None,
        "bound_asymptotic": report.asymptotic_bound if omega_ok else None,
        "bound_satisfied": verdict.satisfied if verdict else None,
        "ratio": verdict.ratio if verdict else None,
        "max_mix_drift": trace.max_mix_drift,
        "final_f_u": float(trace.f_u[-1]),
        "bound_inputs": inputs.to_dict(),
    }
    write_trace_csv(out / "traces" / f"{stem}.csv", trace)
    atomic_write(out / "summaries" / f"{stem}.json", json_text(summary))
    atomic_write(out / "states" / f"{stem}.json", json_text(trace.final_X[:, : config.N].T.tolist()))
    return {
        "point": point.name,
        "topology": point.topology,
        "tau": point.tau,
        "zeta": W.zeta,
        "v": point.v,
        "alpha": alpha,
        "seed": seed,
        "mean_grad_norm_sq": trace.summary,
        "bound_finite": summary["bound_finite"],
        "ratio": summary["ratio"],
        "max_mix_drift": trace.max_mix_drift,
    }


def run_experiment(
    config: ExperimentConfig,
    out: str | Path | None = None,
    threads: int | None = None,
) -> ExperimentResult:
    """Run every sweep point for every seed and write the artifact set.

    Infeasible points are skipped and flagged in the manifest (exit code 2);
    a run failure marks its point failed (exit code 1).
    """
    out = Path(config.out if out is None else out)
    threads = thread_count() if threads is None else threads
    obj = make_objective(config)
    omega_ok = obj.omega == 0.0 or config.omega_zero
    if not omega_ok:
        log.warning("objective %r has omega != 0; bound fields are left empty", obj)
    mats = _mixing_matrices(config)
    F_u1 = obj.value(np.broadcast_to(np.asarray(config.u1, dtype=float), (config.dim,)))

    results: list[PointResult] = []
    jobs = []
    for point in config.points():
        W = mats[point.topology, config.N + point.v]
        alpha, lhs, feasible = _resolve_alpha(config, point, obj, W, F_u1)
        res = PointResult(point, "ok" if feasible else "infeasible", alpha, W.zeta, lhs)
        if not feasible:
            res.message = f"learning-rate condition fails (lhs = {lhs!r})"
            log.warning("%s skipped: %s", point.name, res.message)
        else:
            jobs.extend((res, seed, W) for seed in config.seeds)
        results.append(res)

    def work(job):
        res, seed, W = job
        try:
            return _run_one(config, res.point, res.alpha, seed, obj, W, omega_ok, out)
        except (NumericFailure, BoundError, FloatingPointError) as exc:
            return exc

    if threads <= 1 or len(jobs) <= 1:
        outcomes = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, jobs))

    for (res, seed, _), outcome in zip(jobs, outcomes):
        if isinstance(outcome, Exception):
            res.status = "failed"
            res.message = f"seed {seed}: {outcome}"
        else:
            res.rows.append(outcome)

    agg_rows = [[r[c] for c in AGGREGATE_COLUMNS] for p in results for r in p.rows]
    atomic_write(out / "aggregate.csv", csv_text(AGGREGATE_COLUMNS, agg_rows))
    atomic_write(out / "manifest.json", json_text({"points": [p.to_dict() for p in results]}))

    statuses = {p.status for p in results}
    code = EXIT_FAILED if "failed" in statuses else EXIT_PARTIAL if "infeasible" in statuses else EXIT_OK
    return ExperimentResult(out, results, code)


def emit_plotdata(out: str | Path) -> tuple[Path, Path]:
    """Write ``plot/curves.csv`` (metrics vs k) and ``plot/ratios.csv``.

    Reads ``aggregate.csv`` and the trace files it references.
    """
    out = Path(out)
    agg_path = out / "aggregate.csv"
    if not agg_path.exists():
        raise FileNotFoundError(f"no aggregate.csv in {out}")
    with agg_path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{agg_path} has no rows")

    curve_rows = []
    ratio_rows = []
    for r in rows:
        trace_path = out / "traces" / f"{r['point']}_s{r['seed']}.csv"
        with trace_path.open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for rec in reader:
                curve_rows.append([r["point"], r["seed"], *rec])
        ratio_rows.append([r[c] for c in ("point", "topology", "tau", "zeta", "v", "alpha", "seed", "ratio")])

    curves = out / "plot" / "curves.csv"
    ratios = out / "plot" / "ratios.csv"
    atomic_write(curves, csv_text(("point", "seed", *TRACE_COLUMNS), curve_rows))
    atomic_write(
        ratios, csv_text(("point", "topology", "tau", "zeta", "v", "alpha", "seed", "ratio"), ratio_rows)
    )
    return curves, ratios
