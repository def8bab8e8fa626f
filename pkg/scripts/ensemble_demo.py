"""Compare the uniform ensemble of trained logistic silos with each silo alone.

Every seed trains N silos with the simulator on a ring (so the final worker
models differ), draws a fresh test set from the same separable generator and
records the accuracy of the full ensemble, of each silo alone, and of the
ensemble with one silo excluded. Results are written as JSON; nothing is
asserted.

Usage: python3 scripts/ensemble_demo.py [--seeds 16] [--out results/ensemble_demo.json]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from coopsgd.ensemble import Participation, SiloPredictor, TestSet, evaluate
from coopsgd.objectives import LogisticObjective, LogisticSyntheticSpec
from coopsgd.rng import aux_stream
from coopsgd.simulator import SimConfig, run
from coopsgd.topology import build_ring


def one_seed(seed: int, N: int, dim: int, samples: int, test_size: int) -> dict:
    obj = LogisticObjective(LogisticSyntheticSpec(sample_count=samples, dim=dim, seed=seed, ridge=0.01),
                            sigma2_draws=100)
    W = build_ring(N)
    config = SimConfig(N=N, tau=16, alpha=0.5, K=512, dim=dim, m=4, u1=0.0, seed=seed)
    trace = run(config, obj, W)
    silos = [SiloPredictor(i, trace.final_X[:, i], "logistic") for i in range(N)]

    rng = aux_stream(seed, 7)
    features = rng.standard_normal((test_size, dim))
    testset = TestSet(features, (features @ obj.true_weights >= 0).astype(float))

    full = evaluate(silos, Participation.all(N), testset).value
    single = [evaluate(silos, tuple(int(j == i) for j in range(N)), testset).value for i in range(N)]
    leave_one_out = [evaluate(silos, tuple(int(j != i) for j in range(N)), testset).value for i in range(N)]
    return {"seed": seed, "ensemble": full, "single": single, "leave_one_out": leave_one_out,
            "final_consensus": float(trace.consensus[-1])}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=16)
    parser.add_argument("--N", type=int, default=8)
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--samples", type=int, default=64)
    parser.add_argument("--test-size", type=int, default=2000)
    parser.add_argument("--out", default="results/ensemble_demo.json")
    args = parser.parse_args(argv)

    records = [one_seed(s, args.N, args.dim, args.samples, args.test_size) for s in range(args.seeds)]
    ens = np.array([r["ensemble"] for r in records])
    single = np.array([r["single"] for r in records])
    summary = {
        "seeds": args.seeds,
        "mean_ensemble_accuracy": float(ens.mean()),
        "mean_single_accuracy_per_silo": single.mean(axis=0).tolist(),
        "mean_best_single_accuracy": float(single.max(axis=1).mean()),
        "ensemble_at_least_every_silo_on_average": bool(ens.mean() >= single.mean(axis=0).max()),
        "records": records,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(summary, indent=2) + "\n")
    print(f"ensemble accuracy {ens.mean():.4f}; best silo on average {single.mean(axis=0).max():.4f}; "
          f"per-seed best silo {single.max(axis=1).mean():.4f}")
    print(f"written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
