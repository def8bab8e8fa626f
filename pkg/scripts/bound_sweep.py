"""Run a sweep config and print mean summary against the finite bound per point.

Usage: python3 scripts/bound_sweep.py [configs/bound_sweep.cfg] [--out DIR]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from coopsgd.config import parse_config
from coopsgd.experiment import emit_plotdata, run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config", nargs="?", default=str(Path(__file__).parent.parent / "configs" / "bound_sweep.cfg"))
    parser.add_argument("--out")
    args = parser.parse_args(argv)

    config = parse_config(Path(args.config).read_text())
    start = time.perf_counter()
    result = run_experiment(config, out=args.out)
    elapsed = time.perf_counter() - start

    print(f"{'point':<6} {'topology':<9} {'tau':>3} {'v':>2} {'alpha':>7} {'zeta':>8} "
          f"{'seeds':>5} {'mean':>11} {'bound':>11} {'ratio':>7}  status")
    for p in result.points:
        if p.rows:
            mean = float(np.mean([r["mean_grad_norm_sq"] for r in p.rows]))
            bound = p.rows[0]["bound_finite"]
            ratio = f"{mean / bound:7.4f}" if bound else "    n/a"
            bound_s = f"{bound:11.4e}" if bound is not None else f"{'n/a':>11}"
            mean_s = f"{mean:11.4e}"
        else:
            mean_s = bound_s = f"{'-':>11}"
            ratio = f"{'-':>7}"
        print(f"{p.point.name:<6} {p.point.topology:<9} {p.point.tau:>3} {p.point.v:>2} {p.alpha:>7g} "
              f"{p.zeta:8.5f} {len(p.rows):>5} {mean_s} {bound_s} {ratio}  {p.status}")
    if result.rows:
        emit_plotdata(result.out)
    print(f"{len(result.rows)} runs in {elapsed:.1f}s; artifacts in {result.out}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
