"""Run every experiment (and the resolvent checks) at full or quick budget.

    python scripts/run_experiments.py --out results --seed 0 [--quick] [--only feller longtime]
"""

import argparse
import dataclasses
import sys
import time

from stablecond import experiments as ex
from stablecond.cli import RunConfig, run


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--out", default="results")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chunks", type=int)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", nargs="*", default=list(ex.EXPERIMENTS) + ["resolvent"])
    args = p.parse_args()
    status = 0
    for name in args.only:
        cfg = RunConfig(experiment=name, seed=args.seed, out=args.out, quick=args.quick)
        if args.chunks:
            cfg = dataclasses.replace(cfg, chunks=args.chunks)
        start = time.perf_counter()
        code = run(cfg)
        print(f"{name:20s} {'PASS' if code == 0 else 'FAIL'}  {time.perf_counter() - start:7.1f} s", flush=True)
        status |= code
    return status


if __name__ == "__main__":
    sys.exit(main())
