#!/usr/bin/env python3
"""Confidence-level x learning-rate sensitivity sweep.

Produces the final-regret matrix CSV (rows beta, columns eta) used by the
heatmap panel.  Cell seeds derive from the (beta, eta) key, so the grid can
be re-cut or reordered without changing any cell.
"""

import argparse
import math
import os
import sys

from linids.harness import AlgorithmSpec, CheckpointSpec, ExperimentConfig, sweep


def parse_grid(text: str) -> list:
    return [tok if tok == "auto" else float(tok) for tok in text.split(",")]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--instance", choices=["random", "eoo"], default="random")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--sigma2", type=float, default=0.1)
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=99)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--betas", default="0.25,0.5,1,2,4,8")
    p.add_argument("--etas", default="auto,0.03,0.1,0.3,1,3")
    p.add_argument("--variant", default="H_UCB")
    p.add_argument("--out", default="out/sweep")
    args = p.parse_args()

    if args.instance == "random":
        instance = {"kind": "random", "d": args.d, "k": args.k, "noise_std": math.sqrt(args.sigma2)}
    else:
        instance = {"kind": "eoo", "epsilon": args.epsilon, "noise_std": math.sqrt(args.sigma2)}
    cfg = ExperimentConfig(
        instance=instance,
        algorithms=(AlgorithmSpec(name="ids", kind="ids", variant=args.variant),),
        horizon=args.horizon,
        repetitions=args.reps,
        base_seed=args.seed,
        checkpoints=CheckpointSpec(),
        output_dir=args.out,
    )
    matrix_path = os.path.join(args.out, "sweep.csv")
    sweep(cfg, parse_grid(args.betas), parse_grid(args.etas), threads=args.threads, out_path=matrix_path)
    print(f"sweep matrix -> {matrix_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
