#!/usr/bin/env python3
"""Price the asymptotic allocation program on the stock study instances."""

import math
import sys

import numpy as np

from linids.core import Instance, make_eoo_instance
from linids.lowerbound import brute_force_cstar, oracle_primal_dual, solve_cstar


def main() -> int:
    instances = [
        Instance(np.eye(2), np.array([1.0, 0.5]), 1.0, label="ortho2"),
        Instance(np.array([[1.0], [0.5]]), np.array([1.0]), 1.0, label="colinear"),
        make_eoo_instance(0.01, math.sqrt(0.1)),
    ]
    beta_n = math.log(1e6)
    for inst in instances:
        sub = solve_cstar(inst, budget=50_000)
        grid = brute_force_cstar(inst)
        line = f"{inst.label:<14} subgradient {sub.cost:9.4f}   grid {grid:9.4f}"
        try:
            game, _ = oracle_primal_dual(inst, beta_n, rounds=100_000)
            line += f"   game {game.cost / beta_n:9.4f}"
        except Exception as exc:  # colinear: nothing to cover
            line += f"   game n/a ({type(exc).__name__})"
        print(line)
    print("notes: the game route never plays the optimal arm before coverage, so it")
    print("overprices instances whose constraints the optimal arm covers for free")
    print("(the colinear pair); the three-arm optimism counterexample is quoted at 64")
    print("in the literature under a different normalization; this program prices it near 8.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
