"""Binary-search iterations over the momentum parameter beta, quartiles per beta."""
import argparse
import csv

import numpy as np

from qubo_hu.bench import quartiles
from qubo_hu.hu_core import SolverConfig
from qubo_hu.instances import InstanceSeedSpec, generate_instance
from qubo_hu.search import binary_search


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=5)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--s", type=int, default=16)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--betas", type=float, nargs="+", default=list(np.round(np.arange(0, 0.71, 0.1), 2)))
    ap.add_argument("--out", default="beta_sweep.csv")
    args = ap.parse_args()

    rows = []
    for seed in range(args.instances):
        c = generate_instance(InstanceSeedSpec(args.n, args.s, seed))
        for beta in args.betas:
            r = binary_search(c, SolverConfig(epsilon=args.epsilon, beta=beta))
            rows.append((beta, seed, r.iterations, r.matrix_exponentials))
            print(f"seed={seed} beta={beta:g} iterations={r.iterations}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "count", "iterations_q1", "iterations_median", "iterations_q3"])
        for beta in args.betas:
            its = [r[2] for r in rows if r[0] == beta]
            w.writerow([beta, len(its), *quartiles(its)])


if __name__ == "__main__":
    main()
