"""Iteration counts for the configuration ladder at n=128 (feasible probe,
infeasible probe, full binary search), medians over instances."""
import argparse
import csv

import numpy as np

from qubo_hu.bench import ladder_protocol
from qubo_hu.hu_core import a_priori_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--s", type=int, default=16)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--out", default="ladder_table.csv")
    args = ap.parse_args()

    stats, refs = ladder_protocol(range(args.instances), args.n, args.s, args.epsilon, log=print)
    cols = ("feasible_iterations", "feasible_exponentials", "infeasible_iterations",
            "infeasible_exponentials", "search_iterations", "search_exponentials")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("configuration",) + cols)
        w.writerow(["fixed_step_bound", a_priori_bound(args.n, args.epsilon, 0.0)] + [""] * 5)
        for name, rows in stats.items():
            med = [float(np.median([getattr(r, c) for r in rows])) for c in cols]
            w.writerow([name] + med)
            print(name, " ".join(f"{c}={m:g}" for c, m in zip(cols, med)))
    print("reference gammas:", [round(r.gamma, 6) for r in refs])


if __name__ == "__main__":
    main()
