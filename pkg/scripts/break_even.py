"""Break-even two-qubit gate time from classical runs over n, with theory and
free power-law extrapolations."""
import argparse
import csv

from qubo_hu.hu_core import SolverConfig
from qubo_hu.instances import InstanceSeedSpec, generate_instance
from qubo_hu.qcost import FREE, GATE_TIME_RECORD, THEORY, break_even_extrapolation, iteration_resources
from qubo_hu.search import binary_search


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--s", type=int, default=16)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--beta", type=float, default=0.45)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-prefix", default="break_even")
    args = ap.parse_args()

    reports = []
    for n in args.n:
        c = generate_instance(InstanceSeedSpec(n, args.s, args.seed))
        r = binary_search(c, SolverConfig(epsilon=args.epsilon, beta=args.beta))
        rep = iteration_resources(r.records(), n, args.s, args.epsilon, wall_seconds=r.wall_seconds)
        reports.append(rep)
        print(f"n={n} wall={r.wall_seconds:.1f}s diag_updates={rep.diag_updates} "
              f"gates={rep.total_gates:.3e} break_even={rep.break_even_gate_time:.3e}s")
    with open(f"{args.out_prefix}_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "classical_wall_seconds", "total_gates", "total_gates_floor", "break_even_seconds"])
        for rep in reports:
            w.writerow([rep.n, rep.classical_wall_seconds, rep.total_gates, rep.total_gates_floor,
                        rep.break_even_gate_time])
    if len(reports) >= 3:
        for mode in (THEORY, FREE):
            proj = break_even_extrapolation(reports, mode)
            proj.to_csv(f"{args.out_prefix}_{mode}.csv")
            n100 = proj.n_100_years
            print(f"{mode}: classical ~ n^{proj.classical.a2:.2f}, gates ~ n^{proj.gates.a2:.2f}; "
                  f"100-year n = {n100:.3g}, break-even there {proj.at(n100):.3g}s "
                  f"(record gate time {GATE_TIME_RECORD:g}s)")


if __name__ == "__main__":
    main()
