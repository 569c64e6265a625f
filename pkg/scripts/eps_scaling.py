"""Binary-search iterations versus epsilon, correction distance and the
rounding precision nu at n=256; writes per-run rows and the power-law fits."""
import argparse
import csv

import numpy as np

from qubo_hu.bench import eps_protocol, nu_protocol
from qubo_hu.qcost import fit_power_law
from qubo_hu.rounding import correct_solution


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--s", type=int, default=16)
    ap.add_argument("--log-eps", type=float, nargs="+", default=[1.6, 1.9, 2.2, 2.5],
                    help="epsilon = 10^-k for each k")
    ap.add_argument("--trials", type=int, default=100000)
    ap.add_argument("--out", default="eps_scaling.csv")
    args = ap.parse_args()

    epsilons = [10.0 ** -k for k in args.log_eps]
    runs = eps_protocol(range(args.instances), epsilons, args.n, args.s, log=print)
    nus = nu_protocol(runs, args.n, args.s, args.trials, log=print)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "epsilon", "iterations", "matrix_exponentials", "gamma_lo", "gamma_hi",
                    "wall_seconds", "correction_trace_distance", "nu_mean", "nu_best", "round_mean",
                    "round_batch_max_mean", "round_best"])
        for r, v in zip(runs, nus):
            d = correct_solution(r.rho, r.epsilon).trace_distance
            w.writerow([r.seed, r.epsilon, r.iterations, r.exponentials, r.gamma_lo, r.gamma_hi,
                        r.wall_seconds, d, v.nu_mean, v.nu_best, v.mean_value, v.batch_max_mean,
                        v.best_value])
    eps = np.array([r.epsilon for r in runs])
    fit = fit_power_law(eps, [r.iterations for r in runs])
    print(f"iterations ~ {fit.a1:.3g} eps^{fit.a2:.3f}, 95% CI ({fit.a2_ci[0]:.3f}, {fit.a2_ci[1]:.3f})")
    nu = np.array([v.nu_mean for v in nus])
    means = [float(nu[eps == e].mean()) for e in epsilons]
    print("mean nu per epsilon:", means)
    if all(m > 0 for m in means):
        f = fit_power_law(epsilons, means)
        print(f"nu ~ {f.a1:.3g} eps^{f.a2:.3f}, 95% CI ({f.a2_ci[0]:.3f}, {f.a2_ci[1]:.3f})")


if __name__ == "__main__":
    main()
