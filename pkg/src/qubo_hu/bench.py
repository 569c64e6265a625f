"""
Benchmark protocols and campaigns.

The protocol functions are shared by the experiment scripts and the
acceptance tests. A campaign is a line-oriented ``key = value`` file; list
values are whitespace separated:

    name = smoke
    n = 64 128
    s = 8
    epsilon = 0.01
    beta = 0.45
    repetitions = 2
    seed = 0
    trials = 1000

Each (n, s, epsilon, beta, repetition) becomes one run: generate, bisect,
account resources and optionally round. Runs are independent and may go to a
process pool; each writes its own row file atomically before aggregation.
"""
import csv
import hashlib
import itertools
import json
import math
import os
import pickle
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .artifacts import atomic_path, atomic_write_text
from .hu_core import SolverConfig, hamiltonian_updates
from .instances import InstanceSeedSpec, generate_instance
from .qcost import FREE, THEORY, break_even_extrapolation, fit_power_law, iteration_resources
from .rounding import nu_metric, randomized_round
from .sdpref import low_rank_sdp
from .search import binary_search, reference_search

CACHE_ENV = "QUBO_HU_CACHE"

# configuration ladder of cumulative improvements
LADDER = (
    ("adaptive", dict(diag_norm="l1", scale_cost=False, beta=0.0)),
    ("l2_diagonal", dict(diag_norm="l2", scale_cost=True, beta=0.0)),
    ("momentum", dict(diag_norm="l2", scale_cost=True, beta=0.45)),
)


# --- optional disk cache for expensive reference runs -------------------------

def cached(key, compute):
    """``compute()`` memoized on disk under ``$QUBO_HU_CACHE`` if set."""
    root = os.environ.get(CACHE_ENV)
    if not root:
        return compute()
    digest = hashlib.sha256(repr(key).encode()).hexdigest()[:24]
    path = Path(root) / f"{digest}.pkl"
    if path.exists():
        with open(path, "rb") as fh:
            return pickle.load(fh)
    value = compute()
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as fh:
            pickle.dump(value, fh)
    return value


@dataclass
class Reference:
    """High-precision stand-in for an SDP solver solution (not an external solver)."""

    gamma: float
    gamma_hi: float
    rho: np.ndarray
    epsilon: float
    iterations: int


def reference(c, spec, epsilon, factor=10.0, beta=0.45):
    def compute():
        r = reference_search(c, SolverConfig(epsilon=epsilon, beta=beta), factor=factor)
        return Reference(r.gamma_lo, r.gamma_hi, r.rho_star, epsilon / factor, r.iterations)
    return cached(("reference", spec.n, spec.s, spec.seed, epsilon, factor, beta), compute)


# --- protocols ---------------------------------------------------------------

@dataclass
class ProbeStats:
    feasible_status: str
    feasible_iterations: int
    feasible_exponentials: int
    infeasible_status: str
    infeasible_iterations: int
    infeasible_exponentials: int
    infeasible_free_energy: float
    search_iterations: int
    search_exponentials: int


def table_probes(c, gamma_ref, config, offset=0.02):
    """Feasible probe at the reference optimum, infeasible probe above it, full search."""
    f = hamiltonian_updates(c, gamma_ref, config)
    i = hamiltonian_updates(c, gamma_ref + offset, config)
    b = binary_search(c, config)
    return ProbeStats(
        f.status, f.ledger.iterations, f.ledger.matrix_exponentials,
        i.status, i.ledger.iterations, i.ledger.matrix_exponentials,
        getattr(i, "free_energy", float("nan")),
        b.iterations, b.matrix_exponentials,
    )


def ladder_protocol(seeds, n=128, s=16, epsilon=0.01, ladder=LADDER, log=None):
    """Probe statistics per instance for each rung of ``ladder``.

    Returns ``{rung_name: [ProbeStats per seed]}`` and the references used.
    """
    out = {name: [] for name, _ in ladder}
    refs = []
    for seed in seeds:
        spec = InstanceSeedSpec(n, s, seed)
        c = generate_instance(spec)
        ref = reference(c, spec, epsilon)
        refs.append(ref)
        for name, kw in ladder:
            cfg = SolverConfig(epsilon=epsilon, **kw)
            stats = cached(("table", n, s, seed, epsilon, name, ref.gamma),
                           lambda: table_probes(c, ref.gamma, cfg))
            out[name].append(stats)
            if log:
                log(f"seed={seed} rung={name} {stats}")
    return out, refs


@dataclass
class EpsRun:
    seed: int
    epsilon: float
    iterations: int
    exponentials: int
    gamma_lo: float
    gamma_hi: float
    wall_seconds: float
    rho: np.ndarray = field(repr=False)


def eps_protocol(seeds, epsilons, n=256, s=16, beta=0.45, log=None):
    """Full binary search per (seed, epsilon); keeps the final state."""
    runs = []
    for seed in seeds:
        spec = InstanceSeedSpec(n, s, seed)
        c = generate_instance(spec)
        for eps in epsilons:
            def compute():
                r = binary_search(c, SolverConfig(epsilon=eps, beta=beta))
                return EpsRun(seed, eps, r.iterations, r.matrix_exponentials,
                              r.gamma_lo, r.gamma_hi, r.wall_seconds, r.rho_star)
            run = cached(("eps", n, s, seed, eps, beta), compute)
            runs.append(run)
            if log:
                log(f"seed={seed} eps={eps:.5g} iterations={run.iterations} wall={run.wall_seconds:.1f}s")
    return runs


@dataclass
class NuRun:
    seed: int
    epsilon: float
    nu_mean: float
    nu_best: float
    mean_value: float
    batch_max_mean: float
    best_value: float
    reference_mean: float
    reference_best: float
    reference_gap: float


def nu_protocol(runs, n=256, s=16, trials=100000, log=None):
    """Precision nu of each run's rounding against a rounding of a reference state.

    ``nu_mean`` compares mean rounded objectives, ``nu_best`` the best sign
    vectors found. The reference state is a certified low-rank SDP solution
    (internal stand-in for an external conic solver); it is rounded with the
    same trial budget on a disjoint stream.
    """
    out = []
    by_seed = {}
    for run in runs:
        by_seed.setdefault(run.seed, []).append(run)
    for seed, group in by_seed.items():
        spec = InstanceSeedSpec(n, s, seed)
        c = generate_instance(spec)
        ref = cached(("sdp", n, s, seed), lambda: low_rank_sdp(c, seed=seed))
        ref_round = randomized_round(ref.rho, c, trials, seed, stream=rng.REFERENCE_ROUNDING)
        if log:
            log(f"seed={seed} reference value={ref.value:.9f} certified gap={ref.gap:.1e} "
                f"mean={ref_round.mean_value:.3f}")
        for run in group:
            rr = randomized_round(run.rho, c, trials, seed)
            nu_best = nu_metric(rr.best_x, ref_round.best_x, c,
                                provenance=f"low-rank SDP reference, gap {ref.gap:.1e}").nu
            nu_mean = (ref_round.mean_value - rr.mean_value) / n
            out.append(NuRun(seed, run.epsilon, nu_mean, nu_best, rr.mean_value, rr.batch_max_mean,
                             rr.best_value, ref_round.mean_value, ref_round.best_value, ref.gap))
            if log:
                log(f"seed={seed} eps={run.epsilon:.5g} nu_mean={nu_mean:.5f} nu_best={nu_best:.5f} "
                    f"mean={rr.mean_value:.3f} batch_max={rr.batch_max_mean:.3f}")
    return out


def grouped_mean(xs, ys):
    keys = sorted(set(xs))
    return np.array(keys), np.array([np.mean([y for x, y in zip(xs, ys) if x == k]) for k in keys])


def quartiles(values):
    q1, med, q3 = np.percentile(np.asarray(values, dtype=np.float64), [25, 50, 75])
    return float(q1), float(med), float(q3)


# --- campaigns ---------------------------------------------------------------

class CampaignSpecError(ValueError):
    pass


CAMPAIGN_KEYS = {
    "name": str, "n": int, "s": int, "epsilon": float, "beta": float,
    "repetitions": int, "seed": int, "trials": int, "bits": int, "gap": float,
    "diag_norm": str, "scale_cost": str,
}
LIST_KEYS = ("n", "s", "epsilon", "beta")


@dataclass
class Campaign:
    name: str = "campaign"
    n: tuple = (64,)
    s: tuple = (8,)
    epsilon: tuple = (0.01,)
    beta: tuple = (0.45,)
    repetitions: int = 1
    seed: int = 0
    trials: int = 0
    bits: int = 8
    gap: float = None
    diag_norm: str = "l2"
    scale_cost: str = "true"

    def runs(self):
        for n, s, eps, beta, rep in itertools.product(self.n, self.s, self.epsilon, self.beta,
                                                      range(self.repetitions)):
            yield dict(n=n, s=s, epsilon=eps, beta=beta, seed=self.seed + rep,
                       trials=self.trials, bits=self.bits, gap=self.gap,
                       diag_norm=self.diag_norm, scale_cost=self.scale_cost == "true")


def parse_campaign(text, source="<campaign>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CampaignSpecError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in CAMPAIGN_KEYS:
            raise CampaignSpecError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise CampaignSpecError(f"{source}:{lineno}: duplicate key {key!r}")
        cast = CAMPAIGN_KEYS[key]
        parts = val.split()
        if not parts:
            raise CampaignSpecError(f"{source}:{lineno}: empty value for {key!r}")
        try:
            if key in LIST_KEYS:
                values[key] = tuple(cast(p) for p in parts)
            elif len(parts) != 1:
                raise CampaignSpecError(f"{source}:{lineno}: {key!r} takes one value")
            else:
                values[key] = cast(parts[0]).lower() if key == "scale_cost" else cast(parts[0])
        except ValueError:
            raise CampaignSpecError(f"{source}:{lineno}: bad value {val!r} for {key!r}") from None
    camp = Campaign(**values)
    if camp.repetitions < 1:
        raise CampaignSpecError(f"{source}: repetitions must be positive")
    if camp.scale_cost not in ("true", "false"):
        raise CampaignSpecError(f"{source}: scale_cost must be true or false")
    for n, s in itertools.product(camp.n, camp.s):
        try:
            InstanceSeedSpec(n, s, 0)
        except ValueError as exc:
            raise CampaignSpecError(f"{source}: {exc}") from None
    return camp


RESULT_COLUMNS = (
    "n", "s", "epsilon", "beta", "seed", "gamma_lo", "gamma_hi", "iterations",
    "matrix_exponentials", "diag_updates", "total_gates", "wall_seconds",
    "break_even_seconds", "round_mean", "round_best", "round_batch_max_mean",
)


def run_one(params):
    """One campaign run; returns a result row dict."""
    spec = InstanceSeedSpec(params["n"], params["s"], params["seed"])
    c = generate_instance(spec)
    cfg = SolverConfig(epsilon=params["epsilon"], beta=params["beta"],
                       diag_norm=params["diag_norm"], scale_cost=params["scale_cost"])
    t0 = time.perf_counter()
    r = binary_search(c, cfg, gap=params["gap"])
    wall = time.perf_counter() - t0
    rep = iteration_resources(r.records(), spec.n, spec.s, cfg.epsilon, b=params["bits"], wall_seconds=wall)
    row = dict(n=spec.n, s=spec.s, epsilon=cfg.epsilon, beta=cfg.beta, seed=spec.seed,
               gamma_lo=r.gamma_lo, gamma_hi=r.gamma_hi, iterations=r.iterations,
               matrix_exponentials=r.matrix_exponentials, diag_updates=rep.diag_updates,
               total_gates=rep.total_gates, wall_seconds=wall,
               break_even_seconds=rep.break_even_gate_time,
               round_mean="", round_best="", round_batch_max_mean="")
    if params["trials"]:
        rr = randomized_round(r.rho_star, c, params["trials"], spec.seed)
        row.update(round_mean=rr.mean_value, round_best=rr.best_value,
                   round_batch_max_mean=rr.batch_max_mean)
    return row


def _run_to_file(args):
    params, path = args
    row = run_one(params)
    atomic_write_text(path, json.dumps(row, sort_keys=True) + "\n")
    return row


def _write_csv(path, header, rows):
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _quartile_table(rows, keys, metrics):
    out = []
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    for key in sorted(groups):
        line = list(key) + [len(groups[key])]
        for m in metrics:
            vals = [g[m] for g in groups[key] if g[m] != "" and math.isfinite(float(g[m]))]
            line.extend(quartiles(vals) if vals else (float("nan"),) * 3)
        out.append(line)
    header = list(keys) + ["count"] + [f"{m}_{q}" for m in metrics for q in ("q1", "median", "q3")]
    return header, out


def run_campaign(camp, out_dir, workers=1, log=None):
    """Execute a campaign and write result, quartile and fit tables."""
    out_dir = Path(out_dir)
    run_dir = out_dir / "runs"
    run_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for p in camp.runs():
        name = f"n{p['n']}_s{p['s']}_eps{p['epsilon']:.6g}_beta{p['beta']:.6g}_seed{p['seed']}.json"
        jobs.append((p, run_dir / name))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_to_file, jobs))
    else:
        rows = []
        for job in jobs:
            rows.append(_run_to_file(job))
            if log:
                log(f"done {job[1].name}")
    outputs = []

    path = out_dir / "results.csv"
    _write_csv(path, RESULT_COLUMNS, [[r[k] for k in RESULT_COLUMNS] for r in rows])
    outputs.append(path)
    metrics = ("iterations", "matrix_exponentials", "wall_seconds", "break_even_seconds")
    for name, keys in (("by_epsilon", ("n", "epsilon")), ("by_beta", ("n", "epsilon", "beta")),
                       ("by_n", ("n",))):
        header, table = _quartile_table(rows, keys, metrics)
        path = out_dir / f"{name}.csv"
        _write_csv(path, header, table)
        outputs.append(path)

    fits = []
    for n in camp.n:
        sub = [r for r in rows if r["n"] == n]
        eps, its = grouped_mean([r["epsilon"] for r in sub], [r["iterations"] for r in sub])
        if len(eps) >= 3:
            f = fit_power_law(eps, its)
            fits.append(("iterations_vs_epsilon", n, f.a1, f.a2, *f.a2_ci))
    if len(camp.n) >= 3:
        reps = []
        for n in camp.n:
            sub = [r for r in rows if r["n"] == n and r["total_gates"] > 0]
            if sub:
                reps.append(_Point(n, float(np.mean([r["wall_seconds"] for r in sub])),
                                   float(np.mean([r["total_gates"] for r in sub]))))
        if len(reps) >= 3:
            for mode in (THEORY, FREE):
                proj = break_even_extrapolation(reps, mode=mode)
                fits.append((f"classical_seconds_vs_n_{mode}", "", proj.classical.a1, proj.classical.a2,
                             *proj.classical.a2_ci))
                fits.append((f"total_gates_vs_n_{mode}", "", proj.gates.a1, proj.gates.a2, *proj.gates.a2_ci))
                path = out_dir / f"projection_{mode}.csv"
                with atomic_path(path) as tmp:
                    proj.to_csv(tmp)
                outputs.append(path)
    path = out_dir / "fits.csv"
    _write_csv(path, ["quantity", "n", "a1", "a2", "a2_ci_low", "a2_ci_high"], fits)
    outputs.append(path)
    return rows, outputs


@dataclass
class _Point:
    n: int
    classical_wall_seconds: float
    total_gates: float


def campaign_dict(camp):
    return asdict(camp)
