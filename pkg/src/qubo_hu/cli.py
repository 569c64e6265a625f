"""
Command-line front end.

    qubo-hu gen --n 128 --s 16 --seed 1
    qubo-hu solve --instance inst.txt --epsilon 0.01 --beta 0.45
    qubo-hu round --hamiltonian H.bin --instance inst.txt --trials 100000
    qubo-hu estimate --ledger ledger.csv --instance inst.txt
    qubo-hu bench --spec campaign.txt --workers 1
    qubo-hu replay --manifest out/manifest.json

Every command writes ``manifest.json`` to its output directory. Exit status
of ``solve``: 0 feasible or search complete, 2 infeasibility certificate,
3 iteration cap reached. Errors exit with 1.
"""
import argparse
import csv
import logging
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .artifacts import (
    RunManifest, atomic_path, atomic_write_text, content_hash, default_out_dir,
    read_hamiltonian, write_hamiltonian,
)
from .bench import parse_campaign, run_campaign
from .hu_core import ADAPTIVE, THEORETICAL, SolverConfig, hamiltonian_updates, is_feasible, read_ledger_csv
from .instances import InstanceSeedSpec, generate_instance, load_matrix, store_instance
from .qcost import DEFAULT_BITS, iteration_resources
from .qemu import NOISE_KINDS, NoiseModel, QuantumEmuConfig, quantum_hamiltonian_updates
from .rounding import correct_solution, randomized_round
from .search import SearchAborted, binary_search
from .symlin import gibbs_state

log = logging.getLogger("qubo_hu")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_CAP = 3

CLASSICAL = "classical"
QUANTUM = "quantum-emulated"
MODES = (CLASSICAL, QUANTUM, THEORETICAL)


class Phases:
    def __init__(self):
        self.seconds = {}

    def run(self, name, func, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - t0


def _out_dir(args, default_name):
    out = Path(args.out_dir) if args.out_dir else default_out_dir() / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _kv_text(d):
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n" for k, v in d.items())


def _params(args):
    skip = {"func", "verbose"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}


# --- gen ---------------------------------------------------------------------

def cmd_gen(args, argv):
    spec = InstanceSeedSpec(args.n, args.s, args.seed)
    phases = Phases()
    c = phases.run("generate", generate_instance, spec)
    out = Path(args.out) if args.out else default_out_dir() / f"inst_n{args.n}_s{args.s}_seed{args.seed}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    with atomic_path(out) as tmp:
        phases.run("write", store_instance, c, tmp)
        tmp.with_name(tmp.name + ".meta").replace(out.with_name(out.name + ".meta"))
    man = RunManifest("gen", argv, _params(args), seeds={"instance": args.seed}, phase_seconds=phases.seconds)
    man.add_output(out, "instance")
    man.add_output(out.with_name(out.name + ".meta"), "metadata")
    man.write(out.with_name(out.name + ".manifest.json"))
    print(out)
    return EXIT_OK


# --- solve -------------------------------------------------------------------

def _solver_config(args):
    step = THEORETICAL if args.mode == THEORETICAL else ADAPTIVE
    return SolverConfig(epsilon=args.epsilon, beta=args.beta, step_mode=step,
                        diag_norm=args.diag_norm, scale_cost=not args.no_scale_cost,
                        max_iterations=args.max_iterations)


def _print_iteration(state):
    r = state.ledger.records[-1]
    print(f"it={r.iteration} kind={r.kind} lambda={r.lam:.4g} overshoots={r.overshoots} "
          f"F={r.free_energy:.6g}", file=sys.stderr)


def _probe_fn(args, cfg):
    verbose_cb = _print_iteration if args.verbose else None
    if args.mode == QUANTUM:
        qcfg = QuantumEmuConfig(cfg, NoiseModel(args.noise, rng_seed=args.noise_seed), J=args.J)
        return lambda c, gamma: quantum_hamiltonian_updates(c, gamma, qcfg, callback=verbose_cb)
    return lambda c, gamma: hamiltonian_updates(c, gamma, cfg, callback=verbose_cb)


def _write_ledger(outcome, path, probe_index=None):
    extra = {}
    if probe_index is not None:
        extra["probe"] = [probe_index] * outcome.ledger.iterations
    with atomic_path(path) as tmp:
        outcome.ledger.to_csv(tmp, extra=extra)


def _write_search_ledger(result, path):
    """All probes' ledgers in one CSV with a leading probe column."""
    rows, header = [], None
    with tempfile.TemporaryDirectory() as td:
        for k, p in enumerate(result.probes):
            part = Path(td) / f"{k}.csv"
            p.outcome.ledger.to_csv(part, extra={"probe": [k] * p.outcome.ledger.iterations})
            with open(part, newline="") as fh:
                r = list(csv.reader(fh))
            header = header or r[0]
            rows.extend(r[1:])
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            if header:
                w.writerow(header)
            w.writerows(rows)


def cmd_solve(args, argv):
    inst = Path(args.instance)
    phases = Phases()
    c = phases.run("load", load_matrix, inst)
    out = _out_dir(args, f"solve_{inst.stem}")
    cfg = _solver_config(args)
    if args.mode == QUANTUM and cfg.step_mode != ADAPTIVE:
        raise ValueError("quantum-emulated mode uses adaptive steps")
    probe = _probe_fn(args, cfg)
    man = RunManifest("solve", argv, _params(args), seeds={"noise": args.noise_seed})
    man.add_input(inst)
    summary = {"mode": args.mode, "epsilon": cfg.epsilon, "beta": cfg.beta}
    outputs = []

    if args.gamma is not None:
        outcome = phases.run("solve", probe, c, args.gamma)
        path = out / "ledger.csv"
        _write_ledger(outcome, path)
        outputs.append(path)
        summary.update(gamma=args.gamma, outcome=outcome.status,
                       iterations=outcome.ledger.iterations,
                       matrix_exponentials=outcome.ledger.matrix_exponentials,
                       wall_seconds=outcome.ledger.wall_seconds)
        if outcome.status == "feasible":
            summary["exact_recheck"] = is_feasible(c.dense(), args.gamma, outcome.rho, cfg.epsilon)
        if hasattr(outcome, "free_energy"):
            summary["free_energy"] = outcome.free_energy
        code = {"feasible": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "cap": EXIT_CAP}[outcome.status]
        h = outcome.H
    else:
        gap = args.gap if args.gap is not None else cfg.epsilon
        try:
            result = phases.run("search", binary_search, c, cfg, gap=gap, probe=probe)
            code = EXIT_OK
        except SearchAborted as exc:
            result = exc.partial
            code = EXIT_CAP
        path = out / "search_trace.csv"
        with atomic_path(path) as tmp:
            result.to_csv(tmp)
        outputs.append(path)
        path = out / "ledger.csv"
        _write_search_ledger(result, path)
        outputs.append(path)
        summary.update(outcome="complete" if code == EXIT_OK else "cap", gap=gap,
                       gamma_lo=result.gamma_lo, gamma_hi=result.gamma_hi,
                       probes=len(result.probes), iterations=result.iterations,
                       matrix_exponentials=result.matrix_exponentials,
                       wall_seconds=result.wall_seconds)
        h = result.H_star
    if h is not None:
        path = out / "H.bin"
        write_hamiltonian(h, path)
        outputs.append(path)
    path = out / "outcome.txt"
    atomic_write_text(path, _kv_text(summary))
    outputs.append(path)
    for p in outputs:
        man.add_output(p)
    man.phase_seconds = phases.seconds
    man.exit_code = code
    man.write(out / "manifest.json")
    print(_kv_text(summary), end="")
    return code


# --- round -------------------------------------------------------------------

def cmd_round(args, argv):
    inst = Path(args.instance)
    phases = Phases()
    c = phases.run("load", load_matrix, inst)
    h = phases.run("load", read_hamiltonian, args.hamiltonian)
    out = _out_dir(args, f"round_{inst.stem}")
    if h.shape[0] != c.n:
        raise ValueError(f"Hamiltonian has n={h.shape[0]} but instance has n={c.n}")
    rho = gibbs_state(h).rho
    man = RunManifest("round", argv, _params(args), seeds={"rounding": args.seed})
    man.add_input(inst)
    man.add_input(args.hamiltonian)
    rep = phases.run("round", randomized_round, rho, c, args.trials, args.seed,
                     batch_size=args.batch_size, correct_first=args.correct_first,
                     epsilon=args.epsilon)
    csv_path, sum_path = out / "rounding.csv", out / "rounding_summary.txt"
    with atomic_path(csv_path) as tmp:
        rep.to_csv(tmp)
    summary = rep.summary()
    if args.correct_first:
        cr = correct_solution(rho, args.epsilon)
        summary["correction_trace_distance"] = cr.trace_distance
        summary["correction_large_set"] = len(cr.large_deviation_set)
    atomic_write_text(sum_path, _kv_text(summary))
    man.add_output(csv_path)
    man.add_output(sum_path)
    man.phase_seconds = phases.seconds
    man.write(out / "manifest.json")
    print(_kv_text(summary), end="")
    return EXIT_OK


# --- estimate ------------------------------------------------------------------

def cmd_estimate(args, argv):
    inst = Path(args.instance)
    c = load_matrix(inst)
    records = read_ledger_csv(args.ledger)
    out = _out_dir(args, f"estimate_{inst.stem}")
    if records and "h_max_norm" not in records[0]:
        raise ValueError(f"{args.ledger}: ledger has no h_max_norm column")
    s = args.s if args.s is not None else int(c.metadata.get("s", c.sparsity))
    rep = iteration_resources(records, c.n, s, args.epsilon, b=args.bits, wall_seconds=args.wall_seconds)
    man = RunManifest("estimate", argv, _params(args))
    man.add_input(inst)
    man.add_input(args.ledger)
    csv_path, sum_path = out / "resources.csv", out / "resources.txt"
    with atomic_path(csv_path) as tmp:
        rep.to_csv(tmp)
    with atomic_path(sum_path) as tmp:
        rep.write_summary(tmp)
    man.add_output(csv_path)
    man.add_output(sum_path)
    man.write(out / "manifest.json")
    print(_kv_text(rep.summary()), end="")
    return EXIT_OK


# --- bench -------------------------------------------------------------------

def cmd_bench(args, argv):
    spec_path = Path(args.spec)
    camp = parse_campaign(spec_path.read_text(encoding="utf-8"), source=str(spec_path))
    out = _out_dir(args, f"bench_{camp.name}")
    phases = Phases()
    rows, outputs = phases.run("campaign", run_campaign, camp, out, workers=args.workers,
                               log=(lambda m: print(m, file=sys.stderr)) if args.verbose else None)
    man = RunManifest("bench", argv, _params(args),
                      seeds={"instance": [camp.seed + r for r in range(camp.repetitions)]})
    man.add_input(spec_path)
    for p in outputs:
        man.add_output(p)
    man.phase_seconds = phases.seconds
    man.write(out / "manifest.json")
    for p in outputs:
        print(p)
    return EXIT_OK


# --- replay ------------------------------------------------------------------

def cmd_replay(args, argv):
    """Rerun a manifest's command into a fresh directory and compare outputs."""
    man = RunManifest.read(args.manifest)
    old = list(man.argv)
    if "--out-dir" in old:
        k = old.index("--out-dir")
        del old[k:k + 2]
    if "--out" in old:
        k = old.index("--out")
        del old[k:k + 2]
    target = Path(args.out_dir) if args.out_dir else Path(tempfile.mkdtemp(prefix="replay_"))
    target.mkdir(parents=True, exist_ok=True)
    if man.command == "gen":
        new_argv = old + ["--out", str(target / "instance.txt")]
    else:
        new_argv = old + ["--out-dir", str(target)]
    code = main(new_argv)
    if code != man.exit_code:
        print(f"exit code {code} differs from recorded {man.exit_code}")
        return EXIT_ERROR
    mismatches = []
    gen_names = {"instance": "instance.txt", "metadata": "instance.txt.meta"}
    for name, digest in man.outputs.items():
        path = target / (gen_names[name] if man.command == "gen" else name)
        if not path.exists() or content_hash(path) != digest:
            mismatches.append(name)
    if mismatches:
        print("replay mismatch: " + ", ".join(mismatches))
        return EXIT_ERROR
    print(f"replay reproduced {len(man.outputs)} outputs in {target}")
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def _positive_int(v):
    k = int(v)
    if k < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return k


def build_parser():
    p = argparse.ArgumentParser(prog="qubo-hu", description="Hamiltonian Updates for QUBO SDP relaxations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random block instance")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--s", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="instance path (default under $QUBO_HU_OUT)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="feasibility probe or binary search")
    s.add_argument("--instance", required=True)
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--beta", type=float, default=0.45)
    s.add_argument("--gamma", type=float, help="single probe at this threshold")
    s.add_argument("--gap", type=float, help="bisection gap (default epsilon)")
    s.add_argument("--mode", choices=MODES, default=CLASSICAL)
    s.add_argument("--diag-norm", choices=("l1", "l2"))
    s.add_argument("--no-scale-cost", action="store_true")
    s.add_argument("--max-iterations", type=_positive_int)
    s.add_argument("--noise", choices=NOISE_KINDS, default="uniform")
    s.add_argument("--noise-seed", type=int, default=0)
    s.add_argument("--J", type=_positive_int, default=1)
    s.add_argument("--out-dir")
    s.add_argument("--verbose", action="store_true", help="one line per iteration on stderr")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("round", help="randomized rounding of a stored Hamiltonian")
    r.add_argument("--hamiltonian", required=True)
    r.add_argument("--instance", required=True)
    r.add_argument("--trials", type=_positive_int, default=100000)
    r.add_argument("--batch-size", type=_positive_int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--correct-first", action="store_true")
    r.add_argument("--epsilon", type=float, default=0.01)
    r.add_argument("--out-dir")
    r.set_defaults(func=cmd_round)

    e = sub.add_parser("estimate", help="quantum resource estimate from a ledger")
    e.add_argument("--ledger", required=True)
    e.add_argument("--instance", required=True)
    e.add_argument("--epsilon", type=float, default=0.01)
    e.add_argument("--bits", type=_positive_int, default=DEFAULT_BITS)
    e.add_argument("--s", type=_positive_int, help="sparsity (default: generation s or measured)")
    e.add_argument("--wall-seconds", type=float)
    e.add_argument("--out-dir")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="run a benchmark campaign")
    b.add_argument("--spec", required=True)
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--out-dir")
    b.add_argument("--verbose", action="store_true")
    b.set_defaults(func=cmd_bench)

    rp = sub.add_parser("replay", help="rerun a manifest and compare outputs")
    rp.add_argument("--manifest", required=True)
    rp.add_argument("--out-dir")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args, argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
