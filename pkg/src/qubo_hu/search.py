"""Binary search over the objective threshold gamma in [-1, 1]."""
import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .hu_core import SolverConfig, hamiltonian_updates, is_feasible


class SearchAborted(RuntimeError):
    """A probe hit its iteration cap; ``partial`` holds the search so far."""

    def __init__(self, partial):
        super().__init__(
            f"probe at gamma={partial.probes[-1].gamma:.6g} reached the iteration cap; "
            f"bracket [{partial.gamma_lo:.6g}, {partial.gamma_hi:.6g}]"
        )
        self.partial = partial


@dataclass
class Probe:
    gamma: float
    status: str
    iterations: int
    matrix_exponentials: int
    wall_seconds: float
    free_energy: float
    outcome: object = field(repr=False, default=None)


@dataclass
class SearchResult:
    """Outcome of a bisection.

    ``gamma_lo`` is the largest threshold with an epsilon-feasible state
    (``rho_star``); ``gamma_hi`` the smallest refuted one. Both ends are
    reported because the exact optimum can be anywhere within
    ``epsilon + gap`` of ``gamma_lo``.
    """

    gamma_lo: float
    gamma_hi: float
    rho_star: np.ndarray
    H_star: np.ndarray
    probes: list
    epsilon: float
    gap: float

    @property
    def gamma_star(self):
        return self.gamma_lo

    @property
    def bracket(self):
        return self.gamma_lo, self.gamma_hi

    @property
    def iterations(self):
        return sum(p.iterations for p in self.probes)

    @property
    def matrix_exponentials(self):
        return sum(p.matrix_exponentials for p in self.probes)

    @property
    def wall_seconds(self):
        return sum(p.wall_seconds for p in self.probes)

    def records(self):
        """All ledger records of all probes, in probe order."""
        out = []
        for p in self.probes:
            out.extend(p.outcome.ledger.records)
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["probe", "gamma", "outcome", "iterations", "matrix_exponentials", "wall_seconds"])
            for k, p in enumerate(self.probes):
                w.writerow([k, repr(p.gamma), p.status, p.iterations, p.matrix_exponentials, repr(p.wall_seconds)])


def max_midpoint_probes(gap):
    return max(0, math.ceil(math.log2(2.0 / gap)))


def binary_search(c, config, gap=None, probe=None):
    """Bisect ``[-1, 1]`` for the largest epsilon-feasible threshold.

    ``probe(c, gamma)`` defaults to ``hamiltonian_updates`` with ``config``;
    each probe starts from H = 0. The first probe is at gamma = -1, which is
    feasible at once for zero-diagonal C and supplies the initial state.
    """
    gap = config.epsilon if gap is None else gap
    if gap <= 0:
        raise ValueError(f"gap must be positive, got {gap}")
    if probe is None:
        def probe(cm, gamma):
            return hamiltonian_updates(cm, gamma, config)
    c_dense = c.dense()

    probes = []
    result = SearchResult(-1.0, 1.0, None, None, probes, config.epsilon, gap)

    def run(gamma):
        t0 = time.perf_counter()
        out = probe(c, gamma)
        wall = time.perf_counter() - t0
        fe = out.free_energy if hasattr(out, "free_energy") else float("nan")
        probes.append(Probe(gamma, out.status, out.ledger.iterations,
                            out.ledger.matrix_exponentials, wall, fe, out))
        if out.status == "cap":
            raise SearchAborted(result)
        if out.status == "feasible" and not is_feasible(c_dense, gamma, out.rho, config.epsilon):
            raise AssertionError(f"probe at gamma={gamma} returned a state failing the exact re-check")
        return out

    out = run(-1.0)
    if out.status != "feasible":
        raise ValueError("gamma = -1 was refuted; C must be normalized with zero trace")
    result.rho_star, result.H_star = out.rho, out.H

    while result.gamma_hi - result.gamma_lo > gap:
        mid = 0.5 * (result.gamma_lo + result.gamma_hi)
        out = run(mid)
        if out.status == "feasible":
            result.gamma_lo = mid
            result.rho_star, result.H_star = out.rho, out.H
        else:
            result.gamma_hi = mid
    return result


def reference_search(c, config, factor=10.0):
    """High-precision stand-in for an external SDP solver.

    Runs the bisection with epsilon and gap both divided by ``factor``. Its
    ``gamma_lo`` is used as the reference optimum and its ``rho_star`` as the
    reference solution.
    """
    eps = config.epsilon / factor
    ref = SolverConfig(**{**config.as_dict(), "epsilon": eps, "max_iterations": None})
    return binary_search(c, ref, gap=eps)
