"""
Hamiltonian Updates for the feasibility version of the QUBO SDP relaxation.

Given a normalized cost matrix C and a threshold gamma, look for a Gibbs
state rho = exp(-H)/tr exp(-H) with

    gamma - tr(C rho) <= eps      and      sum_i |rho_ii - 1/n| <= eps,

by repeatedly adding penalty directions to H. The free energy
F(H) = -ln tr exp(-H) starts at -ln(n) and stays <= 0 while a feasible point
exists, so F > 0 certifies infeasibility.

Two step modes are provided:

* ``adaptive``: per-constraint step lengths that grow by ``growth_factor``
  after each update and are halved on overshoot, an l2 diagonal direction,
  a cost direction rescaled by its violation, and momentum.
* ``theoretical``: the fixed rule ``lambda = (1-beta)^2/2 * tr(rho dH)`` with
  the l1 diagonal direction and unscaled cost direction. It comes with the
  iteration bound of ``a_priori_bound``.
"""
import csv
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .symlin import gibbs_state, max_norm

COST = "cost"
DIAG = "diag"
ADAPTIVE = "adaptive"
THEORETICAL = "theoretical"

MIN_STEP = 1e-300


class StepUnderflowError(RuntimeError):
    """The overshoot loop halved the step below ``MIN_STEP``."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one HU run.

    ``diag_norm`` defaults to ``"l2"`` in adaptive mode and ``"l1"`` in
    theoretical mode. ``max_iterations=None`` means ten times the a-priori
    bound for the instance dimension.
    """

    epsilon: float = 0.01
    beta: float = 0.45
    lambda_c0: float = 1.0
    lambda_d0: float = 1.0
    step_mode: str = ADAPTIVE
    diag_norm: str = None
    scale_cost: bool = True
    max_iterations: int = None
    growth_factor: float = 1.3
    shrink_factor: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2], got {self.epsilon}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.lambda_c0 <= 0 or self.lambda_d0 <= 0:
            raise ValueError("initial step lengths must be positive")
        if self.step_mode not in (ADAPTIVE, THEORETICAL):
            raise ValueError(f"unknown step mode {self.step_mode!r}")
        if self.diag_norm is None:
            object.__setattr__(self, "diag_norm", "l1" if self.step_mode == THEORETICAL else "l2")
        if self.diag_norm not in ("l1", "l2"):
            raise ValueError(f"diag_norm must be 'l1' or 'l2', got {self.diag_norm!r}")
        if self.step_mode == THEORETICAL and self.diag_norm != "l1":
            raise ValueError("theoretical step mode requires the l1 diagonal direction")
        if not (self.growth_factor >= 1.0 and 0.0 < self.shrink_factor < 1.0):
            raise ValueError("need growth_factor >= 1 and 0 < shrink_factor < 1")

    def iteration_cap(self, n):
        if self.max_iterations is not None:
            return self.max_iterations
        return 10 * a_priori_bound(max(n, 2), self.epsilon, self.beta)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class IterationRecord:
    iteration: int
    kind: str
    lam: float
    overshoots: int
    cost_violation: float
    diag_violation: float
    free_energy: float
    h_max_norm: float
    wall_seconds: float


LEDGER_COLUMNS = (
    "iteration", "kind", "lambda", "overshoots", "cost_violation",
    "diag_violation", "free_energy", "h_max_norm", "wall_seconds",
)


@dataclass
class IterationLedger:
    """Per-update records plus matrix-exponential bookkeeping.

    ``cost_violation``/``diag_violation``/``h_max_norm`` describe the state the
    update started from; ``free_energy`` is the value after the update.
    """

    records: list = field(default_factory=list)
    matrix_exponentials: int = 0

    @property
    def iterations(self):
        return len(self.records)

    @property
    def overshoots(self):
        return sum(r.overshoots for r in self.records)

    @property
    def wall_seconds(self):
        return sum(r.wall_seconds for r in self.records)

    def count(self, kind):
        return sum(1 for r in self.records if r.kind == kind)

    def rows(self):
        for r in self.records:
            yield (r.iteration, r.kind, r.lam, r.overshoots, r.cost_violation,
                   r.diag_violation, r.free_energy, r.h_max_norm, r.wall_seconds)

    def to_csv(self, path, extra=None):
        """Write the ledger; ``extra`` maps column name -> per-record values."""
        extra = extra or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LEDGER_COLUMNS + tuple(extra))
            for k, row in enumerate(self.rows()):
                w.writerow([_fmt(v) for v in row] + [_fmt(vals[k]) for vals in extra.values()])


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def read_ledger_csv(path):
    """Load a ledger CSV as a list of dicts with numeric fields converted."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if k == "kind" or k == "oracle_noise_kind":
                    rec[k] = v
                elif v == "":
                    rec[k] = None
                else:
                    rec[k] = float(v)
            out.append(rec)
    return out


@dataclass
class Feasible:
    rho: np.ndarray
    H: np.ndarray
    ledger: IterationLedger
    free_energy: float
    status = "feasible"


@dataclass
class Infeasible:
    free_energy: float
    ledger: IterationLedger
    H: np.ndarray
    status = "infeasible"


@dataclass
class IterationCapReached:
    ledger: IterationLedger
    H: np.ndarray
    rho: np.ndarray
    status = "cap"


@dataclass
class HUState:
    H: np.ndarray
    rho: np.ndarray
    F: float
    M: np.ndarray
    lambda_c: float
    lambda_d: float
    iteration: int = 0
    ledger: IterationLedger = field(default_factory=IterationLedger)
    last_lambda: float = 0.0


# --- directions -------------------------------------------------------------

def cost_direction(c, gamma):
    """``P_c = gamma * I - C`` as a dense array."""
    c = c.dense() if hasattr(c, "dense") else np.asarray(c, dtype=np.float64)
    return gamma * np.eye(c.shape[0]) - c


def diag_deviation(rho):
    d = np.diagonal(rho).copy()
    return d - 1.0 / d.size


def diag_violation(rho):
    return float(np.abs(diag_deviation(rho)).sum())


def diag_direction_l1(rho):
    """``sgn(diag(rho) - 1/n) - tr(sgn(...))/n * I`` with ``sgn(0) = 0``."""
    s = np.sign(diag_deviation(rho))
    return np.diag(s - s.sum() / s.size)


def diag_direction_l2(rho):
    """``(diag(rho) - 1/n) / max_i |rho_ii - 1/n|``."""
    return np.diag(_l2_diagonal(diag_deviation(rho)))


def _l2_diagonal(dev):
    peak = np.max(np.abs(dev))
    if peak == 0.0:
        raise ValueError("diagonal is exactly 1/n; no diagonal update is needed")
    return dev / peak


def theoretical_step(rho, delta_h, beta):
    """``(1-beta)^2/2 * tr(rho dH)``."""
    return 0.5 * (1.0 - beta) ** 2 * float(np.vdot(rho, delta_h))


def a_priori_bound(n, epsilon, beta):
    """``ceil(16 (1-beta)^-6 eps^-2 ln n)`` iterations."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    return math.ceil(16.0 * (1.0 - beta) ** -6 * epsilon ** -2 * math.log(n))


# --- update step ------------------------------------------------------------

@dataclass
class UpdateResult:
    H: np.ndarray
    gibbs: object
    lambda_used: float
    lambda_new: float
    overshoots: int


def update(h, delta_h, lam, config, floor=0.0):
    """Add ``lam * delta_h`` to ``h``, halving ``lam`` while the update overshoots.

    An overshoot means ``tr(delta_h rho_new) < floor``. One Gibbs state is
    computed per candidate step. The returned ``lambda_new`` is the accepted
    step times ``config.growth_factor``.
    """
    overshoots = 0
    h_new = h + lam * delta_h
    g = gibbs_state(h_new)
    while float(np.vdot(delta_h, g.rho)) < floor:
        lam *= config.shrink_factor
        overshoots += 1
        if lam < MIN_STEP:
            raise StepUnderflowError(f"step length underflow after {overshoots} halvings")
        h_new = h + lam * delta_h
        g = gibbs_state(h_new)
    return UpdateResult(h_new, g, lam, config.growth_factor * lam, overshoots)


# --- main loop --------------------------------------------------------------

def initial_state(n, config):
    return HUState(
        H=np.zeros((n, n)),
        rho=np.eye(n) / n,
        F=-math.log(n),
        M=np.zeros((n, n)),
        lambda_c=config.lambda_c0,
        lambda_d=config.lambda_d0,
    )


def is_feasible(c_dense, gamma, rho, epsilon):
    """Exact check of both epsilon-constraints for ``rho``."""
    return (gamma - float(np.vdot(c_dense, rho)) <= epsilon
            and diag_violation(rho) <= epsilon)


def hamiltonian_updates(c, gamma, config, callback=None, threshold=None, overshoot_floor=0.0):
    """Run HU on threshold ``gamma``.

    Returns ``Feasible``, ``Infeasible`` (free energy became positive) or
    ``IterationCapReached``. ``threshold`` overrides the constraint tolerance
    used in the branch tests (default ``config.epsilon``) and
    ``overshoot_floor`` the overshoot test; both exist so the emulated quantum
    variant can be compared against an exact run with the same margins.
    ``callback(state)`` is called after every update.
    """
    c_dense = c.dense() if hasattr(c, "dense") else np.asarray(c, dtype=np.float64)
    n = c_dense.shape[0]
    eps = config.epsilon if threshold is None else threshold
    p_c = cost_direction(c_dense, gamma)
    theoretical = config.step_mode == THEORETICAL
    cap = config.iteration_cap(n)
    state = initial_state(n, config)
    ledger = state.ledger

    while state.F <= 0.0:
        t0 = time.perf_counter()
        rho = state.rho
        cost_viol = gamma - float(np.vdot(c_dense, rho))
        dev = diag_deviation(rho)
        diag_viol = float(np.abs(dev).sum())
        if cost_viol > eps:
            kind = COST
            p = cost_viol * p_c if (config.scale_cost and not theoretical) else p_c
        elif diag_viol > eps:
            kind = DIAG
            if config.diag_norm == "l2":
                p = np.diag(_l2_diagonal(dev))
            else:
                p = diag_direction_l1(rho)
        else:
            return Feasible(rho=rho, H=state.H, ledger=ledger, free_energy=state.F)

        if state.iteration >= cap:
            return IterationCapReached(ledger=ledger, H=state.H, rho=rho)

        h_max = max_norm(state.H)
        if theoretical:
            delta_h = p
            if config.beta and state.last_lambda > 0:
                delta_h = p + (config.beta / state.last_lambda) * state.M
            lam = theoretical_step(rho, delta_h, config.beta)
            res = _theoretical_update(state.H, delta_h, lam)
            ledger.matrix_exponentials += 1
            state.M = res.lambda_used * delta_h
            state.last_lambda = res.lambda_used
        else:
            lam_kind = state.lambda_c if kind == COST else state.lambda_d
            delta_h = p
            if config.beta:
                delta_h = p + (config.beta / lam_kind) * state.M
            res = update(state.H, delta_h, lam_kind, config, floor=overshoot_floor)
            ledger.matrix_exponentials += 1 + res.overshoots
            if kind == COST:
                state.lambda_c = res.lambda_new
            else:
                state.lambda_d = res.lambda_new
            state.M = res.lambda_new * delta_h

        state.H = res.H
        state.rho = res.gibbs.rho
        state.F = res.gibbs.free_energy
        state.iteration += 1
        ledger.records.append(IterationRecord(
            iteration=state.iteration, kind=kind, lam=res.lambda_used,
            overshoots=res.overshoots, cost_violation=cost_viol,
            diag_violation=diag_viol, free_energy=state.F, h_max_norm=h_max,
            wall_seconds=time.perf_counter() - t0,
        ))
        if callback is not None:
            callback(state)

    return Infeasible(free_energy=state.F, ledger=ledger, H=state.H)


def _theoretical_update(h, delta_h, lam):
    h_new = h + lam * delta_h
    g = gibbs_state(h_new)
    slope = float(np.vdot(delta_h, g.rho))
    if slope < -1e-12 * max(1.0, float(np.abs(delta_h).max())):
        raise RuntimeError(f"theoretical step overshot: tr(dH rho_new) = {slope:.3e}")
    return UpdateResult(h_new, g, lam, lam, 0)
