"""
Classical emulation of Hamiltonian Updates on a quantum computer.

The quantum routine can only estimate trace products ``tr(A rho_H)`` and
the Gibbs diagonal to precision eps/4, and never sees F(H) directly. So the
branch tests use 3/4 eps, overshoots are detected against eps/4, and F is
tracked as a lower bound built from trace estimates along the step:

    F_new = F + sum_{j=1..J} (lam/J) * (est tr(rho_{H + j lam/J dH} dH) - eps/4).

The integrand ``t -> tr(rho_{H + t dH} dH)`` is the derivative of F along
the line and is non-increasing (F is concave), so right endpoints
under-estimate the integral and the sum is a valid lower bound.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .hu_core import (
    ADAPTIVE, COST, DIAG, MIN_STEP, Feasible, Infeasible, IterationCapReached,
    IterationLedger, IterationRecord, LEDGER_COLUMNS, SolverConfig, StepUnderflowError,
    _l2_diagonal, cost_direction, initial_state,
)
from .symlin import gibbs_state, max_norm

NONE = "none"
UNIFORM = "uniform"
ADVERSARIAL = "adversarial"
NOISE_KINDS = (NONE, UNIFORM, ADVERSARIAL)

# what the caller does with an estimate; sets the adversarial sign
VIOLATION = "violation"
OVERSHOOT = "overshoot"
FREE_ENERGY = "free_energy"
INTENTS = (VIOLATION, OVERSHOOT, FREE_ENERGY)

F_BOUND_TOL = 1e-9
MAX_HALVINGS = 3
QUANTUM_LEDGER_COLUMNS = LEDGER_COLUMNS + ("oracle_noise_kind", "F_bound", "F_exact")


@dataclass(frozen=True)
class NoiseModel:
    """Oracle error model. ``magnitude=None`` means eps/4 of the run."""

    kind: str = UNIFORM
    magnitude: float = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.magnitude is not None and self.magnitude < 0:
            raise ValueError("noise magnitude must be non-negative")


@dataclass(frozen=True)
class QuantumEmuConfig:
    base: SolverConfig = field(default_factory=SolverConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    J: int = 1

    def __post_init__(self):
        if self.J < 1:
            raise ValueError(f"J must be at least 1, got {self.J}")
        if self.base.step_mode != ADAPTIVE:
            raise ValueError("the emulated quantum routine uses adaptive steps")

    @property
    def magnitude(self):
        m = self.noise.magnitude
        return self.base.epsilon / 4.0 if m is None else m


class Oracle:
    """Finite-precision estimates of trace products and Gibbs diagonals.

    Keeps its own noise stream and the largest error it has produced, so
    callers can check the error budget after a run.
    """

    def __init__(self, noise, magnitude):
        self.noise = noise
        self.magnitude = float(magnitude)
        self._gen = rng.generator(noise.rng_seed, rng.NOISE)
        self.max_trace_error = 0.0
        self.max_diag_error = 0.0
        self.calls = 0

    def trace_product(self, rho, a, intent=VIOLATION):
        """Estimate of ``tr(A rho)``; deviation at most ``magnitude``."""
        if intent not in INTENTS:
            raise ValueError(f"unknown intent {intent!r}")
        exact = float(np.vdot(a, rho))
        kind = self.noise.kind
        if kind == NONE:
            err = 0.0
        elif kind == UNIFORM:
            err = float(self._gen.uniform(-self.magnitude, self.magnitude))
        else:
            # under-report violations, over-report everything that gates progress
            err = -self.magnitude if intent == VIOLATION else self.magnitude
        self.calls += 1
        self.max_trace_error = max(self.max_trace_error, abs(err))
        return exact + err

    def gibbs_diagonals(self, rho):
        """Estimate of ``diag(rho)`` with l1 error at most ``magnitude``."""
        d = np.diagonal(rho).copy()
        n = d.size
        kind = self.noise.kind
        if kind == NONE:
            err = np.zeros(n)
        elif kind == UNIFORM:
            err = self._gen.uniform(-self.magnitude, self.magnitude, size=n)
            mass = np.abs(err).sum()
            if mass > self.magnitude:
                err *= self.magnitude / mass
        else:
            dev = d - 1.0 / n
            mass = np.abs(dev).sum()
            if mass <= self.magnitude:
                err = -dev
            else:
                err = -dev * (self.magnitude / mass)
        self.calls += 1
        self.max_diag_error = max(self.max_diag_error, float(np.abs(err).sum()))
        return d + err


def noisy_trace_product(h, a, noise, epsilon, intent=VIOLATION):
    """One-shot ``tr(A rho_H)`` estimate; builds a fresh oracle from ``noise``."""
    mag = epsilon / 4.0 if noise.magnitude is None else noise.magnitude
    return Oracle(noise, mag).trace_product(gibbs_state(h).rho, a, intent)


def noisy_gibbs_diagonals(h, noise, epsilon):
    """One-shot estimate of the Gibbs diagonal of ``H``."""
    mag = epsilon / 4.0 if noise.magnitude is None else noise.magnitude
    return Oracle(noise, mag).gibbs_diagonals(gibbs_state(h).rho)


@dataclass
class QuantumLedger(IterationLedger):
    """Ledger with the free-energy bound next to the exact value."""

    noise_kind: str = NONE
    f_bound: list = field(default_factory=list)
    f_exact: list = field(default_factory=list)
    bound_violations: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)
    max_trace_error: float = 0.0
    max_diag_error: float = 0.0

    def to_csv(self, path, extra=None):
        cols = {
            "oracle_noise_kind": [self.noise_kind] * self.iterations,
            "F_bound": self.f_bound,
            "F_exact": self.f_exact,
            "fallbacks": self.fallbacks,
        }
        cols.update(extra or {})
        super().to_csv(path, extra=cols)


@dataclass
class QuantumUpdateResult:
    H: np.ndarray
    gibbs: object
    f_bound: float
    lambda_used: float
    lambda_new: float
    overshoots: int
    exponentials: int


class NoAdmissibleStep(RuntimeError):
    """The overshoot test rejected every step length tried."""

    def __init__(self, overshoots, exponentials):
        super().__init__(f"no admissible step after {overshoots} halvings")
        self.overshoots = overshoots
        self.exponentials = exponentials


def quantum_update(h, delta_h, f, lam, qconfig, oracle, max_halvings=None):
    """Step with estimate-based overshoot test and free-energy bound.

    Halves ``lam`` while the estimated ``tr(dH rho_new)`` is below eps/4,
    then adds the J-point right Riemann sum of the estimated slope minus
    eps/4 to the bound ``f``. Each segment has width ``lam/J``.

    Raises ``NoAdmissibleStep`` after ``max_halvings`` rejections
    (``None``: until the step underflows).
    """
    quarter = qconfig.base.epsilon / 4.0
    overshoots = 0
    exps = 1
    h_new = h + lam * delta_h
    g = gibbs_state(h_new)
    while oracle.trace_product(g.rho, delta_h, OVERSHOOT) < quarter:
        if max_halvings is not None and overshoots >= max_halvings:
            raise NoAdmissibleStep(overshoots, exps)
        lam *= qconfig.base.shrink_factor
        overshoots += 1
        if lam < MIN_STEP:
            raise StepUnderflowError(f"step length underflow after {overshoots} halvings")
        h_new = h + lam * delta_h
        g = gibbs_state(h_new)
        exps += 1
    J = qconfig.J
    total = 0.0
    for j in range(1, J + 1):
        if j == J:
            rho_j = g.rho
        else:
            rho_j = gibbs_state(h + (j * lam / J) * delta_h).rho
            exps += 1
        total += oracle.trace_product(rho_j, delta_h, FREE_ENERGY) - quarter
    f_new = f + (lam / J) * total
    return QuantumUpdateResult(h_new, g, f_new, lam, qconfig.base.growth_factor * lam,
                               overshoots, exps)


def _l1_diagonal(dev):
    s = np.sign(dev)
    return np.diag(s - s.sum() / s.size)


def quantum_hamiltonian_updates(c, gamma, qconfig, verify=True, callback=None,
                                max_halvings=MAX_HALVINGS):
    """Emulated quantum HU on threshold ``gamma``.

    Branch tests use estimates against 3/4 eps; a returned state is therefore
    eps-feasible whenever every estimate is within eps/4. The diagonal is
    estimated only when the cost constraint looks satisfied.

    With a rescaled cost direction, an l2 diagonal direction or momentum the
    slope ``tr(dH rho_H)`` may already be below eps/4 at zero step, and the
    overshoot loop would never accept. Each update therefore tries, in
    order: the configured direction, the same without momentum, and the unit
    direction (unscaled ``P_c`` or the l1 diagonal direction). The last one
    has exact slope above eps/2, so its estimate always clears eps/4. A level
    is skipped when its zero-step slope estimate is below eps/4 or it is
    rejected ``max_halvings`` times; ``fallbacks`` in the ledger counts
    levels skipped.

    ``verify`` records the exact free energy next to the bound after every
    step and logs any step where the bound exceeds it.
    """
    cfg = qconfig.base
    c_dense = c.dense() if hasattr(c, "dense") else np.asarray(c, dtype=np.float64)
    n = c_dense.shape[0]
    eps = cfg.epsilon
    thresh = 0.75 * eps
    quarter = 0.25 * eps
    p_c = cost_direction(c_dense, gamma)
    cap = cfg.iteration_cap(n)
    oracle = Oracle(qconfig.noise, qconfig.magnitude)
    state = initial_state(n, cfg)
    ledger = QuantumLedger(noise_kind=qconfig.noise.kind)
    state.ledger = ledger
    f_bound = -math.log(n)

    def finish(outcome):
        ledger.max_trace_error = oracle.max_trace_error
        ledger.max_diag_error = oracle.max_diag_error
        return outcome

    while f_bound <= 0.0:
        t0 = time.perf_counter()
        rho = state.rho
        cost_est = oracle.trace_product(rho, p_c, VIOLATION)
        diag_est = float("nan")
        if cost_est > thresh:
            kind = COST
            p = cost_est * p_c if cfg.scale_cost else p_c
            unit = p_c
        else:
            dev = oracle.gibbs_diagonals(rho) - 1.0 / n
            diag_est = float(np.abs(dev).sum())
            if diag_est <= thresh:
                return finish(Feasible(rho=rho, H=state.H, ledger=ledger, free_energy=f_bound))
            kind = DIAG
            unit = _l1_diagonal(dev)
            p = np.diag(_l2_diagonal(dev)) if cfg.diag_norm == "l2" else unit

        if state.iteration >= cap:
            return finish(IterationCapReached(ledger=ledger, H=state.H, rho=rho))

        h_max = max_norm(state.H)
        lam_kind = state.lambda_c if kind == COST else state.lambda_d
        candidates = []
        if cfg.beta and state.iteration:
            candidates.append(p + (cfg.beta / lam_kind) * state.M)
        candidates.append(p)
        if p is not unit:
            candidates.append(unit)

        res = None
        skipped = 0
        for level, delta_h in enumerate(candidates):
            last = level == len(candidates) - 1
            if not last and oracle.trace_product(rho, delta_h, OVERSHOOT) < quarter:
                skipped += 1
                continue
            try:
                res = quantum_update(state.H, delta_h, f_bound, lam_kind, qconfig, oracle,
                                     max_halvings=None if last else max_halvings)
                break
            except NoAdmissibleStep as exc:
                ledger.matrix_exponentials += exc.exponentials
                skipped += 1
        ledger.fallbacks.append(skipped)
        ledger.matrix_exponentials += res.exponentials
        if kind == COST:
            state.lambda_c = res.lambda_new
        else:
            state.lambda_d = res.lambda_new
        state.M = res.lambda_new * delta_h

        state.H = res.H
        state.rho = res.gibbs.rho
        state.F = res.gibbs.free_energy
        f_bound = res.f_bound
        state.iteration += 1
        ledger.records.append(IterationRecord(
            iteration=state.iteration, kind=kind, lam=res.lambda_used,
            overshoots=res.overshoots, cost_violation=cost_est,
            diag_violation=diag_est, free_energy=f_bound, h_max_norm=h_max,
            wall_seconds=time.perf_counter() - t0,
        ))
        ledger.f_bound.append(f_bound)
        if verify:
            ledger.f_exact.append(state.F)
            if f_bound > state.F + F_BOUND_TOL:
                ledger.bound_violations.append((state.iteration, f_bound, state.F))
        else:
            ledger.f_exact.append(float("nan"))
        if callback is not None:
            callback(state)

    return finish(Infeasible(free_energy=f_bound, ledger=ledger, H=state.H))
