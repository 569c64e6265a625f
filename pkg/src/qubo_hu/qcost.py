"""
Resource estimates for the quantum variant of Hamiltonian Updates.

Only diagonal updates are charged: each needs enough Gibbs-state samples to
estimate the diagonal to l1 precision eps/4, and every sample costs one Gibbs
preparation. Cost updates, lambda_min estimation and everything else are
counted as free, so the totals are optimistic for the quantum side.
Break-even gate time is classical wall time divided by total gate count.
"""
import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .hu_core import DIAG
from .symlin import eigh

DEFAULT_BITS = 8
H_PLUS_RATIO = 2.0
SECONDS_PER_YEAR = 365.25 * 24 * 3600.0
GATE_TIME_RECORD = 6.5e-9

# per-iteration cost exponents in n: dense eigendecomposition vs Gibbs sampling
THEORY_CLASSICAL_EXPONENT = 3.0
THEORY_QUANTUM_EXPONENT = 1.5


class OutOfRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GateCostInput:
    n: int
    s: int
    epsilon: float
    h_plus_max_norm: float
    b: int = DEFAULT_BITS
    h_max_norm: float = None

    def __post_init__(self):
        if self.n < 1 or self.s < 1 or self.b < 1:
            raise ValueError("n, s and b must be positive")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.h_plus_max_norm < 0:
            raise ValueError("||H+||_max must be non-negative")


def gate_prefactor(b, n):
    """Two-qubit gates per block-encoding query, ``32 b + 32 log2(n) - 18``."""
    return 32.0 * b + 32.0 * math.log2(n) - 18.0


def gates_per_gibbs_prep(inp):
    """Two-qubit gates for one Gibbs-state preparation.

    ``(32b + 32 log2 n - 18) (4.5 ln(7.8/eps) sqrt(n) s ||H+||_max - 1)``,
    floored at zero.
    """
    queries = 4.5 * math.log(7.8 / inp.epsilon) * math.sqrt(inp.n) * inp.s * inp.h_plus_max_norm - 1.0
    return max(0.0, gate_prefactor(inp.b, inp.n) * queries)


def samples_per_diag_estimate(n, epsilon):
    """Gibbs preparations for an eps/4 estimate of the diagonal: ``128 ln2 eps^-2 n``."""
    if epsilon > 0.25:
        warnings.warn(f"epsilon={epsilon} > 1/4 is outside the estimate's regime", OutOfRegimeWarning)
    return 128.0 * math.log(2.0) * epsilon ** -2 * n


def samples_with_confidence(n, epsilon, p=None, constant=137.0, assume_log_inv_p=False):
    """Poisson-mean sample count ``c eps^-2 (n ln2 + ln(1/p))``.

    ``constant=137`` is the bound at any eps <= 1/4, 128 its small-eps
    limit. With ``assume_log_inv_p`` the failure term is taken as at least 4.
    """
    if epsilon > 0.25:
        warnings.warn(f"epsilon={epsilon} > 1/4 is outside the estimate's regime", OutOfRegimeWarning)
    if p is None:
        log_inv_p = 0.0
    else:
        if not 0.0 < p < 1.0:
            raise ValueError(f"failure probability must lie in (0, 1), got {p}")
        log_inv_p = -math.log(p)
    if assume_log_inv_p:
        log_inv_p = max(log_inv_p, 4.0)
    return constant * epsilon ** -2 * (n * math.log(2.0) + log_inv_p)


@dataclass(frozen=True)
class HPlusEstimate:
    default: float
    floor: float


def h_plus_max_norm_estimate(h_max_norm):
    """``||H+||_max`` from ``||H||_max``: 2x (observed) with 1x as floor."""
    if h_max_norm < 0:
        raise ValueError("||H||_max must be non-negative")
    return HPlusEstimate(H_PLUS_RATIO * h_max_norm, float(h_max_norm))


def h_plus_max_norm_exact(h):
    """``||H - (lambda_min - 3/2) I||_max`` with the exact minimum eigenvalue."""
    h = np.asarray(h, dtype=np.float64)
    lam_min = eigh(h).eigenvalues[0]
    shifted = h - (lam_min - 1.5) * np.eye(h.shape[0])
    return float(np.max(np.abs(shifted)))


# --- per-run accounting ------------------------------------------------------

@dataclass
class IterationCost:
    iteration: int
    kind: str
    h_max_norm: float
    h_plus_max_norm: float
    gates_per_prep: float
    samples: float
    gates: float
    gates_floor: float


@dataclass
class ResourceReport:
    n: int
    s: int
    epsilon: float
    b: int
    samples_per_diag_estimate: float
    classical_wall_seconds: float
    total_gates: float
    total_gates_floor: float
    diag_updates: int
    breakdown: list = field(default_factory=list, repr=False)

    @property
    def gates_per_diag_update(self):
        return [c.gates for c in self.breakdown if c.kind == DIAG]

    @property
    def break_even_gate_time(self):
        """Seconds per gate at which the quantum run would match; inf if no gates."""
        if self.total_gates <= 0:
            return math.inf
        return self.classical_wall_seconds / self.total_gates

    @property
    def break_even_gate_time_floor(self):
        """Same with the 1x ||H+|| floor (fewer gates, larger time)."""
        if self.total_gates_floor <= 0:
            return math.inf
        return self.classical_wall_seconds / self.total_gates_floor

    def summary(self):
        return {
            "n": self.n,
            "s": self.s,
            "epsilon": self.epsilon,
            "b": self.b,
            "diag_updates": self.diag_updates,
            "samples_per_diag_estimate": self.samples_per_diag_estimate,
            "total_gates": self.total_gates,
            "total_gates_floor": self.total_gates_floor,
            "classical_wall_seconds": self.classical_wall_seconds,
            "break_even_gate_time": self.break_even_gate_time,
            "break_even_gate_time_floor": self.break_even_gate_time_floor,
        }

    def write_summary(self, path):
        lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}"
                 for k, v in self.summary().items()]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "kind", "h_max_norm", "h_plus_max_norm",
                        "gates_per_prep", "samples", "gates", "gates_floor"])
            for c in self.breakdown:
                w.writerow([c.iteration, c.kind, repr(c.h_max_norm), repr(c.h_plus_max_norm),
                            repr(c.gates_per_prep), repr(c.samples), repr(c.gates), repr(c.gates_floor)])


def _field(rec, name):
    if isinstance(rec, dict):
        return rec.get(name)
    return getattr(rec, "lam" if name == "lambda" else name, None)


def iteration_resources(records, n, s, epsilon, b=DEFAULT_BITS, wall_seconds=None):
    """Gate totals and break-even time for one run.

    Parameters
    ----------
    records : sequence
        Ledger records (``IterationRecord`` or dicts from a ledger CSV) with
        ``kind``, ``h_max_norm`` and ``wall_seconds``.
    n, s : int
        Dimension and sparsity of the Hamiltonian.
    epsilon : float
    b : int
        Bits per stored matrix entry.
    wall_seconds : float, optional
        Classical wall time; defaults to the sum of per-record times.
    """
    samples = samples_per_diag_estimate(n, epsilon)
    breakdown = []
    total = 0.0
    total_floor = 0.0
    wall = 0.0
    diag = 0
    for rec in records:
        kind = _field(rec, "kind")
        h_max = _field(rec, "h_max_norm")
        t = _field(rec, "wall_seconds")
        if wall_seconds is None:
            if t is None:
                raise ValueError("ledger has no wall-time data and no wall_seconds was given")
            wall += float(t)
        if kind != DIAG:
            breakdown.append(IterationCost(int(_field(rec, "iteration")), kind,
                                           float(h_max) if h_max is not None else float("nan"),
                                           0.0, 0.0, 0.0, 0.0, 0.0))
            continue
        if h_max is None:
            raise ValueError("ledger has no h_max_norm column")
        est = h_plus_max_norm_estimate(float(h_max))
        g = gates_per_gibbs_prep(GateCostInput(n, s, epsilon, est.default, b))
        g_floor = gates_per_gibbs_prep(GateCostInput(n, s, epsilon, est.floor, b))
        gates = g * samples
        gates_floor = g_floor * samples
        total += gates
        total_floor += gates_floor
        diag += 1
        breakdown.append(IterationCost(int(_field(rec, "iteration")), kind, float(h_max),
                                       est.default, g, samples, gates, gates_floor))
    return ResourceReport(
        n=n, s=s, epsilon=epsilon, b=b,
        samples_per_diag_estimate=samples,
        classical_wall_seconds=float(wall_seconds) if wall_seconds is not None else wall,
        total_gates=total,
        total_gates_floor=total_floor,
        diag_updates=diag,
        breakdown=breakdown,
    )


# --- power laws and extrapolation ---------------------------------------------

@dataclass
class PowerLawFit:
    """``y = a1 * t^a2`` fitted in log-log space."""

    a1: float
    a2: float
    residual: float
    a2_ci: tuple
    points: int
    fixed_exponent: bool = False

    def __call__(self, t):
        return self.a1 * np.asarray(t, dtype=np.float64) ** self.a2

    def solve(self, y):
        """``t`` with ``f(t) = y``."""
        if self.a2 == 0:
            raise ValueError("constant fit cannot be inverted")
        return (y / self.a1) ** (1.0 / self.a2)


def _log_points(t, y):
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-D arrays of equal length")
    if np.any(t <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("power-law fits need positive finite coordinates")
    return np.log(t), np.log(y)


def fit_power_law(t, y, confidence=0.95):
    """Least squares on ``(ln t, ln y)`` with a t-based interval for the exponent.

    Needs at least 3 points; with exactly collinear data the interval
    collapses to the point estimate.
    """
    lt, ly = _log_points(t, y)
    k = lt.size
    if k < 3:
        raise ValueError(f"need at least 3 points, got {k}")
    x = lt - lt.mean()
    sxx = float(x @ x)
    if sxx == 0.0:
        raise ValueError("all t values are equal")
    slope = float(x @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lt.mean())
    resid = ly - (intercept + slope * lt)
    rss = float(resid @ resid)
    se = math.sqrt(rss / (k - 2) / sxx)
    q = stats.t.ppf(0.5 + confidence / 2.0, k - 2)
    return PowerLawFit(math.exp(intercept), slope, rss, (slope - q * se, slope + q * se), k)


def fit_prefactor(t, y, exponent):
    """Fit only ``a1`` for a fixed exponent (geometric mean of ``y / t^a2``)."""
    lt, ly = _log_points(t, y)
    if lt.size < 1:
        raise ValueError("need at least one point")
    c = float(np.mean(ly - exponent * lt))
    resid = ly - (c + exponent * lt)
    return PowerLawFit(math.exp(c), float(exponent), float(resid @ resid),
                       (float(exponent), float(exponent)), lt.size, fixed_exponent=True)


@dataclass
class BreakEvenProjection:
    mode: str
    classical: PowerLawFit
    gates: PowerLawFit
    n: np.ndarray
    classical_seconds: np.ndarray
    total_gates: np.ndarray
    n_100_years: float

    @property
    def break_even_seconds(self):
        return self.classical_seconds / self.total_gates

    def at(self, n):
        return float(self.classical(n) / self.gates(n))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "classical_seconds_fit", "total_gates_fit", "break_even_seconds"])
            for row in zip(self.n, self.classical_seconds, self.total_gates, self.break_even_seconds):
                w.writerow([repr(float(v)) for v in row])


THEORY = "theory"
FREE = "free"


def break_even_extrapolation(reports, mode=FREE, n_grid=None,
                             classical_exponent=THEORY_CLASSICAL_EXPONENT,
                             quantum_exponent=THEORY_QUANTUM_EXPONENT):
    """Extrapolate classical time and gate count in n and take their ratio.

    ``mode="theory"`` fixes the exponents (classical n^3, quantum n^1.5) and
    fits only prefactors; ``mode="free"`` fits both parameters of each power
    law. Also returns the n at which the classical fit reaches 100 years.
    """
    if len(reports) < 3:
        raise ValueError(f"need at least 3 reports, got {len(reports)}")
    n = np.array([r.n for r in reports], dtype=np.float64)
    secs = np.array([r.classical_wall_seconds for r in reports])
    gates = np.array([r.total_gates for r in reports])
    if mode == THEORY:
        fc = fit_prefactor(n, secs, classical_exponent)
        fg = fit_prefactor(n, gates, quantum_exponent)
    elif mode == FREE:
        fc = fit_power_law(n, secs)
        fg = fit_power_law(n, gates)
    else:
        raise ValueError(f"mode must be {THEORY!r} or {FREE!r}, got {mode!r}")
    n100 = fc.solve(100 * SECONDS_PER_YEAR) if fc.a2 > 0 else math.inf
    if n_grid is None:
        hi = max(n.max(), min(n100, 1e9)) if math.isfinite(n100) else n.max() * 100
        n_grid = np.geomspace(n.min(), hi, 25)
    n_grid = np.asarray(n_grid, dtype=np.float64)
    return BreakEvenProjection(mode, fc, fg, n_grid, fc(n_grid), fg(n_grid), float(n100))
