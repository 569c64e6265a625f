"""
From approximate SDP solutions to sign vectors.

Two tools live here: a correction that turns an epsilon-feasible state into
one with exact diagonal 1/n while moving it only O(eps^(1/3)) in trace
distance, and Goemans-Williamson style randomized rounding with the batch
statistics used in the benchmarks.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .symlin import as_symmetric, eigh, psd_sqrt, trace_norm

TRIAL_CHUNK = 1000
DEFAULT_BATCH = 1000
DEFAULT_BATCHES = 100

DIAG_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class CorrectionError(ValueError):
    pass


@dataclass
class CorrectionReport:
    rho_sharp: np.ndarray
    large_deviation_set: np.ndarray
    trace_distance: float
    xi: float
    min_eigenvalue: float


def correct_solution(rho, epsilon):
    """Exact-diagonal correction of an epsilon-feasible state.

    With ``xi = eps^(1/3)`` and ``d_i = rho_ii - 1/n`` the rows in
    ``B = {i : |d_i| > xi/n}`` are decoupled and reset to 1/n, the remaining
    diagonal deviations are cancelled by ``D = diag(-d_i)``, and
    ``xi/n * I`` is mixed in to keep the result psd:

        rho# = (rho' + D + xi/n I) / (1 + xi).

    Parameters
    ----------
    rho : ndarray
        Density matrix with ``sum_i |rho_ii - 1/n| <= epsilon``.
    epsilon : float
        Diagonal tolerance the state satisfies.

    Returns
    -------
    CorrectionReport
    """
    rho = as_symmetric(rho)
    n = rho.shape[0]
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    d = np.diagonal(rho) - 1.0 / n
    violation = float(np.abs(d).sum())
    if violation > epsilon * (1 + 1e-12):
        raise CorrectionError(f"diagonal violation {violation:.3e} exceeds epsilon={epsilon:.3e}")
    xi = epsilon ** (1.0 / 3.0)
    big = np.abs(d) > xi / n
    prime = rho.copy()
    prime[big, :] = 0.0
    prime[:, big] = 0.0
    prime[big, big] = 1.0 / n
    shift = np.where(big, 0.0, -d)
    sharp = prime + np.diag(shift + xi / n)
    sharp /= 1.0 + xi
    # the construction makes the diagonal exactly 1/n; pin it against round-off
    np.fill_diagonal(sharp, 1.0 / n)

    w = eigh(sharp).eigenvalues
    if w[0] < -PSD_TOL:
        raise CorrectionError(f"corrected state not psd: min eigenvalue {w[0]:.3e}")
    if abs(np.trace(sharp) - 1.0) > TRACE_TOL:
        raise CorrectionError(f"corrected state has trace {np.trace(sharp)!r}")
    return CorrectionReport(
        rho_sharp=sharp,
        large_deviation_set=np.flatnonzero(big),
        trace_distance=trace_norm(sharp - rho),
        xi=xi,
        min_eigenvalue=float(w[0]),
    )


# --- randomized rounding ------------------------------------------------------

def sign_vectors(s, g):
    """``sgn(S g)`` column-wise with sgn(0) taken as +1, as int8."""
    return np.where(s @ g >= 0.0, 1, -1).astype(np.int8)


def default_batch_size(trials):
    """1000 per batch at 10^5 trials or more, else about trials/100.

    The result always divides ``trials``.
    """
    target = DEFAULT_BATCH if trials >= DEFAULT_BATCH * DEFAULT_BATCHES else max(1, trials // DEFAULT_BATCHES)
    for b in range(target, 0, -1):
        if trials % b == 0:
            return b
    return 1


def batch_max_statistic(values, batch_size):
    """Mean over consecutive batches of the per-batch maximum."""
    values = np.asarray(values, dtype=np.float64)
    if batch_size < 1 or values.size == 0 or values.size % batch_size:
        raise ValueError(f"{values.size} values cannot be split into batches of {batch_size}")
    return float(values.reshape(-1, batch_size).max(axis=1).mean())


@dataclass
class RoundingReport:
    trials: int
    values: np.ndarray = field(repr=False)
    best_x: np.ndarray = field(repr=False)
    best_value: float
    mean_value: float
    batch_size: int
    batch_max_mean: float
    rng_seed: int
    stream: int
    corrected: bool = False

    @property
    def stderr(self):
        if self.trials < 2:
            return float("nan")
        return float(np.std(self.values, ddof=1) / math.sqrt(self.trials))

    def summary(self):
        return {
            "trials": self.trials,
            "mean": self.mean_value,
            "stderr": self.stderr,
            "best": self.best_value,
            "batch_size": self.batch_size,
            "batch_max_mean": self.batch_max_mean,
            "seed": self.rng_seed,
            "stream": rng.STREAM_NAMES.get(self.stream, str(self.stream)),
            "corrected": self.corrected,
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "value"])
            for k, v in enumerate(self.values):
                w.writerow([k, repr(float(v))])

    def write_summary(self, path):
        lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}"
                 for k, v in self.summary().items()]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def randomized_round(rho, c, trials, seed, batch_size=None, stream=rng.ROUNDING,
                     correct_first=False, epsilon=None):
    """Round ``rho`` to sign vectors ``x = sgn(sqrt(rho) g)``, ``g ~ N(0, I)``.

    Trials are drawn in chunks of 1000; chunk ``k`` uses its own substream
    ``(seed, stream, k)``, so the values do not depend on how chunks are
    scheduled.

    Parameters
    ----------
    rho : ndarray
        psd matrix (need not have trace one).
    c : CostMatrix
        Objective ``x^T C x``.
    trials : int
    seed : int
    batch_size : int, optional
        Defaults to ``default_batch_size(trials)``.
    correct_first : bool
        Apply ``correct_solution(rho, epsilon)`` before rounding.

    Returns
    -------
    RoundingReport
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if correct_first:
        if epsilon is None:
            raise ValueError("correct_first needs epsilon")
        rho = correct_solution(rho, epsilon).rho_sharp
    batch_size = default_batch_size(trials) if batch_size is None else batch_size
    if trials % batch_size:
        raise ValueError(f"trials={trials} not divisible by batch_size={batch_size}")
    s = psd_sqrt(rho)
    n = s.shape[0]
    values = np.empty(trials)
    best_x, best_value = None, -np.inf
    for k, start in enumerate(range(0, trials, TRIAL_CHUNK)):
        m = min(TRIAL_CHUNK, trials - start)
        g = rng.generator(seed, stream, k).standard_normal((n, m))
        x = sign_vectors(s, g)
        vals = c.quadratic_form(x)
        values[start:start + m] = vals
        j = int(np.argmax(vals))
        if vals[j] > best_value:
            best_value = float(vals[j])
            best_x = x[:, j].copy()
    return RoundingReport(
        trials=trials,
        values=values,
        best_x=best_x,
        best_value=best_value,
        mean_value=float(values.mean()),
        batch_size=batch_size,
        batch_max_mean=batch_max_statistic(values, batch_size),
        rng_seed=seed,
        stream=stream,
        corrected=correct_first,
    )


# --- precision metric -------------------------------------------------------

@dataclass
class NuMetric:
    nu: float
    provenance: str = ""


def _check_signs(x, n, name):
    x = np.asarray(x)
    if x.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {x.shape}")
    if not np.all(np.abs(x) == 1):
        raise ValueError(f"{name} has entries outside {{-1, +1}}")
    return x.astype(np.float64)


def nu_metric(x_eps, x_opt, c, provenance=""):
    """``(x_opt^T C x_opt - x_eps^T C x_eps) / n``; may be negative."""
    n = c.n
    a = _check_signs(x_opt, n, "x_opt")
    b = _check_signs(x_eps, n, "x_eps")
    return NuMetric((float(c.quadratic_form(a)) - float(c.quadratic_form(b))) / n, provenance)
