"""
Certified high-precision reference solutions of the unit-diagonal SDP.

Solves ``max tr(C X)`` over psd X with ``X_ii = 1`` through the low-rank
factorization ``X = V^T V`` (unit columns ``v_i``) by exact block coordinate
ascent: each sweep sets ``v_i = g_i / |g_i|`` with ``g_i = sum_j C_ij v_j``.
The dual vector ``y_i = |g_i|`` gives the certificate: if
``Diag(y) - C >= -delta I`` then ``tr(C X*) <= sum(y) + n delta``.

Used only as a reference point for benchmarks, in place of an external
conic solver. Results are reported in the normalized form ``rho = X / n``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .symlin import eigh


@dataclass
class SdpReference:
    rho: np.ndarray = field(repr=False)
    value: float
    dual_bound: float
    sweeps: int
    rank: int

    @property
    def gap(self):
        """Certified bound on ``optimum - value`` in normalized units."""
        return max(0.0, self.dual_bound - self.value)


def low_rank_sdp(c, rank=None, tol=1e-12, max_sweeps=5000, seed=0):
    """Reference optimum of ``max tr(C rho)`` s.t. ``rho >= 0``, ``rho_ii = 1/n``.

    Parameters
    ----------
    c : CostMatrix or ndarray
        Symmetric cost matrix with zero diagonal.
    rank : int, optional
        Factor rank; defaults to ``ceil(sqrt(2n)) + 1``, above which every
        second-order stationary point is generically optimal.
    tol : float
        Stop when a sweep raises the objective by less than ``tol`` relative.
    max_sweeps : int
    seed : int
        Seeds the random unit starting columns.

    Returns
    -------
    SdpReference
        ``value`` is ``tr(C rho)`` of the returned state, ``dual_bound`` an
        upper bound on the optimum.
    """
    c = c.dense() if hasattr(c, "dense") else np.asarray(c, dtype=np.float64)
    n = c.shape[0]
    if np.any(np.diagonal(c) != 0):
        raise ValueError("cost matrix must have zero diagonal")
    k = rank or math.ceil(math.sqrt(2 * n)) + 1
    v = rng.generator(seed, rng.REFERENCE_SDP).standard_normal((k, n))
    v /= np.linalg.norm(v, axis=0)
    # rows of c as contiguous vectors make the inner update cheap
    rows = [np.ascontiguousarray(c[i]) for i in range(n)]
    f_old = -np.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for i in range(n):
            g = v @ rows[i]
            norm = np.linalg.norm(g)
            if norm > 0:
                v[:, i] = g / norm
        f = float(np.sum(np.linalg.norm(v @ c, axis=0)))
        if f - f_old <= tol * abs(f):
            break
        f_old = f
    g = v @ c
    y = np.linalg.norm(g, axis=0)
    x = v.T @ v
    value = float(np.vdot(c, x)) / n
    delta = -float(eigh(np.diag(y) - c).eigenvalues[0])
    dual = (float(y.sum()) + n * max(0.0, delta)) / n
    return SdpReference(x / n, value, dual, sweeps, k)
