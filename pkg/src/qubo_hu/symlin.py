"""
Dense symmetric matrix kernel.

Everything the solver needs from linear algebra goes through one
eigendecomposition: Gibbs states, free energies, square roots and norms.
Matrices are plain ``numpy.ndarray`` objects; symmetry is enforced on entry
by averaging with the transpose.
"""
from dataclasses import dataclass

import numpy as np


class LinalgError(RuntimeError):
    """Raised when the eigensolver fails to converge."""


class NotPSDError(ValueError):
    """Raised when a matrix expected to be psd has a clearly negative eigenvalue."""


def as_symmetric(a):
    """Return ``a`` as a float64 symmetric array.

    Rejects non-square and non-finite input. Exact symmetry is enforced by
    ``(a + a.T) / 2`` so downstream code may rely on ``a[i, j] == a[j, i]``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order and orthogonal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def apply(self, func):
        """Functional calculus: ``V diag(func(w)) V^T``."""
        v = self.eigenvectors
        out = (v * func(self.eigenvalues)) @ v.T
        return 0.5 * (out + out.T)

    def reconstruct(self):
        return self.apply(lambda w: w)


def eigh(a):
    a = as_symmetric(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"eigendecomposition of {a.shape[0]}x{a.shape[0]} matrix failed: {exc}") from exc
    return EigenDecomposition(w, v)


@dataclass(frozen=True)
class GibbsState:
    """``rho = exp(-H) / tr exp(-H)`` together with ``F = -ln tr exp(-H)``."""

    rho: np.ndarray
    free_energy: float
    decomposition: EigenDecomposition

    @property
    def weights(self):
        """Eigenvalues of rho, aligned with ``decomposition.eigenvectors``."""
        w = self.decomposition.eigenvalues
        e = np.exp(-(w - w[0]))
        return e / e.sum()


def gibbs_state(h):
    """Gibbs state and free energy of the Hamiltonian ``h``.

    The spectrum is shifted by its minimum before exponentiation, so the
    largest weight is exactly 1 and nothing overflows; the shift is added back
    to the log-partition function.
    """
    dec = eigh(h)
    w = dec.eigenvalues
    shift = w[0]
    e = np.exp(-(w - shift))
    z = e.sum()
    p = e / z
    v = dec.eigenvectors
    rho = (v * p) @ v.T
    rho = 0.5 * (rho + rho.T)
    return GibbsState(rho=rho, free_energy=float(shift - np.log(z)), decomposition=dec)


def free_energy(h):
    """``-ln tr exp(-h)`` from eigenvalues only."""
    w = np.linalg.eigvalsh(as_symmetric(h))
    shift = w[0]
    return float(shift - np.log(np.exp(-(w - shift)).sum()))


def psd_sqrt(rho, reject=1e-8):
    """Symmetric square root of a psd matrix.

    Negative eigenvalues are round-off and are set to zero. Anything below
    ``-reject * ||rho||`` raises ``NotPSDError``.
    """
    dec = eigh(rho)
    w = dec.eigenvalues
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if w[0] < -reject * scale:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} below -{reject:g}*||rho||")
    return dec.apply(lambda x: np.sqrt(np.clip(x, 0.0, None)))


def trace_product(a, b):
    """``tr(A B)`` for symmetric A, B, computed as ``sum_ij A_ij B_ij``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def trace_norm(a):
    return float(np.abs(np.linalg.eigvalsh(as_symmetric(a))).sum())


def operator_norm(a):
    return float(np.abs(np.linalg.eigvalsh(as_symmetric(a))).max())


def max_norm(a):
    """Largest absolute entry."""
    return float(np.max(np.abs(a)))
