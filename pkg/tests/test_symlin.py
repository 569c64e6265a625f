import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qubo_hu.symlin import (
    LinalgError, NotPSDError, as_symmetric, eigh, free_energy, gibbs_state,
    max_norm, operator_norm, psd_sqrt, trace_norm, trace_product,
)

from conftest import random_symmetric

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def symmetric(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    a = draw(arrays(np.float64, (n, n), elements=finite))
    return 0.5 * (a + a.T)


def test_two_by_two_eigensystem():
    dec = eigh(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 3.0], atol=1e-14)
    v = dec.eigenvectors
    np.testing.assert_allclose(np.abs(v), np.full((2, 2), 1 / math.sqrt(2)), atol=1e-14)


def test_gibbs_state_of_zero_is_maximally_mixed():
    g = gibbs_state(np.zeros((5, 5)))
    np.testing.assert_allclose(g.rho, np.eye(5) / 5, atol=1e-15)
    assert g.free_energy == pytest.approx(-math.log(5), abs=1e-14)


def test_gibbs_state_matches_expm():
    rng = np.random.default_rng(0)
    h = random_symmetric(rng, 7)
    e = scipy.linalg.expm(-h)
    g = gibbs_state(h)
    np.testing.assert_allclose(g.rho, e / np.trace(e), atol=1e-13)
    assert g.free_energy == pytest.approx(-math.log(np.trace(e)), abs=1e-12)


def test_gibbs_state_does_not_overflow():
    h = np.diag([-800.0, -799.0, 500.0])
    g = gibbs_state(h)
    assert np.all(np.isfinite(g.rho))
    assert g.rho[0, 0] == pytest.approx(1 / (1 + math.exp(-1)), rel=1e-12)
    assert g.free_energy == pytest.approx(-800 - math.log(1 + math.exp(-1)), rel=1e-12)


def test_weights_are_spectrum_of_rho():
    rng = np.random.default_rng(1)
    g = gibbs_state(random_symmetric(rng, 6))
    np.testing.assert_allclose(np.sort(g.weights), np.linalg.eigvalsh(g.rho), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(symmetric())
def test_gibbs_state_is_a_density_matrix(h):
    g = gibbs_state(h)
    assert np.trace(g.rho) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(g.rho)[0] >= -1e-12
    np.testing.assert_array_equal(g.rho, g.rho.T)


@settings(max_examples=60, deadline=None)
@given(symmetric(), st.floats(-50, 50))
def test_shift_invariance(h, c):
    a = gibbs_state(h)
    b = gibbs_state(h + c * np.eye(h.shape[0]))
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-11)
    assert b.free_energy == pytest.approx(a.free_energy + c, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(symmetric())
def test_free_energy_agrees_with_gibbs_state(h):
    assert free_energy(h) == pytest.approx(gibbs_state(h).free_energy, abs=1e-12)


def test_as_symmetric_rejects_bad_input():
    with pytest.raises(ValueError):
        as_symmetric(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        as_symmetric(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        as_symmetric(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_as_symmetric_enforces_exact_symmetry():
    a = np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]])
    s = as_symmetric(a)
    assert s[0, 1] == s[1, 0]


def test_eigh_failure_is_wrapped(monkeypatch):
    def boom(a):
        raise np.linalg.LinAlgError("no convergence")
    monkeypatch.setattr(np.linalg, "eigh", boom)
    with pytest.raises(LinalgError):
        eigh(np.eye(2))


def test_psd_sqrt_squares_back():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((6, 3))
    rho = a @ a.T
    s = psd_sqrt(rho)
    np.testing.assert_allclose(s @ s, rho, atol=1e-12)


def test_psd_sqrt_rejects_negative_matrix():
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -0.5]))


def test_psd_sqrt_tolerates_roundoff():
    s = psd_sqrt(np.diag([1.0, -1e-14]))
    np.testing.assert_allclose(s, np.diag([1.0, 0.0]))


def test_norms():
    a = np.diag([3.0, -4.0])
    assert trace_norm(a) == pytest.approx(7.0)
    assert operator_norm(a) == pytest.approx(4.0)
    assert max_norm(np.array([[1.0, -5.0], [-5.0, 2.0]])) == 5.0


def test_trace_product_matches_trace_of_product():
    rng = np.random.default_rng(3)
    a, b = random_symmetric(rng, 5), random_symmetric(rng, 5)
    assert trace_product(a, b) == pytest.approx(np.trace(a @ b), abs=1e-12)
    with pytest.raises(ValueError):
        trace_product(a, np.eye(4))


def test_free_energy_derivative_and_concavity():
    # 200 random (H, dH) pairs at n in {2, 8, 32}
    rng = np.random.default_rng(4)
    h_step = 1e-4
    for k in range(200):
        n = (2, 8, 32)[k % 3]
        h = random_symmetric(rng, n, scale=rng.uniform(0.1, 3.0))
        dh = random_symmetric(rng, n)
        fd = (free_energy(h + h_step * dh) - free_energy(h - h_step * dh)) / (2 * h_step)
        slope = trace_product(gibbs_state(h).rho, dh)
        assert fd == pytest.approx(slope, abs=1e-6)
        t = 0.05
        second = free_energy(h + t * dh) - 2 * free_energy(h) + free_energy(h - t * dh)
        assert second <= 1e-9
