import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qubo_hu.hu_core import SolverConfig, hamiltonian_updates, is_feasible
from qubo_hu.instances import InstanceSeedSpec, generate_instance
from qubo_hu.qemu import (
    ADVERSARIAL, FREE_ENERGY, NONE, OVERSHOOT, UNIFORM, VIOLATION, NoiseModel, Oracle,
    QuantumEmuConfig, noisy_gibbs_diagonals, noisy_trace_product, quantum_hamiltonian_updates,
    quantum_update,
)
from qubo_hu.symlin import free_energy, gibbs_state

from conftest import random_symmetric

PLAIN = dict(scale_cost=False, diag_norm="l1", beta=0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        NoiseModel(kind="loud")
    with pytest.raises(ValueError):
        QuantumEmuConfig(J=0)
    with pytest.raises(ValueError):
        QuantumEmuConfig(base=SolverConfig(step_mode="theoretical"))
    assert QuantumEmuConfig(base=SolverConfig(epsilon=0.04)).magnitude == 0.01
    assert NoiseModel().kind == UNIFORM


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31), st.sampled_from([NONE, UNIFORM, ADVERSARIAL]),
       st.sampled_from([VIOLATION, OVERSHOOT, FREE_ENERGY]))
def test_oracle_error_bounds(n, seed, kind, intent):
    g = np.random.default_rng(seed)
    h = random_symmetric(g, n, 2.0)
    a = random_symmetric(g, n, 1.0)
    eps = 0.04
    rho = gibbs_state(h).rho
    exact = float(np.vdot(a, rho))
    noise = NoiseModel(kind, rng_seed=seed)
    t = noisy_trace_product(h, a, noise, eps, intent)
    assert abs(t - exact) <= eps / 4 + 1e-15
    d = noisy_gibbs_diagonals(h, noise, eps)
    assert np.abs(d - np.diag(rho)).sum() <= eps / 4 + 1e-15
    if kind == NONE:
        assert t == exact
        np.testing.assert_array_equal(d, np.diag(rho))


def test_uniform_noise_is_reproducible():
    h = np.diag([0.3, -0.1, 0.0])
    a = np.eye(3)
    noise = NoiseModel(UNIFORM, rng_seed=4)
    assert noisy_trace_product(h, a, noise, 0.1) == noisy_trace_product(h, a, noise, 0.1)


def test_zero_hamiltonian_diagonals():
    d = noisy_gibbs_diagonals(np.zeros((5, 5)), NoiseModel(UNIFORM, rng_seed=1), 0.08)
    assert np.abs(d - 0.2).sum() <= 0.02 + 1e-15


def test_adversarial_directions():
    o = Oracle(NoiseModel(ADVERSARIAL), 0.01)
    rho = np.diag([0.7, 0.3])
    a = np.eye(2)
    assert o.trace_product(rho, a, VIOLATION) == pytest.approx(0.99)
    assert o.trace_product(rho, a, OVERSHOOT) == pytest.approx(1.01)
    # diagonals pushed toward 1/n
    d = o.gibbs_diagonals(rho)
    np.testing.assert_allclose(d, [0.695, 0.305])
    assert o.max_diag_error == pytest.approx(0.01)


def test_single_update_bound_is_below_exact():
    # J=1, no noise: F increment is lam * (tr(rho_new dH) - eps/4) <= exact change
    eps = 0.04
    qc = QuantumEmuConfig(SolverConfig(epsilon=eps), NoiseModel(NONE), J=1)
    h = np.zeros((3, 3))
    dh = np.diag([1.0, 0.0, -0.5])
    f0 = free_energy(h)
    res = quantum_update(h, dh, f0, 0.5, qc, Oracle(qc.noise, qc.magnitude))
    lam = res.lambda_used
    assert res.overshoots >= 1 and lam == 0.5 / 2 ** res.overshoots
    rho_new = gibbs_state(lam * dh).rho
    assert np.vdot(rho_new, dh) >= eps / 4
    assert res.f_bound == pytest.approx(f0 + lam * (np.vdot(rho_new, dh) - eps / 4), abs=1e-14)
    assert res.f_bound <= free_energy(res.H)


def test_zero_noise_matches_classical_trajectory(medium_instance):
    eps = 0.02
    base = SolverConfig(epsilon=eps, **PLAIN)
    q = quantum_hamiltonian_updates(medium_instance, 0.5, QuantumEmuConfig(base, NoiseModel(NONE)))
    c = hamiltonian_updates(medium_instance, 0.5, base, threshold=0.75 * eps,
                            overshoot_floor=0.25 * eps)
    assert q.status == c.status == "feasible"
    assert [r.kind for r in q.ledger.records] == [r.kind for r in c.ledger.records]
    assert [r.lam for r in q.ledger.records] == [r.lam for r in c.ledger.records]
    np.testing.assert_allclose(q.H, c.H, atol=1e-12)


def test_bound_never_exceeds_exact_without_noise(medium_instance):
    eps = 0.02
    for gamma in (0.5, 0.95):
        qc = QuantumEmuConfig(SolverConfig(epsilon=eps), NoiseModel(NONE))
        out = quantum_hamiltonian_updates(medium_instance, gamma, qc)
        led = out.ledger
        assert not led.bound_violations
        assert all(b <= e + 1e-9 for b, e in zip(led.f_bound, led.f_exact))


def test_finer_riemann_sum_is_tighter(medium_instance):
    eps = 0.02
    base = SolverConfig(epsilon=eps, **PLAIN)
    one = quantum_hamiltonian_updates(medium_instance, 0.95, QuantumEmuConfig(base, NoiseModel(NONE), J=1))
    four = quantum_hamiltonian_updates(medium_instance, 0.95, QuantumEmuConfig(base, NoiseModel(NONE), J=4))
    k = min(one.ledger.iterations, four.ledger.iterations)
    assert k > 0
    for a, b in zip(one.ledger.f_bound[:k], four.ledger.f_bound[:k]):
        assert b >= a - 1e-12
    assert four.ledger.iterations <= one.ledger.iterations


@pytest.mark.parametrize("kind", [NONE, UNIFORM, ADVERSARIAL])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_soundness_under_noise(kind, seed):
    c = generate_instance(InstanceSeedSpec(32, 4, seed))
    eps = 0.02
    qc = QuantumEmuConfig(SolverConfig(epsilon=eps), NoiseModel(kind, rng_seed=seed))
    for gamma in (0.3, 0.6):
        out = quantum_hamiltonian_updates(c, gamma, qc)
        if out.status == "feasible":
            assert is_feasible(c.dense(), gamma, out.rho, eps)
        assert out.ledger.max_trace_error <= eps / 4 + 1e-15
        assert out.ledger.max_diag_error <= eps / 4 + 1e-15


def test_infeasible_threshold_gives_positive_bound(medium_instance):
    qc = QuantumEmuConfig(SolverConfig(epsilon=0.02), NoiseModel(UNIFORM, rng_seed=3))
    out = quantum_hamiltonian_updates(medium_instance, 0.99, qc)
    assert out.status == "infeasible"
    assert out.free_energy > 0
    assert out.ledger.f_bound[-1] > 0
    # a positive bound certifies a positive exact free energy
    assert free_energy(out.H) > 0


def test_minus_one_threshold_is_feasible_at_once(small_instance):
    out = quantum_hamiltonian_updates(small_instance, -1.0, QuantumEmuConfig())
    assert out.status == "feasible" and out.ledger.iterations == 0


def test_ledger_csv_columns(medium_instance, tmp_path):
    out = quantum_hamiltonian_updates(medium_instance, 0.5, QuantumEmuConfig(SolverConfig(epsilon=0.02)))
    p = tmp_path / "q.csv"
    out.ledger.to_csv(p)
    header = p.read_text().splitlines()[0].split(",")
    for col in ("oracle_noise_kind", "F_bound", "F_exact", "free_energy", "lambda"):
        assert col in header
