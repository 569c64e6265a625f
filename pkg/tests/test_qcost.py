import math
import warnings
from types import SimpleNamespace

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qubo_hu.hu_core import COST, DIAG, IterationRecord, SolverConfig, hamiltonian_updates
from qubo_hu.qcost import (
    FREE, THEORY, GateCostInput, OutOfRegimeWarning, break_even_extrapolation, fit_power_law,
    fit_prefactor, gate_prefactor, gates_per_gibbs_prep, h_plus_max_norm_estimate,
    h_plus_max_norm_exact, iteration_resources, samples_with_confidence, samples_per_diag_estimate,
)

mpmath.mp.dps = 50


def mp_gates(b, n, s, eps, hp):
    pre = 32 * mpmath.mpf(b) + 32 * mpmath.log(n, 2) - 18
    return pre * (mpmath.mpf("4.5") * mpmath.log(mpmath.mpf("7.8") / mpmath.mpf(eps))
                  * mpmath.sqrt(n) * s * mpmath.mpf(hp) - 1)


def mp_samples(n, eps):
    return 128 * mpmath.log(2) * mpmath.mpf(eps) ** -2 * n


def test_prefactor_arithmetic():
    assert gate_prefactor(8, 1024) == 558.0


def test_reference_values():
    g = gates_per_gibbs_prep(GateCostInput(1024, 16, 0.01, 2.0))
    assert g == pytest.approx(17122244.72110143, rel=1e-14)
    assert g == pytest.approx(1.712e7, rel=1e-3)
    m = samples_per_diag_estimate(1024, 0.01)
    assert m == pytest.approx(908521872.5035315, rel=1e-14)
    # one diagonal update, 1 s of classical time
    rec = [IterationRecord(1, DIAG, 1.0, 0, 0.0, 0.02, -1.0, 1.0, 1.0)]
    rep = iteration_resources(rec, 1024, 16, 0.01)
    assert rep.break_even_gate_time == pytest.approx(6.428415102404698e-17, rel=1e-12)
    assert rep.break_even_gate_time == pytest.approx(float(1 / (mp_gates(8, 1024, 16, "0.01", 2)
                                                                * mp_samples(1024, "0.01"))), rel=1e-12)


def test_formula_fidelity_grid():
    g = np.random.default_rng(0)
    for _ in range(100):
        b = int(g.integers(1, 17))
        n = int(2 ** g.integers(1, 16))
        s = int(g.integers(1, 64))
        eps = float(10 ** g.uniform(-4, math.log10(0.25)))
        hp = float(10 ** g.uniform(-0.5, 2))
        got = gates_per_gibbs_prep(GateCostInput(n, s, eps, hp, b))
        want = mp_gates(b, n, s, eps, hp)
        assert abs(got - want) <= 1e-14 * abs(want)
        assert abs(samples_per_diag_estimate(n, eps) - mp_samples(n, eps)) <= 1e-14 * mp_samples(n, eps)


@settings(max_examples=50)
@given(st.integers(1, 16), st.integers(1, 14), st.integers(1, 50), st.floats(1e-4, 0.25),
       st.floats(0.5, 50))
def test_monotonicity(b, logn, s, eps, hp):
    n = 2 ** logn
    base = gates_per_gibbs_prep(GateCostInput(n, s, eps, hp, b))
    assert gates_per_gibbs_prep(GateCostInput(n, s, eps, hp, b + 1)) > base
    assert gates_per_gibbs_prep(GateCostInput(2 * n, s, eps, hp, b)) > base
    assert gates_per_gibbs_prep(GateCostInput(n, s + 1, eps, hp, b)) > base
    assert gates_per_gibbs_prep(GateCostInput(n, s, eps, hp * 1.1, b)) > base
    assert gates_per_gibbs_prep(GateCostInput(n, s, eps * 0.9, hp, b)) > base


def test_floor_at_zero():
    assert gates_per_gibbs_prep(GateCostInput(4, 1, 0.01, 0.0)) == 0.0


def test_simulation_constant_identity():
    assert 0.73 * 2 * math.pi >= 4.5


def test_out_of_regime_warns():
    with pytest.warns(OutOfRegimeWarning):
        samples_per_diag_estimate(8, 0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        samples_per_diag_estimate(8, 0.25)


def test_samples_with_confidence_variants():
    n, eps = 64, 0.01
    assert samples_with_confidence(n, eps) == pytest.approx(137 * 1e4 * n * math.log(2))
    assert samples_with_confidence(n, eps, p=0.01) == pytest.approx(137 * 1e4 * (n * math.log(2) + math.log(100)))
    assert samples_with_confidence(n, eps, constant=128) == pytest.approx(samples_per_diag_estimate(n, eps))
    assert samples_with_confidence(n, eps, p=0.5, assume_log_inv_p=True) == pytest.approx(
        137 * 1e4 * (n * math.log(2) + 4))
    with pytest.raises(ValueError):
        samples_with_confidence(n, eps, p=1.5)


def test_h_plus_estimate():
    assert h_plus_max_norm_estimate(0.0).default == 0.0
    e = h_plus_max_norm_estimate(3.0)
    assert (e.default, e.floor) == (6.0, 3.0)
    with pytest.raises(ValueError):
        h_plus_max_norm_estimate(-1.0)


def test_h_plus_ratio_on_real_trajectory(medium_instance):
    ratios = []

    def cb(state):
        if state.iteration % 5 == 0:
            h = state.H
            ratios.append(h_plus_max_norm_exact(h) / np.max(np.abs(h)))

    hamiltonian_updates(medium_instance, 0.6, SolverConfig(epsilon=0.02), callback=cb)
    assert ratios
    assert all(1.0 <= r <= 4.0 for r in ratios)


def test_zero_diagonal_updates_is_infinite():
    rec = [IterationRecord(1, COST, 1.0, 0, 0.1, 0.0, -1.0, 0.5, 0.3)]
    rep = iteration_resources(rec, 64, 4, 0.01)
    assert rep.total_gates == 0.0
    assert rep.break_even_gate_time == math.inf


def test_report_conservation(medium_instance, tmp_path):
    out = hamiltonian_updates(medium_instance, 0.6, SolverConfig(epsilon=0.02))
    rep = iteration_resources(out.ledger.records, 32, 4, 0.02)
    assert rep.diag_updates == out.ledger.count(DIAG)
    assert rep.total_gates == sum(c.gates for c in rep.breakdown)
    assert rep.total_gates_floor <= rep.total_gates
    assert rep.classical_wall_seconds == pytest.approx(sum(r.wall_seconds for r in out.ledger.records))
    rep.to_csv(tmp_path / "r.csv")
    rep.write_summary(tmp_path / "r.txt")
    assert "break_even" in (tmp_path / "r.txt").read_text()
    # dict records from a CSV give the same totals
    dicts = [{"iteration": r.iteration, "kind": r.kind, "h_max_norm": r.h_max_norm,
              "wall_seconds": r.wall_seconds} for r in out.ledger.records]
    assert iteration_resources(dicts, 32, 4, 0.02).total_gates == rep.total_gates
    with pytest.raises(ValueError):
        iteration_resources([{"iteration": 1, "kind": DIAG, "h_max_norm": 1.0}], 32, 4, 0.02)


def test_power_law_exact():
    t = np.array([1.0, 2.0, 5.0, 10.0, 30.0])
    fit = fit_power_law(t, 2 * t ** 3)
    assert fit.a1 == pytest.approx(2.0, rel=1e-9)
    assert fit.a2 == pytest.approx(3.0, rel=1e-9)
    lo, hi = fit.a2_ci
    assert lo == pytest.approx(3.0, abs=1e-9) and hi == pytest.approx(3.0, abs=1e-9)
    assert fit.solve(2 * 7.0 ** 3) == pytest.approx(7.0)
    flat = fit_power_law(t, np.full(5, 4.0))
    assert flat.a2 == pytest.approx(0.0, abs=1e-12)
    assert flat.a1 == pytest.approx(4.0)


def test_power_law_interval_covers_truth():
    g = np.random.default_rng(1)
    t = np.geomspace(1, 100, 12)
    y = 3 * t ** -1.7 * np.exp(g.normal(0, 0.05, t.size))
    fit = fit_power_law(t, y)
    assert fit.a2_ci[0] < -1.7 < fit.a2_ci[1]


def test_power_law_errors():
    with pytest.raises(ValueError):
        fit_power_law([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, -2, 3])
    with pytest.raises(ValueError):
        fit_power_law([2, 2, 2], [1, 2, 3])


def test_fit_prefactor():
    t = np.array([2.0, 4.0, 8.0])
    fit = fit_prefactor(t, 5 * t ** 1.5, 1.5)
    assert fit.a1 == pytest.approx(5.0) and fit.fixed_exponent


def _reports(ns, a, b):
    return [SimpleNamespace(n=n, classical_wall_seconds=a * n ** 3, total_gates=b * n ** 1.5)
            for n in ns]


def test_extrapolation_modes_agree_on_theory_data():
    reps = _reports([128, 256, 512, 1024], 1e-8, 1e6)
    grid = [1e3, 1e4, 1e5]
    th = break_even_extrapolation(reps, THEORY, n_grid=grid)
    fr = break_even_extrapolation(reps, FREE, n_grid=grid)
    np.testing.assert_allclose(th.break_even_seconds, fr.break_even_seconds, rtol=1e-9)
    assert th.n_100_years == pytest.approx(fr.n_100_years, rel=1e-9)
    assert th.at(1e5) == pytest.approx(1e-14 * 1e5 ** 1.5, rel=1e-9)
    # projection monotone for positive exponents
    assert np.all(np.diff(fr.break_even_seconds) > 0)


def test_extrapolation_needs_three_points(tmp_path):
    with pytest.raises(ValueError):
        break_even_extrapolation(_reports([128, 256], 1.0, 1.0))
    with pytest.raises(ValueError):
        break_even_extrapolation(_reports([128, 256, 512], 1.0, 1.0), mode="other")
    proj = break_even_extrapolation(_reports([128, 256, 512], 1e-8, 1e6))
    proj.to_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().startswith("n,classical_seconds_fit,total_gates_fit,break_even_seconds")
