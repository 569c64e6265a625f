import numpy as np
import pytest

from qubo_hu.hu_core import SolverConfig
from qubo_hu.instances import InstanceSeedSpec, brute_force_qubo, from_dense, generate_instance
from qubo_hu.sdpref import low_rank_sdp
from qubo_hu.search import binary_search


def test_two_by_two_is_exact():
    ref = low_rank_sdp(from_dense(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert ref.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(ref.rho, np.full((2, 2), 0.5), atol=1e-12)


def test_rejects_nonzero_diagonal():
    with pytest.raises(ValueError):
        low_rank_sdp(np.eye(3))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_certified_and_relaxes_qubo(seed):
    c = generate_instance(InstanceSeedSpec(10, 3, seed))
    ref = low_rank_sdp(c, seed=seed)
    assert ref.gap < 1e-8
    assert ref.value <= ref.dual_bound + 1e-12
    np.testing.assert_allclose(np.diag(ref.rho), 0.1, atol=1e-12)
    assert np.linalg.eigvalsh(ref.rho)[0] >= -1e-12
    _, v_star = brute_force_qubo(c)
    assert v_star / 10 <= ref.dual_bound + 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_search_bracket_against_certified_optimum(seed):
    # gamma_star <= optimum + gap + eps, and the refuted end lies above the optimum
    c = generate_instance(InstanceSeedSpec(10, 3, seed))
    opt = low_rank_sdp(c).dual_bound
    eps = 0.01
    res = binary_search(c, SolverConfig(epsilon=eps))
    assert res.gamma_lo <= opt + eps + res.gap
    assert res.gamma_hi >= opt - 1e-9


def test_deterministic():
    c = generate_instance(InstanceSeedSpec(32, 4, 0))
    a, b = low_rank_sdp(c, seed=5), low_rank_sdp(c, seed=5)
    np.testing.assert_array_equal(a.rho, b.rho)
