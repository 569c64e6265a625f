import numpy as np
import pytest

from qubo_hu import rng


def test_streams_are_reproducible():
    a = rng.generator(7, rng.ROUNDING).standard_normal(4)
    b = rng.generator(7, rng.ROUNDING).standard_normal(4)
    np.testing.assert_array_equal(a, b)


def test_streams_are_distinct():
    draws = [rng.generator(7, s).standard_normal(4) for s in rng.STREAM_NAMES]
    for i in range(len(draws)):
        for j in range(i + 1, len(draws)):
            assert not np.array_equal(draws[i], draws[j])


def test_substreams_are_distinct():
    a = rng.generator(7, rng.ROUNDING, 0).standard_normal(4)
    b = rng.generator(7, rng.ROUNDING, 1).standard_normal(4)
    assert not np.array_equal(a, b)


def test_seed_range():
    rng.seed_sequence(2**64 - 1, 0)
    with pytest.raises(ValueError):
        rng.seed_sequence(-1, 0)
    with pytest.raises(ValueError):
        rng.seed_sequence(2**64, 0)
