"""Seeded random streams.

All randomness comes from numpy's PCG64 bit generator. A user seed is turned
into independent streams with ``SeedSequence(seed, spawn_key=(stream,))``, so
instance generation, rounding and oracle noise never share draws. Gaussian
variates use numpy's ziggurat sampler; both choices are part of the
reproducibility contract of a release.
"""
import numpy as np

INSTANCE = 0
ROUNDING = 1
NOISE = 2
REFERENCE_ROUNDING = 3
REFERENCE_SDP = 4

STREAM_NAMES = {
    INSTANCE: "instance",
    ROUNDING: "rounding",
    NOISE: "noise",
    REFERENCE_ROUNDING: "reference_rounding",
    REFERENCE_SDP: "reference_sdp",
}


def seed_sequence(seed, stream, *substream):
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(int(seed), spawn_key=(stream, *substream))


def generator(seed, stream, *substream):
    """A ``numpy.random.Generator`` for one named stream of ``seed``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, stream, *substream)))
