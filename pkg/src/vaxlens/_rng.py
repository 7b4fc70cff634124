"""Seed derivation.

Every random decision in the package flows from a single user seed. Distinct
consumers (split, bootstrap per tree, tuner trial, explainer run, ...) get
independent streams by mixing the root seed with small integer labels through
the SplitMix64 finalizer, which is also what the tree kernels use internally
so that the compiled and pure-Python backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

# Stream labels. Values are arbitrary but frozen: changing them changes every
# seeded result in the package.
STREAM_SPLIT = 1
STREAM_FOLDS = 2
STREAM_TUNER = 3
STREAM_TREE = 4
STREAM_BACKGROUND = 5
STREAM_SHAP = 6
STREAM_PGM = 7
STREAM_GEN = 8
STREAM_BAYES = 9


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *labels: int) -> int:
    """Derive a child seed from ``seed`` and a path of integer labels."""
    s = mix64((seed & MASK64) ^ 0x5851F42D4C957F2D)
    for w in labels:
        s = mix64((s + GAMMA) ^ (int(w) & MASK64))
    return s


def generator(seed: int, *labels: int) -> np.random.Generator:
    """A numpy Generator on the derived stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *labels)))
