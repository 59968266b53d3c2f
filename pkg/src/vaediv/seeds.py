"""Deterministic seed derivation.

Every stochastic stage of a job (each refit's training runs, each sampling
pass, each permutation) gets its own seed derived from a master seed plus
integer tags, mixed through numpy's SeedSequence hash. Adding refits or
permutations never perturbs the seeds of earlier ones.
"""

import numpy as np

# Stage tags; values are arbitrary but frozen (changing them changes every
# derived stream).
TRAIN_FIRST = 1
TRAIN_SECOND = 2
SAMPLE_FIRST = 3
SAMPLE_SECOND = 4
PERMUTE = 5
ITERATION = 6
SPLIT = 7
SIMULATE = 8
RUN = 9

_MASK = (1 << 64) - 1


def derive_seed(*parts: int) -> int:
    """Hash a tuple of integers into a 64-bit seed."""
    entropy = [int(p) & _MASK for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def derive_rng(*parts: int) -> np.random.Generator:
    """Generator seeded from a derived seed."""
    return np.random.default_rng(derive_seed(*parts))
