import numpy as np


def subject_stream(seed: int, subject_index: int) -> np.random.Generator:
    """
    Independent stream for one subject.

    Splitting rule: PCG64 seeded with SeedSequence(entropy=seed,
    spawn_key=(subject_index,)). A subject's draws therefore depend only on
    the master seed and its own index, never on worker count or order.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(subject_index,))
    return np.random.Generator(np.random.PCG64(sequence))
