from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def replicate_seeds(seed, reps: int) -> list[np.random.SeedSequence]:
    """One independent child stream per replicate, so results do not depend
    on how replicates are spread over workers."""
    return np.random.SeedSequence(seed).spawn(reps)


def replicate_map(func, items, workers: int = 1, chunksize: int = 64) -> list:
    if workers <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(func, items, chunksize=chunksize))
