"""Counter-based random streams, one per Monte Carlo sample.

Sample ``k`` of a run with seed ``s`` draws from a Philox generator keyed by
``s`` whose counter starts at block ``k``; any worker can rebuild the stream
of any sample, so results do not depend on how samples are split.
"""

import numpy as np

_COUNTER_SHIFT = 2  # the sample index occupies the third counter word


def philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)


def sample_stream(seed: int, index: int, key: np.ndarray | None = None) -> np.random.Generator:
    if key is None:
        key = philox_key(seed)
    counter = np.zeros(4, dtype=np.uint64)
    counter[_COUNTER_SHIFT] = np.uint64(index)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
