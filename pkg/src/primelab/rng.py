"""Counter-based randomness with stable substreams.

Philox keys are assembled from (seed, substream, block), so any partition of
work across threads draws exactly the same numbers: results depend on the
logical block index, never on which worker happened to process it.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1

# Trials are simulated in fixed-size blocks; one Philox stream per block.
BLOCK_TRIALS = 4096


def philox_stream(seed: int, substream: int = 0, block: int = 0) -> np.random.Generator:
    """Generator for one logical (seed, substream, block) cell.

    The 128-bit Philox key is laid out as [seed:64 | substream:32 | block:32],
    so distinct cells never collide and no hashing is involved.
    """
    key = (seed & _MASK64) | ((substream & _MASK32) << 64) | ((block & _MASK32) << 96)
    return np.random.Generator(np.random.Philox(key=key))


def block_sizes(trials: int, block: int = BLOCK_TRIALS) -> list[int]:
    """Split a trial count into the fixed block layout used by simulations."""
    full, rem = divmod(trials, block)
    sizes = [block] * full
    if rem:
        sizes.append(rem)
    return sizes
