"""Counter-based uniform streams keyed by (seed, site index).

Every lattice site of a field consumes exactly one 64-bit Philox word, so the
uniform attached to site ``j`` depends only on the field key and ``j``.  Blocks
of sites can therefore be generated independently and in any order.
"""

import numpy as np

_WORDS_PER_COUNTER = 4
_TO_UNIT = 2.0 ** -53


def field_key(seed):
    """Two-word Philox key derived from a 64-bit seed."""
    return np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)


def replication_seed(master_seed, *indices):
    """Seed of the replication labelled ``indices`` under ``master_seed``.

    Depends only on these integers, so permuting or parallelising
    replications leaves every individual replication unchanged.
    """
    ss = np.random.SeedSequence([int(master_seed), *map(int, indices)])
    return int(ss.generate_state(1, np.uint64)[0])


def site_uniforms(seed, start, count):
    """Uniforms in the open interval (0, 1) for sites ``start .. start+count-1``."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    block, offset = divmod(int(start), _WORDS_PER_COUNTER)
    bg = np.random.Philox(key=field_key(seed))
    if block:
        bg.advance(block)
    raw = bg.random_raw(offset + int(count))[offset:]
    # midpoint of the 53-bit grid keeps 0 and 1 out of the support
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TO_UNIT
